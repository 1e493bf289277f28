import logging

from holodyn.harness import RunSettings, exp_adiabatic_limit, exp_leakage_scaling, sweep
from holodyn.reservoir import scenario_dark_state


# Infidelity and leakage against gamma*T, sharing one set of integrations.
# The gammaT=10000 run takes a few minutes; use jobs to run the sweep in parallel.

def main(gammaT=(100, 1000, 10000), jobs=3):
    logging.basicConfig(level=logging.INFO)
    scenario = scenario_dark_state(0.6)
    settings = RunSettings(jobs=jobs)
    runs = sweep(scenario, gammaT, settings)
    for report in (exp_adiabatic_limit(scenario, gammaT, settings, runs),
                   exp_leakage_scaling(scenario, gammaT, settings, runs)):
        print(report.name, report.fits)
        for c in report.criteria:
            print('  %-4s %s = %.4g' % ('ok' if c.passed else 'FAIL', c.name, c.value))


if __name__ == "__main__":
    main()
