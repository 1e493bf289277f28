import math

from holodyn.harness import RunSettings, simulate
from holodyn.holonomy import wilson_loop
from holodyn.reservoir import scenario_dark_state


# Berry phase of the dark state and how much population one slow loop loses.
# Run with e.g.:
# python example_darkstate.py

def main(theta=math.pi / 4, gammaT=1000):
    scenario = scenario_dark_state(theta)
    U = wilson_loop(scenario.path, 10000)
    print('holonomy phase %.9f, expected %.9f' % (U.phases[0], scenario.expected['berry_phase']))
    run = simulate(scenario, gammaT, RunSettings())
    print('gammaT=%g: leakage %.3e, fidelity %.9f' % (run.gammaT, run.overlap.leakage, run.overlap.fidelity[-1]))


if __name__ == "__main__":
    main()
