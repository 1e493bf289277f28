import math

from holodyn.holonomy import noncommutativity, wilson_loop
from holodyn.reservoir import phi_circle, scenario_tripod, theta_excursion


# Two loops around the same tripod base point give holonomies that do not
# commute.

def main(theta0=math.pi / 4, steps=10000):
    a = scenario_tripod(phi_circle(theta0))
    b = scenario_tripod(theta_excursion(theta0))
    for scenario in (a, b):
        U = wilson_loop(scenario.path, steps)
        print('%s: phases %s' % (scenario.path.name, U.phases))
    print('||[U_A, U_B]|| = %.6f' % noncommutativity(a.path, b.path, steps))


if __name__ == "__main__":
    main()
