#!/usr/bin/env python3
"""Print the norm trace of the dynamics-ideal discontinuity experiment.

The two symbols coincide in the quotient exactly at the critical mass
and differ everywhere else; the state-catalog norm proxy certifies that
the section jumps between 0 and (nearly) 2.
"""

from procalab.weyl import default_obstruction_mock, dynamics_ideal_obstruction


def main():
    m0 = 1.0
    mock = default_obstruction_mock(m0)
    masses = [m0 + d for d in (-0.5, -0.25, -0.1, -0.01, 0.0, 0.01, 0.1, 0.25, 0.5)]
    rows = dynamics_ideal_obstruction(mock, (0.7, -0.3, 1.0), (0.7, -0.3, 0.0), masses)
    print("%-8s %-10s %s" % ("mass", "distinct", "norm proxy"))
    for r in rows:
        print("%-8.3f %-10s %.6f" % (r["mass"], r["distinct"], r["proxy"]))


if __name__ == "__main__":
    main()
