#!/usr/bin/env python3
"""Run the zero-mass classification scan and print a verdict table."""

import numpy as np

from procalab.lattice import SpacetimeConfig, build_spacetime, cauchy_slice
from procalab.forms import random_form
from procalab import masslimit


def main():
    st = build_spacetime(SpacetimeConfig(dims=1, extent=(32,), dx=(0.5,), steps=80, dt=0.25))
    slc = cauchy_slice(st, st.steps // 2)
    rng = np.random.default_rng(np.random.Philox(key=12))
    probes = {k: (masslimit.make_probe(k, st, rng, time_pad=8), k)
              for k in ("co-closed", "closed", "generic")}
    data = (random_form(slc.geometry, 1, rng), random_form(slc.geometry, 1, rng), slc)
    masses = masslimit.geometric_masses(2.0, 12)
    scan = masslimit.classical_scan(st, None, data, probes, masses)
    print("%-10s %-10s %-14s %-9s %s" % ("probe", "converges", "trivially_zero",
                                         "slope", "max |value|"))
    for name, v in scan.verdicts.items():
        print("%-10s %-10s %-14s %-9.4f %.3e" % (name, v["converges"], v["trivially_zero"],
                                                 v["slope"], v["max_abs_value"]))


if __name__ == "__main__":
    main()
