#!/usr/bin/env python3
"""Sweep the exterior-calculus identities and print the worst residuals."""

import numpy as np

from procalab.lattice import SpacetimeConfig, build_spacetime
from procalab.forms import (random_form, ext_d, int_delta, hodge, hodge_inverse_sign,
                            pairing)


def sweep(st, seed):
    g = st.geometry
    rng = np.random.default_rng(np.random.Philox(key=seed))
    worst = {"dd": 0.0, "deldel": 0.0, "hodge": 0.0, "adjoint": 0.0}
    for p in range(g.n_axes + 1):
        A = random_form(g, p, rng, time_pad=3)
        scale = 1.0 + A.max_abs()
        if p + 2 <= g.n_axes:
            worst["dd"] = max(worst["dd"], ext_d(ext_d(A)).max_abs() / scale)
        if p >= 2:
            worst["deldel"] = max(worst["deldel"], int_delta(int_delta(A)).max_abs() / scale)
        sgn = hodge_inverse_sign(g, p)
        worst["hodge"] = max(worst["hodge"], (hodge(hodge(A)) - sgn * A).max_abs() / scale)
        if p + 1 <= g.n_axes:
            B = random_form(g, p + 1, rng, time_pad=3)
            lhs = pairing(ext_d(A), B)
            worst["adjoint"] = max(worst["adjoint"],
                                   abs(lhs - pairing(A, int_delta(B))) / (1 + abs(lhs)))
    return worst


def main():
    lattices = {
        "1+1d 64x128": SpacetimeConfig(dims=1, extent=(64,), dx=(0.5,), steps=128, dt=0.25),
        "3+1d 16^3x32": SpacetimeConfig(dims=3, extent=(16, 16, 16), dx=(1.0, 1.0, 1.0),
                                        steps=32, dt=0.5),
    }
    for label, cfg in lattices.items():
        worst = sweep(build_spacetime(cfg), seed=1)
        print(label)
        for name, value in sorted(worst.items()):
            print("  %-8s %.3e" % (name, value))


if __name__ == "__main__":
    main()
