"""Empirical Bernstein constant C_B = ||P_j f||_4 / (2^{j/2} ||P_j f||_2) in 2D.

The band-projected delta concentrates the most; random band-limited fields
that fill the torus give much smaller ratios."""
import numpy as np

from smaplab.data import random_band_field
from smaplab.grid import ComplexField, make_grid
from smaplab.littlewood_paley import bernstein_ratio, lp_project


def ratio(g, f, j):
    return bernstein_ratio(lp_project(ComplexField(g, f), j), j)


def main():
    g = make_grid(256, 64.0)
    delta = np.zeros((g.n, g.n))
    delta[0, 0] = 1.0
    print("j   delta     random (mean of 5)")
    # only bands well inside the lattice (outer edge below the 2/3 cutoff)
    for j in (j for j in range(-1, 6) if 3 * 2.0 ** j < 2 * g.k_nyquist / 3):
        rnd = np.mean([ratio(g, random_band_field(g, j, seed), j) for seed in range(5)])
        print(f"{j:2d}  {ratio(g, delta, j):.4f}    {rnd:.4f}")


if __name__ == "__main__":
    main()
