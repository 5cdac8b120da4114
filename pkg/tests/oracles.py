"""Independent reference computations used to freeze expected values.

None of these share code with the package's search or codec paths.
"""
import itertools

import numpy as np


def brute_force_closest(basis, x):
    """Exhaustive nearest point of the lattice spanned by the rows of ``basis``.

    The Babai point bounds the optimal distance r, and every lattice point
    within r of x has coordinates within r*||column_i(G^-1)|| of the real
    coordinates of x, so enumerating that box is exact.
    """
    G = np.asarray(basis, dtype=float)
    Ginv = np.linalg.inv(G)
    c = x @ Ginv
    babai = np.round(c) @ G
    r = np.linalg.norm(x - babai) + 1e-9
    half = r * np.linalg.norm(Ginv, axis=0)
    ranges = [range(int(np.floor(ci - h)), int(np.ceil(ci + h)) + 1) for ci, h in zip(c, half)]
    best, best_d = None, np.inf
    for z in itertools.product(*ranges):
        p = np.asarray(z, dtype=float) @ G
        d = np.sum((x - p) ** 2)
        if d < best_d:
            best, best_d = p, d
    return best


def decode_dn(x):
    """Conway-Sloane nearest point in D_n (integer vectors with even sum), rows of x."""
    x = np.atleast_2d(x)
    f = np.round(x)
    odd = (np.sum(f, axis=1) % 2) != 0
    if np.any(odd):
        g = f[odd].copy()
        xo = x[odd]
        idx = np.argmax(np.abs(xo - g), axis=1)
        rows = np.arange(len(g))
        delta = xo[rows, idx] - g[rows, idx]
        g[rows, idx] += np.where(delta >= 0, 1.0, -1.0)
        f[odd] = g
    return f


def decode_e8(x):
    """Conway-Sloane nearest point in E8 = D8 union (D8 + 1/2)."""
    x = np.atleast_2d(x)
    a = decode_dn(x)
    b = decode_dn(x - 0.5) + 0.5
    da = np.sum((x - a) ** 2, axis=1)
    db = np.sum((x - b) ** 2, axis=1)
    return np.where((da <= db)[:, None], a, b)


def uniform_cube_second_moment(s):
    """Closed-form integral of x^2 over [-s/2, s/2], normalized by the length."""
    return (s ** 3 / 12.0) / s


def numeric_cube_second_moment(s, m=200_001):
    """Midpoint-rule quadrature of the same integral."""
    edges = np.linspace(-s / 2, s / 2, m)
    mid = 0.5 * (edges[1:] + edges[:-1])
    return float(np.sum(mid ** 2) * (edges[1] - edges[0]) / s)
