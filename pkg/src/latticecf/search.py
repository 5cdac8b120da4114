"""Exact closest-point search for lattices given by a generator matrix.

Schnorr-Euchner enumeration on the upper-triangular factor of an
LLL-reduced basis. Equidistant candidates (within a relative tolerance on
the squared distance) are resolved in favour of the lexicographically
smallest lattice point, so results do not depend on the basis used.
"""
import math

import numpy as np

from . import _accel

DEFAULT_NODE_BUDGET = 1_000_000
TIE_RTOL = 1e-9

STATUS_OK = 0
STATUS_BUDGET = 1


class SearchBudgetExceeded(RuntimeError):
    """Raised when the enumeration visits more nodes than allowed."""


def lll_reduce(basis, delta=0.99):
    """LLL-reduce the rows of ``basis``.

    :param basis: (n, n) array, rows are basis vectors
    :param delta: Lovasz constant
    :return: reduced basis generating the same lattice
    """
    b = np.array(basis, dtype=np.float64)
    n = b.shape[0]

    def gram_schmidt(b):
        bstar = np.zeros_like(b)
        mu = np.zeros((n, n))
        norms = np.zeros(n)
        for i in range(n):
            v = b[i].copy()
            for j in range(i):
                mu[i, j] = b[i] @ bstar[j] / norms[j]
                v -= mu[i, j] * bstar[j]
            bstar[i] = v
            norms[i] = v @ v
        return mu, norms

    mu, norms = gram_schmidt(b)
    k = 1
    while k < n:
        for j in range(k - 1, -1, -1):
            q = round(mu[k, j])
            if q != 0:
                b[k] -= q * b[j]
                mu, norms = gram_schmidt(b)
        if norms[k] >= (delta - mu[k, k - 1] ** 2) * norms[k - 1]:
            k += 1
        else:
            b[[k, k - 1]] = b[[k - 1, k]]
            mu, norms = gram_schmidt(b)
            k = max(k - 1, 1)
    return b


def _closest_batch(R, Y, B, budget, tie_rtol):
    # R: (n, n) upper triangular with positive diagonal, B = Q R with columns
    # the basis vectors, Y: (m, n) targets already rotated by Q^T.
    m, n = Y.shape
    Z = np.zeros((m, n), dtype=np.int64)
    status = np.zeros(m, dtype=np.int64)
    nodes_used = np.zeros(m, dtype=np.int64)

    z = np.zeros(n, dtype=np.int64)
    step = np.zeros(n, dtype=np.int64)
    centre = np.zeros(n)
    partial = np.zeros(n + 1)
    zbest = np.zeros(n, dtype=np.int64)
    pt = np.zeros(n)
    ptbest = np.zeros(n)

    for i in range(m):
        y = Y[i]
        best = math.inf
        have_best = False
        nodes = 0
        k = n - 1
        partial[n] = 0.0
        centre[k] = y[k] / R[k, k]
        z[k] = int(math.floor(centre[k] + 0.5))
        step[k] = 1 if centre[k] >= z[k] else -1
        while True:
            nodes += 1
            if nodes > budget:
                status[i] = STATUS_BUDGET
                break
            diff = (centre[k] - z[k]) * R[k, k]
            d = partial[k + 1] + diff * diff
            if d <= best + tie_rtol * best:
                if k == 0:
                    take = False
                    if not have_best or d < best - tie_rtol * best:
                        take = True
                    else:
                        # near tie: compare lattice points lexicographically
                        for r in range(n):
                            acc = 0.0
                            accb = 0.0
                            for c in range(n):
                                acc += B[r, c] * z[c]
                                accb += B[r, c] * zbest[c]
                            pt[r] = acc
                            ptbest[r] = accb
                        for r in range(n):
                            if pt[r] < ptbest[r]:
                                take = True
                                break
                            if pt[r] > ptbest[r]:
                                break
                    if take:
                        for c in range(n):
                            zbest[c] = z[c]
                        have_best = True
                    if d < best:
                        best = d
                    z[0] += step[0]
                    step[0] = -step[0] - (1 if step[0] > 0 else -1)
                else:
                    partial[k] = d
                    k -= 1
                    acc = y[k]
                    for c in range(k + 1, n):
                        acc -= R[k, c] * z[c]
                    centre[k] = acc / R[k, k]
                    z[k] = int(math.floor(centre[k] + 0.5))
                    step[k] = 1 if centre[k] >= z[k] else -1
            else:
                if k == n - 1:
                    break
                k += 1
                z[k] += step[k]
                step[k] = -step[k] - (1 if step[k] > 0 else -1)
        for c in range(n):
            Z[i, c] = zbest[c]
        nodes_used[i] = nodes
    return Z, status, nodes_used


_closest_batch_py = _closest_batch
_jit_cache = {}


def closest_batch_python(R, Y, B, budget, tie_rtol=TIE_RTOL):
    """Uncompiled kernel (reference path)."""
    return _closest_batch_py(R, Y, B, budget, tie_rtol)


def closest_batch_numba(R, Y, B, budget, tie_rtol=TIE_RTOL):
    """Compiled kernel; requires numba."""
    if not _accel.HAS_NUMBA:
        raise RuntimeError("numba is not installed")
    if "kernel" not in _jit_cache:
        _jit_cache["kernel"] = _accel.compile_kernel(_closest_batch_py)
    return _jit_cache["kernel"](R, Y, B, budget, tie_rtol)


def closest_batch(R, Y, B, budget, tie_rtol=TIE_RTOL):
    if _accel.USE_NUMBA:
        return closest_batch_numba(R, Y, B, budget, tie_rtol)
    return closest_batch_python(R, Y, B, budget, tie_rtol)


class ClosestPointSearcher:
    """Precomputed search data for one generator matrix.

    :param basis: (n, n) array whose rows generate the lattice
    :param budget: maximum enumeration nodes per query
    """

    def __init__(self, basis, budget=DEFAULT_NODE_BUDGET):
        reduced = lll_reduce(basis)
        cols = reduced.T
        Q, R = np.linalg.qr(cols)
        signs = np.sign(np.diag(R))
        signs[signs == 0] = 1.0
        self.Q = np.ascontiguousarray(Q * signs)
        self.R = np.ascontiguousarray((R.T * signs).T)
        # columns are basis vectors; kept exact so returned points are exact
        self.B = np.ascontiguousarray(cols)
        self.budget = int(budget)

    def closest(self, X, kernel=None):
        """Nearest lattice points for each row of ``X`` (shape (m, n))."""
        X = np.ascontiguousarray(X, dtype=np.float64)
        Y = np.ascontiguousarray(X @ self.Q)
        run = kernel or closest_batch
        Z, status, _ = run(self.R, Y, self.B, self.budget, TIE_RTOL)
        if status.any():
            bad = int(np.flatnonzero(status)[0])
            raise SearchBudgetExceeded(
                f"closest-point search exceeded the node budget of {self.budget} "
                f"(first failing query at row {bad})"
            )
        return Z.astype(np.float64) @ self.B.T
