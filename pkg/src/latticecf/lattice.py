"""Finite-dimensional lattices, nested pairs and coset indexing.

A lattice is either a scaled integer lattice ``s * Z^n`` (quantized by
coordinatewise round-half-to-even) or the span of the rows of a full-rank
generator matrix (quantized by exact closest-point search). Arrays of
points are accepted with shape ``(n,)`` or ``(..., n)``.
"""
import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .search import DEFAULT_NODE_BUDGET, ClosestPointSearcher, SearchBudgetExceeded
from .streams import DitherSource

__all__ = [
    "CodebookError",
    "DimensionError",
    "Lattice",
    "base_lattice",
    "MomentEstimate",
    "NestedPair",
    "SearchBudgetExceeded",
    "canonical_codeword",
    "codebook",
    "codeword_of_digits",
    "codeword_of_index",
    "coset_digits",
    "coset_index",
    "make_nested_pair",
    "mod_lattice",
    "quantize_nearest",
    "sample_dither",
    "scale_to_second_moment",
    "second_moment",
]

# normalized second moments G = sigma^2 / V^(2/n) (Conway & Sloane, table 2.3)
NORMALIZED_SECOND_MOMENT = {
    "Z": 1.0 / 12.0,
    "A2": 5.0 / (36.0 * math.sqrt(3.0)),
    "D4": 0.0766032346,
    "E8": 929.0 / 12960.0,
}

_BASES = {
    "A2": [[1.0, 0.0], [0.5, math.sqrt(3.0) / 2.0]],
    "D4": [
        [-1, -1, 0, 0],
        [1, -1, 0, 0],
        [0, 1, -1, 0],
        [0, 0, 1, -1],
    ],
    "E8": [
        [2, 0, 0, 0, 0, 0, 0, 0],
        [-1, 1, 0, 0, 0, 0, 0, 0],
        [0, -1, 1, 0, 0, 0, 0, 0],
        [0, 0, -1, 1, 0, 0, 0, 0],
        [0, 0, 0, -1, 1, 0, 0, 0],
        [0, 0, 0, 0, -1, 1, 0, 0],
        [0, 0, 0, 0, 0, -1, 1, 0],
        [0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5],
    ],
}

MC_SECOND_MOMENT_TRIALS = 200_000
_INTEGRALITY_TOL = 1e-6


class DimensionError(ValueError):
    """Input length does not match the lattice dimension."""


class CodebookError(ValueError):
    """A point or index is not part of a nested-lattice codebook."""


@dataclass(frozen=True)
class MomentEstimate:
    estimate: float
    stderr: float
    trials: int
    exact: float | None = None


class Lattice:
    """An n-dimensional lattice with an exact nearest-point quantizer.

    Use the constructors :meth:`integer`, :meth:`from_generator`,
    :meth:`named` and :meth:`from_file` rather than ``__init__``.
    """

    def __init__(self, n, scale=None, basis=None, second_moment=None, exact=False,
                 name=None, budget=DEFAULT_NODE_BUDGET):
        self.n = int(n)
        self.scale = None if scale is None else float(scale)
        self.name = name
        self.budget = budget
        self._searcher = None
        if self.scale is not None:
            if not self.scale > 0:
                raise ValueError("scale must be positive")
            self._basis = None
            self.volume = self.scale ** self.n
            self._sigma2 = self.scale ** 2 / 12.0
            self._exact = True
        else:
            g = np.array(basis, dtype=np.float64)
            if g.shape != (self.n, self.n):
                raise DimensionError(f"generator must be {self.n}x{self.n}, got {g.shape}")
            volume = abs(float(np.linalg.det(g)))
            if not volume > 1e-12 * max(1.0, float(np.abs(g).max())) ** self.n:
                raise ValueError("generator matrix is not full rank")
            g.setflags(write=False)
            self._basis = g
            self.volume = volume
            self._sigma2 = None if second_moment is None else float(second_moment)
            self._exact = bool(exact) and second_moment is not None

    # -- constructors -------------------------------------------------
    @classmethod
    def integer(cls, n, scale=1.0):
        """``scale * Z^n``."""
        if n < 1:
            raise ValueError("dimension must be positive")
        return cls(n, scale=scale, name="Z")

    @classmethod
    def from_generator(cls, basis, second_moment=None, name=None):
        """Lattice spanned by the rows of ``basis``.

        ``second_moment`` may be given when known; otherwise it is estimated
        by Monte Carlo on first use.
        """
        g = np.atleast_2d(np.asarray(basis, dtype=np.float64))
        return cls(g.shape[0], basis=g, second_moment=second_moment, name=name)

    @classmethod
    def named(cls, name, n=None):
        """Z, A2, D4 or E8; ``n`` a multiple of the base dimension gives a direct sum."""
        key = name.upper()
        if key == "Z":
            return cls.integer(n or 1)
        if key not in _BASES:
            raise ValueError(f"unknown lattice {name!r}; expected one of Z, A2, D4, E8")
        base = np.array(_BASES[key], dtype=np.float64)
        d = base.shape[0]
        n = n or d
        if n % d:
            raise DimensionError(f"{key} direct sums need n divisible by {d}, got {n}")
        g = np.kron(np.eye(n // d), base)
        vol = abs(np.linalg.det(base)) ** (n // d)
        sigma2 = NORMALIZED_SECOND_MOMENT[key] * vol ** (2.0 / n)
        lat = cls(n, basis=g, second_moment=sigma2, name=key)
        lat._exact = False  # tabulated constant
        return lat

    @classmethod
    def from_file(cls, path, second_moment=None):
        """Generator matrix from a text file of whitespace-separated rows."""
        g = np.loadtxt(path, dtype=np.float64, ndmin=2)
        if g.shape[0] != g.shape[1]:
            raise DimensionError(f"generator file {path} is not square: {g.shape}")
        return cls.from_generator(g, second_moment=second_moment, name=str(path))

    # -- properties ---------------------------------------------------
    @property
    def is_scaled_integer(self):
        return self.scale is not None

    @property
    def basis(self):
        """Generator matrix, rows are basis vectors."""
        if self._basis is None:
            return self.scale * np.eye(self.n)
        return self._basis

    @property
    def second_moment(self):
        """Per-dimension second moment of the Voronoi region (cached)."""
        if self._sigma2 is None:
            est = second_moment(self, MC_SECOND_MOMENT_TRIALS, seed=0)
            self._sigma2 = est.estimate
        return self._sigma2

    @property
    def exact_second_moment(self):
        return self._sigma2 if self._exact else None

    @property
    def normalized_second_moment(self):
        return self.second_moment / self.volume ** (2.0 / self.n)

    def scaled(self, factor):
        factor = float(factor)
        if not factor > 0:
            raise ValueError("scale factor must be positive")
        if self.is_scaled_integer:
            return Lattice.integer(self.n, self.scale * factor)
        sigma2 = self.second_moment * factor ** 2
        lat = Lattice(self.n, basis=self._basis * factor, second_moment=sigma2,
                      exact=self._exact, name=self.name, budget=self.budget)
        return lat

    def __repr__(self):
        if self.is_scaled_integer:
            return f"Lattice.integer(n={self.n}, scale={self.scale!r})"
        return f"Lattice(name={self.name!r}, n={self.n}, volume={self.volume:.6g})"

    # -- arithmetic ---------------------------------------------------
    def _check(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 0 or x.shape[-1] != self.n:
            raise DimensionError(
                f"expected vectors of length {self.n}, got shape {x.shape}")
        return x

    def quantize(self, x):
        x = self._check(x)
        if self.is_scaled_integer:
            return self.scale * np.round(x / self.scale)
        if self._searcher is None:
            self._searcher = ClosestPointSearcher(self._basis, self.budget)
        flat = x.reshape(-1, self.n)
        return self._searcher.closest(flat).reshape(x.shape)

    def mod(self, x):
        x = self._check(x)
        return x - self.quantize(x)

    def coordinates(self, points):
        """Real coordinates of ``points`` with respect to the generator rows."""
        p = self._check(points)
        if self.is_scaled_integer:
            return p / self.scale
        return np.linalg.solve(self._basis.T, p.reshape(-1, self.n).T).T.reshape(p.shape)

    def in_voronoi(self, x, rtol=1e-9):
        """True where ``x`` is at least as close to 0 as to any lattice point."""
        x = self._check(x)
        q = self.quantize(x)
        d0 = np.sum(x * x, axis=-1)
        dq = np.sum((x - q) ** 2, axis=-1)
        return d0 <= dq * (1.0 + rtol) + 1e-24


# -- operations ---------------------------------------------------------

def quantize_nearest(lat, x):
    """Nearest lattice point (ties: half-to-even for s*Z^n, lexicographic otherwise)."""
    return lat.quantize(x)


def mod_lattice(lat, x):
    """``x - Q(x)``, a point of the Voronoi region."""
    return lat.mod(x)


def sample_dither(lat, src, count=None):
    """Uniform draw(s) over the Voronoi region from a :class:`DitherSource`.

    Uniform on the fundamental parallelepiped, then reduced mod the lattice.
    Returns shape ``(n,)`` when ``count`` is None, else ``(count, n)``.
    """
    r = src.uniforms(lat.n, 1 if count is None else count)
    u = lat.mod(r @ lat.basis)
    return u[0] if count is None else u


def second_moment(lat, trials, seed=0):
    """Monte Carlo second moment per dimension, with standard error."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    src = DitherSource(seed, "second-moment")
    chunk = 50_000
    per = []
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        u = sample_dither(lat, src, m)
        per.append(np.sum(u * u, axis=1) / lat.n)
        done += m
    per = np.concatenate(per)
    est = math.fsum(per) / trials
    stderr = float(per.std(ddof=1) / math.sqrt(trials)) if trials > 1 else math.inf
    return MomentEstimate(est, stderr, trials, lat.exact_second_moment)


def scale_to_second_moment(lat, target):
    """Copy of ``lat`` scaled so its second moment equals ``target``."""
    if not target > 0:
        raise ValueError(f"target second moment must be positive, got {target}")
    factor = math.sqrt(target / lat.second_moment)
    if factor == 1.0:
        return lat
    out = lat.scaled(factor)
    out._sigma2 = float(target)
    return out


@dataclass(frozen=True)
class NestedPair:
    """Self-similar nested pair: ``coarse = k * fine``."""

    fine: Lattice
    coarse: Lattice
    k: int

    @property
    def n(self):
        return self.fine.n

    @property
    def size(self):
        return self.k ** self.n

    @property
    def rate(self):
        """Coding rate in bits per dimension."""
        return math.log2(self.k)

    @property
    def volume_rate(self):
        return math.log2(self.coarse.volume / self.fine.volume) / self.n


def make_nested_pair(fine, k):
    k = int(k)
    if k < 2:
        raise ValueError(f"nesting factor must be >= 2, got {k}")
    return NestedPair(fine, fine.scaled(k), k)


def coset_digits(pair, points):
    """Base-k digits (shape (..., n)) of fine-lattice points."""
    c = pair.fine.coordinates(points)
    r = np.round(c)
    if np.any(np.abs(c - r) > _INTEGRALITY_TOL):
        raise CodebookError("point is not on the fine lattice")
    return np.mod(r.astype(np.int64), pair.k)


def codeword_of_digits(pair, digits):
    """Codebook representatives (in the coarse Voronoi region) for digit vectors."""
    d = np.asarray(digits, dtype=np.int64)
    if d.shape[-1] != pair.n:
        raise DimensionError(f"expected {pair.n} digits, got shape {d.shape}")
    if np.any((d < 0) | (d >= pair.k)):
        raise CodebookError(f"digits must lie in [0, {pair.k})")
    return pair.coarse.mod(d.astype(np.float64) @ pair.fine.basis)


def canonical_codeword(pair, points):
    """The codebook representative of each point's coset.

    On the coarse Voronoi boundary a coset has several closest-to-origin
    members (e.g. +k/2 and -k/2 for even k on Z); this picks the one the
    codebook lists, so equal cosets give bit-identical vectors.
    """
    return codeword_of_digits(pair, coset_digits(pair, points))


def coset_index(pair, point):
    """Integer index in [0, k^n) of a codeword (little-endian base k)."""
    p = np.asarray(point, dtype=np.float64)
    if p.shape != (pair.n,):
        raise DimensionError(f"expected a single vector of length {pair.n}")
    if not pair.coarse.in_voronoi(p):
        raise CodebookError("point lies outside the coarse Voronoi region")
    digits = coset_digits(pair, p)
    return sum(int(d) * pair.k ** i for i, d in enumerate(digits))


def index_digits(pair, index):
    index = int(index)
    if not 0 <= index < pair.size:
        raise CodebookError(f"index {index} outside [0, {pair.size})")
    digits = np.empty(pair.n, dtype=np.int64)
    for i in range(pair.n):
        index, digits[i] = divmod(index, pair.k)
    return digits


def codeword_of_index(pair, index):
    return codeword_of_digits(pair, index_digits(pair, index))


def codebook(pair, limit=1 << 20):
    """All k^n codewords in index order."""
    if pair.size > limit:
        raise ValueError(f"codebook of size {pair.size} exceeds limit {limit}")
    digits = np.array(list(product(range(pair.k), repeat=pair.n)), dtype=np.int64)
    digits = digits[:, ::-1]  # little-endian: first digit varies fastest
    return codeword_of_digits(pair, digits)


def base_lattice(desc, n):
    """Resolve a lattice description: ``Z``, ``A2``, ``D4``, ``E8`` or a matrix file path."""
    if desc.upper() in NORMALIZED_SECOND_MOMENT:
        return Lattice.named(desc, n)
    lat = Lattice.from_file(desc)
    if lat.n != n:
        raise DimensionError(f"lattice file {desc} has dimension {lat.n}, expected {n}")
    return lat
