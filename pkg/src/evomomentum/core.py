"""Population states on the probability simplex and linear fitness landscapes."""
from __future__ import annotations

import numpy as np

from .exceptions import DimensionError

SUM_TOLERANCE = 1e-12
RENORMALIZE_TOLERANCE = 1e-9
BETA_SINGULARITY_TOL = 1e-9


def _readonly(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    arr.setflags(write=False)
    return arr


def snap_to_simplex(arr: np.ndarray) -> np.ndarray:
    """Apply the sum rule of :class:`SimplexPoint` to a nonnegative vector.

    Returns ``arr`` itself when the sum is within ``1e-12`` of one, a
    renormalized copy when within ``1e-9``, and raises otherwise.
    """
    total = arr.sum()
    deviation = abs(total - 1.0)
    if deviation > RENORMALIZE_TOLERANCE:
        raise ValueError(f"coordinates sum to {total!r}, not 1")
    if deviation > SUM_TOLERANCE:
        return arr / total
    return arr


class SimplexPoint:
    """A population distribution over ``n`` types.

    Coordinates must be nonnegative and sum to one. Sums within ``1e-12`` of
    one are kept bit-for-bit; sums off by less than ``1e-9`` are renormalized;
    anything further away is rejected.
    """

    __slots__ = ("_coords",)

    def __init__(self, coords):
        arr = np.array(coords, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 1:
            raise DimensionError(f"simplex point must be a nonempty vector, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("simplex point has non-finite coordinates")
        if np.any(arr < 0.0):
            raise ValueError(f"simplex point has a negative coordinate: {arr.tolist()}")
        arr = snap_to_simplex(arr)
        arr.setflags(write=False)
        self._coords = arr

    @classmethod
    def barycenter(cls, n: int) -> SimplexPoint:
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def vertex(cls, n: int, i: int) -> SimplexPoint:
        e = np.zeros(n)
        e[i] = 1.0
        return cls(e)

    @property
    def coords(self) -> np.ndarray:
        return self._coords

    @property
    def n(self) -> int:
        return self._coords.size

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._coords
        return self._coords.astype(dtype)

    def __len__(self):
        return self._coords.size

    def __getitem__(self, i):
        return self._coords[i]

    def __iter__(self):
        return iter(self._coords.tolist())

    def __eq__(self, other):
        if not isinstance(other, SimplexPoint):
            return NotImplemented
        return np.array_equal(self._coords, other._coords)

    def __hash__(self):
        return hash(self._coords.tobytes())

    def __repr__(self):
        return f"SimplexPoint({self._coords.tolist()})"


class MatrixLandscape:
    """Linear fitness landscape ``f(x) = A x`` for a square payoff matrix."""

    __slots__ = ("_matrix",)

    def __init__(self, matrix):
        arr = _readonly(matrix)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DimensionError(f"payoff matrix must be square, got shape {arr.shape}")
        if arr.shape[0] < 2:
            raise DimensionError("payoff matrix needs at least two types")
        if not np.all(np.isfinite(arr)):
            raise ValueError("payoff matrix has non-finite entries")
        self._matrix = arr

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def n(self) -> int:
        return self._matrix.shape[0]

    def is_skew_symmetric(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self._matrix + self._matrix.T) <= tol))

    def __call__(self, x) -> np.ndarray:
        return fitness(self, x)

    def __eq__(self, other):
        if not isinstance(other, MatrixLandscape):
            return NotImplemented
        return np.array_equal(self._matrix, other._matrix)

    def __hash__(self):
        return hash(self._matrix.tobytes())

    def __repr__(self):
        return f"MatrixLandscape({self._matrix.tolist()})"


def make_cyclic_matrix(a: float, b: float) -> MatrixLandscape:
    """Three-type circulant landscape with zero diagonal.

    ``a = 1, b = -1`` is rock-paper-scissors; ``a = b > 0`` is a
    three-strategy hawk-dove game.
    """
    a = float(a)
    b = float(b)
    return MatrixLandscape([[0.0, a, b], [b, 0.0, a], [a, b, 0.0]])


def _as_vector(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


def fitness(landscape: MatrixLandscape, x) -> np.ndarray:
    """Per-type fitness ``A x``.

    ``x`` may be any real vector of matching length (look-ahead points need
    not lie on the simplex).
    """
    v = _as_vector(x)
    if v.shape != (landscape.n,):
        raise DimensionError(f"state has shape {v.shape}, landscape expects ({landscape.n},)")
    return landscape.matrix @ v


def mean_fitness_weighted(x, f) -> float:
    """Population mean fitness ``x . f``."""
    xv = _as_vector(x)
    fv = _as_vector(f)
    if xv.shape != fv.shape:
        raise DimensionError(f"length mismatch: {xv.shape} vs {fv.shape}")
    return float(xv @ fv)


def mean_fitness_uniform(f) -> float:
    """Unweighted average of the fitness vector."""
    fv = _as_vector(f)
    if fv.size == 0:
        raise DimensionError("fitness vector is empty")
    return float(fv.mean())
