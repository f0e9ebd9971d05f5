"""Core vector math for families of point sets.

The distance between a center and a set is the maximum Euclidean distance
to any of the set's points; the set median objective sums that quantity
over a whole family. Everything here is a pure function over immutable
numpy arrays and is safe to call concurrently.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "DimensionMismatchError",
    "SetFamily",
    "as_point",
    "as_point_set",
    "max_distance",
    "set_metric",
    "objective",
]


class DimensionMismatchError(ValueError):
    """Points or sets of incompatible dimensions were combined."""


def as_point(p, d: int | None = None) -> np.ndarray:
    """Coerce ``p`` to a finite 1-d float64 vector, optionally of length ``d``."""
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"a point must be a non-empty 1-d vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("point has non-finite coordinates")
    if d is not None and arr.shape[0] != d:
        raise DimensionMismatchError(f"expected dimension {d}, got {arr.shape[0]}")
    return arr


def as_point_set(P, d: int | None = None) -> np.ndarray:
    """Coerce ``P`` to a non-empty (m, d) float64 array of finite points."""
    arr = np.asarray(P, dtype=np.float64)
    if arr.ndim == 1 and d is None and arr.size > 0:
        # allow a bare point to stand for a singleton set
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError(f"a point set must be a non-empty 2-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("point set has non-finite coordinates")
    if d is not None and arr.shape[1] != d:
        raise DimensionMismatchError(f"expected dimension {d}, got {arr.shape[1]}")
    return arr


class SetFamily:
    """An ordered family of finite non-empty point sets sharing one dimension.

    ``sets`` is a list of read-only (m_i, d) arrays, ``d`` the common
    dimension and ``n_max`` the largest set size.
    """

    __slots__ = ("sets", "d", "n_max")

    def __init__(self, sets):
        if len(sets) == 0:
            raise ValueError("a set family needs at least one member set")
        first = as_point_set(sets[0])
        d = first.shape[1]
        clean = []
        for i, s in enumerate(sets):
            arr = np.array(as_point_set(s, d), copy=True)
            arr.setflags(write=False)
            clean.append(arr)
        self.sets = clean
        self.d = d
        self.n_max = max(s.shape[0] for s in clean)

    def __len__(self) -> int:
        return len(self.sets)

    def __iter__(self):
        return iter(self.sets)

    def __repr__(self) -> str:
        return f"SetFamily(N={len(self.sets)}, d={self.d}, n_max={self.n_max})"


def max_distance(c, P) -> tuple[float, int]:
    """Maximum distance from center ``c`` to any point of ``P``.

    Returns ``(value, witness)`` where witness is the index of an attaining
    point, ties broken by lowest index.
    """
    c = as_point(c)
    P = as_point_set(P)
    if P.shape[1] != c.shape[0]:
        raise DimensionMismatchError(
            f"center has dimension {c.shape[0]} but set has dimension {P.shape[1]}"
        )
    sq = ((P - c) ** 2).sum(axis=1)
    w = int(np.argmax(sq))
    return float(np.sqrt(sq[w])), w


def _canonical(P: np.ndarray) -> np.ndarray:
    # lexicographically sorted unique rows; two lists describe the same set
    # exactly when their canonical forms are identical
    return np.unique(P, axis=0)


def set_metric(A, B) -> float:
    """Max-distance between two point sets, patched to 0 when A = B as sets."""
    A = as_point_set(A)
    B = as_point_set(B)
    if A.shape[1] != B.shape[1]:
        raise DimensionMismatchError(
            f"sets have dimensions {A.shape[1]} and {B.shape[1]}"
        )
    ca, cb = _canonical(A), _canonical(B)
    if ca.shape == cb.shape and np.array_equal(ca, cb):
        return 0.0
    diff = A[:, None, :] - B[None, :, :]
    return float(np.sqrt((diff**2).sum(axis=-1).max()))


def objective(c, family: SetFamily) -> float:
    """Set median cost of ``c``: the sum of max distances to every member set."""
    c = as_point(c, family.d)
    total = 0.0
    for P in family.sets:
        total += float(np.sqrt(((P - c) ** 2).sum(axis=1).max()))
    return total
