"""Kernel functions, implicit feature-space centers, and the probabilistic
SVDD solver.

A positive semidefinite kernel defines inner products of a feature space
that is never materialized. Centers live there as affine combinations of
mapped input locations; distances to mapped points reduce to kernel
evaluations, so the whole set median pipeline can be simulated implicitly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import DimensionMismatchError, SetFamily, as_point
from .probseb import ProbInstance, _sample_family
from .setmedian import (
    SolverConfig,
    SolveResult,
    _PHASE_SAMPLING,
    _phase_rng,
    _run_pipeline,
)

__all__ = [
    "Kernel",
    "ImplicitCenter",
    "kernel_eval",
    "implicit_distance",
    "implicit_update",
    "solve_psvdd",
]

LINEAR = "linear"
POLY = "poly"
RBF = "rbf"


@dataclass(frozen=True)
class Kernel:
    """A positive semidefinite kernel: linear, polynomial, or squared
    exponential (RBF)."""

    kind: str
    degree: int = 2
    offset: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if self.kind not in (LINEAR, POLY, RBF):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == POLY:
            if int(self.degree) < 1:
                raise ValueError("polynomial degree must be a positive integer")
            if self.offset < 0.0:
                raise ValueError("polynomial offset must be non-negative to stay PSD")
        if self.kind == RBF and self.sigma <= 0.0:
            raise ValueError("rbf sigma must be positive")

    @classmethod
    def linear(cls) -> "Kernel":
        return cls(LINEAR)

    @classmethod
    def polynomial(cls, degree: int, offset: float = 0.0) -> "Kernel":
        return cls(POLY, degree=int(degree), offset=float(offset))

    @classmethod
    def rbf(cls, sigma: float) -> "Kernel":
        return cls(RBF, sigma=float(sigma))

    def matrix(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        """Kernel values between the rows of X (a, d) and Y (b, d): (a, b)."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
        if self.kind == LINEAR:
            return X @ Y.T
        if self.kind == POLY:
            return (X @ Y.T + self.offset) ** self.degree
        sq = ((X[:, None, :] - Y[None, :, :]) ** 2).sum(axis=-1)
        return np.exp(-sq / (2.0 * self.sigma**2))

    def self_values(self, X: np.ndarray) -> np.ndarray:
        """K(x, x) for each row of X."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if self.kind == LINEAR:
            return (X**2).sum(axis=1)
        if self.kind == POLY:
            return ((X**2).sum(axis=1) + self.offset) ** self.degree
        return np.ones(X.shape[0])

    def __call__(self, x, y) -> float:
        x = as_point(x)
        y = as_point(y)
        if x.shape[0] != y.shape[0]:
            raise DimensionMismatchError(
                f"points have dimensions {x.shape[0]} and {y.shape[0]}"
            )
        return float(self.matrix(x[None, :], y[None, :])[0, 0])


def kernel_eval(kernel: Kernel, x, y) -> float:
    """Kernel value K(x, y) of two points."""
    return kernel(x, y)


class ImplicitCenter:
    """A feature-space vector stored as an affine combination of mapped
    locations, with its squared norm cached.

    Values are immutable: updates return a new center. Coefficients always
    sum to 1, and after ``i`` update steps at most ``i + 1`` terms exist.
    """

    __slots__ = ("gammas", "locations", "sq_norm")

    def __init__(self, gammas: np.ndarray, locations: np.ndarray, sq_norm: float):
        self.gammas = np.asarray(gammas, dtype=np.float64)
        self.locations = np.asarray(locations, dtype=np.float64)
        self.sq_norm = float(sq_norm)

    @classmethod
    def from_location(cls, q, kernel: Kernel) -> "ImplicitCenter":
        """The mapped point itself: one term with coefficient 1."""
        q = as_point(q)
        return cls(np.array([1.0]), q[None, :], float(kernel.self_values(q[None, :])[0]))

    @classmethod
    def from_terms(cls, gammas, locations, kernel: Kernel) -> "ImplicitCenter":
        """Build from explicit terms, computing the norm by the double sum."""
        gammas = np.asarray(gammas, dtype=np.float64)
        locations = np.atleast_2d(np.asarray(locations, dtype=np.float64))
        sq = float(gammas @ kernel.matrix(locations, locations) @ gammas)
        return cls(gammas, locations, sq)

    @property
    def n_terms(self) -> int:
        return self.gammas.shape[0]

    @property
    def coefficient_sum(self) -> float:
        return float(self.gammas.sum())

    @property
    def d(self) -> int:
        return self.locations.shape[1]

    def recompute_sq_norm(self, kernel: Kernel) -> float:
        """The norm by the full double sum, for validating the cached value."""
        return float(self.gammas @ kernel.matrix(self.locations, self.locations) @ self.gammas)

    def __repr__(self) -> str:
        return f"ImplicitCenter(terms={self.n_terms}, d={self.d})"


def _cross_terms(center: ImplicitCenter, Q: np.ndarray, kernel: Kernel) -> np.ndarray:
    """sum_w gamma_w K(q_w, q) for each row q of Q."""
    return center.gammas @ kernel.matrix(center.locations, Q)


def _distances(center: ImplicitCenter, Q: np.ndarray, kernel: Kernel,
               self_vals: np.ndarray | None = None):
    """Feature-space distances from the center to the rows of Q, plus the
    cross terms reused by updates. The squared value is clamped at 0 before
    the root since cancellation can leave it slightly negative."""
    cross = _cross_terms(center, Q, kernel)
    if self_vals is None:
        self_vals = kernel.self_values(Q)
    sq = center.sq_norm + self_vals - 2.0 * cross
    return np.sqrt(np.maximum(sq, 0.0)), cross, self_vals


def implicit_distance(center: ImplicitCenter, q, kernel: Kernel) -> float:
    """Distance between the implicit center and the mapped point q."""
    q = as_point(q, center.d)
    dist, _, _ = _distances(center, q[None, :], kernel)
    return float(dist[0])


def _apply_update(center: ImplicitCenter, q: np.ndarray, beta: float,
                  cross: float, self_val: float) -> ImplicitCenter:
    """Move the center a fraction beta of the way toward the mapped q.

    Coefficients scale by (1 - beta); q joins with coefficient beta, merged
    into an existing term when the location repeats exactly. The cached
    norm is updated by the exact algebraic identity."""
    gammas = center.gammas * (1.0 - beta)
    match = np.flatnonzero((center.locations == q).all(axis=1))
    if match.size:
        gammas[match[0]] += beta
        locations = center.locations
    else:
        gammas = np.append(gammas, beta)
        locations = np.vstack([center.locations, q])
    sq_norm = ((1.0 - beta) ** 2 * center.sq_norm
               + beta**2 * self_val
               + 2.0 * beta * (1.0 - beta) * cross)
    return ImplicitCenter(gammas, locations, sq_norm)


def implicit_update(center: ImplicitCenter, q, step: float, kernel: Kernel) -> ImplicitCenter:
    """One fixed-step descent update toward the mapped point q.

    Raises on zero feature-space distance; the caller must skip the step,
    mirroring the zero-subgradient convention of the explicit solver.
    """
    if step <= 0.0:
        raise ValueError("step must be positive")
    q = as_point(q, center.d)
    dist, cross, self_vals = _distances(center, q[None, :], kernel)
    if dist[0] == 0.0:
        raise ValueError("cannot step toward a point at zero feature-space distance")
    return _apply_update(center, q, step / float(dist[0]), float(cross[0]), float(self_vals[0]))


class _ImplicitBackend:
    """Center operations simulated in the kernel feature space."""

    def __init__(self, family: SetFamily, kernel: Kernel):
        self.kernel = kernel
        self.sets = family.sets
        self.d = family.d
        sizes = [s.shape[0] for s in family.sets]
        self._stack = np.concatenate(family.sets)
        self._offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(int)
        self._self_vals = kernel.self_values(self._stack)
        bounds = np.append(self._offsets, self._stack.shape[0])
        self._set_self_vals = [self._self_vals[bounds[i]: bounds[i + 1]] for i in range(len(sizes))]

    @property
    def n(self) -> int:
        return len(self.sets)

    def initial_center(self, idx: int) -> ImplicitCenter:
        return ImplicitCenter.from_location(self.sets[idx][0], self.kernel)

    def _set_max(self, center: ImplicitCenter, i: int) -> float:
        dists, _, _ = _distances(center, self.sets[i], self.kernel, self._set_self_vals[i])
        return float(dists.max())

    def radius_sum(self, c0: ImplicitCenter, sample_idx) -> float:
        return float(sum(self._set_max(c0, int(i)) for i in sample_idx))

    def run_descents(self, c0: ImplicitCenter, steps, js, keep, trace=None) -> list:
        ell = js.shape[1]
        keep_mask = np.zeros(ell + 1, dtype=bool)
        keep_mask[keep] = True
        cands: list[ImplicitCenter] = []
        for r in range(len(steps)):
            c = c0
            run_trace = [self.objective(c)] if trace is not None else None
            if keep_mask[0]:
                cands.append(c)
            for t in range(ell):
                j = int(js[r, t])
                P = self.sets[j]
                dists, cross, self_vals = _distances(c, P, self.kernel, self._set_self_vals[j])
                w = int(dists.argmax())
                if dists[w] > 0.0:
                    c = _apply_update(c, P[w], float(steps[r]) / float(dists[w]),
                                      float(cross[w]), float(self_vals[w]))
                if keep_mask[t + 1]:
                    cands.append(c)
                if run_trace is not None:
                    run_trace.append(self.objective(c))
            if trace is not None:
                trace.append(np.array(run_trace))
        return cands

    def _set_maxima(self, center: ImplicitCenter) -> np.ndarray:
        dists, _, _ = _distances(center, self._stack, self.kernel, self._self_vals)
        return np.maximum.reduceat(dists, self._offsets)

    def eval_candidates(self, cands, counts) -> np.ndarray:
        counts = np.asarray(counts, dtype=np.float64)
        return np.array([self._set_maxima(c) @ counts for c in cands])

    def objective(self, center: ImplicitCenter) -> float:
        return float(self._set_maxima(center).sum())


def solve_psvdd(inst: ProbInstance, kernel: Kernel, cfg: SolverConfig, *,
                max_trials: int | None = None, threads: int = 0,
                trace_objectives: bool = False) -> SolveResult:
    """Approximate probabilistic SVDD center, computed implicitly.

    Runs the same two-case sampling as the pSEB solver, then the full set
    median pipeline with every explicit-center operation replaced by its
    feature-space counterpart. With the linear kernel and identical seed
    and config, sampling and every random decision coincide with
    ``solve_pseb``'s.
    """
    rng = _phase_rng(cfg.seed, 0, _PHASE_SAMPLING)
    family, diag = _sample_family(inst, cfg, rng, max_trials)
    backend = _ImplicitBackend(family, kernel)
    result = _run_pipeline(backend, cfg, threads=threads, trace_objectives=trace_objectives)
    result.diagnostics.update(diag)
    result.diagnostics["kernel"] = kernel.kind
    return result
