"""Probabilistic smallest enclosing ball via reduction to the set median solver.

Input points are independent discrete distributions over locations that may
include the "not present" outcome. Depending on how much probability mass
sits on real locations, the solver either samples single locations
proportionally to their probability (sparse case) or rejection-samples
whole non-empty realizations, and hands the resulting family to the set
median pipeline.
"""

from __future__ import annotations

import math

import numpy as np

from .geometry import DimensionMismatchError, SetFamily, as_point
from .setmedian import SolverConfig, SolveResult, _PHASE_SAMPLING, _phase_rng, solve_set_median

__all__ = [
    "DiscreteDistribution",
    "ProbInstance",
    "SamplingBudgetError",
    "presence_mass",
    "sample_locations_weighted",
    "sample_nonempty_realizations",
    "expected_cost",
    "solve_pseb",
]

_PROB_TOL = 1e-9


class SamplingBudgetError(RuntimeError):
    """Rejection sampling ran out of trials before collecting enough
    non-empty realizations."""

    def __init__(self, trials: int, collected: int, wanted: int):
        super().__init__(
            f"exhausted {trials} trials with only {collected} of {wanted} "
            "non-empty realizations collected"
        )
        self.trials = trials
        self.collected = collected
        self.wanted = wanted


class DiscreteDistribution:
    """One probabilistic point: locations with probabilities summing to 1.

    A location of ``None`` is the "point not present" outcome; multiple
    such entries are merged at ingestion so at most one remains.
    """

    __slots__ = ("points", "point_probs", "bottom_prob", "d")

    def __init__(self, entries, d: int | None = None):
        if len(entries) == 0:
            raise ValueError("a distribution needs at least one entry")
        pts, probs, bottom = [], [], 0.0
        for loc, p in entries:
            p = float(p)
            if not 0.0 <= p <= 1.0 + _PROB_TOL:
                raise ValueError(f"probability {p} outside [0, 1]")
            if loc is None:
                bottom += p
            else:
                pts.append(as_point(loc, d))
                if d is None:
                    d = pts[-1].shape[0]
                probs.append(p)
        total = bottom + sum(probs)
        if abs(total - 1.0) > _PROB_TOL:
            raise ValueError(f"probabilities sum to {total}, expected 1")
        if d is None:
            raise ValueError("a fully bottom distribution needs an explicit dimension")
        self.d = d
        self.points = np.array(pts, dtype=np.float64).reshape(len(pts), d)
        self.points.setflags(write=False)
        self.point_probs = np.array(probs, dtype=np.float64)
        self.point_probs.setflags(write=False)
        self.bottom_prob = bottom

    @property
    def entries(self) -> list:
        out = [(self.points[i], float(self.point_probs[i])) for i in range(len(self.point_probs))]
        if self.bottom_prob > 0.0:
            out.append((None, self.bottom_prob))
        return out

    @property
    def z(self) -> int:
        return len(self.point_probs) + (1 if self.bottom_prob > 0.0 else 0)

    def __repr__(self) -> str:
        return f"DiscreteDistribution(z={self.z}, d={self.d}, bottom={self.bottom_prob:.3g})"


class ProbInstance:
    """A set of independent discrete point distributions in one dimension."""

    __slots__ = ("distributions", "d")

    def __init__(self, distributions, d: int | None = None):
        if len(distributions) == 0:
            raise ValueError("an instance needs at least one distribution")
        dims = {dist.d for dist in distributions if dist.points.shape[0] > 0}
        if d is None:
            if not dims:
                raise ValueError("all-bottom instance needs an explicit dimension")
            d = dims.pop()
        if any(dd != d for dd in dims):
            raise DimensionMismatchError("distributions have mixed dimensions")
        self.distributions = list(distributions)
        self.d = d

    @property
    def n(self) -> int:
        return len(self.distributions)

    def locations(self):
        """All non-bottom locations and their probabilities, in stream order."""
        pts = [dist.points for dist in self.distributions if dist.points.shape[0] > 0]
        probs = [dist.point_probs for dist in self.distributions if dist.points.shape[0] > 0]
        if not pts:
            return np.empty((0, self.d)), np.empty(0)
        return np.concatenate(pts), np.concatenate(probs)

    @classmethod
    def from_dict(cls, payload: dict) -> "ProbInstance":
        """Parse the JSON instance format:
        ``{"d": 2, "distributions": [{"entries": [{"loc": [..] | null, "p": ..}]}]}``.
        """
        if not isinstance(payload, dict):
            raise ValueError("instance must be a JSON object")
        d = payload.get("d")
        if not isinstance(d, int) or d < 1:
            raise ValueError('field "d" must be a positive integer')
        raw = payload.get("distributions")
        if not isinstance(raw, list) or not raw:
            raise ValueError('field "distributions" must be a non-empty list')
        dists = []
        for i, item in enumerate(raw):
            entries = item.get("entries") if isinstance(item, dict) else None
            if not isinstance(entries, list) or not entries:
                raise ValueError(f'distributions[{i}] needs a non-empty "entries" list')
            pairs = []
            for j, e in enumerate(entries):
                if not isinstance(e, dict) or "p" not in e:
                    raise ValueError(f'distributions[{i}].entries[{j}] needs "loc" and "p"')
                pairs.append((e.get("loc"), e["p"]))
            try:
                dists.append(DiscreteDistribution(pairs, d=d))
            except ValueError as exc:
                raise ValueError(f"distributions[{i}]: {exc}") from exc
        return cls(dists, d=d)

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "distributions": [
                {
                    "entries": [
                        {"loc": None if loc is None else list(map(float, loc)), "p": p}
                        for loc, p in dist.entries
                    ]
                }
                for dist in self.distributions
            ],
        }


def presence_mass(inst: ProbInstance) -> float:
    """Total probability on real locations, summed over all distributions
    (can exceed 1)."""
    return float(sum(dist.point_probs.sum() for dist in inst.distributions))


def sample_locations_weighted(inst: ProbInstance, k: int, rng: np.random.Generator) -> SetFamily:
    """Family of ``k`` singleton sets, each an independent draw of a real
    location with probability proportional to its mass.

    Implemented as ``k`` parallel single-pass weighted reservoir samplers
    over the location stream (exponential-key method: each item draws a
    key distributed like log(U)/w and the largest key wins).
    """
    if k < 1:
        raise ValueError("k must be a positive integer")
    locs, weights = inst.locations()
    if locs.shape[0] == 0 or weights.sum() <= 0.0:
        raise ValueError("instance has no non-bottom location to sample")
    u = rng.random((locs.shape[0], k))
    with np.errstate(divide="ignore"):
        keys = np.where(weights[:, None] > 0.0, np.log(u) / weights[:, None], -np.inf)
    winners = keys.argmax(axis=0)
    return SetFamily([locs[w][None, :] for w in winners])


def sample_nonempty_realizations(inst: ProbInstance, k: int, max_trials: int,
                                 rng: np.random.Generator) -> tuple[SetFamily, int]:
    """Rejection-sample ``k`` non-empty realizations; returns the family and
    the number of trials spent.

    Each trial draws one location per distribution independently and keeps
    the realization if at least one point is present. Raises
    ``SamplingBudgetError`` after ``max_trials`` trials.
    """
    if k < 1 or max_trials < 1:
        raise ValueError("k and max_trials must be positive integers")
    if all(dist.points.shape[0] == 0 for dist in inst.distributions):
        raise ValueError("instance has no non-bottom location to sample")
    # per distribution: cumulative probs over [real locations..., bottom]
    cums = []
    for dist in inst.distributions:
        cums.append(np.cumsum(np.append(dist.point_probs, dist.bottom_prob)))
    sets, trials = [], 0
    while len(sets) < k:
        if trials >= max_trials:
            raise SamplingBudgetError(trials, len(sets), k)
        trials += 1
        u = rng.random(inst.n)
        pts = []
        for i, dist in enumerate(inst.distributions):
            j = int(np.searchsorted(cums[i], u[i], side="right"))
            if j < dist.points.shape[0]:
                pts.append(dist.points[j])
        if pts:
            sets.append(np.array(pts))
    return SetFamily(sets), trials


def expected_cost(c, inst: ProbInstance, max_realizations: int = 1_000_000) -> float:
    """Exact expected max distance from ``c`` to a random realization.

    Enumerates all location index tuples; the empty realization costs 0.
    Raises when the enumeration would exceed ``max_realizations`` tuples
    (use Monte-Carlo estimation over sampled realizations instead).
    """
    c = as_point(c, inst.d)
    total = 1
    for dist in inst.distributions:
        total *= dist.z
        if total > max_realizations:
            raise ValueError(
                f"enumeration over {total}+ realizations exceeds the cap of "
                f"{max_realizations}; estimate by sampling realizations instead"
            )
    probs = np.array([1.0])
    maxes = np.array([-np.inf])
    for dist in inst.distributions:
        dvals = np.sqrt(((dist.points - c) ** 2).sum(axis=1))
        p = dist.point_probs
        if dist.bottom_prob > 0.0:
            dvals = np.append(dvals, -np.inf)
            p = np.append(p, dist.bottom_prob)
        probs = (probs[:, None] * p[None, :]).ravel()
        maxes = np.maximum(maxes[:, None], dvals[None, :]).ravel()
    return float(probs @ np.where(np.isneginf(maxes), 0.0, maxes))


def _sample_family(inst: ProbInstance, cfg: SolverConfig, rng: np.random.Generator,
                   max_trials: int | None = None) -> tuple[SetFamily, dict]:
    """The two-case sampling front end shared by the pSEB and pSVDD solvers."""
    pm = presence_mass(inst)
    if pm <= 0.0:
        raise ValueError("instance has no non-bottom location")
    k = max(1, int(math.ceil(cfg.c_select / cfg.epsilon**2 * math.log(1.0 / cfg.epsilon))))
    if pm <= cfg.epsilon:
        family = sample_locations_weighted(inst, k, rng)
        case, trials = 1, k
    else:
        if max_trials is None:
            max_trials = int(math.ceil(8.0 * k / cfg.epsilon))
        family, trials = sample_nonempty_realizations(inst, k, max_trials, rng)
        case = 2
    diag = {"case": case, "sample_size_k": k, "trials_used": trials, "presence_mass": pm}
    return family, diag


def solve_pseb(inst: ProbInstance, cfg: SolverConfig, *, max_trials: int | None = None,
               threads: int = 0, trace_objectives: bool = False) -> SolveResult:
    """Approximate probabilistic smallest enclosing ball center.

    Samples a set family per the two-case rule (locations when the presence
    mass is at most epsilon, non-empty realizations otherwise with at most
    ``max_trials`` rejection trials, default ceil(8k/epsilon)) and solves
    the resulting set median problem. ``cost_estimate`` refers to the
    sampled family; evaluate ``expected_cost`` on the returned center for
    the true objective.
    """
    rng = _phase_rng(cfg.seed, 0, _PHASE_SAMPLING)
    family, diag = _sample_family(inst, cfg, rng, max_trials)
    result = solve_set_median(family, cfg, threads=threads, trace_objectives=trace_objectives)
    result.diagnostics.update(diag)
    return result
