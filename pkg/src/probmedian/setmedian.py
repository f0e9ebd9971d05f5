"""Stochastic subgradient solver for the set median problem.

The pipeline estimates an initial radius from a small sample, runs
fixed-step stochastic subgradient descent over a doubling grid of step
sizes, picks the best collected candidate against a uniform sample of the
input sets, and amplifies the constant success probability by keeping the
best of several independent repetitions.

Two constant regimes are supported: ``mode="paper"`` uses the very
conservative proof constants, ``mode="practical"`` (default) uses small
constants that behave identically at desk scale.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

try:
    from numba import njit as _njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    _HAVE_NUMBA = False

from .geometry import DimensionMismatchError, SetFamily, as_point

__all__ = [
    "PAPER",
    "PRACTICAL",
    "SolverConfig",
    "Subgradient",
    "RadiusEstimate",
    "SolveResult",
    "CandidateCollector",
    "exact_subgradient",
    "stochastic_subgradient",
    "pick_initial_center",
    "estimate_radius",
    "sgd_run",
    "select_best_candidate",
    "solve_set_median",
]

PAPER = "paper"
PRACTICAL = "practical"

_SEED_MASK = (1 << 64) - 1

# Phase tags for deterministic per-repetition RNG streams. Every source of
# randomness in a solve is a stream keyed by (seed ^ repetition, phase), so
# results do not depend on execution order or thread count.
_PHASE_INIT = 0
_PHASE_DESCENT = 1
_PHASE_SELECT = 2
_PHASE_SAMPLING = 3  # used by the probabilistic front ends, repetition 0 only


def _phase_rng(seed: int, repetition: int, phase: int) -> np.random.Generator:
    entropy = (int(seed) ^ int(repetition)) & _SEED_MASK
    return np.random.default_rng(np.random.SeedSequence(entropy=entropy, spawn_key=(phase,)))


def _descend_loop_impl(pts, C, steps, js, out):
    """Fixed-step descent: each chain k moves distance steps[k] toward the
    furthest point of set js[k, t] (lowest-index witness on ties), staying
    put when the center coincides with it."""
    ell = js.shape[1]
    K, d = C.shape
    n_max = pts.shape[1]
    for t in range(ell):
        for k in range(K):
            j = js[k, t]
            best_sq = -1.0
            w = 0
            for m in range(n_max):
                s = 0.0
                for a in range(d):
                    diff = C[k, a] - pts[j, m, a]
                    s += diff * diff
                if s > best_sq:
                    best_sq = s
                    w = m
            nrm = math.sqrt(best_sq)
            if nrm > 0.0:
                scale = steps[k] / nrm
                for a in range(d):
                    C[k, a] -= scale * (C[k, a] - pts[j, w, a])
            for a in range(d):
                out[t + 1, k, a] = C[k, a]


if _HAVE_NUMBA:
    _descend_loop = _njit(cache=True)(_descend_loop_impl)
else:  # pragma: no cover - exercised only without numba
    _descend_loop = _descend_loop_impl


@dataclass
class SolverConfig:
    """Parameters of a solve.

    ``epsilon`` is the approximation target; the theoretical guarantees are
    stated for epsilon < 1/9, larger values (up to 1) are accepted for
    smoke runs. ``eta`` is the target failure probability, amplified via
    ceil(log2(1/eta)) repetitions unless ``repetitions`` overrides it.
    ``c_iters`` and ``c_select`` are the iteration and selection-sample
    constants hidden in the O-notation: paper mode defaults to 68 and 64,
    practical mode to 8 and 16. ``candidate_budget`` caps the candidates
    retained per descent run in practical mode (paper mode retains all).
    """

    epsilon: float
    eta: float = 0.1
    seed: int = 0
    mode: str = PRACTICAL
    c_iters: float | None = None
    c_select: float | None = None
    candidate_budget: int = 64
    repetitions: int | None = None

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not 0.0 < self.eta < 1.0:
            raise ValueError(f"eta must lie in (0, 1), got {self.eta}")
        if self.mode not in (PAPER, PRACTICAL):
            raise ValueError(f"mode must be {PAPER!r} or {PRACTICAL!r}, got {self.mode!r}")
        if self.c_iters is None:
            self.c_iters = 68.0 if self.mode == PAPER else 8.0
        if self.c_select is None:
            self.c_select = 64.0 if self.mode == PAPER else 16.0
        if self.c_iters <= 0 or self.c_select <= 0:
            raise ValueError("c_iters and c_select must be positive")
        if int(self.candidate_budget) < 1:
            raise ValueError("candidate_budget must be a positive integer")
        self.candidate_budget = int(self.candidate_budget)
        if self.repetitions is not None and int(self.repetitions) < 1:
            raise ValueError("repetitions must be a positive integer")
        self.seed = int(self.seed) & _SEED_MASK

    @property
    def iterations(self) -> int:
        """Descent iterations per step size: ceil((c_iters / epsilon)^2)."""
        return int(math.ceil((self.c_iters / self.epsilon) ** 2))

    @property
    def step_grid_size(self) -> int:
        """Number of step sizes tried: j = 0 .. ceil(log2(2/epsilon^4))."""
        return int(math.ceil(math.log2(2.0 / self.epsilon**4))) + 1

    @property
    def num_repetitions(self) -> int:
        if self.repetitions is not None:
            return int(self.repetitions)
        return max(1, int(math.ceil(math.log2(1.0 / self.eta))))

    @property
    def keeps_all_candidates(self) -> bool:
        return self.mode == PAPER

    def selection_sample_size(self, n_candidates: int) -> int:
        """Sets sampled to pick among ``n_candidates``: ceil(c_select/eps^2 * ln(8 n))."""
        return int(math.ceil(self.c_select / self.epsilon**2 * math.log(8.0 * n_candidates)))

    def step_sizes(self, r_tilde: float) -> np.ndarray:
        """The doubling step-size grid derived from the radius estimate."""
        j = np.arange(self.step_grid_size, dtype=np.float64)
        rtj = 2.0 ** (j - 1.0) * self.epsilon**3 * r_tilde
        return rtj / math.sqrt(self.iterations + 1)


class Subgradient(NamedTuple):
    direction: np.ndarray
    source_index: int | None


class RadiusEstimate(NamedTuple):
    r_tilde: float
    c0: np.ndarray
    sample_indices: np.ndarray


@dataclass
class SolveResult:
    """Solver output: the chosen center, its exact cost on the solved family,
    and a JSON-serializable diagnostics dict."""

    center: object
    cost_estimate: float
    diagnostics: dict = field(default_factory=dict)


class _ArrayFamily:
    """Padded-array view of a family for vectorized max-distance queries.

    Padding rows repeat each set's first point, which never changes the
    maximum nor the lowest-index argmax. When ``radii`` is set the family
    consists of balls: distances gain the per-set radius and the descent
    direction points away from the ball center.
    """

    def __init__(self, family: SetFamily | None = None, *, balls=None):
        if balls is not None:
            centers, radii = balls
            self.pts = np.ascontiguousarray(centers, dtype=np.float64)[:, None, :]
            self.radii = np.asarray(radii, dtype=np.float64)
            self.d = self.pts.shape[2]
        else:
            n_max, d = family.n_max, family.d
            pts = np.empty((len(family), n_max, d))
            for i, s in enumerate(family.sets):
                pts[i, : s.shape[0]] = s
                if s.shape[0] < n_max:
                    pts[i, s.shape[0] :] = s[0]
            self.pts = pts
            self.radii = None
            self.d = d

    @property
    def n(self) -> int:
        return self.pts.shape[0]

    def max_dists(self, C: np.ndarray) -> np.ndarray:
        """Max distance of each center in ``C`` (M, d) to each set: (M, N)."""
        M = C.shape[0]
        N, n_max, d = self.pts.shape
        out = np.empty((M, N))
        chunk = max(1, int(4_000_000 / max(1, N * n_max)))
        for lo in range(0, M, chunk):
            hi = min(M, lo + chunk)
            diff = C[lo:hi, None, None, :] - self.pts[None, :, :, :]
            sq = np.einsum("mnkd,mnkd->mnk", diff, diff)
            out[lo:hi] = np.sqrt(sq.max(axis=2))
        if self.radii is not None:
            out += self.radii[None, :]
        return out

    def witnesses(self, c: np.ndarray):
        """Per-set max distance and witness index for a single center."""
        diff = c[None, None, :] - self.pts
        sq = np.einsum("nkd,nkd->nk", diff, diff)
        w = sq.argmax(axis=1)
        vals = np.sqrt(sq[np.arange(self.n), w])
        if self.radii is not None:
            vals = vals + self.radii
        return vals, w

    def descend(self, c0s: np.ndarray, steps: np.ndarray, js: np.ndarray) -> np.ndarray:
        """Run K fixed-step descent chains in lockstep.

        ``c0s`` is (K, d), ``steps`` (K,), ``js`` (K, ell) pre-drawn set
        indices. Returns all iterates as (ell + 1, K, d); the arithmetic per
        chain is identical to a one-chain run. The per-set radius, if any,
        is irrelevant here: it shifts max-distance values but not descent
        directions.
        """
        K, d = c0s.shape
        ell = js.shape[1]
        out = np.empty((ell + 1, K, d))
        C = np.ascontiguousarray(c0s, dtype=np.float64)
        out[0] = C
        steps = np.ascontiguousarray(steps, dtype=np.float64)
        js = np.ascontiguousarray(js, dtype=np.int64)
        _descend_loop(self.pts, C.copy(), steps, js, out)
        return out

    def objective(self, c: np.ndarray) -> float:
        return float(self.max_dists(c[None, :])[0].sum())


def exact_subgradient(c, family: SetFamily) -> Subgradient:
    """Sum over sets of the unit vector from each set's furthest point to ``c``.

    Sets whose furthest point coincides with ``c`` contribute the zero
    vector.
    """
    c = as_point(c, family.d)
    vals, wits = _ArrayFamily(family).witnesses(c)
    direction = np.zeros(family.d)
    for i, (v, w) in enumerate(zip(vals, wits)):
        if v > 0.0:
            direction += (c - family.sets[i][w]) / v
    return Subgradient(direction, None)


def stochastic_subgradient(c, family: SetFamily, rng: np.random.Generator) -> Subgradient:
    """One uniformly sampled term of the exact subgradient (norm 0 or 1)."""
    c = as_point(c, family.d)
    j = int(rng.integers(len(family)))
    P = family.sets[j]
    sq = ((P - c) ** 2).sum(axis=1)
    w = int(np.argmax(sq))
    dist = float(np.sqrt(sq[w]))
    if dist == 0.0:
        return Subgradient(np.zeros(family.d), j)
    return Subgradient((c - P[w]) / dist, j)


def pick_initial_center(family: SetFamily, rng: np.random.Generator) -> np.ndarray:
    """First point of a uniformly chosen member set."""
    idx = int(rng.integers(len(family)))
    return family.sets[idx][0].copy()


def estimate_radius(family: SetFamily, cfg: SolverConfig, rng: np.random.Generator) -> RadiusEstimate:
    """Initial center plus radius estimate from ceil(1/epsilon) sampled sets.

    The estimate is the sum of max distances from the initial center to the
    sampled sets (with repetition).
    """
    c0 = pick_initial_center(family, rng)
    m = int(math.ceil(1.0 / cfg.epsilon))
    idx = rng.integers(0, len(family), size=m)
    vals, _ = _ArrayFamily(family).witnesses(c0)
    return RadiusEstimate(float(vals[idx].sum()), c0, idx)


def _thin_indices(n: int, budget: int | None) -> np.ndarray:
    """Uniform stride of at most ``budget`` indices out of ``range(n)``,
    always containing 0 and n - 1."""
    if budget is None or n <= budget:
        return np.arange(n)
    return np.unique(np.round(np.linspace(0, n - 1, budget)).astype(int))


class CandidateCollector:
    """Retains descent iterates as candidate centers.

    With ``budget=None`` every offered iterate is kept; otherwise each run
    is thinned to a uniform stride of at most ``budget`` iterates that
    always includes the run's first and last one.
    """

    def __init__(self, budget: int | None = None):
        self.budget = budget
        self.items: list = []

    def extend_run(self, iterates) -> None:
        for i in _thin_indices(len(iterates), self.budget):
            self.items.append(iterates[i])

    def __len__(self) -> int:
        return len(self.items)


def sgd_run(c0, family: SetFamily, step: float, iters: int, rng: np.random.Generator,
            collector: CandidateCollector | None = None) -> np.ndarray:
    """Fixed-step stochastic subgradient descent from ``c0``.

    Each iteration samples one set uniformly and moves distance ``step``
    toward its furthest point (or stays put if the center coincides with
    it). Returns all iterates, c0 included, as an (iters + 1, d) array; the
    same iterates are offered to ``collector`` if one is given.
    """
    if step <= 0.0:
        raise ValueError("step must be positive")
    c0 = as_point(c0, family.d)
    js = rng.integers(0, len(family), size=int(iters))
    traj = _ArrayFamily(family).descend(
        c0[None, :], np.array([step]), js[None, :]
    )[:, 0, :]
    if collector is not None:
        collector.extend_run(traj)
    return traj


def select_best_candidate(candidates, family: SetFamily, sample_size: int,
                          rng: np.random.Generator) -> np.ndarray:
    """Candidate minimizing the summed max distance over a uniform sample
    (with repetition) of ``sample_size`` member sets; ties go to the lowest
    candidate index."""
    C = np.asarray(candidates, dtype=np.float64)
    if C.ndim != 2 or C.shape[0] == 0:
        raise ValueError("candidates must be a non-empty list of points")
    idx = rng.integers(0, len(family), size=int(sample_size))
    counts = np.bincount(idx, minlength=len(family)).astype(np.float64)
    sums = _ArrayFamily(family).max_dists(C) @ counts
    return C[int(np.argmin(sums))].copy()


class _ExplicitBackend:
    """Center operations on explicit d-dimensional vectors."""

    def __init__(self, family: SetFamily, reduce_eps: float | None = None):
        self.family = family
        if reduce_eps is not None:
            from .coreset import approx_meb

            balls = [approx_meb(s, reduce_eps) for s in family.sets]
            centers = np.stack([b.center for b in balls])
            radii = np.array([b.radius for b in balls])
            self.af = _ArrayFamily(balls=(centers, radii))
        else:
            self.af = _ArrayFamily(family)

    @property
    def n(self) -> int:
        return len(self.family)

    def initial_center(self, idx: int) -> np.ndarray:
        return self.family.sets[idx][0].copy()

    def radius_sum(self, c0, sample_idx) -> float:
        vals, _ = self.af.witnesses(c0)
        return float(vals[sample_idx].sum())

    def run_descents(self, c0, steps, js, keep, trace=None) -> list:
        runs = len(steps)
        trajs = self.af.descend(np.repeat(c0[None, :], runs, axis=0), steps, js)
        cands = []
        for r in range(runs):
            cands.extend(trajs[keep, r, :])
            if trace is not None:
                trace.append(self.af.max_dists(trajs[:, r, :]).sum(axis=1))
        return cands

    def run_descents_batch(self, items) -> list:
        """Descend the runs of several repetitions in one lockstep batch.

        ``items`` holds (c0, steps, js, keep) per repetition; all share the
        same iteration count. Chain arithmetic is identical to per-rep runs,
        only the batching changes."""
        c0s = np.concatenate([np.repeat(c0[None, :], len(steps), axis=0)
                              for c0, steps, _, _ in items])
        steps = np.concatenate([s for _, s, _, _ in items])
        js = np.concatenate([j for _, _, j, _ in items])
        trajs = self.af.descend(c0s, steps, js)
        outs = []
        ofs = 0
        for _, steps_i, _, keep in items:
            cands = []
            for r in range(len(steps_i)):
                cands.extend(trajs[keep, ofs + r, :])
            outs.append(cands)
            ofs += len(steps_i)
        return outs

    def eval_candidates(self, cands, counts) -> np.ndarray:
        return self.af.max_dists(np.asarray(cands)) @ counts

    def objective(self, center) -> float:
        return self.af.objective(np.asarray(center))


@dataclass
class _RepOutcome:
    center: object
    cost: float
    r_tilde: float
    degenerate: bool
    n_candidates: int
    selection_sample_size: int
    selected_index: int
    iterations: int


def _prepare_repetition(backend, cfg: SolverConfig, rep: int):
    """Initialization phase: initial center, radius estimate, pre-drawn
    descent indices. Returns a finished outcome for degenerate repetitions."""
    rng_init = _phase_rng(cfg.seed, rep, _PHASE_INIT)
    idx0 = int(rng_init.integers(backend.n))
    c0 = backend.initial_center(idx0)
    m = int(math.ceil(1.0 / cfg.epsilon))
    sample_idx = rng_init.integers(0, backend.n, size=m)
    r_tilde = backend.radius_sum(c0, sample_idx)

    if r_tilde == 0.0:
        # every sampled set sits at distance 0 from c0: the step grid would
        # be all-zero, and c0 already certifies near-optimality
        return None, _RepOutcome(c0, backend.objective(c0), 0.0, True, 1, 0, 0, 0)

    ell = cfg.iterations
    steps = cfg.step_sizes(r_tilde)
    rng_desc = _phase_rng(cfg.seed, rep, _PHASE_DESCENT)
    js = rng_desc.integers(0, backend.n, size=(len(steps), ell))
    keep = _thin_indices(ell + 1, None if cfg.keeps_all_candidates else cfg.candidate_budget)
    return (c0, steps, js, keep, r_tilde), None


def _finish_repetition(backend, cfg: SolverConfig, rep: int, prep, cands) -> _RepOutcome:
    """Selection phase: pick the best candidate on a sampled objective, then
    score it exactly."""
    c0, steps, js, keep, r_tilde = prep
    ssize = cfg.selection_sample_size(len(cands))
    rng_sel = _phase_rng(cfg.seed, rep, _PHASE_SELECT)
    sel_idx = rng_sel.integers(0, backend.n, size=ssize)
    counts = np.bincount(sel_idx, minlength=backend.n).astype(np.float64)
    sums = backend.eval_candidates(cands, counts)
    best = int(np.argmin(sums))
    center = cands[best]
    return _RepOutcome(center, backend.objective(center), r_tilde, False,
                       len(cands), ssize, best, js.size)


def _run_repetition(backend, cfg: SolverConfig, rep: int, trace) -> _RepOutcome:
    prep, done = _prepare_repetition(backend, cfg, rep)
    if done is not None:
        if trace is not None:
            trace.append([])
        return done
    c0, steps, js, keep, _ = prep
    rep_trace = [] if trace is not None else None
    cands = backend.run_descents(c0, steps, js, keep, trace=rep_trace)
    if trace is not None:
        trace.append(rep_trace)
    return _finish_repetition(backend, cfg, rep, prep, cands)


def _run_pipeline(backend, cfg: SolverConfig, *, threads: int = 0,
                  trace_objectives: bool = False) -> SolveResult:
    reps = cfg.num_repetitions
    trace = [] if trace_objectives else None
    if threads and reps > 1 and trace is None:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(lambda r: _run_repetition(backend, cfg, r, None), range(reps)))
    elif trace is None and hasattr(backend, "run_descents_batch"):
        # descend every repetition's runs in one lockstep batch
        outcomes: list = [None] * reps
        pending = []
        for r in range(reps):
            prep, done = _prepare_repetition(backend, cfg, r)
            if done is not None:
                outcomes[r] = done
            else:
                pending.append((r, prep))
        if pending:
            cand_lists = backend.run_descents_batch(
                [(p[0], p[1], p[2], p[3]) for _, p in pending]
            )
            for (r, prep), cands in zip(pending, cand_lists):
                outcomes[r] = _finish_repetition(backend, cfg, r, prep, cands)
    else:
        outcomes = [_run_repetition(backend, cfg, r, trace) for r in range(reps)]

    costs = [o.cost for o in outcomes]
    winner = int(np.argmin(costs))
    diag = {
        "repetitions": reps,
        "iterations_total": int(sum(o.iterations for o in outcomes)),
        "step_sizes_tried": int(sum(0 if o.degenerate else cfg.step_grid_size for o in outcomes)),
        "candidates_generated": int(sum(o.n_candidates for o in outcomes)),
        "selection_sample_size": [o.selection_sample_size for o in outcomes],
        "selected_candidate_index": [o.selected_index for o in outcomes],
        "r_tilde": [o.r_tilde for o in outcomes],
        "rep_costs": costs,
        "degenerate_reps": [o.degenerate for o in outcomes],
        "winner_repetition": winner,
        "mode": cfg.mode,
    }
    if trace is not None:
        diag["objective_trace"] = trace
    return SolveResult(outcomes[winner].center, costs[winner], diag)


def solve_set_median(family: SetFamily, cfg: SolverConfig, *, reduce_eps: float | None = None,
                     threads: int = 0, trace_objectives: bool = False) -> SolveResult:
    """Approximate set median center of ``family``.

    Pipeline per repetition: radius estimation from a small sample, one
    fixed-step descent per step size in the doubling grid, then candidate
    selection against a uniform sample of the sets. The best repetition by
    exact objective wins. With ``reduce_eps`` each input set is replaced by
    an approximate minimum enclosing ball and max-distance queries are
    answered from its surface (a sqrt(2)-factor trade, see ``coreset``);
    the reported cost is still the exact objective on the original sets.
    """
    backend = _ExplicitBackend(family, reduce_eps=reduce_eps)
    result = _run_pipeline(backend, cfg, threads=threads, trace_objectives=trace_objectives)
    if reduce_eps is not None:
        from .geometry import objective as exact_objective

        result.diagnostics["reduced_sets_eps"] = reduce_eps
        result.diagnostics["reduced_objective"] = result.cost_estimate
        result.cost_estimate = exact_objective(result.center, family)
    return result
