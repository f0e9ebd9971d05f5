"""Brute-force reference solvers for desk-scale instances.

These deliberately share no distance or objective code with the solver
modules: they exist to check the solver's approximation quality, so they
reimplement everything from scratch (slower, simpler, validated on
analytic cases).
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["oracle_set_median", "oracle_pseb"]

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _pad_sets(sets):
    """Stack variable-size sets into (N, n_max, d), padding with each set's
    first point (padding can never raise a maximum)."""
    n_max = max(s.shape[0] for s in sets)
    d = sets[0].shape[1]
    pts = np.empty((len(sets), n_max, d))
    for i, s in enumerate(sets):
        pts[i, : s.shape[0]] = s
        if s.shape[0] < n_max:
            pts[i, s.shape[0]:] = s[0]
    return pts


def _cost_many(C, pts):
    """Set median cost of each center in C (M, d) against padded sets."""
    diff = C[:, None, None, :] - pts[None, :, :, :]
    sq = (diff**2).sum(axis=-1)
    return np.sqrt(sq.max(axis=2)).sum(axis=1)


def _golden_min(fun, lo, hi, tol):
    """Golden-section minimum of a unimodal-ish function on [lo, hi]."""
    a, b = lo, hi
    x1 = b - _INVPHI * (b - a)
    x2 = a + _INVPHI * (b - a)
    f1, f2 = fun(x1), fun(x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INVPHI * (b - a)
            f1 = fun(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INVPHI * (b - a)
            f2 = fun(x2)
    return (a + b) / 2.0


def oracle_set_median(family, budget: int = 600, seed: int = 0):
    """Reference set median optimum by multi-start subgradient descent.

    Starts from up to 31 random input points plus the centroid. Each start
    runs ``budget`` iterations of descent along the normalized exact
    subgradient with diminishing step lengths R_box/sqrt(t), keeps its best
    iterate, then polishes it by coordinate-wise golden-section sweeps.
    Returns the best (center, cost) over all starts.
    """
    if budget < 1:
        raise ValueError("budget must be a positive integer")
    sets = [np.asarray(s, dtype=np.float64) for s in family.sets]
    pts = _pad_sets(sets)
    N, n_max, d = pts.shape
    stack = np.concatenate(sets)
    rng = np.random.default_rng(seed)

    n_starts = min(31, stack.shape[0])
    chosen = rng.choice(stack.shape[0], size=n_starts, replace=False)
    C = np.vstack([stack[chosen], stack.mean(axis=0)[None, :]])
    S = C.shape[0]

    span = stack.max(axis=0) - stack.min(axis=0)
    r_box = float(np.sqrt((span**2).sum()))
    if r_box == 0.0:
        c = stack[0].copy()
        return c, float(_cost_many(c[None, :], pts)[0])

    best_pts = C.copy()
    best_vals = _cost_many(C, pts)
    rows = np.arange(S)
    for t in range(1, budget + 1):
        diff = C[:, None, None, :] - pts[None, :, :, :]
        sq = (diff**2).sum(axis=-1)          # (S, N, n_max)
        w = sq.argmax(axis=2)                 # (S, N)
        m = np.sqrt(sq[rows[:, None], np.arange(N)[None, :], w])
        vals = m.sum(axis=1)
        improved = vals < best_vals
        best_vals = np.where(improved, vals, best_vals)
        best_pts[improved] = C[improved]

        far = pts[np.arange(N)[None, :], w]   # (S, N, d)
        delta = C[:, None, :] - far
        safe = np.where(m > 0.0, m, 1.0)
        g = (delta / safe[:, :, None] * (m > 0.0)[:, :, None]).sum(axis=1)
        gn = np.sqrt((g**2).sum(axis=1))
        gsafe = np.where(gn > 0.0, gn, 1.0)
        C = C - (r_box / math.sqrt(t)) * g / gsafe[:, None] * (gn > 0.0)[:, None]

    # coordinate-wise golden-section polish of each start's best iterate
    h0 = 2.0 * r_box / math.sqrt(budget)
    for s in range(S):
        x = best_pts[s].copy()
        h = h0
        for _ in range(3):
            for axis in range(d):
                def along(v, x=x, axis=axis):
                    y = x.copy()
                    y[axis] = v
                    return float(_cost_many(y[None, :], pts)[0])

                x[axis] = _golden_min(along, x[axis] - h, x[axis] + h, 1e-8 * r_box)
            h /= 4.0
        val = float(_cost_many(x[None, :], pts)[0])
        if val < best_vals[s]:
            best_vals[s] = val
            best_pts[s] = x

    i = int(np.argmin(best_vals))
    return best_pts[i].copy(), float(best_vals[i])


def _expected_costs_grid(C, dists_probs):
    """Exact expected max distance of each grid center.

    ``dists_probs`` lists per distribution the (locations, probs,
    bottom_prob) triple; absent points enter the running maximum as -inf
    and an all-absent realization costs 0."""
    G = C.shape[0]
    probs = np.array([1.0])
    maxes = np.full((G, 1), -np.inf)
    for locs, p, bottom in dists_probs:
        dv = np.sqrt(((C[:, None, :] - locs[None, :, :]) ** 2).sum(axis=-1))  # (G, z)
        if bottom > 0.0:
            dv = np.concatenate([dv, np.full((G, 1), -np.inf)], axis=1)
            p = np.append(p, bottom)
        probs = (probs[:, None] * p[None, :]).ravel()
        maxes = np.maximum(maxes[:, :, None], dv[:, None, :]).reshape(G, -1)
    return np.where(np.isneginf(maxes), 0.0, maxes) @ probs


def oracle_pseb(inst, grid_step: float = 0.5, max_realizations: int = 1_000_000):
    """Reference pSEB optimum by dense grid search with local refinement.

    Searches the bounding box of all locations padded by one box diagonal,
    then refines three times around the best point with a tenth of the step
    each. Only dimensions 1 and 2 are supported; higher dimensions should
    use the set median descent oracle on an enumerated instance instead.
    """
    if grid_step <= 0.0:
        raise ValueError("grid_step must be positive")
    if inst.d > 2:
        raise ValueError("grid search supports d <= 2 only")
    total = 1
    dists_probs = []
    all_locs = []
    for dist in inst.distributions:
        z = dist.points.shape[0] + (1 if dist.bottom_prob > 0.0 else 0)
        total *= max(z, 1)
        if total > max_realizations:
            raise ValueError(
                f"enumeration over {total}+ realizations exceeds the cap of {max_realizations}"
            )
        dists_probs.append((dist.points, dist.point_probs, dist.bottom_prob))
        if dist.points.shape[0] > 0:
            all_locs.append(dist.points)
    if not all_locs:
        origin = np.zeros(inst.d)
        return origin, 0.0
    locs = np.concatenate(all_locs)
    lo, hi = locs.min(axis=0), locs.max(axis=0)
    diam = float(np.sqrt(((hi - lo) ** 2).sum()))
    pad = max(diam, grid_step)

    axes = [np.arange(lo[k] - pad, hi[k] + pad + grid_step, grid_step) for k in range(inst.d)]
    grid = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    costs = _expected_costs_grid(grid, dists_probs)
    best = int(np.argmin(costs))
    center, cost = grid[best].copy(), float(costs[best])

    step = grid_step
    for _ in range(3):
        step /= 10.0
        offsets = np.linspace(-step * 10.0, step * 10.0, 21)
        local_axes = [center[k] + offsets for k in range(inst.d)]
        local = np.stack([g.ravel() for g in np.meshgrid(*local_axes, indexing="ij")], axis=1)
        local_costs = _expected_costs_grid(local, dists_probs)
        i = int(np.argmin(local_costs))
        if local_costs[i] <= cost:
            center, cost = local[i].copy(), float(local_costs[i])
    return center, cost
