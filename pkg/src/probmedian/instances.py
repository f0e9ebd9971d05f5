"""Random instance generators shared by the benchmark harness and tests."""

from __future__ import annotations

import numpy as np

from .geometry import SetFamily
from .probseb import DiscreteDistribution, ProbInstance

__all__ = ["random_set_family", "random_prob_instance"]


def random_set_family(rng: np.random.Generator, n_sets: int, set_size: int, d: int,
                      low: float = 0.0, high: float = 10.0) -> SetFamily:
    """Family of ``n_sets`` sets of ``set_size`` uniform points in a box."""
    return SetFamily([rng.uniform(low, high, size=(set_size, d)) for _ in range(n_sets)])


def random_prob_instance(rng: np.random.Generator, n_dists: int, z: int, d: int,
                         presence_mass: float | None = None,
                         low: float = 0.0, high: float = 10.0) -> ProbInstance:
    """Instance of ``n_dists`` distributions over ``z`` locations each.

    With ``presence_mass`` set, one location per distribution becomes the
    absent outcome and the real-location probabilities are scaled so the
    total presence mass over the whole instance equals the target;
    otherwise all locations are real.
    """
    dists = []
    if presence_mass is None:
        for _ in range(n_dists):
            p = rng.dirichlet(np.ones(z))
            locs = rng.uniform(low, high, size=(z, d))
            dists.append(DiscreteDistribution(list(zip(locs, p)), d=d))
    else:
        per_dist = presence_mass / n_dists
        if per_dist >= 1.0:
            raise ValueError("presence_mass too large to scale below 1 per distribution")
        for _ in range(n_dists):
            p = rng.dirichlet(np.ones(z - 1)) * per_dist
            locs = rng.uniform(low, high, size=(z - 1, d))
            entries = list(zip(locs, p)) + [(None, 1.0 - per_dist)]
            dists.append(DiscreteDistribution(entries, d=d))
    return ProbInstance(dists, d=d)
