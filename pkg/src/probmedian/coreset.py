"""Input-set reduction: approximate minimum enclosing balls and furthest
queries answered from the ball surface.

Replacing a set by its approximate enclosing ball answers max-distance
queries in O(d) at the price of a sqrt(2)(1 + eps) overestimate factor;
the solver exposes this as an opt-in accelerator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import as_point, as_point_set

__all__ = ["Ball", "approx_meb", "approx_furthest"]


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float


def approx_meb(P, eps_meb: float) -> Ball:
    """Approximate minimum enclosing ball by furthest-point iterations.

    Starting at the first point, ceil(1/eps_meb^2) rounds move the center a
    1/(i+1) fraction toward the current furthest point; the returned radius
    is the final furthest distance, at most (1 + eps_meb) times optimal.
    """
    P = as_point_set(P)
    if not 0.0 < eps_meb < 1.0:
        raise ValueError(f"eps_meb must lie in (0, 1), got {eps_meb}")
    c = P[0].astype(np.float64, copy=True)
    for i in range(1, int(math.ceil(1.0 / eps_meb**2)) + 1):
        w = int(np.argmax(((P - c) ** 2).sum(axis=1)))
        c += (P[w] - c) / (i + 1)
    radius = float(np.sqrt(((P - c) ** 2).sum(axis=1).max()))
    c.setflags(write=False)
    return Ball(c, radius)


def approx_furthest(ball: Ball, c) -> float:
    """Upper bound on the max distance from ``c`` to the set the ball was
    built from: distance to the ball center plus the radius.

    Never below the true max distance, and at most sqrt(2)(1 + eps_meb)
    times it."""
    c = as_point(c)
    return float(np.sqrt(((c - ball.center) ** 2).sum())) + ball.radius
