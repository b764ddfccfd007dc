"""Projections onto norm balls.

Both projections double as proximity maps of indicator functions: the
indicator factories below accept the usual ``(x, tau)`` call and ignore the
weight, so a constraint can sit in any solver slot that expects a prox.
Balls are closed.
"""

import math
from typing import Optional

import numpy as np

from src.core import FunctionObject, InvalidArgumentError, LinearOperator

# Relative slack for membership tests of the indicator evaluators.
FEASIBILITY_SLACK = 1e-10


def proj_b1(x, epsilon: float) -> np.ndarray:
    """Euclidean projection onto {v : ||v||_1 <= epsilon}.

    Finds the soft threshold theta from the sorted cumulative sums of |x|, so
    equal magnitudes always shrink by the same amount. O(N log N).
    """
    if not epsilon > 0:
        raise InvalidArgumentError(f"epsilon must be positive, got {epsilon}")
    x = np.asarray(x, dtype=float)
    mags = np.abs(x)
    if mags.sum() <= epsilon:
        return x.copy()

    u = np.sort(mags, axis=None)[::-1]
    thetas = (np.cumsum(u) - epsilon) / np.arange(1, u.size + 1)
    rho = np.nonzero(u > thetas)[0][-1]
    theta = thetas[rho]
    return np.sign(x) * np.maximum(mags - theta, 0.0)


def proj_b2(x, epsilon: float, y=None, a: Optional[LinearOperator] = None) -> np.ndarray:
    """Euclidean projection onto {v : ||A v - y||_2 <= epsilon}.

    A defaults to the identity and must otherwise be a tight frame
    (A A^T = nu I), in which case the projection has the closed form
    x + (1/nu) A^T((epsilon/||r|| - 1) r) with r = A x - y.
    """
    if epsilon < 0:
        raise InvalidArgumentError(f"epsilon must be non-negative, got {epsilon}")
    op = LinearOperator.identity() if a is None else a
    nu = op.require_tight("proj_b2")

    x = np.asarray(x, dtype=float)
    ax = np.asarray(op.forward(x), dtype=float)
    center = np.zeros_like(ax) if y is None else np.asarray(y, dtype=float)
    if center.shape != ax.shape:
        raise InvalidArgumentError(f"center has shape {center.shape}, expected {ax.shape}")

    r = ax - center
    rnorm = float(np.linalg.norm(r))
    if rnorm <= epsilon:
        return x.copy()
    return x + (1.0 / nu) * np.asarray(op.adjoint((epsilon / rnorm - 1.0) * r), dtype=float)


def indicator_b1(epsilon: float) -> FunctionObject:
    """Indicator of the l1 ball; its prox is proj_b1 whatever the weight."""
    if not epsilon > 0:
        raise InvalidArgumentError(f"epsilon must be positive, got {epsilon}")
    bound = epsilon * (1 + FEASIBILITY_SLACK)

    def evaluate(x):
        return 0.0 if float(np.abs(x).sum()) <= bound else math.inf

    return FunctionObject(eval=evaluate, prox=lambda x, tau: proj_b1(x, epsilon), name="indicator_b1")


def indicator_b2(epsilon: float, y=None, a: Optional[LinearOperator] = None) -> FunctionObject:
    """Indicator of {v : ||A v - y|| <= epsilon}; its prox is proj_b2."""
    if epsilon < 0:
        raise InvalidArgumentError(f"epsilon must be non-negative, got {epsilon}")
    op = LinearOperator.identity() if a is None else a
    op.require_tight("indicator_b2")
    bound = epsilon + FEASIBILITY_SLACK * max(epsilon, 1.0)
    center = None if y is None else np.array(y, dtype=float)

    def evaluate(x):
        r = np.asarray(op.forward(x), dtype=float)
        if center is not None:
            r = r - center
        return 0.0 if float(np.linalg.norm(r)) <= bound else math.inf

    return FunctionObject(eval=evaluate, prox=lambda x, tau: proj_b2(x, epsilon, center, op),
                          name="indicator_b2")
