"""Proximity operators.

Every operator solves argmin_z 1/2||x - z||^2 + tau * f(z) for its own f.
The ``norm_*`` factories at the bottom wrap them as FunctionObjects so they
can be handed straight to the solvers.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.core import (
    STOP_FLOOR,
    FunctionObject,
    InvalidArgumentError,
    LinearOperator,
    Verbosity,
)
from src.proj import proj_b1

logger = logging.getLogger(__name__)

# Bound on ||D||^2 for the 2-D forward-difference operator D.
TV_DUAL_LIPSCHITZ = 8.0


def _check_weight(tau: float) -> None:
    if not tau >= 0:
        raise InvalidArgumentError(f"weight must be non-negative, got {tau}")


def soft_threshold(x, tau: float) -> np.ndarray:
    """sign(x) * max(|x| - tau, 0), componentwise."""
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - tau, 0.0)


def prox_l1(x, tau: float, psi: Optional[LinearOperator] = None) -> np.ndarray:
    """Prox of tau * ||psi x||_1; psi must be a tight frame when given."""
    _check_weight(tau)
    x = np.asarray(x, dtype=float)
    if psi is None:
        return soft_threshold(x, tau)
    nu = psi.require_tight("prox_l1")
    coeffs = np.asarray(psi.forward(x), dtype=float)
    return x + (1.0 / nu) * np.asarray(psi.adjoint(soft_threshold(coeffs, tau * nu) - coeffs), dtype=float)


def prox_l2_sq(x, tau: float, y, a: Optional[LinearOperator] = None) -> np.ndarray:
    """Prox of tau * ||a x - y||_2^2; a must be a tight frame when given."""
    _check_weight(tau)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if a is None:
        return (x + 2 * tau * y) / (1 + 2 * tau)
    nu = a.require_tight("prox_l2_sq")
    ax = np.asarray(a.forward(x), dtype=float)
    shrunk = (ax + 2 * tau * nu * y) / (1 + 2 * tau * nu)
    return x + (1.0 / nu) * np.asarray(a.adjoint(shrunk - ax), dtype=float)


def prox_linf(x, tau: float) -> np.ndarray:
    """Prox of tau * ||x||_inf by Moreau decomposition against the l1 ball."""
    _check_weight(tau)
    x = np.asarray(x, dtype=float)
    if tau == 0:
        return x.copy()
    return x - proj_b1(x, tau)


@dataclass(frozen=True)
class GroupPartition:
    """Disjoint index groups covering {0..N-1}."""

    groups: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "groups", tuple(tuple(int(i) for i in g) for g in self.groups))

    @classmethod
    def singletons(cls, n: int) -> "GroupPartition":
        return cls(tuple((i,) for i in range(n)))

    @classmethod
    def contiguous(cls, n: int, size: int) -> "GroupPartition":
        if size < 1:
            raise InvalidArgumentError(f"group size must be positive, got {size}")
        return cls(tuple(tuple(range(s, min(s + size, n))) for s in range(0, n, size)))

    def validate(self, n: int) -> None:
        seen = set()
        for g in self.groups:
            if not g:
                raise InvalidArgumentError("empty group in partition")
            for i in g:
                if i in seen:
                    raise InvalidArgumentError(f"index {i} belongs to more than one group")
                seen.add(i)
        if seen != set(range(n)):
            raise InvalidArgumentError(f"groups do not cover exactly the indices 0..{n - 1}")

    def index_arrays(self) -> List[np.ndarray]:
        return [np.asarray(g, dtype=int) for g in self.groups]


def _grouped(x, g: GroupPartition) -> Tuple[np.ndarray, List[np.ndarray]]:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise InvalidArgumentError(f"group operators need a flat vector, got shape {x.shape}")
    g.validate(x.size)
    return x, g.index_arrays()


def prox_l12(x, tau: float, g: GroupPartition) -> np.ndarray:
    """Prox of tau * sum_g ||x_g||_2 (block soft thresholding)."""
    _check_weight(tau)
    x, groups = _grouped(x, g)
    out = np.zeros_like(x)
    for idx in groups:
        block = x[idx]
        norm = float(np.linalg.norm(block))
        if norm > 0:
            out[idx] = block * max(1.0 - tau / norm, 0.0)
    return out


def prox_l1inf(x, tau: float, g: GroupPartition) -> np.ndarray:
    """Prox of tau * sum_g ||x_g||_inf, group-wise Moreau decomposition."""
    _check_weight(tau)
    x, groups = _grouped(x, g)
    if tau == 0:
        return x.copy()
    out = np.empty_like(x)
    for idx in groups:
        out[idx] = x[idx] - proj_b1(x[idx], tau)
    return out


def norm_l12_value(x, g: GroupPartition) -> float:
    x, groups = _grouped(x, g)
    return float(sum(np.linalg.norm(x[idx]) for idx in groups))


def norm_l1inf_value(x, g: GroupPartition) -> float:
    x, groups = _grouped(x, g)
    return float(sum(np.max(np.abs(x[idx])) for idx in groups))


class TvParams(BaseModel):
    """Inner solver settings of prox_tv."""

    model_config = ConfigDict(frozen=True)

    maxit: int = Field(200, ge=1)
    tol: float = Field(1e-4, ge=0)
    verbosity: Verbosity = Verbosity.SILENT


def _as_image(img) -> np.ndarray:
    img = np.asarray(img, dtype=float)
    if img.ndim != 2 or min(img.shape) < 1:
        raise InvalidArgumentError(f"expected a non-empty 2-D image, got shape {img.shape}")
    return img


def _gradient(u: np.ndarray) -> np.ndarray:
    """Forward differences, zero on the last column/row (replicate boundary)."""
    g = np.zeros((2,) + u.shape)
    g[0, :, :-1] = u[:, 1:] - u[:, :-1]
    g[1, :-1, :] = u[1:, :] - u[:-1, :]
    return g


def _gradient_adjoint(p: np.ndarray) -> np.ndarray:
    """Adjoint of _gradient (minus the divergence)."""
    out = np.zeros(p.shape[1:])
    out[:, :-1] -= p[0, :, :-1]
    out[:, 1:] += p[0, :, :-1]
    out[:-1, :] -= p[1, :-1, :]
    out[1:, :] += p[1, :-1, :]
    return out


def _project_unit_ball(p: np.ndarray) -> np.ndarray:
    magnitude = np.sqrt(p[0] ** 2 + p[1] ** 2)
    return p / np.maximum(magnitude, 1.0)


def tv_norm(img) -> float:
    """Isotropic total variation with forward differences."""
    g = _gradient(_as_image(img))
    return float(np.sum(np.sqrt(g[0] ** 2 + g[1] ** 2)))


def prox_tv(img, tau: float, params: Optional[TvParams] = None) -> np.ndarray:
    """Prox of tau * TV.

    Accelerated projected gradient on the dual field p (|p_ij| <= 1), with
    step 1/(8 tau) and z = img - tau D^T p. Stops after params.maxit
    iterations or once the relative change of p drops below params.tol.
    """
    params = params or TvParams()
    _check_weight(tau)
    img = _as_image(img)
    if tau == 0:
        return img.copy()

    step = 1.0 / (TV_DUAL_LIPSCHITZ * tau)
    p = np.zeros((2,) + img.shape)
    r = p.copy()
    t = 1.0
    change = math.inf
    k = 0
    for k in range(1, params.maxit + 1):
        z = img - tau * _gradient_adjoint(r)
        p_next = _project_unit_ball(r + step * _gradient(z))
        t_next = (1.0 + math.sqrt(1.0 + 4.0 * t * t)) / 2.0
        r = p_next + ((t - 1.0) / t_next) * (p_next - p)
        change = float(np.linalg.norm(p_next - p)) / max(float(np.linalg.norm(p_next)), STOP_FLOOR)
        p, t = p_next, t_next
        if params.verbosity >= Verbosity.PER_ITERATION:
            logger.info("prox_tv iter %d: dual change=%.3e", k, change)
        if change < params.tol:
            break

    if params.verbosity >= Verbosity.SUMMARY:
        logger.info("prox_tv: %d iterations, dual change=%.3e", k, change)
    return img - tau * _gradient_adjoint(p)


def nuclear_norm(xmat) -> float:
    return float(np.sum(np.linalg.svd(np.asarray(xmat, dtype=float), compute_uv=False)))


def prox_nuclear(xmat, tau: float) -> np.ndarray:
    """Singular value soft thresholding."""
    _check_weight(tau)
    xmat = np.asarray(xmat, dtype=float)
    if xmat.ndim != 2:
        raise InvalidArgumentError(f"expected a matrix, got shape {xmat.shape}")
    u, s, vt = np.linalg.svd(xmat, full_matrices=False)
    return (u * np.maximum(s - tau, 0.0)) @ vt


# FunctionObject factories


def _check_factor(weight: float) -> float:
    if not weight > 0:
        raise InvalidArgumentError(f"weight must be positive, got {weight}")
    return float(weight)


def norm_l1(weight: float = 1.0, psi: Optional[LinearOperator] = None) -> FunctionObject:
    """weight * ||psi x||_1."""
    w = _check_factor(weight)
    if psi is not None:
        psi.require_tight("norm_l1")

    def evaluate(x):
        coeffs = x if psi is None else psi.forward(x)
        return w * float(np.abs(coeffs).sum())

    return FunctionObject(eval=evaluate, prox=lambda x, tau: prox_l1(x, w * tau, psi),
                          name="l1" if psi is None else "l1_analysis")


def norm_linf(weight: float = 1.0) -> FunctionObject:
    w = _check_factor(weight)
    return FunctionObject(eval=lambda x: w * float(np.max(np.abs(x))),
                          prox=lambda x, tau: prox_linf(x, w * tau), name="linf")


def norm_l12(groups: GroupPartition, weight: float = 1.0) -> FunctionObject:
    w = _check_factor(weight)
    return FunctionObject(eval=lambda x: w * norm_l12_value(x, groups),
                          prox=lambda x, tau: prox_l12(x, w * tau, groups), name="l12")


def norm_l1inf(groups: GroupPartition, weight: float = 1.0) -> FunctionObject:
    w = _check_factor(weight)
    return FunctionObject(eval=lambda x: w * norm_l1inf_value(x, groups),
                          prox=lambda x, tau: prox_l1inf(x, w * tau, groups), name="l1inf")


def norm_tv(shape: Sequence[int], weight: float = 1.0, params: Optional[TvParams] = None) -> FunctionObject:
    """weight * TV of a flat vector read row-major as an image of `shape`."""
    w = _check_factor(weight)
    shape = tuple(shape)

    def prox(x, tau):
        return prox_tv(np.reshape(x, shape), w * tau, params).ravel()

    return FunctionObject(eval=lambda x: w * tv_norm(np.reshape(x, shape)), prox=prox, name="tv")


def norm_nuclear(shape: Sequence[int], weight: float = 1.0) -> FunctionObject:
    """weight * ||X||_* of a flat vector read row-major as a matrix of `shape`."""
    w = _check_factor(weight)
    shape = tuple(shape)

    def prox(x, tau):
        return prox_nuclear(np.reshape(x, shape), w * tau).ravel()

    return FunctionObject(eval=lambda x: w * nuclear_norm(np.reshape(x, shape)), prox=prox, name="nuclear")


def squared_l2(y, a: Optional[LinearOperator] = None, weight: float = 1.0) -> FunctionObject:
    """weight * ||a x - y||_2^2.

    The gradient is always available; the prox and the Lipschitz constant
    2 * weight * nu only when a is absent or a tight frame.
    """
    w = _check_factor(weight)
    y = np.array(y, dtype=float)
    op = LinearOperator.identity() if a is None else a

    def residual(x):
        return np.asarray(op.forward(x), dtype=float) - y

    def grad(x):
        return 2 * w * np.asarray(op.adjoint(residual(x)), dtype=float)

    prox = lipschitz = None
    if op.tight:
        lipschitz = 2 * w * op.nu
        prox = lambda x, tau: prox_l2_sq(x, w * tau, y, a)  # noqa: E731
    return FunctionObject(eval=lambda x: w * float(np.sum(residual(x) ** 2)),
                          grad=grad, prox=prox, lipschitz=lipschitz, name="squared_l2")
