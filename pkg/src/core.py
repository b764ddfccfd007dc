"""Function and operator abstractions, objective evaluation, the stopping rule
and the iteration harness shared by every solver.

Vectors are flat float arrays. A convex function is described by a
`FunctionObject` holding an evaluator plus whatever the solvers need from it
(gradient, proximity map, L-composed proximity map). Evaluators may return
``math.inf`` to encode points outside the function's domain, which is how
indicator functions are expressed.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Callable, Iterator, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

logger = logging.getLogger(__name__)

# Denominator floor of the relative-change test.
STOP_FLOOR = 2.2e-16

Vector = np.ndarray
Evaluator = Callable[[Vector], float]
Gradient = Callable[[Vector], Vector]
ProxMap = Callable[[Vector, float], Vector]


class ProxSplitError(ValueError):
    """Base class for errors raised by this package."""


class InvalidArgumentError(ProxSplitError):
    """Bad shape, dimension, radius, weight, partition or step parameter."""


class CapabilityError(ProxSplitError):
    """A function lacks the gradient or proximity map a solver needs."""


class UnsupportedOperatorError(ProxSplitError):
    """A closed-form operator was handed a linear operator that is not a tight frame."""


class Verbosity(IntEnum):
    SILENT = 0
    SUMMARY = 1
    PER_ITERATION = 2


class Method(str, Enum):
    ISTA = "ISTA"
    FISTA = "FISTA"


class StopReason(str, Enum):
    TOLERANCE = "tolerance"
    MAX_ITERATIONS = "max_iterations"


@dataclass(frozen=True)
class FunctionObject:
    """A convex function f: R^N -> R U {+inf}.

    Args:
        eval: evaluator, may return ``math.inf`` outside dom f.
        grad: gradient map, for smooth functions.
        prox: ``prox(x, tau)`` returning argmin_y 1/2||x - y||^2 + tau f(y).
        lipschitz: Lipschitz constant of ``grad``; never estimated.
        prox_l: L-composed proximity map ``prox_l(z, tau)`` returning
            argmin_x tau f(x) + 1/2||Lx - z||^2 (used by ADMM). It comes on top
            of ``grad`` or ``prox``, one of which is always required.
        name: label used in logs.
    """

    eval: Evaluator
    grad: Optional[Gradient] = None
    prox: Optional[ProxMap] = None
    lipschitz: Optional[float] = None
    prox_l: Optional[ProxMap] = None
    name: str = "f"

    def __post_init__(self):
        if self.grad is None and self.prox is None:
            raise CapabilityError(f"{self.name}: needs at least a gradient or a proximity map")
        if self.lipschitz is not None and not self.lipschitz > 0:
            raise InvalidArgumentError(f"{self.name}: lipschitz must be positive, got {self.lipschitz}")

    def __call__(self, x: Vector) -> float:
        return float(self.eval(x))


def _copy(x: Vector) -> Vector:
    return np.array(x, dtype=float)


@dataclass(frozen=True)
class LinearOperator:
    """Forward/adjoint pair. ``tight`` means forward(adjoint(y)) == nu * y."""

    forward: Callable[[Vector], Vector]
    adjoint: Callable[[Vector], Vector]
    nu: Optional[float] = None
    tight: bool = False

    def __post_init__(self):
        if self.nu is not None and not self.nu > 0:
            raise InvalidArgumentError(f"frame constant nu must be positive, got {self.nu}")
        if self.tight and self.nu is None:
            raise InvalidArgumentError("a tight operator needs its frame constant nu")

    def __call__(self, x: Vector) -> Vector:
        return self.forward(x)

    def require_tight(self, what: str) -> float:
        """Return nu, or raise if the closed form of `what` does not apply."""
        if not self.tight:
            raise UnsupportedOperatorError(
                f"{what} has a closed form only for tight operators; "
                "use a splitting solver for general operators"
            )
        return float(self.nu)

    @classmethod
    def identity(cls) -> "LinearOperator":
        return cls(forward=_copy, adjoint=_copy, nu=1.0, tight=True)

    @classmethod
    def scaled_identity(cls, c: float) -> "LinearOperator":
        c = float(c)
        if c == 0:
            raise InvalidArgumentError("scale must be non-zero")
        return cls(forward=lambda x: c * np.asarray(x, dtype=float),
                   adjoint=lambda y: c * np.asarray(y, dtype=float),
                   nu=c * c, tight=True)

    @classmethod
    def diagonal(cls, d: Sequence[float]) -> "LinearOperator":
        """Self-adjoint diagonal operator; tight only for constant non-zero |d|."""
        d = np.array(d, dtype=float).ravel()
        d.flags.writeable = False
        magnitudes = np.abs(d)
        tight = bool(d.size and magnitudes[0] > 0 and np.all(magnitudes == magnitudes[0]))
        return cls(forward=lambda x: d * np.asarray(x, dtype=float),
                   adjoint=lambda y: d * np.asarray(y, dtype=float),
                   nu=float(magnitudes[0] ** 2) if tight else None, tight=tight)


@dataclass(frozen=True)
class ProblemSpec:
    """min_x sum_k f_k(x) over R^N."""

    functions: Tuple[FunctionObject, ...]
    dimension: int

    def __post_init__(self):
        object.__setattr__(self, "functions", tuple(self.functions))
        if not self.functions:
            raise InvalidArgumentError("a problem needs at least one function")
        if self.dimension < 1:
            raise InvalidArgumentError(f"dimension must be positive, got {self.dimension}")

    @property
    def K(self) -> int:
        return len(self.functions)


class SolverParams(BaseModel):
    """Shared solver configuration. ``lambda`` is accepted as an alias of ``lambda_``."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    gamma: float = Field(1.0, gt=0)
    lambda_: float = Field(1.0, alias="lambda")
    tol: float = Field(1e-4, ge=0)
    maxit: int = Field(200, ge=1)
    verbosity: Verbosity = Verbosity.SUMMARY
    method: Method = Method.FISTA

    def replace(self, **changes) -> "SolverParams":
        """Validated copy with some fields changed."""
        values = self.model_dump()
        values.update(changes)
        return SolverParams(**values)


@dataclass(frozen=True)
class SolveResult:
    solution: Vector
    trace: Tuple[float, ...]
    iterations: int
    stop_reason: StopReason
    # Solver-specific fixed-point or primal residual at the returned point.
    residual: Optional[float] = None

    @property
    def objective(self) -> float:
        return self.trace[-1]


def as_vector(x, dimension: Optional[int] = None) -> Vector:
    """Coerce to a flat float array, checking the dimension if given."""
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise InvalidArgumentError(f"expected a flat vector, got shape {v.shape}")
    if dimension is not None and v.size != dimension:
        raise InvalidArgumentError(f"expected dimension {dimension}, got {v.size}")
    return v


def evaluate_objective(problem: ProblemSpec, x: Vector) -> float:
    """Sum of every evaluator at x; +inf as soon as one of them is +inf."""
    x = as_vector(x, problem.dimension)
    values = [float(f.eval(x)) for f in problem.functions]
    if any(v == math.inf for v in values):
        return math.inf
    return math.fsum(values)


def relative_change(current: float, previous: float) -> float:
    return abs(current - previous) / max(abs(current), STOP_FLOOR)


def should_stop(current: float, previous: float, tol: float) -> bool:
    """|n(t) - n(t-1)| / max(|n(t)|, floor) < tol; never true across infinite values."""
    if not (math.isfinite(current) and math.isfinite(previous)):
        return False
    return relative_change(current, previous) < tol


def run_iterations(
    iterates: Iterator[Vector],
    objective: Callable[[Vector], float],
    params: SolverParams,
    name: str,
    settled: Optional[Callable[[], bool]] = None,
) -> SolveResult:
    """Drive a solver's iterate generator until the stopping rule or maxit.

    `iterates` yields the current primal point once per full iteration; the
    objective is recorded after each one. `settled`, when given, is asked
    after each iteration whether the solver's hidden state (auxiliary or
    dual variables) has stopped moving; a tolerance stop needs it to agree.
    """
    trace = []
    x = None
    stop_reason = StopReason.MAX_ITERATIONS
    for k, x in enumerate(itertools.islice(iterates, params.maxit), start=1):
        value = float(objective(x))
        trace.append(value)
        if params.verbosity >= Verbosity.PER_ITERATION:
            if k > 1 and math.isfinite(value) and math.isfinite(trace[-2]):
                logger.info("%s iter %d: objective=%.6e rel_change=%.3e",
                            name, k, value, relative_change(value, trace[-2]))
            else:
                logger.info("%s iter %d: objective=%.6e", name, k, value)
        if k > 1 and should_stop(value, trace[-2], params.tol) and (settled is None or settled()):
            stop_reason = StopReason.TOLERANCE
            break
    if x is None:
        raise ProxSplitError(f"{name}: solver produced no iterate")

    solution = np.array(x, dtype=float)
    solution.flags.writeable = False
    if params.verbosity >= Verbosity.SUMMARY:
        logger.info("%s: %d iterations, stopped on %s, objective=%.6e",
                    name, len(trace), stop_reason.value, trace[-1])
    return SolveResult(solution=solution, trace=tuple(trace),
                       iterations=len(trace), stop_reason=stop_reason)


def zero_function() -> FunctionObject:
    """f = 0; its proximity map is the identity."""
    return FunctionObject(eval=lambda x: 0.0,
                          grad=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
                          prox=lambda x, tau: np.array(x, dtype=float),
                          name="zero")


def squared_distance(center) -> FunctionObject:
    """f(x) = 1/2 ||x - c||^2."""
    c = np.array(center, dtype=float)
    c.flags.writeable = False

    def prox(x, tau):
        return (np.asarray(x, dtype=float) + tau * c) / (1.0 + tau)

    return FunctionObject(eval=lambda x: 0.5 * float(np.sum((np.asarray(x) - c) ** 2)),
                          grad=lambda x: np.asarray(x, dtype=float) - c,
                          prox=prox, lipschitz=1.0, name="squared_distance")


# Diagnostics


@dataclass(frozen=True)
class AdjointReport:
    max_discrepancy: float
    trials: int


def check_adjoint(op: LinearOperator, trials: int = 100, seed: int = 0, dim: int = 4) -> AdjointReport:
    """Largest |<Ax, y> - <x, A^T y>| / (||x|| ||y||) over seeded random pairs."""
    if trials < 1:
        raise InvalidArgumentError("trials must be at least 1")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        x = rng.standard_normal(dim)
        ax = np.asarray(op.forward(x), dtype=float)
        y = rng.standard_normal(ax.shape)
        aty = np.asarray(op.adjoint(y), dtype=float)
        scale = np.linalg.norm(x) * np.linalg.norm(y)
        worst = max(worst, abs(np.vdot(ax, y) - np.vdot(x, aty)) / scale)
    return AdjointReport(max_discrepancy=float(worst), trials=trials)


def check_tight(op: LinearOperator, trials: int = 100, seed: int = 0, dim: int = 4) -> float:
    """Largest ||A A^T y - nu y|| / ||y|| over seeded random y."""
    nu = op.require_tight("check_tight")
    rng = np.random.default_rng(seed)
    out_shape = np.asarray(op.forward(np.zeros(dim)), dtype=float).shape
    worst = 0.0
    for _ in range(trials):
        y = rng.standard_normal(out_shape)
        err = np.linalg.norm(np.asarray(op.forward(op.adjoint(y)), dtype=float) - nu * y)
        worst = max(worst, err / np.linalg.norm(y))
    return float(worst)


def prox_optimality_gap(
    f: FunctionObject,
    x: Vector,
    tau: float,
    rng: np.random.Generator,
    directions: int = 100,
    delta: float = 1e-3,
) -> float:
    """First-order test of p = prox(x, tau).

    Returns the largest decrease F(p) - F(p + delta d) found over random unit
    directions d, for F(y) = 1/2||x - y||^2 + tau f(y). A correct proximity
    map gives a value <= 0 up to rounding.
    """
    if f.prox is None:
        raise CapabilityError(f"{f.name}: no proximity map to check")
    x = np.asarray(x, dtype=float)
    p = np.asarray(f.prox(x, tau), dtype=float)

    def F(y):
        value = f(y)
        if value == math.inf:
            return math.inf
        return 0.5 * float(np.sum((x - y) ** 2)) + tau * value

    base = F(p)
    worst = -math.inf
    for _ in range(directions):
        d = rng.standard_normal(x.shape)
        d /= np.linalg.norm(d)
        worst = max(worst, base - F(p + delta * d))
    return worst


def gradient_check(
    f: FunctionObject,
    x: Vector,
    rng: np.random.Generator,
    directions: int = 10,
    delta: float = 1e-6,
) -> float:
    """Largest mismatch between central differences and <grad(x), d>.

    The mismatch is relative to max(|<grad(x), d>|, 1).
    """
    if f.grad is None:
        raise CapabilityError(f"{f.name}: no gradient to check")
    x = np.asarray(x, dtype=float)
    g = np.asarray(f.grad(x), dtype=float)
    worst = 0.0
    for _ in range(directions):
        d = rng.standard_normal(x.shape)
        d /= np.linalg.norm(d)
        fd = (f(x + delta * d) - f(x - delta * d)) / (2 * delta)
        gd = float(np.vdot(g, d))
        worst = max(worst, abs(fd - gd) / max(abs(gd), 1.0))
    return worst


def lipschitz_ratio(f: FunctionObject, dim: int, trials: int = 100, seed: int = 0) -> float:
    """Largest ||grad(x) - grad(y)|| / ||x - y|| over seeded random pairs."""
    if f.grad is None:
        raise CapabilityError(f"{f.name}: no gradient to check")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        x = rng.standard_normal(dim)
        y = rng.standard_normal(dim)
        diff = np.linalg.norm(np.asarray(f.grad(x)) - np.asarray(f.grad(y)))
        worst = max(worst, diff / np.linalg.norm(x - y))
    return float(worst)
