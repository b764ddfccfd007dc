"""Proximal splitting solvers.

All solvers are generators of primal iterates driven by
`src.core.run_iterations`, which records the objective trace and applies the
stopping rule. Each returned SolveResult carries a solver-specific residual:

- forward_backward: ||x - prox_{gamma f1}(x - gamma grad f2(x))||
- douglas_rachford: ||prox_{gamma f2}(y) - prox_{gamma f1}(2 prox_{gamma f2}(y) - y)||
- admm: the primal residual ||Lx - y||

Douglas-Rachford and ADMM only stop on tolerance once their auxiliary
variables have settled as well: the step in y for Douglas-Rachford, the
primal and dual residuals for ADMM, each below tol * (1 + norm).
"""

import dataclasses
import logging
import math
from typing import Callable, Dict, Optional

import numpy as np

from src.core import (
    CapabilityError,
    FunctionObject,
    InvalidArgumentError,
    LinearOperator,
    Method,
    ProblemSpec,
    SolveResult,
    SolverParams,
    as_vector,
    run_iterations,
)

logger = logging.getLogger(__name__)

# Margin kept from the open ends of the gamma and lambda intervals.
PARAM_MARGIN = 1e-12


def _require(f: FunctionObject, capability: str, solver: str) -> None:
    if getattr(f, capability) is None:
        raise CapabilityError(f"{solver}: function '{f.name}' has no {capability}")


def _small(value: float, reference, tol: float) -> bool:
    """value <= tol * (1 + ||reference||)."""
    return value <= tol * (1.0 + float(np.linalg.norm(reference)))


def forward_backward_residual(x, f1: FunctionObject, f2: FunctionObject, gamma: float) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.linalg.norm(x - np.asarray(f1.prox(x - gamma * f2.grad(x), gamma))))


def douglas_rachford_residual(y, f1: FunctionObject, f2: FunctionObject, gamma: float) -> float:
    y = np.asarray(y, dtype=float)
    x = np.asarray(f2.prox(y, gamma), dtype=float)
    return float(np.linalg.norm(x - np.asarray(f1.prox(2 * x - y, gamma))))


def forward_backward(
    x0,
    f1: FunctionObject,
    f2: FunctionObject,
    params: Optional[SolverParams] = None,
) -> SolveResult:
    """min f1(x) + f2(x) with f1 prox-capable and f2 smooth (beta-Lipschitz gradient).

    ISTA: x <- x + lambda (prox_{gamma f1}(x - gamma grad f2(x)) - x).
    FISTA: the same step taken from an extrapolated point with the
    t_{k+1} = (1 + sqrt(1 + 4 t_k^2)) / 2 momentum sequence; lambda is ignored.
    """
    params = params or SolverParams()
    _require(f1, "prox", "forward_backward")
    _require(f2, "grad", "forward_backward")
    _require(f2, "lipschitz", "forward_backward")

    gamma = params.gamma
    upper = 2.0 / f2.lipschitz
    if not PARAM_MARGIN <= gamma <= upper - PARAM_MARGIN:
        raise InvalidArgumentError(f"forward_backward: gamma={gamma} must lie in (0, 2/beta={upper})")
    if params.method is Method.ISTA and not 0 < params.lambda_ <= 1:
        raise InvalidArgumentError(f"forward_backward: ISTA lambda={params.lambda_} must lie in (0, 1]")

    x0 = as_vector(x0)

    def ista():
        x = x0.copy()
        while True:
            step = np.asarray(f1.prox(x - gamma * f2.grad(x), gamma), dtype=float)
            x = x + params.lambda_ * (step - x)
            yield x

    def fista():
        x = x0.copy()
        y = x0.copy()
        t = 1.0
        while True:
            x_next = np.asarray(f1.prox(y - gamma * f2.grad(y), gamma), dtype=float)
            t_next = (1.0 + math.sqrt(1.0 + 4.0 * t * t)) / 2.0
            y = x_next + ((t - 1.0) / t_next) * (x_next - x)
            x, t = x_next, t_next
            yield x

    iterates = ista() if params.method is Method.ISTA else fista()
    result = run_iterations(iterates, lambda x: f1(x) + f2(x), params,
                            name=f"forward_backward[{params.method.value}]")
    return dataclasses.replace(result, residual=forward_backward_residual(result.solution, f1, f2, gamma))


def _douglas_rachford(x0, f1, f2, params: SolverParams, name: str):
    _require(f1, "prox", name)
    _require(f2, "prox", name)
    lam, gamma = params.lambda_, params.gamma
    if not PARAM_MARGIN <= lam <= 2.0 - PARAM_MARGIN:
        raise InvalidArgumentError(f"{name}: lambda={lam} must lie in (0, 2)")

    state: Dict[str, object] = {"y": as_vector(x0).copy(), "step": math.inf}

    def iterates():
        y = state["y"]
        while True:
            x = np.asarray(f2.prox(y, gamma), dtype=float)
            y_next = y + lam * (np.asarray(f1.prox(2 * x - y, gamma), dtype=float) - x)
            state["step"] = float(np.linalg.norm(y_next - y))
            state["y"] = y = y_next
            yield x

    # x can repeat while y still moves (x = prox_{gamma f2}(y) in a flat region of f2)
    def settled():
        return _small(state["step"], state["y"], params.tol)

    result = run_iterations(iterates(), lambda x: f1(x) + f2(x), params, name=name, settled=settled)
    return result, state["y"]


def douglas_rachford(
    x0,
    f1: FunctionObject,
    f2: FunctionObject,
    params: Optional[SolverParams] = None,
) -> SolveResult:
    """min f1(x) + f2(x) with both functions prox-capable.

    Keeps an auxiliary point y; each iteration x = prox_{gamma f2}(y) and
    y <- y + lambda (prox_{gamma f1}(2x - y) - x). Returns the x sequence.
    """
    params = params or SolverParams()
    result, y = _douglas_rachford(x0, f1, f2, params, "douglas_rachford")
    return dataclasses.replace(result, residual=douglas_rachford_residual(y, f1, f2, params.gamma))


def admm(
    x0,
    f1: FunctionObject,
    f2: FunctionObject,
    l: Optional[LinearOperator] = None,
    params: Optional[SolverParams] = None,
) -> SolveResult:
    """min f1(x) + f2(Lx), scaled-dual form.

    x <- proxL_{gamma f1}(y - u); s = Lx; y <- prox_{gamma f2}(s + u);
    u <- u + s - y. f1 must provide the L-composed map ``prox_l``; when L is
    the default identity its plain ``prox`` is used instead. L^T L must be
    invertible and (ri dom f1) meet L(ri dom f2); neither is checked.
    """
    params = params or SolverParams()
    prox_l: Optional[Callable] = f1.prox_l or (f1.prox if l is None else None)
    if prox_l is None:
        raise CapabilityError(f"admm: function '{f1.name}' has no L-composed proximity map")
    _require(f2, "prox", "admm")
    op = LinearOperator.identity() if l is None else l
    gamma = params.gamma
    x0 = as_vector(x0)
    state = {"residual": math.nan, "dual": math.nan, "s": None, "y": None}

    def iterates():
        y = np.asarray(op.forward(x0), dtype=float)
        u = np.zeros_like(y)
        while True:
            x = np.asarray(prox_l(y - u, gamma), dtype=float)
            s = np.asarray(op.forward(x), dtype=float)
            y_next = np.asarray(f2.prox(s + u, gamma), dtype=float)
            u = u + s - y_next
            state["residual"] = float(np.linalg.norm(s - y_next))
            state["dual"] = float(np.linalg.norm(y_next - y))
            state["s"], state["y"] = s, y_next
            y = y_next
            yield x

    # x can repeat while u is still building up, so both residuals must be small
    def settled():
        return (_small(state["residual"], state["s"], params.tol)
                and _small(state["dual"], state["y"], params.tol))

    result = run_iterations(iterates(), lambda x: f1(x) + f2(op.forward(x)), params, name="admm",
                            settled=settled)
    return dataclasses.replace(result, residual=state["residual"])


def solve_sum(x0, problem: ProblemSpec, params: Optional[SolverParams] = None) -> SolveResult:
    """min sum_k f_k(x) for K >= 2 prox-capable functions.

    Runs Douglas-Rachford on K stacked copies of x: the first function is the
    separable sum of the f_k, the second the indicator of the consensus
    subspace, whose prox replicates the mean of the copies.
    """
    params = params or SolverParams()
    if problem.K < 2:
        raise InvalidArgumentError("solve_sum needs at least two functions")
    for f in problem.functions:
        _require(f, "prox", "solve_sum")
    K, n = problem.K, problem.dimension
    x0 = as_vector(x0, n)
    logger.debug("solve_sum: %d functions on R^%d, product space of dimension %d", K, n, K * n)

    def split(z):
        return np.reshape(z, (K, n))

    def separable_eval(z):
        values = [f(block) for f, block in zip(problem.functions, split(z))]
        return math.inf if math.inf in values else math.fsum(values)

    def separable_prox(z, tau):
        return np.concatenate([np.asarray(f.prox(block, tau), dtype=float)
                               for f, block in zip(problem.functions, split(z))])

    def consensus_eval(z):
        return 0.0 if np.all(split(z) == split(z)[0]) else math.inf

    def consensus_prox(z, tau):
        return np.tile(split(z).mean(axis=0), K)

    separable = FunctionObject(eval=separable_eval, prox=separable_prox, name="separable_sum")
    consensus = FunctionObject(eval=consensus_eval, prox=consensus_prox, name="consensus")
    result, y = _douglas_rachford(np.tile(x0, K), separable, consensus, params, "solve_sum")

    solution = split(result.solution)[0].copy()
    solution.flags.writeable = False
    return dataclasses.replace(result, solution=solution,
                               residual=douglas_rachford_residual(y, separable, consensus, params.gamma))
