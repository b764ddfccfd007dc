"""Oracle suites run by ``demo selftest``.

Each suite returns CheckResults instead of raising, so the command line can
report every failure before exiting.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Callable, List

import numpy as np
from scipy import optimize

from src.core import (
    FunctionObject,
    LinearOperator,
    Method,
    ProblemSpec,
    SolverParams,
    Verbosity,
    prox_optimality_gap,
)
from src.proj import indicator_b1, indicator_b2, proj_b1, proj_b2
from src.prox import (
    GroupPartition,
    TvParams,
    norm_l1,
    norm_l12,
    norm_l1inf,
    norm_linf,
    norm_nuclear,
    norm_tv,
    prox_l1,
    prox_linf,
    prox_tv,
    squared_l2,
    tv_norm,
)
from src.solvers import admm, douglas_rachford, forward_backward, solve_sum

logger = logging.getLogger(__name__)

OPTIMALITY_SLACK = 1e-8
IDENTITY_TOL = 1e-12
LASSO_SOLUTION = 1.5
TV_REFERENCE = TvParams(maxit=20000, tol=1e-15)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def lasso_functions():
    """0.5 |x| and 1/2 (x - 2)^2 on R^1; minimizer 1.5."""
    l1 = norm_l1(0.5)
    quad = squared_l2([2.0], weight=0.5)
    return l1, quad


def prox_catalog(dim: int = 6) -> List[FunctionObject]:
    groups = GroupPartition.contiguous(dim, 2)
    return [
        norm_l1(),
        norm_l1(psi=LinearOperator.scaled_identity(2.0)),
        norm_linf(),
        norm_l12(groups),
        norm_l1inf(groups),
        norm_nuclear((2, dim // 2)),
        squared_l2(np.linspace(-1.0, 1.0, dim)),
        indicator_b1(1.0),
        indicator_b2(1.0, y=np.full(dim, 0.5)),
    ]


def check_prox_optimality(trials: int, seed: int) -> List[CheckResult]:
    rng = np.random.default_rng(seed)
    results = []
    for f in prox_catalog():
        worst = -math.inf
        for _ in range(trials):
            x = 2.0 * rng.standard_normal(6)
            tau = rng.uniform(0.1, 2.0)
            worst = max(worst, prox_optimality_gap(f, x, tau, rng))
        results.append(CheckResult(f"prox_optimality[{f.name}]", worst <= OPTIMALITY_SLACK,
                                   f"largest decrease {worst:.3e}"))
    return results


def check_identities(trials: int, seed: int) -> List[CheckResult]:
    rng = np.random.default_rng(seed)
    moreau = decomposition = 0.0
    for _ in range(trials):
        x = 3.0 * rng.standard_normal(8)
        tau = rng.uniform(0.1, 3.0)
        moreau = max(moreau, float(np.max(np.abs(prox_l1(x, tau) + np.clip(x, -tau, tau) - x))))
        decomposition = max(decomposition, float(np.max(np.abs(prox_linf(x, tau) + proj_b1(x, tau) - x))))
    return [
        CheckResult("moreau_l1", moreau <= IDENTITY_TOL, f"max error {moreau:.3e}"),
        CheckResult("linf_b1_decomposition", decomposition <= IDENTITY_TOL, f"max error {decomposition:.3e}"),
    ]


def check_projections(trials: int, seed: int) -> List[CheckResult]:
    rng = np.random.default_rng(seed)
    cases = {
        "proj_b1": lambda v: proj_b1(v, 1.5),
        "proj_b2": lambda v: proj_b2(v, 1.5, np.ones(5)),
        "proj_b2[2I]": lambda v: proj_b2(v, 1.5, np.ones(5), LinearOperator.scaled_identity(2.0)),
    }
    results = []
    for name, proj in cases.items():
        idempotence = expansion = 0.0
        for _ in range(trials):
            x, z = 3.0 * rng.standard_normal((2, 5))
            px = proj(x)
            idempotence = max(idempotence, float(np.max(np.abs(proj(px) - px))))
            expansion = max(expansion, float(np.linalg.norm(px - proj(z)) - np.linalg.norm(x - z)))
        passed = idempotence <= IDENTITY_TOL and expansion <= 1e-12
        results.append(CheckResult(name, passed, f"idempotence {idempotence:.3e}, expansion {expansion:.3e}"))
    return results


def check_solver_agreement() -> List[CheckResult]:
    l1, quad = lasso_functions()
    params = SolverParams(tol=1e-12, maxit=500, verbosity=Verbosity.SILENT)
    runs = {
        "forward_backward[ISTA]": lambda: forward_backward([0.0], l1, quad, params.replace(method=Method.ISTA)),
        "forward_backward[FISTA]": lambda: forward_backward([0.0], l1, quad, params),
        "douglas_rachford": lambda: douglas_rachford([0.0], l1, quad, params),
        "admm": lambda: admm([0.0], l1, quad, params=params),
        "solve_sum": lambda: solve_sum([0.0], ProblemSpec((l1, quad), 1), params),
    }
    results = []
    for name, run in runs.items():
        x = float(run().solution[0])
        results.append(CheckResult(f"lasso[{name}]", abs(x - LASSO_SOLUTION) <= 1e-4, f"solution {x:.8f}"))
    return results


def grid_minimize(objective: Callable[[np.ndarray], float], ranges, step: float) -> np.ndarray:
    """Brute-force minimizer on a regular grid."""
    slices = tuple(slice(lo, hi + step / 2, step) for lo, hi in ranges)
    return np.atleast_1d(optimize.brute(objective, slices, finish=None))


def check_tv_oracle() -> List[CheckResult]:
    params = TvParams(maxit=2000, tol=1e-12)
    worst = 0.0
    levels = (0.0, 0.5, 1.0)
    for a in levels:
        for b in levels:
            img = np.array([[a, b]])
            tau = 0.2

            def objective(z):
                return 0.5 * float(np.sum((z - img.ravel()) ** 2)) + tau * tv_norm(np.reshape(z, (1, 2)))

            oracle = grid_minimize(objective, [(-0.1, 1.1), (-0.1, 1.1)], 1e-2)
            worst = max(worst, float(np.max(np.abs(prox_tv(img, tau, params).ravel() - oracle))))
    return [CheckResult("prox_tv_grid_1x2", worst <= 2e-2, f"max deviation {worst:.3e}")]


def check_tv_optimality(trials: int, seed: int) -> List[CheckResult]:
    rng = np.random.default_rng(seed)
    f = norm_tv((2, 2), params=TV_REFERENCE)
    worst = max(prox_optimality_gap(f, rng.uniform(0, 1, 4), 0.3, rng) for _ in range(trials))
    return [CheckResult("prox_optimality[tv]", worst <= OPTIMALITY_SLACK, f"largest decrease {worst:.3e}")]


def tv_sweep_images(quick: bool = False) -> List[np.ndarray]:
    """Every 2x2 image with entries in {0, 0.5, 1}, or in {0, 1} when quick."""
    levels = (0.0, 1.0) if quick else (0.0, 0.5, 1.0)
    return [np.reshape(v, (2, 2)) for v in itertools.product(levels, repeat=4)]


def check_tv_sweep(seed: int, quick: bool = False, tau: float = 0.2) -> List[CheckResult]:
    """Optimality and the decrease bound 1/2 ||img - z||^2 + tau TV(z) <= tau TV(img) on 2x2 images."""
    rng = np.random.default_rng(seed)
    f = norm_tv((2, 2), params=TV_REFERENCE)
    gap = excess = -math.inf
    for img in tv_sweep_images(quick):
        x = img.ravel()
        gap = max(gap, prox_optimality_gap(f, x, tau, rng))
        z = prox_tv(img, tau, TV_REFERENCE)
        excess = max(excess, 0.5 * float(np.sum((img - z) ** 2)) + tau * tv_norm(z) - tau * tv_norm(img))
    return [
        CheckResult("prox_optimality[tv_2x2_sweep]", gap <= OPTIMALITY_SLACK, f"largest decrease {gap:.3e}"),
        CheckResult("prox_tv_decrease[2x2_sweep]", excess <= OPTIMALITY_SLACK, f"largest excess {excess:.3e}"),
    ]


def run_selftest(seed: int = 0, quick: bool = False) -> List[CheckResult]:
    trials = 20 if quick else 100
    results: List[CheckResult] = []
    results += check_prox_optimality(trials, seed)
    results += check_tv_optimality(trials, seed)
    results += check_tv_sweep(seed, quick)
    results += check_identities(trials * 10, seed)
    results += check_projections(trials * 10, seed)
    results += check_solver_agreement()
    results += check_tv_oracle()
    failed = [r.name for r in results if not r.passed]
    logger.info("selftest: %d checks, %d failed", len(results), len(failed))
    return results
