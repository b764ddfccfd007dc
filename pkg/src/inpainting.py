"""TV inpainting of a masked, noisy image.

A synthetic piecewise-constant phantom is degraded by a random pixel mask and
Gaussian noise, then restored two ways:

- Problem I: min TV(x) s.t. ||Ax - y||_2 <= epsilon, by Douglas-Rachford.
- Problem II: min lambda ||Ax - y||_2^2 + TV(x), by forward-backward and by
  Douglas-Rachford.

A is the 0/1 diagonal mask. It is self-adjoint and idempotent, so the prox
maps of both data terms act on the observed pixels only and leave the others
untouched.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.artifacts import write_pgm, write_summary, write_trace
from src.config import DEFAULT_OUTDIR, DEFAULT_SEED
from src.core import (
    FunctionObject,
    InvalidArgumentError,
    Method,
    SolveResult,
    SolverParams,
    Verbosity,
)
from src.proj import proj_b2
from src.prox import TvParams, norm_tv, prox_l2_sq
from src.solvers import douglas_rachford, forward_backward

logger = logging.getLogger(__name__)

# Value reported by the constraint's evaluator instead of 0.
CONSTRAINT_EVAL = float(np.finfo(float).eps)

PHANTOM_BACKGROUND = 0.2
PHANTOM_RECTANGLES = 6

# Relative slack on the Problem I constraint check.
CONSTRAINT_SLACK = 1e-6


class Algorithm(str, Enum):
    FB = "FB"
    DR = "DR"


class DemoConfig(BaseModel):
    """Scenario settings; ``lambda`` is accepted as an alias of ``lambda_``."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    rows: int = Field(64, ge=8)
    cols: int = Field(64, ge=8)
    p: float = Field(0.5, gt=0, le=1)
    sigma: float = Field(20 / 255, ge=0)
    lambda_: float = Field(10.0, gt=0, alias="lambda")
    maxit: int = Field(100, ge=1)
    tol: float = Field(1e-5, ge=0)
    seed: int = Field(DEFAULT_SEED, ge=0)
    outdir: Path = DEFAULT_OUTDIR
    verbosity: Verbosity = Verbosity.SUMMARY
    tv_maxit: int = Field(50, ge=1)

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def epsilon(self) -> float:
        """Expected noise energy on the observed pixels."""
        return self.sigma * math.sqrt(self.rows * self.cols * self.p)


@dataclass(frozen=True)
class DegradedInstance:
    original: np.ndarray
    mask: np.ndarray
    observed: np.ndarray

    def __post_init__(self):
        if not (self.original.shape == self.mask.shape == self.observed.shape):
            raise InvalidArgumentError("original, mask and observed must share one shape")
        if np.any(self.observed[~self.mask] != 0):
            raise InvalidArgumentError("observed image must be zero outside the mask")

    @property
    def shape(self) -> Tuple[int, int]:
        return self.original.shape


def make_phantom(rows: int, cols: int, seed: int) -> np.ndarray:
    """Seeded axis-aligned rectangles over a flat background, values in [0, 1]."""
    if rows < 8 or cols < 8:
        raise InvalidArgumentError(f"phantom needs at least 8x8 pixels, got {rows}x{cols}")
    rng = np.random.default_rng(seed)
    img = np.full((rows, cols), PHANTOM_BACKGROUND)
    for i in range(PHANTOM_RECTANGLES):
        h = int(rng.integers(max(rows // 8, 2), rows // 2 + 1))
        w = int(rng.integers(max(cols // 8, 2), cols // 2 + 1))
        top = int(rng.integers(0, rows - h + 1))
        left = int(rng.integers(0, cols - w + 1))
        # last rectangle is bright and painted on top
        level = rng.uniform(0.6, 1.0) if i == PHANTOM_RECTANGLES - 1 else rng.uniform(0.0, 1.0)
        img[top:top + h, left:left + w] = level
    return np.clip(img, 0.0, 1.0)


def degrade(img, p: float, sigma: float, seed: int) -> DegradedInstance:
    """Add N(0, sigma^2) noise, then keep each pixel with probability p."""
    if not 0 < p <= 1:
        raise InvalidArgumentError(f"keep-probability must lie in (0, 1], got {p}")
    if sigma < 0:
        raise InvalidArgumentError(f"noise level must be non-negative, got {sigma}")
    original = np.asarray(img, dtype=float)
    rng = np.random.default_rng(seed)
    noisy = original + sigma * rng.standard_normal(original.shape)
    mask = rng.random(original.shape) < p
    return DegradedInstance(original=original.copy(), mask=mask, observed=np.where(mask, noisy, 0.0))


def compute_snr(ref, est) -> float:
    """10 log10(||ref - mean(ref)||^2 / ||ref - est||^2); +inf when est == ref."""
    ref = np.asarray(ref, dtype=float)
    est = np.asarray(est, dtype=float)
    if ref.shape != est.shape:
        raise InvalidArgumentError(f"shape mismatch: {ref.shape} vs {est.shape}")
    signal = float(np.sum((ref - ref.mean()) ** 2))
    error = float(np.sum((ref - est) ** 2))
    if error == 0:
        return math.inf
    if signal == 0:
        return -math.inf
    return 10.0 * math.log10(signal / error)


def masked_ball(inst: DegradedInstance, epsilon: float) -> FunctionObject:
    """Indicator of ||Ax - y|| <= epsilon, reporting a tiny constant as its value."""
    kept = inst.mask.ravel()
    y = inst.observed.ravel()[kept]

    def prox(x, tau):
        out = np.array(x, dtype=float)
        out[kept] = proj_b2(out[kept], epsilon, y)
        return out

    return FunctionObject(eval=lambda x: CONSTRAINT_EVAL, prox=prox, name="masked_b2")


def masked_data_term(inst: DegradedInstance, lam: float) -> FunctionObject:
    """lam * ||Ax - y||_2^2 with gradient 2 lam A^T(Ax - y), Lipschitz 2 lam."""
    kept = inst.mask.ravel()
    y = inst.observed.ravel()

    def residual(x):
        return np.where(kept, np.asarray(x, dtype=float) - y, 0.0)

    def prox(x, tau):
        out = np.array(x, dtype=float)
        out[kept] = prox_l2_sq(out[kept], lam * tau, y[kept])
        return out

    return FunctionObject(eval=lambda x: lam * float(np.sum(residual(x) ** 2)),
                          grad=lambda x: 2 * lam * residual(x),
                          prox=prox, lipschitz=2 * lam, name="masked_l2")


def _tv_term(cfg: DemoConfig) -> FunctionObject:
    inner = TvParams(maxit=cfg.tv_maxit, verbosity=max(int(cfg.verbosity) - 1, 0))
    return norm_tv(cfg.shape, params=inner)


def solve_problem1(inst: DegradedInstance, cfg: DemoConfig) -> SolveResult:
    """TV subject to the l2-ball data constraint, by Douglas-Rachford with gamma = 1."""
    params = SolverParams(gamma=1.0, tol=cfg.tol, maxit=cfg.maxit, verbosity=cfg.verbosity)
    return douglas_rachford(inst.observed.ravel(), _tv_term(cfg), masked_ball(inst, cfg.epsilon), params)


def solve_problem2(inst: DegradedInstance, cfg: DemoConfig, algorithm: Algorithm) -> SolveResult:
    """lambda * squared data term + TV with gamma = 0.5 / lambda.

    Forward-backward takes the TV prox and the data gradient (FISTA);
    Douglas-Rachford takes the data term first and the TV second.
    """
    data = masked_data_term(inst, cfg.lambda_)
    tv = _tv_term(cfg)
    params = SolverParams(gamma=0.5 / cfg.lambda_, tol=cfg.tol, maxit=cfg.maxit,
                          verbosity=cfg.verbosity, method=Method.FISTA)
    y = inst.observed.ravel()
    if Algorithm(algorithm) is Algorithm.FB:
        return forward_backward(y, tv, data, params)
    return douglas_rachford(y, data, tv, params)


@dataclass
class InpaintingReport:
    config: DemoConfig
    instance: DegradedInstance
    results: Dict[str, SolveResult] = field(default_factory=dict)

    def image(self, name: str) -> np.ndarray:
        return np.reshape(self.results[name].solution, self.instance.shape)

    def snr(self) -> Dict[str, float]:
        values = {"observed": compute_snr(self.instance.original, self.instance.observed)}
        for name in self.results:
            values[name] = compute_snr(self.instance.original, self.image(name))
        return values

    def constraint_residual(self) -> float:
        """||mask * x - y|| for the Problem I solution."""
        x = self.image("p1_dr")
        return float(np.linalg.norm(np.where(self.instance.mask, x, 0.0) - self.instance.observed))

    def checks(self) -> List[Tuple[str, bool, str]]:
        eps = self.config.epsilon
        residual = self.constraint_residual()
        bound = eps * (1 + CONSTRAINT_SLACK) + 1e-12
        checks = [("p1_constraint", residual <= bound, f"residual={residual:.6g} bound={bound:.6g}")]
        snr = self.snr()
        for name in self.results:
            checks.append((f"snr_{name}", snr[name] > snr["observed"],
                           f"{snr[name]:.4f} dB vs observed {snr['observed']:.4f} dB"))
        return checks

    def summary(self) -> Dict[str, object]:
        values: Dict[str, object] = {
            "rows": self.config.rows, "cols": self.config.cols, "seed": self.config.seed,
            "p": self.config.p, "sigma": self.config.sigma, "lambda": self.config.lambda_,
            "epsilon": self.config.epsilon, "observed_pixels": int(self.instance.mask.sum()),
        }
        for name, snr in self.snr().items():
            values[f"snr_{name}"] = snr
        for name, result in self.results.items():
            values[f"iterations_{name}"] = result.iterations
            values[f"stop_reason_{name}"] = result.stop_reason
        return values


def run_inpainting(cfg: DemoConfig) -> InpaintingReport:
    original = make_phantom(cfg.rows, cfg.cols, cfg.seed)
    inst = degrade(original, cfg.p, cfg.sigma, cfg.seed + 1)
    logger.info("inpainting %dx%d, %d of %d pixels observed, epsilon=%.4f",
                cfg.rows, cfg.cols, int(inst.mask.sum()), inst.mask.size, cfg.epsilon)

    report = InpaintingReport(config=cfg, instance=inst)
    report.results["p1_dr"] = solve_problem1(inst, cfg)
    report.results["p2_fb"] = solve_problem2(inst, cfg, Algorithm.FB)
    report.results["p2_dr"] = solve_problem2(inst, cfg, Algorithm.DR)
    return report


def write_outputs(report: InpaintingReport, outdir: Path) -> None:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_pgm(outdir / "original.pgm", report.instance.original)
    write_pgm(outdir / "observed.pgm", report.instance.observed)
    for name, result in report.results.items():
        write_pgm(outdir / f"sol_{name}.pgm", report.image(name))
        write_trace(outdir / f"trace_{name}.csv", result.trace)
    write_summary(outdir / "summary.txt", report.summary())
    logger.info("outputs written to %s", outdir)
