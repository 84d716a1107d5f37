"""Iterative reconstruction algorithms: plug-and-play forward-backward
splitting, denoising-regularized gradient descent, and unadjusted Langevin
sampling, each with optional per-iteration equivariant denoising.

All three solvers share the same conventions:

* initialization: ``A^T y`` (default), zeros, or a given image;
* per-iteration trace of relative residual ``||x_{k+1} - x_k|| / ||x_k||``,
  data fidelity ``0.5 * ||A x_k - y||^2``, PSNR against an optional ground
  truth, and wall-clock time;
* a divergence guard that aborts with a distinguished status (never an
  exception) when the iterate norm exceeds ``1e6 * max(||x_0||, 1)`` or turns
  non-finite, so diverging configurations are a reportable outcome;
* full determinism: a fixed config and seed reproduce traces and outputs bit
  for bit.  Randomness comes from labeled child streams of the config seed
  ("mc-group" for per-iteration group draws, "ula" for Langevin noise), so
  the two consumers never perturb each other.

Equivariance modes: ``none`` uses the denoiser as given; ``mc`` draws one
fresh group element per iteration and applies transform / denoise / inverse
transform; ``reynolds`` averages the denoiser over the whole group at every
iteration.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .grid import norm2, psnr
from .groups import Group, apply, inverse, sample
from .rng import SeededRng

__all__ = [
    "SolverConfig",
    "Trace",
    "SolveResult",
    "UlaStats",
    "SampleResult",
    "pnp_fb",
    "red_gd",
    "ula",
    "trace_to_csv",
]

TRACE_FULL_LIMIT = 100_000
TRACE_STRIDE = 10
DIVERGENCE_FACTOR = 1e6


@dataclass
class SolverConfig:
    """Shared solver settings.

    ``lam`` is the regularization weight of the gradient-based algorithms;
    the forward-backward splitting has no separate weight (the denoiser
    strength plays that role), so passing ``lam`` to :func:`pnp_fb` is
    rejected.  ``ula_zero_noise`` suppresses the Langevin noise injection and
    exists only so tests can check the small-step limit.
    """

    gamma: float
    lam: float | None = None
    sigma: float = 0.0
    max_iters: int = 10_000
    seed: int = 0
    equivariance: str = "none"  # none | mc | reynolds
    group: Group | None = None
    init: str | np.ndarray = "adjoint"  # adjoint | zeros | explicit image
    burn_in: int = 0
    stop_tol: float | None = None
    ula_zero_noise: bool = False
    callback: object = None  # optional callable(k, x_k), invoked before each update

    def validate(self) -> None:
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.burn_in >= self.max_iters:
            raise ValueError("burn_in must be smaller than max_iters")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.equivariance not in ("none", "mc", "reynolds"):
            raise ValueError(f"unknown equivariance mode {self.equivariance!r}")
        if self.equivariance != "none" and self.group is None:
            raise ValueError(f"equivariance mode {self.equivariance!r} requires a group")


@dataclass
class Trace:
    """Per-iteration diagnostics.

    Stored fully for the first 100 000 iterations, then decimated 1:10
    (``decimated_from`` records the cutoff).  ``iters`` holds the actual
    iteration indices so offline recomputation lines up.  PSNR is NaN when no
    ground truth was supplied.  Wall times are informational and excluded
    from the determinism contract.
    """

    iters: np.ndarray
    residual: np.ndarray
    data_fidelity: np.ndarray
    psnr: np.ndarray
    wall: np.ndarray
    decimated_from: int | None = None
    stride: int = TRACE_STRIDE


@dataclass
class SolveResult:
    x: np.ndarray
    trace: Trace
    status: str  # converged | max_iters | diverged
    diverged_at: int | None = None


@dataclass
class UlaStats:
    """Online per-pixel mean and unbiased variance of the post-burn-in chain."""

    mean: np.ndarray
    variance: np.ndarray
    samples_counted: int


@dataclass
class SampleResult:
    stats: UlaStats
    trace: Trace
    status: str
    x: np.ndarray | None = None  # final chain state
    diverged_at: int | None = None


class _TraceRecorder:
    def __init__(self, max_iters: int):
        self.iters: list = []
        self.residual: list = []
        self.data_fidelity: list = []
        self.psnr: list = []
        self.wall: list = []
        self.decimated_from = TRACE_FULL_LIMIT if max_iters > TRACE_FULL_LIMIT else None

    def keep(self, k: int) -> bool:
        return k < TRACE_FULL_LIMIT or k % TRACE_STRIDE == 0

    def record(self, k, residual, fidelity, quality, wall):
        self.iters.append(k)
        self.residual.append(residual)
        self.data_fidelity.append(fidelity)
        self.psnr.append(quality)
        self.wall.append(wall)

    def finish(self) -> Trace:
        return Trace(
            iters=np.asarray(self.iters, dtype=np.int64),
            residual=np.asarray(self.residual),
            data_fidelity=np.asarray(self.data_fidelity),
            psnr=np.asarray(self.psnr),
            wall=np.asarray(self.wall),
            decimated_from=self.decimated_from,
        )


def _initial_iterate(A, y, cfg: SolverConfig) -> np.ndarray:
    if isinstance(cfg.init, str):
        if cfg.init == "adjoint":
            return A.adjoint(y)
        if cfg.init == "zeros":
            return np.zeros(A.in_shape)
        raise ValueError(f"unknown init {cfg.init!r}")
    x0 = np.asarray(cfg.init, dtype=np.float64)
    if x0.shape != A.in_shape:
        raise ValueError(f"init shape {x0.shape} does not match image shape {A.in_shape}")
    return x0.copy()


def _make_denoise_step(D, cfg: SolverConfig, rng_mc: SeededRng):
    """Per-iteration denoiser call honoring the equivariance mode."""
    if cfg.equivariance == "none":
        return lambda v: D.denoise(v, cfg.sigma)
    group = cfg.group
    if cfg.equivariance == "mc":
        def mc_step(v):
            g = sample(group, rng_mc)
            return apply(inverse(g), D.denoise(apply(g, v), cfg.sigma))

        return mc_step

    elements = group.elements
    if len(elements) > 256:
        raise ValueError(
            f"group '{group.name}' too large for reynolds mode; use mc"
        )

    def reynolds_step(v):
        acc = np.zeros_like(v)
        for g in elements:
            acc += apply(inverse(g), D.denoise(apply(g, v), cfg.sigma))
        return acc / len(elements)

    return reynolds_step


def _relative_residual(diff_norm: float, base_norm: float) -> float:
    # ||x_{k+1} - x_k|| / ||x_k||, falling back to the absolute difference
    # norm when the current iterate is exactly zero.
    return diff_norm / base_norm if base_norm > 0.0 else diff_norm


def _blown_up(x: np.ndarray, guard: float) -> bool:
    return not np.all(np.isfinite(x)) or norm2(x) > guard


def pnp_fb(A, y, D, cfg: SolverConfig, gt: np.ndarray | None = None) -> SolveResult:
    """Forward-backward splitting with a plugged-in denoiser.

    Iteration: ``x_{k+1} = D(x_k - gamma * A^T (A x_k - y))``; in ``mc`` mode
    the denoiser call uses one fresh group sample per iteration.
    """
    cfg.validate()
    if cfg.lam is not None:
        raise ValueError("pnp_fb takes no regularization weight; tune the denoiser instead")
    rng_mc = SeededRng(cfg.seed).derive("mc-group")
    step = _make_denoise_step(D, cfg, rng_mc)
    x = _initial_iterate(A, y, cfg)
    guard = DIVERGENCE_FACTOR * max(norm2(x), 1.0)
    rec = _TraceRecorder(cfg.max_iters)
    status = "max_iters"
    diverged_at = None
    for k in range(cfg.max_iters):
        t0 = time.perf_counter()
        if cfg.callback is not None:
            cfg.callback(k, x)
        Ax = A.apply(x)
        xn = step(x - cfg.gamma * A.adjoint(Ax - y))
        if _blown_up(xn, guard):
            status, diverged_at = "diverged", k
            x = xn
            break
        res = _relative_residual(norm2(xn - x), norm2(x))
        if rec.keep(k):
            quality = psnr(xn, gt) if gt is not None else float("nan")
            rec.record(k, res, 0.5 * norm2(Ax - y) ** 2, quality, time.perf_counter() - t0)
        x = xn
        if cfg.stop_tol is not None and res < cfg.stop_tol:
            status = "converged"
            break
    return SolveResult(x=x, trace=rec.finish(), status=status, diverged_at=diverged_at)


def _gradient_flavored(A, y, D, cfg: SolverConfig, gt, with_noise: bool):
    # Shared core of red_gd and ula; the only difference is noise injection.
    cfg.validate()
    if cfg.lam is None:
        raise ValueError("this solver requires a regularization weight lam")
    root = SeededRng(cfg.seed)
    rng_mc = root.derive("mc-group")
    rng_noise = root.derive("ula")
    step = _make_denoise_step(D, cfg, rng_mc)
    x = _initial_iterate(A, y, cfg)
    guard = DIVERGENCE_FACTOR * max(norm2(x), 1.0)
    rec = _TraceRecorder(cfg.max_iters)
    noise_scale = np.sqrt(2.0 * cfg.gamma)
    count = 0
    mean = np.zeros_like(x)
    M2 = np.zeros_like(x)
    status = "max_iters"
    diverged_at = None
    for k in range(cfg.max_iters):
        t0 = time.perf_counter()
        if cfg.callback is not None:
            cfg.callback(k, x)
        Ax = A.apply(x)
        # group draw happens inside step(), before the noise draw below
        xn = x - cfg.gamma * A.adjoint(Ax - y) - cfg.gamma * cfg.lam * (x - step(x))
        if with_noise and not cfg.ula_zero_noise:
            xn = xn + noise_scale * rng_noise.standard_normal(x.shape)
        if _blown_up(xn, guard):
            status, diverged_at = "diverged", k
            x = xn
            break
        res = _relative_residual(norm2(xn - x), norm2(x))
        if rec.keep(k):
            quality = psnr(xn, gt) if gt is not None else float("nan")
            rec.record(k, res, 0.5 * norm2(Ax - y) ** 2, quality, time.perf_counter() - t0)
        x = xn
        if with_noise and k >= cfg.burn_in:
            count += 1
            delta = x - mean
            mean += delta / count
            M2 += delta * (x - mean)
        if not with_noise and cfg.stop_tol is not None and res < cfg.stop_tol:
            status = "converged"
            break
    trace = rec.finish()
    if not with_noise:
        return SolveResult(x=x, trace=trace, status=status, diverged_at=diverged_at)
    variance = M2 / (count - 1) if count > 1 else np.zeros_like(mean)
    stats = UlaStats(mean=mean, variance=variance, samples_counted=count)
    return SampleResult(stats=stats, trace=trace, status=status, x=x, diverged_at=diverged_at)


def red_gd(A, y, D, cfg: SolverConfig, gt: np.ndarray | None = None) -> SolveResult:
    """Explicit gradient descent with the denoiser residual as prior gradient.

    Iteration: ``x_{k+1} = x_k - gamma * A^T (A x_k - y)
    - gamma * lam * (x_k - D(x_k))``.
    """
    return _gradient_flavored(A, y, D, cfg, gt, with_noise=False)


def ula(A, y, D, cfg: SolverConfig, gt: np.ndarray | None = None) -> SampleResult:
    """Unadjusted Langevin sampling: the gradient update plus
    ``sqrt(2 * gamma)`` Gaussian noise per iteration.

    Per-pixel mean and unbiased variance of the chain are accumulated online
    (Welford) for iterations at or beyond ``burn_in``.  In ``mc`` mode the
    group element is drawn before the noise of the same iteration; group and
    noise use separate labeled streams, so runs are bit-reproducible.
    """
    return _gradient_flavored(A, y, D, cfg, gt, with_noise=True)


def trace_to_csv(trace: Trace, path) -> None:
    """Write ``iter,residual,data_fidelity,psnr`` rows; PSNR cells are empty
    when no ground truth was recorded."""
    lines = ["iter,residual,data_fidelity,psnr"]
    for i in range(len(trace.iters)):
        q = trace.psnr[i]
        q_txt = "" if np.isnan(q) else repr(float(q))
        lines.append(
            f"{int(trace.iters[i])},{float(trace.residual[i])!r},"
            f"{float(trace.data_fidelity[i])!r},{q_txt}"
        )
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")
