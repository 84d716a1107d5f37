"""Canned experiment recipes: config-driven reconstruction runs, the 2D
perturbed-prox demonstration, denoiser analysis sweeps, and the verifier
suite.

Every run derives all of its randomness from the config seed through labeled
child streams (``noise`` for measurement simulation, ``mask`` for random
operators, ``denoiser`` for generated denoiser parameters; the solver itself
uses ``mc-group`` and ``ula``).  Artifacts are deterministic byte for byte
given the same config and seed; wall-clock timings go to a separate
``timing.txt`` that is excluded from that guarantee.
"""

import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import analysis, denoisers, groups, operators, solvers
from .config import ConfigError, ExperimentConfig, serialize_config
from .grid import norm2, psnr
from .io import load_image, make_phantom, save_image
from .rng import SeededRng

__all__ = [
    "ExperimentOutcome",
    "run_experiment",
    "run_denoise",
    "run_analyze",
    "run_toy2d",
    "run_verify_props",
    "TOY_SETS",
]

EXIT_OK = 0
EXIT_DIVERGED = 2
EXIT_CONFIG = 3
EXIT_VERIFIER = 4


@dataclass
class ExperimentOutcome:
    status: str
    exit_code: int
    summary: dict
    output_dir: Path


# --- builders ----------------------------------------------------------------


def _ground_truth(cfg: ExperimentConfig) -> np.ndarray:
    if "path" in cfg.image:
        return load_image(cfg.image["path"])
    return make_phantom(cfg.image["phantom"], cfg.image["height"], cfg.image["width"])


def build_group(name: str, shape: tuple) -> groups.Group:
    if name in ("shifts", "d4_shifts"):
        return groups.built_in_group(name, shape[0], shape[1])
    return groups.built_in_group(name)


def build_operator(problem: dict, shape: tuple, rng_mask: SeededRng):
    kind = problem["kind"]
    params = problem.get("params", {})
    h, w = shape
    if kind == "identity":
        return operators.IdentityOperator(shape)
    if kind == "blur_gaussian":
        kernel = operators.make_gaussian_kernel(params.get("std", 1.0), params.get("side", 7))
        return operators.BlurOperator(kernel, shape)
    if kind == "blur_line":
        kernel = operators.make_line_kernel(params.get("length", 9), params.get("angle", 45))
        return operators.BlurOperator(kernel, shape)
    if kind == "inpainting":
        mask = operators.make_inpainting_mask(h, w, params.get("keep_rate", 0.5), rng_mask)
        return operators.InpaintingOperator(mask)
    if kind == "mri":
        mask = operators.make_mri_mask(
            h, w, params.get("acceleration", 4), params.get("center_fraction", 0.08), rng_mask
        )
        return operators.MriOperator(mask)
    if kind == "sr":
        kernel = operators.make_gaussian_kernel(params.get("std", 1.0), params.get("side", 7))
        return operators.SuperResolutionOperator(kernel, params.get("factor", 2), shape)
    if kind == "dense":
        return operators.DenseOperator(np.asarray(params["matrix"], dtype=np.float64), shape)
    if kind == "diagonal":
        diag = np.asarray(params["diag"], dtype=np.float64).reshape(shape)
        return operators.DiagonalOperator(diag)
    raise ConfigError(f"unknown problem kind {kind!r}")


def build_denoiser(spec: dict, shape: tuple, group: groups.Group, rng: SeededRng):
    kind = spec["kind"]
    params = spec.get("params", {})
    h, w = shape
    if kind == "linear":
        return denoisers.LinearMatrixDenoiser(np.asarray(params["matrix"], dtype=np.float64))
    if kind == "circulant":
        if "spatial_filter" in params:
            filt = np.asarray(params["spatial_filter"], dtype=np.float64)
        else:
            from .grid import embed_kernel

            kernel = operators.make_gaussian_kernel(params.get("std", 1.0), params.get("side", 5))
            filt = embed_kernel(kernel, h, w)
        return denoisers.CirculantDenoiser(filt, symmetrize=params.get("symmetrize", False))
    if kind == "haar":
        return denoisers.HaarSoftThresholdDenoiser(
            levels=params.get("levels", 2), scale=params.get("scale", 1.0)
        )
    if kind == "perturbed_prox":
        n = h * w
        if params.get("b1", "identity") == "identity":
            B1 = np.eye(n)
        else:
            B1 = denoisers.build_equivariant_B1(group, h, w, rng)
        if "P" in params:
            P = np.asarray(params["P"], dtype=np.float64)
        else:
            P = params.get("perturbation_scale", 0.05) * rng.normal(0.0, 1.0, (n, n))
        return denoisers.PerturbedProxDenoiser(B1, P, params["threshold"])
    if kind == "tiny_conv":
        weights = params.get("weights", "default")
        if weights == "default":
            return denoisers.default_tiny_conv()
        return denoisers.load_tiny_conv_weights(weights)
    raise ConfigError(f"unknown denoiser kind {kind!r}")


def _solver_config(solver: dict, group, seed: int) -> solvers.SolverConfig:
    return solvers.SolverConfig(
        gamma=float(solver["gamma"]),
        lam=None if solver.get("lambda") is None else float(solver["lambda"]),
        sigma=float(solver.get("sigma", 0.0)),
        max_iters=int(solver.get("max_iters", 10_000)),
        seed=seed,
        equivariance=solver.get("equivariance", "none"),
        group=group if solver.get("equivariance", "none") != "none" else None,
        init=solver.get("init", "adjoint"),
        burn_in=int(solver.get("burn_in", 0)),
        stop_tol=solver.get("stop_tol"),
    )


def _write_summary(path: Path, entries: dict) -> None:
    lines = [f"{key}={entries[key]}" for key in sorted(entries)]
    path.write_text("\n".join(lines) + "\n")


# --- main experiment runners --------------------------------------------------


def run_experiment(cfg: ExperimentConfig) -> ExperimentOutcome:
    """Simulate measurements, reconstruct, and write all artifacts.

    Writes (inside ``cfg.output_dir`` only): ``config.json`` (canonical
    re-serialization), ``recon.img`` or ``mean.img``/``variance.img``,
    ``trace.csv``, ``summary.txt``, and ``timing.txt``.
    """
    t_start = time.perf_counter()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    root = SeededRng(cfg.seed)

    gt = _ground_truth(cfg)
    group = build_group(cfg.group, gt.shape)
    A = build_operator(cfg.problem, gt.shape, root.derive("mask"))
    D = build_denoiser(cfg.denoiser, gt.shape, group, root.derive("denoiser"))
    y = operators.simulate(A, gt, float(cfg.problem.get("noise_std", 0.0)), root.derive("noise"))

    algorithm = cfg.solver["algorithm"]
    sweep = cfg.solver.get("sigma_sweep")
    if sweep:
        rows = ["sigma,status,final_psnr"]
        worst = EXIT_OK
        for sig in sweep:
            sub = dict(cfg.solver)
            sub.pop("sigma_sweep")
            sub["sigma"] = float(sig)
            sub_cfg = ExperimentConfig(
                cfg.seed, cfg.problem, cfg.denoiser, cfg.group, sub, cfg.image,
                str(out / f"sigma_{sig}"), cfg.source,
            )
            outcome = run_experiment(sub_cfg)
            worst = max(worst, outcome.exit_code)
            rows.append(f"{sig},{outcome.status},{outcome.summary.get('final_psnr', '')}")
        (out / "sweep_summary.csv").write_text("\n".join(rows) + "\n")
        return ExperimentOutcome("sweep", worst, {}, out)

    scfg = _solver_config(cfg.solver, group, cfg.seed)
    if algorithm == "pnp_fb":
        result = solvers.pnp_fb(A, y, D, scfg, gt=gt)
    elif algorithm == "red_gd":
        result = solvers.red_gd(A, y, D, scfg, gt=gt)
    else:
        result = solvers.ula(A, y, D, scfg, gt=gt)

    (out / "config.json").write_text(serialize_config(cfg))
    solvers.trace_to_csv(result.trace, out / "trace.csv")
    summary = {
        "algorithm": algorithm,
        "status": result.status,
        "diverged_at": "" if result.diverged_at is None else result.diverged_at,
        "final_residual": float(result.trace.residual[-1]) if len(result.trace.residual) else "",
    }
    if algorithm == "ula":
        save_image(out / "mean.img", result.stats.mean)
        save_image(out / "variance.img", result.stats.variance)
        summary["samples_counted"] = result.stats.samples_counted
        summary["final_psnr"] = psnr(result.stats.mean, gt)
    else:
        save_image(out / "recon.img", result.x)
        if result.status != "diverged":
            summary["final_psnr"] = psnr(result.x, gt)
    _write_summary(out / "summary.txt", summary)
    (out / "timing.txt").write_text(f"wall_time_s={time.perf_counter() - t_start:.3f}\n")
    exit_code = EXIT_DIVERGED if result.status == "diverged" else EXIT_OK
    return ExperimentOutcome(result.status, exit_code, summary, out)


def run_denoise(cfg: ExperimentConfig) -> ExperimentOutcome:
    """Apply the configured denoiser once and write the result."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    root = SeededRng(cfg.seed)
    x = _ground_truth(cfg)
    group = build_group(cfg.group, x.shape)
    D = build_denoiser(cfg.denoiser, x.shape, group, root.derive("denoiser"))
    mode = cfg.solver.get("equivariance", "none")
    sigma = float(cfg.solver.get("sigma", 0.0))
    if mode == "reynolds":
        D = denoisers.ReynoldsEquivariantDenoiser(D, group)
    elif mode == "mc":
        D = denoisers.MonteCarloEquivariantDenoiser(D, group, root.derive("mc-group"))
    save_image(out / "denoised.img", D.denoise(x, sigma))
    _write_summary(out / "summary.txt", {"status": "ok", "sigma": sigma, "mode": mode})
    return ExperimentOutcome("ok", EXIT_OK, {}, out)


def run_analyze(cfg: ExperimentConfig) -> ExperimentOutcome:
    """Patch sweep of Jacobian diagnostics for a denoiser and its group average.

    Writes ``analyze.csv`` with one row per patch (symmetry error, local
    Lipschitz constant, and, when the config names an operator, the composed
    iteration constant, for both the base and averaged denoiser) plus a
    ``report.txt`` with means and improvement counts.
    """
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    root = SeededRng(cfg.seed)
    h, w = _ground_truth(cfg).shape
    patches = int(cfg.solver.get("patches", 10))
    sigma = float(cfg.solver.get("sigma", 0.05))
    gamma = float(cfg.solver.get("gamma", 1.0))

    group = build_group(cfg.group, (h, w))
    D = build_denoiser(cfg.denoiser, (h, w), group, root.derive("denoiser"))
    wrapped = denoisers.ReynoldsEquivariantDenoiser(D, group)
    use_operator = cfg.problem["kind"] != "identity"
    comp = None
    if use_operator:
        A = build_operator(cfg.problem, (h, w), root.derive("mask"))
        G = operators.gram_matrix(A)
        comp = np.eye(G.shape[0]) - gamma * G

    rng_patch = root.derive("patches")
    box = np.ones((3, 3)) / 9.0
    rows = []
    wins = {"sym": 0, "lip": 0, "comp": 0}
    for p in range(patches):
        x = denoisers._conv_circ_small(rng_patch.uniform(0.0, 1.0, (h, w)), box)
        Jb = analysis.jacobian_fd(D, x, sigma)
        Jw = analysis.jacobian_fd(wrapped, x, sigma)
        row = {
            "patch": p,
            "sym_base": analysis.symmetry_error(Jb),
            "sym_avg": analysis.symmetry_error(Jw),
            "lip_base": analysis.spectral_norm(Jb),
            "lip_avg": analysis.spectral_norm(Jw),
        }
        wins["sym"] += row["sym_avg"] < row["sym_base"]
        wins["lip"] += row["lip_avg"] < row["lip_base"]
        if use_operator:
            row["comp_base"] = analysis.spectral_norm(Jb @ comp)
            row["comp_avg"] = analysis.spectral_norm(Jw @ comp)
            wins["comp"] += row["comp_avg"] < row["comp_base"]
        rows.append(row)

    header = list(rows[0].keys())
    csv_lines = [",".join(header)]
    for row in rows:
        csv_lines.append(",".join(repr(row[k]) if k != "patch" else str(row[k]) for k in header))
    (out / "analyze.csv").write_text("\n".join(csv_lines) + "\n")
    report = {
        "patches": patches,
        "sym_improved": wins["sym"],
        "lip_improved": wins["lip"],
    }
    if use_operator:
        report["comp_improved"] = wins["comp"]
    _write_summary(out / "report.txt", report)
    return ExperimentOutcome("ok", EXIT_OK, report, out)


# --- 2D perturbed-prox demonstration ------------------------------------------

# Two parameter sets for the two-pixel demonstration.  The measurement y and
# the shared initialization x0 are chosen so that the contrast between the
# plain and the flip-averaged run is visible from one trajectory.
TOY_SETS = (
    {
        "name": "set1",
        "A_diag": (2.0, 1.0),
        "lam": 10.0,
        "gamma": 5e-2,
        "P": ((-0.228, -0.023), (0.066, 0.1)),
        "y": (2.0, 1.0),
        "x0": (0.0, 20.0),
    },
    {
        "name": "set2",
        "A_diag": (2.0, 5e-4),
        "lam": 2.0,
        "gamma": 0.2,
        "P": ((0.0275, 0.0244), (0.0112, -0.1842)),
        "y": (3.0, 1.0),
        "x0": (0.0, 20.0),
    },
)


def _lasso_minimizer(a_diag: np.ndarray, y: np.ndarray, lam: float) -> np.ndarray:
    """Proximal-gradient oracle for 0.5 * ||A x - y||^2 + lam * ||x||_1 on a
    diagonal A, run to relative residual below 1e-12."""
    step = 0.9 / float(np.max(a_diag) ** 2)
    x = np.zeros_like(y)
    for _ in range(500_000):
        z = x - step * a_diag * (a_diag * x - y)
        xn = np.sign(z) * np.maximum(np.abs(z) - step * lam, 0.0)
        nx = float(np.linalg.norm(x))
        res = float(np.linalg.norm(xn - x)) / (nx if nx > 0 else 1.0)
        x = xn
        if res < 1e-12:
            break
    return x


def run_toy2d(output_dir, max_iters: int = 20_000) -> dict:
    """Run both parameter sets of the two-pixel demonstration.

    For each set, runs the perturbed-prox denoiser through the
    forward-backward solver twice (plain and flip-group averaged) from the
    same initialization, writes the iterate trajectories as CSV (first row is
    the initialization), and records each run's status and distance to the
    oracle minimizer of the underlying objective.
    """
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    flips = groups.built_in_group("flips")
    results = {}
    for spec in TOY_SETS:
        a_diag = np.asarray(spec["A_diag"])
        y = np.asarray(spec["y"]).reshape(1, 2)
        x0 = np.asarray(spec["x0"]).reshape(1, 2)
        A = operators.DiagonalOperator(a_diag.reshape(1, 2))
        D = denoisers.PerturbedProxDenoiser(
            np.eye(2), np.asarray(spec["P"]), spec["gamma"] * spec["lam"]
        )
        oracle = _lasso_minimizer(a_diag, np.asarray(spec["y"]), spec["lam"])
        set_result = {"oracle": oracle.tolist()}
        for mode in ("none", "reynolds"):
            trajectory = []
            cfg = solvers.SolverConfig(
                gamma=spec["gamma"],
                max_iters=max_iters,
                seed=0,
                equivariance=mode,
                group=flips if mode != "none" else None,
                init=x0,
                stop_tol=1e-14,
                callback=lambda k, xk, t=trajectory: t.append(xk.ravel().copy()),
            )
            result = solvers.pnp_fb(A, y, D, cfg)
            trajectory.append(result.x.ravel().copy())
            tag = "equivariant" if mode == "reynolds" else "standard"
            lines = ["iter,x0,x1"] + [
                f"{k},{float(v[0])!r},{float(v[1])!r}" for k, v in enumerate(trajectory)
            ]
            (out / f"{spec['name']}_{tag}_trajectory.csv").write_text("\n".join(lines) + "\n")
            set_result[tag] = {
                "status": result.status,
                "final_residual": float(result.trace.residual[-1]) if len(result.trace.residual) else None,
                "distance_to_oracle": float(np.linalg.norm(result.x.ravel() - oracle))
                if result.status != "diverged"
                else None,
            }
        results[spec["name"]] = set_result
        _write_summary(
            out / f"{spec['name']}_summary.txt",
            {
                "oracle": oracle.tolist(),
                "standard_status": set_result["standard"]["status"],
                "equivariant_status": set_result["equivariant"]["status"],
                "standard_distance": set_result["standard"]["distance_to_oracle"],
                "equivariant_distance": set_result["equivariant"]["distance_to_oracle"],
            },
        )
    return results


# --- verifier suite ------------------------------------------------------------


def run_verify_props(output_dir, seed: int = 0, risk_samples: int = 10_000) -> tuple:
    """Run all structural verifiers with fixed default trial counts.

    Returns ``(all_passed, verdicts)`` and writes a human-readable
    ``report.txt`` plus one ``records.kv`` line per verdict.
    """
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    root = SeededRng(seed)
    flips = groups.built_in_group("flips")
    verdicts = []

    verdicts.append(
        analysis.verify_prop_symmetric_jacobian(trials=100, n_side=4, rng=root.derive("prop-sym"))
    )
    verdicts.append(
        analysis.verify_prop_strict_contraction(
            trials=100, group=flips, height=2, width=4, rng=root.derive("prop-contraction")
        )
    )
    rng_mask = root.derive("prop-spectral")
    for draw in range(20):
        mask = operators.make_inpainting_mask(4, 4, 0.5, rng_mask)
        verdict = analysis.verify_prop_spectral_mismatch(operators.InpaintingOperator(mask), 4)
        verdict.details["mask_draw"] = draw
        verdicts.append(verdict)
    rng_risk = root.derive("prop-risk")
    verdicts.append(
        analysis.verify_risk_inequality(
            denoisers.default_tiny_conv(), flips, (8, 8), 0.1, risk_samples, rng_risk
        )
    )
    n = 64
    P = 0.05 * root.derive("prop-risk-pp").normal(0.0, 1.0, (n, n))
    pp = denoisers.PerturbedProxDenoiser(np.eye(n), P, 0.08)
    verdicts.append(
        analysis.verify_risk_inequality(pp, flips, (8, 8), 0.1, risk_samples, root.derive("prop-risk-pp2"))
    )

    report_lines = []
    kv_lines = []
    for verdict in verdicts:
        report_lines.extend(analysis.verdict_report_lines(verdict))
        kv_lines.append(analysis.verdict_kv_records(verdict))
    (out / "report.txt").write_text("\n".join(report_lines) + "\n")
    (out / "records.kv").write_text("\n".join(kv_lines) + "\n")
    all_passed = all(v.passed for v in verdicts)
    return all_passed, verdicts
