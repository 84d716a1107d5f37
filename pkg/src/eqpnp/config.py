"""Experiment configuration: a single JSON file describing one reproducible run.

Schema (top-level keys):

``seed``        required integer; the root of every random stream in the run.
``problem``     ``{"kind": ..., "params": {...}, "noise_std": float}`` with
                kinds ``blur_gaussian``, ``blur_line``, ``inpainting``,
                ``mri``, ``sr``, ``dense``, ``diagonal``, ``identity``.
``denoiser``    ``{"kind": ..., "params": {...}}`` with kinds ``linear``,
                ``circulant``, ``haar``, ``perturbed_prox``, ``tiny_conv``.
``group``       group name as accepted by ``groups.built_in_group``.
``solver``      ``{"algorithm": "pnp_fb" | "red_gd" | "ula", "gamma": ...,
                "lambda": ..., "sigma": ..., "max_iters": ...,
                "equivariance": "none" | "mc" | "reynolds",
                "init": "adjoint" | "zeros", "burn_in": ...,
                "stop_tol": ..., "sigma_sweep": [...]}``.
``image``       ``{"phantom": name, "height": h, "width": w}`` or
                ``{"path": "file"}``.
``output_dir``  directory all artifacts are written into.

Parsing and re-serialization round-trip exactly; unknown keys are rejected so
typos fail fast.
"""

import json
from dataclasses import dataclass
from pathlib import Path

__all__ = ["ConfigError", "ExperimentConfig", "parse_config", "parse_config_file", "serialize_config"]

_TOP_KEYS = {"seed", "problem", "denoiser", "group", "solver", "image", "output_dir"}
_PROBLEM_KINDS = {"blur_gaussian", "blur_line", "inpainting", "mri", "sr", "dense", "diagonal", "identity"}
_DENOISER_KINDS = {"linear", "circulant", "haar", "perturbed_prox", "tiny_conv"}
_ALGORITHMS = {"pnp_fb", "red_gd", "ula"}
_EQUIVARIANCE = {"none", "mc", "reynolds"}
_GROUPS = {"trivial", "flips", "c4", "d4", "shifts", "d4_shifts"}


class ConfigError(Exception):
    """Invalid configuration; the message carries the source and key path."""


@dataclass
class ExperimentConfig:
    seed: int
    problem: dict
    denoiser: dict
    group: str
    solver: dict
    image: dict
    output_dir: str
    source: str = "<dict>"

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "problem": self.problem,
            "denoiser": self.denoiser,
            "group": self.group,
            "solver": self.solver,
            "image": self.image,
            "output_dir": self.output_dir,
        }


def _fail(source: str, path: str, message: str):
    raise ConfigError(f"{source}: {path}: {message}")


def parse_config(data: dict, source: str = "<dict>") -> ExperimentConfig:
    if not isinstance(data, dict):
        _fail(source, "<top>", "configuration must be a JSON object")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        _fail(source, "<top>", f"unknown keys {sorted(unknown)}")
    missing = _TOP_KEYS - set(data)
    if missing:
        _fail(source, "<top>", f"missing keys {sorted(missing)}")
    if not isinstance(data["seed"], int):
        _fail(source, "seed", "must be an integer (no wall-clock defaults)")

    problem = data["problem"]
    if not isinstance(problem, dict) or "kind" not in problem:
        _fail(source, "problem", "must be an object with a 'kind'")
    if problem["kind"] not in _PROBLEM_KINDS:
        _fail(source, "problem.kind", f"unknown kind {problem['kind']!r}; expected one of {sorted(_PROBLEM_KINDS)}")
    if not isinstance(problem.get("noise_std", 0.0), (int, float)) or problem.get("noise_std", 0.0) < 0:
        _fail(source, "problem.noise_std", "must be a nonnegative number")

    denoiser = data["denoiser"]
    if not isinstance(denoiser, dict) or "kind" not in denoiser:
        _fail(source, "denoiser", "must be an object with a 'kind'")
    if denoiser["kind"] not in _DENOISER_KINDS:
        _fail(source, "denoiser.kind", f"unknown kind {denoiser['kind']!r}; expected one of {sorted(_DENOISER_KINDS)}")

    if data["group"] not in _GROUPS:
        _fail(source, "group", f"unknown group {data['group']!r}; expected one of {sorted(_GROUPS)}")

    solver = data["solver"]
    if not isinstance(solver, dict):
        _fail(source, "solver", "must be an object")
    if solver.get("algorithm") not in _ALGORITHMS:
        _fail(source, "solver.algorithm", f"expected one of {sorted(_ALGORITHMS)}")
    if not isinstance(solver.get("gamma"), (int, float)) or solver["gamma"] <= 0:
        _fail(source, "solver.gamma", "must be a positive number")
    if solver.get("equivariance", "none") not in _EQUIVARIANCE:
        _fail(source, "solver.equivariance", f"expected one of {sorted(_EQUIVARIANCE)}")
    if solver["algorithm"] == "pnp_fb" and solver.get("lambda") is not None:
        _fail(source, "solver.lambda", "pnp_fb takes no regularization weight; remove it")
    if solver["algorithm"] in ("red_gd", "ula") and not isinstance(solver.get("lambda"), (int, float)):
        _fail(source, "solver.lambda", f"{solver['algorithm']} requires a numeric regularization weight")

    image = data["image"]
    if not isinstance(image, dict):
        _fail(source, "image", "must be an object")
    if "path" in image:
        if not Path(image["path"]).exists():
            _fail(source, "image.path", f"file not found: {image['path']}")
    elif "phantom" in image:
        for key in ("height", "width"):
            if not isinstance(image.get(key), int) or image[key] < 8:
                _fail(source, f"image.{key}", "phantom images need integer height/width >= 8")
    else:
        _fail(source, "image", "needs either 'path' or 'phantom'")

    if not isinstance(data["output_dir"], str) or not data["output_dir"]:
        _fail(source, "output_dir", "must be a non-empty string")

    return ExperimentConfig(
        seed=data["seed"],
        problem=problem,
        denoiser=denoiser,
        group=data["group"],
        solver=solver,
        image=image,
        output_dir=data["output_dir"],
        source=source,
    )


def parse_config_file(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return parse_config(data, source=str(path))


def serialize_config(cfg: ExperimentConfig) -> str:
    """Canonical JSON text; ``parse -> serialize -> parse`` is the identity."""
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n"
