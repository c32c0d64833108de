"""Command line entry point: parse a TOML config, run, emit CSV artifacts.

Subcommands: ``run`` (simulate and write CSVs plus a JSON manifest),
``presets`` (list the built-in figure configurations), ``validate``
(parse and check a config without running). Exit codes: 0 success,
1 config error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import dataclass


try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import __version__
from .dynamics import (
    Constant,
    Diffusion,
    DynamicsParams,
    Geometric,
    IsotropicConstant,
    Isotropic,
    ParentDifference,
)
from .experiments import (
    PRESET_NAMES,
    ExperimentResult,
    ExperimentSpec,
    preset,
    run_experiment,
)
from .selection import kernel_from_config, kernel_name

__all__ = ["ConfigError", "RunManifest", "parse_config", "emit_csv", "main"]

# Exact output schemas; one CSV per metric family.
CSV_HEADERS = {
    "w1": ["kind", "kernel", "N", "rep", "k", "w1"],
    "w1_summary": ["kernel", "N", "k", "mean_w1", "q10", "q90"],
    "steady": ["kernel", "alpha", "bin_left", "bin_right", "density"],
    "scaling": ["method", "objective", "diffusion", "N", "rep", "error_l2", "accuracy_gap"],
    "scaling_box": [
        "method", "objective", "diffusion", "N", "metric",
        "median", "q1", "q3", "wlow", "whigh", "n_outliers",
    ],
    "convergence": ["k", "mean_error", "envelope_tau", "envelope_half_tau"],
}


class ConfigError(ValueError):
    """Invalid or malformed configuration; maps to exit code 1."""


@dataclass
class RunManifest:
    """Record of one emission: resolved config, outputs, and digests."""

    config: dict
    version: str
    master_seed: int
    started_at: float
    finished_at: float
    outputs: dict[str, str]

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True)


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


_DIFFUSION_TAGS = {
    "nondegenerate": IsotropicConstant,
    "isotropic": Isotropic,
    "anisotropic": ParentDifference,
}


def _diffusion_from_config(tag: str, d_vec, dim: int) -> Diffusion:
    if tag not in _DIFFUSION_TAGS:
        raise ConfigError(
            f"params.diffusion: unknown mode {tag!r}; choose from {sorted(_DIFFUSION_TAGS)}"
        )
    if tag == "nondegenerate":
        if d_vec is None:
            d_vec = [1.0] * dim
        return IsotropicConstant(tuple(float(v) for v in d_vec))
    return _DIFFUSION_TAGS[tag]()


def _params_from_config(cfg: dict, dim: int) -> DynamicsParams:
    cfg = dict(cfg)
    known = {
        "tau", "gamma", "epsilon", "lambda", "alpha", "sigma0",
        "cooling", "diffusion", "d_vec", "N", "k_max", "seed",
    }
    unknown = set(cfg) - known
    if unknown:
        raise ConfigError(f"params: unknown keys {sorted(unknown)}")
    if "tau" not in cfg:
        raise ConfigError("params.tau: required key missing")
    gamma = cfg.get("gamma", 0.0)
    if isinstance(gamma, (int, float)):
        gamma = [float(gamma)] * dim
    if len(gamma) != dim:
        raise ConfigError(f"params.gamma: expected scalar or length-{dim} list")
    cooling = cfg.get("cooling", "constant")
    if cooling == "constant":
        schedule = Constant()
    elif isinstance(cooling, (int, float)):
        schedule = Geometric(float(cooling))
    else:
        raise ConfigError("params.cooling: expected 'constant' or a factor in (0,1)")
    diffusion = _diffusion_from_config(
        cfg.get("diffusion", "nondegenerate"), cfg.get("d_vec"), dim
    )
    try:
        return DynamicsParams(
            tau=float(cfg["tau"]),
            gamma=tuple(float(g) for g in gamma),
            epsilon=float(cfg.get("epsilon", 1.0)),
            lam=float(cfg.get("lambda", 1.0)),
            alpha=float(cfg.get("alpha", 1.0)),
            sigma0=float(cfg.get("sigma0", 0.0)),
            sigma_schedule=schedule,
            diffusion=diffusion,
            n=int(cfg.get("N", 100)),
            k_max=int(cfg.get("k_max", 100)),
            seed=int(cfg.get("seed", 0)),
        )
    except ValueError as exc:
        raise ConfigError(f"params: {exc}") from exc


def _kernels_from_config(cfg: dict) -> tuple:
    if "kernels" in cfg and "kernel" in cfg:
        raise ConfigError("kernel/kernels: give one or the other, not both")
    entries = cfg.pop("kernels", None)
    if entries is None:
        name = cfg.pop("kernel", None)
        if name is None:
            return ()
        entries = [{"name": name, "alpha": cfg.get("params", {}).get("alpha")}]
    kernels = []
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict) or "name" not in entry:
            raise ConfigError(f"kernels[{i}]: expected a table with a 'name' key")
        unknown = set(entry) - {"name", "alpha"}
        if unknown:
            raise ConfigError(f"kernels[{i}]: unknown keys {sorted(unknown)}")
        try:
            kernels.append(kernel_from_config(entry["name"], entry.get("alpha")))
        except ValueError as exc:
            raise ConfigError(f"kernels[{i}]: {exc}") from exc
    return tuple(kernels)


_TOP_KEYS = {
    "preset", "paper_scale", "kind", "objective", "objectives", "dim",
    "kernel", "kernels", "params", "population_list", "epsilon_list",
    "methods", "repetitions", "reference_n", "snapshot_stride", "init_box",
    "master_seed", "cbo_sigma", "hist_bins", "init_mean", "accuracy",
}


def spec_from_dict(cfg: dict) -> ExperimentSpec:
    """Resolve a plain config mapping into a validated ExperimentSpec."""
    cfg = dict(cfg)
    unknown = set(cfg) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)}")

    base = None
    if "preset" in cfg:
        name = cfg.pop("preset")
        paper_scale = bool(cfg.pop("paper_scale", False))
        try:
            base = preset(name, paper_scale=paper_scale)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if not cfg:
            return base
        base_cfg = spec_to_config(base)
        base_cfg.update(cfg)
        cfg = base_cfg

    if "objective" in cfg and "objectives" in cfg:
        raise ConfigError("objective/objectives: give one or the other, not both")
    objectives = cfg.pop("objectives", None)
    if objectives is None:
        single = cfg.pop("objective", None)
        objectives = [single] if single is not None else None
    if not objectives:
        raise ConfigError("objective: required key missing")

    if "kind" not in cfg:
        raise ConfigError("kind: required key missing")
    if "dim" not in cfg:
        raise ConfigError("dim: required key missing")
    dim = int(cfg["dim"])
    kernels = _kernels_from_config(cfg)
    params = _params_from_config(cfg.get("params", {}), dim)

    init_box = cfg.get("init_box", [-2.0, 2.0])
    if len(init_box) != 2:
        raise ConfigError("init_box: expected [low, high]")

    try:
        return ExperimentSpec(
            kind=cfg["kind"],
            objectives=tuple(objectives),
            dim=dim,
            base_params=params,
            kernels=kernels,
            population_list=tuple(int(n) for n in cfg.get("population_list", [params.n])),
            epsilon_list=tuple(float(e) for e in cfg.get("epsilon_list", [1.0])),
            methods=tuple(cfg.get("methods", ["ga"])),
            repetitions=int(cfg.get("repetitions", 1)),
            reference_n=int(cfg.get("reference_n", 100_000)),
            snapshot_stride=int(cfg.get("snapshot_stride", 10)),
            init_box=(float(init_box[0]), float(init_box[1])),
            master_seed=int(cfg.get("master_seed", 0)),
            cbo_sigma=float(cfg.get("cbo_sigma", 3.0)),
            hist_bins=int(cfg.get("hist_bins", 100)),
            init_mean=(None if cfg.get("init_mean") is None else float(cfg["init_mean"])),
            accuracy=float(cfg.get("accuracy", 1e-2)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def spec_to_config(spec: ExperimentSpec) -> dict:
    """Serialize a spec back to a config mapping; round-trips through
    ``spec_from_dict``."""
    params = spec.base_params
    if isinstance(params.sigma_schedule, Geometric):
        cooling = params.sigma_schedule.factor
    else:
        cooling = "constant"
    if isinstance(params.diffusion, IsotropicConstant):
        diffusion, d_vec = "nondegenerate", list(params.diffusion.d_vec)
    elif isinstance(params.diffusion, Isotropic):
        diffusion, d_vec = "isotropic", None
    else:
        diffusion, d_vec = "anisotropic", None
    params_cfg = {
        "tau": params.tau,
        "gamma": list(params.gamma),
        "epsilon": params.epsilon,
        "lambda": params.lam,
        "alpha": params.alpha,
        "sigma0": params.sigma0,
        "cooling": cooling,
        "diffusion": diffusion,
        "N": params.n,
        "k_max": params.k_max,
        "seed": params.seed,
    }
    if d_vec is not None:
        params_cfg["d_vec"] = d_vec
    kernels = [
        {"name": kernel_name(k)}
        | ({"alpha": k.alpha} if hasattr(k, "alpha") else {})
        for k in spec.kernels
    ]
    cfg = {
        "kind": spec.kind,
        "objectives": list(spec.objectives),
        "dim": spec.dim,
        "kernels": kernels,
        "params": params_cfg,
        "population_list": list(spec.population_list),
        "epsilon_list": list(spec.epsilon_list),
        "methods": list(spec.methods),
        "repetitions": spec.repetitions,
        "reference_n": spec.reference_n,
        "snapshot_stride": spec.snapshot_stride,
        "init_box": list(spec.init_box),
        "master_seed": spec.master_seed,
        "cbo_sigma": spec.cbo_sigma,
        "hist_bins": spec.hist_bins,
        "accuracy": spec.accuracy,
    }
    if spec.init_mean is not None:
        cfg["init_mean"] = spec.init_mean
    return cfg


def parse_config(path: str) -> ExperimentSpec:
    """Load and validate a TOML config file."""
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML syntax error in {path}: {exc}") from exc
    if not cfg:
        raise ConfigError(f"empty config: {path}")
    return spec_from_dict(cfg)


def emit_csv(result: ExperimentResult, out_dir: str) -> RunManifest:
    """Write one CSV per table plus a JSON manifest with content digests.

    Floats are written with 17 significant digits so reruns with the same
    seed are byte-identical. On failure, partially written files are
    removed.
    """
    started = time.time()
    os.makedirs(out_dir, exist_ok=True)
    written: list[str] = []
    outputs: dict[str, str] = {}
    try:
        for name, rows in result.tables.items():
            header = CSV_HEADERS[name]
            path = os.path.join(out_dir, f"{name}.csv")
            with open(path, "w", newline="\n") as fh:
                fh.write(",".join(header) + "\n")
                for row in rows:
                    fh.write(",".join(_fmt(row[col]) for col in header) + "\n")
            written.append(path)
            with open(path, "rb") as fh:
                outputs[f"{name}.csv"] = hashlib.sha256(fh.read()).hexdigest()
    except OSError:
        for path in written:
            try:
                os.remove(path)
            except OSError:
                pass
        raise

    manifest = RunManifest(
        config=result.metadata["config"],
        version=__version__,
        master_seed=result.metadata["master_seed"],
        started_at=started,
        finished_at=time.time(),
        outputs=outputs,
    )
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        fh.write(manifest.to_json() + "\n")
    return manifest


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kga", description="kinetic GA / CBO particle experiments"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment and emit CSVs")
    run_p.add_argument("--config", help="TOML config file")
    run_p.add_argument("--preset", choices=PRESET_NAMES, help="built-in configuration")
    run_p.add_argument("--out", required=True, help="output directory")
    run_p.add_argument("--seed", type=int, help="override the master seed")
    run_p.add_argument(
        "--threads",
        type=int,
        default=None,
        help="cell parallelism cap (default: KGA_THREADS or 1)",
    )
    run_p.add_argument(
        "--paper-scale",
        action="store_true",
        help="use the full published population sizes",
    )

    sub.add_parser("presets", help="list the built-in presets")

    val_p = sub.add_parser("validate", help="parse a config without running")
    val_p.add_argument("--config", required=True)
    return parser


def _resolve_spec(args) -> ExperimentSpec:
    if args.config and args.preset:
        raise ConfigError("give --config or --preset, not both")
    if args.config:
        spec = parse_config(args.config)
    elif args.preset:
        spec = preset(args.preset, paper_scale=args.paper_scale)
    else:
        raise ConfigError("one of --config or --preset is required")
    if args.seed is not None:
        spec = spec_from_dict(spec_to_config(spec) | {"master_seed": args.seed})
    return spec


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "presets":
        for name in PRESET_NAMES:
            print(name)
        return 0

    if args.command == "validate":
        try:
            spec = parse_config(args.config)
        except ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        print(f"ok: {spec.kind}")
        return 0

    try:
        spec = _resolve_spec(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    threads = args.threads
    if threads is None:
        threads = int(os.environ.get("KGA_THREADS", "1"))
    try:
        os.makedirs(args.out, exist_ok=True)
        result = run_experiment(spec, threads=max(1, threads))
        manifest = emit_csv(result, args.out)
    except (OSError, ValueError, ArithmeticError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    for name, digest in sorted(manifest.outputs.items()):
        print(f"{name}  sha256:{digest[:16]}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
