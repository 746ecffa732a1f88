"""Command-line entry point: ``rydnoise <subcommand> [options]``.

Each subcommand reads an optional YAML/JSON ``--config`` whose keys match the
long flag names (dashes become underscores); flags given on the command line
win. Every run writes ``manifest.json`` with the resolved configuration into
``--out``. Failures print one ``E_CODE: message`` line to stderr and exit 2.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import datagen
from .config import load_config, merge, resolve_pulse, resolve_register, write_manifest
from .datagen import _atomic_write, read_dataset, write_dataset
from .errors import ConfigurationError, DataError, RydNoiseError
from .learn import (
    MlpConfig,
    RegressorModel,
    SearchSpace,
    cross_validate,
    desk_scale_config,
    fit_linear,
    fit_mlp,
    multi_param_config,
    predict_ensemble,
    random_search,
    single_param_config,
)
from .noise import LABEL_NAMES, NoiseParams
from .registers import DEFAULT_PITCH_UM, SCALING_SYSTEMS
from .report import load_json, write_report
from .rl import CorrectionEnv, DqnConfig, EnvConfig, train_dqn, uncorrected_baseline
from .simulator import estimate_probabilities


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(2, f"E_USAGE: {message}\n")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML or JSON file with default option values")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--workers", type=int, default=None, help="worker processes")


def _settings(args, defaults: dict) -> dict:
    cfg = merge(defaults, load_config(args.config))
    flags = {k: v for k, v in vars(args).items() if k not in ("config", "command", "func")}
    cfg = merge(cfg, flags)
    if cfg.get("out") is None:
        raise ConfigurationError("an output directory is required (--out or 'out' in the config)")
    if int(cfg.get("workers", 1)) < 1:
        raise ConfigurationError("--workers must be >= 1")
    return cfg


def _write_json(path: Path, data) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    _atomic_write(path, json.dumps(data, indent=2, sort_keys=True) + "\n")


def _noise_from(cfg: dict) -> NoiseParams:
    base = dict(cfg.get("noise") or {})
    for name in LABEL_NAMES:
        if cfg.get(name) is not None:
            base[name] = cfg[name]
    return NoiseParams.from_dict(base)


def cmd_simulate(args) -> int:
    cfg = _settings(args, {"seed": 0, "workers": 1, "register": "s2", "pulse": "rabi", "shots": 500, "dt": 0.5,
                           "pitch": DEFAULT_PITCH_UM})
    reg = resolve_register(cfg["register"], cfg["pitch"])
    pulse = resolve_pulse(cfg["pulse"])
    params = _noise_from(cfg)
    probs = estimate_probabilities(reg, pulse, params, int(cfg["shots"]), int(cfg["seed"]), float(cfg["dt"]))
    out = Path(cfg["out"])
    lines = [",".join(probs.labels), ",".join(repr(v) for v in probs.values.tolist())]
    out.mkdir(parents=True, exist_ok=True)
    _atomic_write(out / "probabilities.csv", "\n".join(lines) + "\n")
    write_manifest(out, "simulate", {**cfg, "register": reg, "pulse": pulse, "noise": params}, cfg["seed"])
    return 0


def _ranges(cfg: dict) -> dict:
    ranges = {k: tuple(v) for k, v in datagen.MULTI_PARAM_RANGES.items()}
    for k, v in (cfg.get("ranges") or {}).items():
        if k not in ranges:
            raise ConfigurationError(f"unknown parameter range {k!r}")
        ranges[k] = tuple(float(x) for x in v)
    if cfg.get("sigma_r_range") is not None:
        ranges["sigma_r"] = tuple(cfg["sigma_r_range"])
    return ranges


def cmd_gen_data(args) -> int:
    cfg = _settings(args, {"seed": 0, "workers": 1, "mode": "single", "shots": datagen.DEFAULT_SHOTS,
                           "dt": 0.5, "pitch": DEFAULT_PITCH_UM, "concat": []})
    out = Path(cfg["out"])
    seed, workers, shots = int(cfg["seed"]), int(cfg["workers"]), int(cfg["shots"])
    ranges = _ranges(cfg)
    if cfg["mode"] == "single":
        names = cfg.get("registers") or list(SCALING_SYSTEMS)
        if isinstance(names, str):
            names = names.split(",")
        if isinstance(names, dict):
            regs = {str(n): resolve_register(spec, cfg["pitch"]) for n, spec in names.items()}
        else:
            regs = {str(n): resolve_register(n, cfg["pitch"]) for n in names}
        pulse = resolve_pulse(cfg.get("pulse") or "rabi")
        n = int(cfg.get("samples") or datagen.SINGLE_PARAM_SAMPLES)
        sets = datagen.generate_single_param_dataset(
            regs, pulse, n, shots, ranges["sigma_r"], seed, float(cfg["dt"]), workers
        )
        for name, ds in sets.items():
            write_dataset(ds, out, name)
        for chain in cfg.get("concat") or []:
            parts = chain.split("+")
            missing = [p for p in parts if p not in sets]
            if missing:
                raise ConfigurationError(f"concatenation {chain!r} names registers not generated: {missing}")
            write_dataset(datagen.concatenate([sets[p] for p in parts]), out, chain)
        resolved = {**cfg, "registers": regs, "pulse": pulse, "samples": n, "ranges": ranges}
    elif cfg["mode"] == "multi":
        reg = resolve_register(cfg.get("register") or "s6", cfg["pitch"])
        pulse = resolve_pulse(cfg.get("pulse") or "multi")
        n = int(cfg.get("samples") or datagen.MULTI_PARAM_SAMPLES)
        ds = datagen.generate_multi_param_dataset(reg, pulse, n, shots, ranges, seed, float(cfg["dt"]), workers)
        write_dataset(ds, out, "s6")
        resolved = {**cfg, "register": reg, "pulse": pulse, "samples": n, "ranges": ranges}
    else:
        raise ConfigurationError(f"mode must be 'single' or 'multi', got {cfg['mode']!r}")
    write_manifest(out, "gen-data", resolved, seed)
    return 0


def _mlp_config(cfg: dict, dataset) -> MlpConfig:
    if cfg.get("mlp"):
        return MlpConfig.from_dict(cfg["mlp"])
    if len(dataset.label_names) > 1:
        return multi_param_config()
    preset = cfg.get("preset") or "full"
    if preset not in ("full", "desk"):
        raise ConfigurationError(f"preset must be 'full' or 'desk', got {preset!r}")
    return desk_scale_config() if preset == "desk" else single_param_config()


def cmd_train(args) -> int:
    cfg = _settings(args, {"seed": 0, "workers": 1, "kind": "mlp", "val_fraction": 0.1})
    if cfg.get("data") is None:
        raise ConfigurationError("--data is required")
    ds = read_dataset(cfg["data"])
    seed = int(cfg["seed"])
    if cfg["kind"] == "linear":
        model = fit_linear(ds)
        mlp = None
    elif cfg["kind"] == "mlp":
        frac = float(cfg["val_fraction"])
        if not 0 < frac < 1:
            raise ConfigurationError("--val-fraction must lie in (0, 1)")
        perm = np.random.default_rng([seed, 5]).permutation(ds.n_samples)
        n_val = max(1, int(round(frac * ds.n_samples)))
        mlp = _mlp_config(cfg, ds)
        model = fit_mlp(ds.subset(perm[n_val:]), ds.subset(perm[:n_val]), mlp, seed)
    else:
        raise ConfigurationError(f"unknown model kind {cfg['kind']!r}")
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    model.save(out / "model.json")
    write_manifest(out, "train", {**cfg, "mlp": mlp}, seed)
    return 0


def cmd_cross_validate(args) -> int:
    cfg = _settings(args, {"seed": 0, "workers": 1, "kind": "mlp", "k": 20, "protocol": None})
    if cfg.get("data") is None:
        raise ConfigurationError("--data is required")
    ds = read_dataset(cfg["data"])
    protocol = cfg["protocol"] or ("train_val" if len(ds.label_names) == 1 else "train_val_test")
    mlp = _mlp_config(cfg, ds) if cfg["kind"] == "mlp" else None
    rep = cross_validate(ds, cfg["kind"], mlp, int(cfg["k"]), int(cfg["seed"]), protocol, int(cfg["workers"]))
    out = Path(cfg["out"])
    _write_json(out / "cv.json", rep.to_dict())
    for f, model in enumerate(rep.models):
        (out / "models").mkdir(parents=True, exist_ok=True)
        model.save(out / "models" / f"fold_{f:02d}.json")
    write_manifest(out, "cross-validate", {**cfg, "protocol": protocol, "mlp": mlp}, cfg["seed"])
    return 0


def cmd_search(args) -> int:
    cfg = _settings(args, {"seed": 0, "workers": 1, "trials": 20, "space": None})
    if cfg.get("data") is None:
        raise ConfigurationError("--data is required")
    ds = read_dataset(cfg["data"])
    space = SearchSpace.from_dict(cfg["space"]) if cfg.get("space") else SearchSpace()
    rungs = cfg.get("rungs")
    kwargs = {"rungs": rungs} if rungs else {}
    best, log = random_search(ds, space, int(cfg["trials"]), seed=int(cfg["seed"]), **kwargs)
    out = Path(cfg["out"])
    _write_json(out / "best_config.json", best.to_dict())
    _write_json(out / "search_log.json", log)
    write_manifest(out, "search", {**cfg, "space": space}, cfg["seed"])
    return 0


def _load_models(paths) -> list[RegressorModel]:
    files = []
    for p in paths:
        p = Path(p)
        if p.is_dir():
            sub = p / "models" if (p / "models").is_dir() else p
            files += sorted(sub.glob("*.json"))
        else:
            files.append(p)
    if not files:
        raise DataError("no model files found")
    return [RegressorModel.load(f) for f in files]


def cmd_predict(args) -> int:
    cfg = _settings(args, {"seed": 0, "workers": 1})
    if not cfg.get("models") or cfg.get("data") is None:
        raise ConfigurationError("--models and --data are required")
    models = _load_models(cfg["models"])
    ds = read_dataset(cfg["data"])
    mean, std = predict_ensemble(models, ds.features)
    names = models[0].label_names
    header = [f"{n}_mean" for n in names] + [f"{n}_std" for n in names]
    lines = [",".join(header)]
    for m, s in zip(mean, std):
        lines.append(",".join(repr(float(v)) for v in np.concatenate([m, s])))
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    _atomic_write(out / "predictions.csv", "\n".join(lines) + "\n")
    write_manifest(out, "predict", cfg, cfg["seed"])
    return 0


def cmd_rl_train(args) -> int:
    cfg = _settings(args, {"seed": 0, "workers": 1, "episodes": 1000, "baseline_runs": 100,
                           "n_sims": 10, "max_steps": 100})
    noise = _noise_from({**cfg, "noise": cfg.get("noise") or NoiseParams.device_estimate().to_dict()})
    env_cfg = EnvConfig(n_sims=int(cfg["n_sims"]), max_steps=int(cfg["max_steps"]), noise=noise)
    dqn_opts = dict(cfg.get("dqn") or {})
    if "hidden" in dqn_opts:
        dqn_opts["hidden"] = tuple(dqn_opts["hidden"])
    dqn_cfg = DqnConfig(**{**dqn_opts, "episodes": int(cfg["episodes"])})
    seed = int(cfg["seed"])
    out = Path(cfg["out"])
    baseline = uncorrected_baseline(env_cfg, int(cfg["baseline_runs"]), seed=(seed, 99))
    net, log, _ = train_dqn(CorrectionEnv(env_cfg), dqn_cfg, seed)
    _write_json(out / "episodes.json", log)
    cols = ("episode", "mean_kl", "steps", "cumulative_reward")
    rows = [",".join(cols)] + [",".join(repr(r[c]) for c in cols) for r in log]
    _atomic_write(out / "episodes.csv", "\n".join(rows) + "\n")
    _write_json(out / "baseline.json", {"baseline_kl": baseline, "runs": int(cfg["baseline_runs"])})
    _write_json(out / "agent.json", net.to_dict())
    write_manifest(out, "rl-train", {**cfg, "env": env_cfg, "dqn": dqn_cfg}, seed)
    return 0


def cmd_report(args) -> int:
    cfg = _settings(args, {"seed": 0, "workers": 1, "cv": [], "x_name": "x"})
    entries = []
    for item in cfg.get("cv") or []:
        try:
            label, x, path = item.split(":", 2)
            x = float(x)
        except ValueError as exc:
            raise ConfigurationError(f"--cv entries look like LABEL:X:PATH, got {item!r}") from exc
        path = Path(path)
        entries.append((label, x, load_json(path / "cv.json" if path.is_dir() else path)))
    kl_log, baseline = None, None
    if cfg.get("rl"):
        rl = Path(cfg["rl"])
        kl_log = load_json(rl / "episodes.json")
        baseline = load_json(rl / "baseline.json")["baseline_kl"]
    write_report(cfg["out"], entries, kl_log, baseline, cfg["x_name"])
    write_manifest(cfg["out"], "report", cfg, cfg["seed"])
    return 0


def _range(text):
    return [float(v) for v in text.split(",")]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rydnoise", description="Noisy Rydberg simulation, noise regression and pulse correction.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="estimate occupation probabilities for one register and pulse")
    _common(p)
    p.add_argument("--register")
    p.add_argument("--pulse", help="preset name: rabi, multi, correction-base")
    p.add_argument("--shots", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--pitch", type=float)
    for name in LABEL_NAMES:
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=float)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gen-data", help="generate labelled datasets")
    _common(p)
    p.add_argument("--mode", choices=("single", "multi"))
    p.add_argument("--registers", help="comma-separated register names (single mode)")
    p.add_argument("--register", help="register name (multi mode)")
    p.add_argument("--pulse")
    p.add_argument("--samples", type=int)
    p.add_argument("--shots", type=int)
    p.add_argument("--sigma-r-range", type=_range, help="LO,HI")
    p.add_argument("--concat", nargs="*", help="chains such as s4a+s4b")
    p.add_argument("--dt", type=float)
    p.add_argument("--pitch", type=float)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="fit one model on a dataset")
    _common(p)
    p.add_argument("--data")
    p.add_argument("--kind", choices=("linear", "mlp"))
    p.add_argument("--preset", choices=("full", "desk"),
                   help="single-parameter MLP epoch budget for 10 000 (full) or 2 000 (desk) samples")
    p.add_argument("--val-fraction", type=float)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("cross-validate", help="k-fold cross-validation")
    _common(p)
    p.add_argument("--data")
    p.add_argument("--kind", choices=("linear", "mlp"))
    p.add_argument("--preset", choices=("full", "desk"),
                   help="single-parameter MLP epoch budget for 10 000 (full) or 2 000 (desk) samples")
    p.add_argument("--k", type=int)
    p.add_argument("--protocol", choices=("train_val", "train_val_test"))
    p.set_defaults(func=cmd_cross_validate)

    p = sub.add_parser("search", help="random hyperparameter search with successive halving")
    _common(p)
    p.add_argument("--data")
    p.add_argument("--trials", type=int)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("predict", help="ensemble predictions with per-target std")
    _common(p)
    p.add_argument("--models", nargs="+", help="model files or cross-validate output directories")
    p.add_argument("--data")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("rl-train", help="train the correction-pulse agent")
    _common(p)
    p.add_argument("--episodes", type=int)
    p.add_argument("--baseline-runs", type=int)
    p.add_argument("--n-sims", type=int)
    p.add_argument("--max-steps", type=int)
    for name in LABEL_NAMES:
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=float)
    p.set_defaults(func=cmd_rl_train)

    p = sub.add_parser("report", help="CSV series and summary from CV and RL outputs")
    _common(p)
    p.add_argument("--cv", nargs="*", help="LABEL:X:PATH entries (PATH is cv.json or its directory)")
    p.add_argument("--rl", help="rl-train output directory")
    p.add_argument("--x-name")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except RydNoiseError as exc:
        print(f"{exc.code}: {' '.join(str(exc).split())}", file=sys.stderr)
        return 2
    except (OSError, ValueError, KeyError, TypeError) as exc:
        # anything else the validation layers missed still gets one parsable line
        code = "E_DATA" if isinstance(exc, OSError) else "E_CONFIG"
        print(f"{code}: {' '.join(str(exc).split())}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
