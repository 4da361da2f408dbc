"""Command-line entry point: ``fairopt <command> [--preset NAME] [--config FILE] ...``.

Every run writes ``config.json``, ``results.csv`` and ``summary.json`` into
the output directory.  Exit codes: 0 success, 2 invalid input, 3 numeric or
runtime failure.
"""
from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from fairopt import analytic, dynamics, fairness, trainer
from fairopt.errors import FairoptError, InvalidParameterError, NumericError, UndefinedThresholdError, ValidationError
from fairopt.optimizers import OptimizerConfig
from fairopt.presets import DEFAULTS, PRESETS, deep_merge, preset
from fairopt.stats import SeededStream
from fairopt.subgroups import NgosSpec, QuadraticSubgroups, validate_ngos

COMMANDS = ("warmup", "density", "theorems", "train", "sweep", "metrics")

CSV_COLUMNS = {
    "warmup": ("epoch", "optimizer", "fraction_fair"),
    "density": ("w", "p_rms", "p_sgd"),
    "theorems": ("theorem", "analytic_bound", "empirical_value", "satisfied", "condition_met", "sample_count"),
    "train": trainer.TRAIN_CSV_COLUMNS,
    "sweep": ("minority_fraction", "metric", "abs_difference", "p_value"),
    "metrics": ("metric", "value", "witness_class", "witness_groups"),
}


# ---------------------------------------------------------------- config

def parse_override(text: str):
    """``a.b=value`` -> (["a", "b"], value); values are JSON when they parse as JSON."""
    if "=" not in text:
        raise InvalidParameterError(f"--set expects key=value, got {text!r}")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip().split("."), value


def apply_override(cfg: dict, path: list, value) -> None:
    node = cfg
    for part in path[:-1]:
        if not isinstance(node.get(part), dict):
            raise InvalidParameterError(f"--set: {'.'.join(path)} does not name a nested config field")
        node = node[part]
    if path[-1] not in node:
        raise InvalidParameterError(f"--set: unknown config field {'.'.join(path)!r}")
    node[path[-1]] = value


def resolve_config(command: str | None, preset_name: str | None = None, config_path: str | None = None,
                   overrides=(), seed: int | None = None) -> tuple[str, dict]:
    """Command defaults, then preset, then config file, then ``--set``, then ``--seed``."""
    layers = []
    if preset_name:
        layers.append(preset(preset_name))
    if config_path:
        try:
            layers.append(json.loads(Path(config_path).read_text()))
        except OSError as exc:
            raise InvalidParameterError(f"{config_path}: cannot read config ({exc.strerror})") from None
        except json.JSONDecodeError as exc:
            raise InvalidParameterError(f"{config_path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    named = {layer.get("command") for layer in layers} - {None}
    if command is None:
        if len(named) != 1:
            raise InvalidParameterError("no command given and the preset/config does not name exactly one")
        command = named.pop()
    elif named - {command}:
        raise InvalidParameterError(f"preset/config is for {sorted(named)}, not {command!r}")
    if command not in COMMANDS:
        raise InvalidParameterError(f"unknown command {command!r}")

    cfg = copy.deepcopy(DEFAULTS[command])
    for layer in layers:
        unknown = set(layer) - set(cfg) - {"command", "preset"}
        if unknown:
            raise InvalidParameterError(f"unknown config fields for {command}: {sorted(unknown)}")
        layer = {k: v for k, v in layer.items() if k not in ("command", "preset")}
        if isinstance(layer.get("data"), dict) and set(layer["data"]) != set(cfg.get("data", {})):
            # switching data source (synthetic <-> csv) replaces the block instead of merging
            cfg = dict(cfg, data={})
        cfg = deep_merge(cfg, layer)
    for text in overrides:
        path, value = parse_override(text)
        apply_override(cfg, path, value)
    if seed is not None:
        cfg["master_seed"] = int(seed)
    cfg["command"] = command
    cfg["preset"] = preset_name
    return command, cfg


def _build(factory, payload, what):
    try:
        return factory(**payload)
    except TypeError as exc:
        raise InvalidParameterError(f"bad {what} config: {exc}") from None


def _optimizers(cfg) -> list[OptimizerConfig]:
    if not cfg["optimizers"]:
        raise InvalidParameterError("at least one optimizer is required")
    return [_build(OptimizerConfig, o, "optimizer") for o in cfg["optimizers"]]


def _settings(cfg) -> trainer.TrainSettings:
    return trainer.TrainSettings(
        model=_build(trainer.ModelSpec, cfg["model"], "model"),
        loss=_build(trainer.LossSpec, cfg["loss"], "loss"),
        epochs=int(cfg["epochs"]), batch_size=int(cfg["batch_size"]), test_fraction=float(cfg["test_fraction"]),
    )


def _data(cfg):
    data = cfg["data"]
    if set(data) == {"synthetic"}:
        return _build(trainer.SyntheticSpec, {**data["synthetic"], "master_seed": cfg["master_seed"]}, "synthetic data")
    if set(data) == {"csv"}:
        c = data["csv"]
        missing = {"path", "features", "label", "group"} - set(c)
        if missing:
            raise InvalidParameterError(f"csv data config is missing {sorted(missing)}")
        return trainer.load_csv(c["path"], c["features"], c["label"], c["group"])
    raise InvalidParameterError("data must be {'synthetic': {...}} or {'csv': {...}}")


# ---------------------------------------------------------------- commands

def _num(x):
    """JSON-safe number: NaN and infinities become None."""
    if x is None:
        return None
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    x = float(x)
    return x if math.isfinite(x) else None


def cmd_warmup(cfg, workers):
    model = _build(QuadraticSubgroups, cfg["model"], "model")
    rows, summary = [], {"final_fraction": {}, "diverged": {}, "final_fraction_by_threshold": {}}
    for opt in _optimizers(cfg):
        wc = dynamics.WarmupConfig(
            model=model, optimizer=opt, trials=int(cfg["trials"]), epochs=int(cfg["epochs"]),
            steps_per_epoch=int(cfg["steps_per_epoch"]), fair_center=float(cfg["fair_center"]),
            fair_threshold=float(cfg["fair_threshold"]), w0=float(cfg["w0"]),
            w0_range=tuple(cfg["w0_range"]) if cfg["w0_range"] else None, master_seed=int(cfg["master_seed"]))
        records = dynamics.simulate_warmup(wc, workers)
        curve = records.curve()
        label = opt.label
        if label in summary["final_fraction"]:
            label = f"{label}@{opt.eta:g}"
        for epoch in range(1, wc.epochs + 1):
            rows.append((epoch, label, float(curve.fractions[epoch])))
        summary["final_fraction"][label] = curve.final
        summary["diverged"][label] = curve.diverged
        summary["final_fraction_by_threshold"][label] = {
            repr(float(t)): records.curve(threshold=float(t)).final for t in cfg["report_thresholds"]}
    return rows, summary


def cmd_density(cfg, workers):
    params = analytic.StationaryParams(float(cfg["p0"]), float(cfg["eta"]), float(cfg["theta_global"]))
    w, prms, psgd = analytic.density_grid(params, int(cfg["points"]), cfg["half_width"])
    rows = [(float(a), float(b), float(c)) for a, b, c in zip(w, prms, psgd)]
    try:
        delta, reason = analytic.delta_threshold(params), None
        favours = analytic.rmsprop_favours_fair_min(params)
    except UndefinedThresholdError as exc:
        delta, reason, favours = None, str(exc), None
    summary = {
        "kappa": params.kappa, "vartheta": params.vartheta, "mean": params.mean,
        "delta": delta, "delta_reason": reason,
        "ratio_at_fair_min": analytic.ratio_at_fair_min(params),
        "rmsprop_favours_fair_min": favours,
    }
    return rows, summary


def cmd_theorems(cfg, workers):
    seed = int(cfg["master_seed"])
    spec = _build(NgosSpec, {k: (tuple(v) if isinstance(v, list) else v) for k, v in cfg["ngos"].items()}, "ngos")
    draws, steps = int(cfg["draws"]), int(cfg["steps"])
    if draws < 1:
        raise InvalidParameterError(f"draws must be positive, got {draws}")
    report = validate_ngos(spec)
    if not report.ok:
        raise InvalidParameterError(f"invalid NGOS spec: {', '.join(report.failures)}")
    t2 = dynamics.check_theorem2(spec, float(cfg["gamma"]), float(cfg["epsilon"]), steps, draws,
                                 SeededStream(seed, 0))
    t3cfg = cfg["theorem3"]
    model = _build(QuadraticSubgroups, t3cfg["model"], "theorem3 model")
    t3 = dynamics.check_theorem3(model, spec, float(t3cfg["w"]), float(t3cfg["eta"]), draws,
                                 SeededStream(seed, 1), float(cfg["epsilon"]), t3cfg["subgroup"])
    rows = [(name, r.analytic_bound, r.empirical_value, r.satisfied, r.condition_met, r.sample_count)
            for name, r in (("theorem2", t2), ("theorem3", t3))]
    return rows, {"ngos_validation": report.to_dict(), "theorem2": t2.to_dict(), "theorem3": t3.to_dict()}


def _test_dict(t: trainer.PairedTest) -> dict:
    return {"metric": t.metric, "optimizer_a": t.optimizer_a, "optimizer_b": t.optimizer_b,
            "mean_a": _num(t.mean_a), "mean_b": _num(t.mean_b), "statistic": _num(t.statistic),
            "p_value": "n/a" if t.p_value is None else t.p_value, "note": t.note}


def cmd_train(cfg, workers):
    data, opts, settings = _data(cfg), _optimizers(cfg), _settings(cfg)
    seeds = [int(s) for s in cfg["seeds"]]
    if len(seeds) >= 5:
        cmp = trainer.paired_comparison(data, opts, seeds, settings, workers)
        results, tests = cmp.results, [_test_dict(t) for t in cmp.tests]
        note = None
    else:
        results = trainer.run_grid(data, opts, seeds, settings, workers)
        tests, note = [], f"paired tests need at least 5 seeds, got {len(seeds)}"
    labels = trainer.optimizer_labels(opts)
    rows, runs = [], []
    for i, r in enumerate(results):
        row = r.row()
        row["optimizer"] = labels[i // len(seeds)]
        rows.append(tuple(row[c] for c in trainer.TRAIN_CSV_COLUMNS))
        runs.append({"optimizer": row["optimizer"], "seed": r.seed, "train_accuracy": r.train_accuracy,
                     "fairness": None if r.fairness is None else r.fairness.to_dict()})
    return rows, {"tests": tests, "tests_note": note, "runs": runs}


def cmd_sweep(cfg, workers):
    spec = _data(cfg)
    if not isinstance(spec, trainer.SyntheticSpec):
        raise InvalidParameterError("sweep needs synthetic data (the minority fraction is varied)")
    opts = _optimizers(cfg)
    sweep = trainer.imbalance_sweep(spec, [float(f) for f in cfg["fractions"]], opts,
                                    [int(s) for s in cfg["seeds"]], _settings(cfg), workers, tuple(cfg["metrics"]))
    labels = trainer.optimizer_labels(opts)
    rows = [(r.minority_fraction, r.metric, r.abs_difference, "n/a" if r.p_value is None else r.p_value)
            for r in sweep]
    means = [{"minority_fraction": r.minority_fraction, "metric": r.metric,
              labels[0]: _num(r.mean_a), labels[1]: _num(r.mean_b)} for r in sweep]
    return rows, {"means": means}


def cmd_metrics(cfg, workers):
    if not cfg["input"]:
        raise InvalidParameterError("metrics needs an input CSV (set input=PATH)")
    reader = {"log": fairness.read_prediction_log, "counts": fairness.read_count_table}.get(cfg["format"])
    if reader is None:
        raise InvalidParameterError("format must be 'log' or 'counts'")
    report = fairness.fairness_report(reader(cfg["input"]), float(cfg["alpha"]), cfg["missing_class"])
    rows = []
    for name, value in report.values().items():
        w = report.witnesses.get(name)
        rows.append((name, value, "" if w is None or w[0] is None else w[0],
                     "" if w is None else "|".join(str(g) for g in w[1])))
    return rows, report.to_dict()


HANDLERS = {"warmup": cmd_warmup, "density": cmd_density, "theorems": cmd_theorems,
            "train": cmd_train, "sweep": cmd_sweep, "metrics": cmd_metrics}


# ---------------------------------------------------------------- output

def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return "nan" if math.isnan(x) else repr(float(x))
    return str(x)


def render_csv(command: str, cfg: dict, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# fairopt {command}\n")
    buf.write(f"# master_seed: {cfg['master_seed']}\n")
    buf.write(f"# config: {json.dumps(cfg, sort_keys=True)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS[command])
    for row in rows:
        writer.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating, bool, np.bool_)):
        return _num(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


PLOT_STUB = '''"""Plot the results.csv next to this file (edit to taste)."""
import csv
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(__file__).parent
lines = [l for l in (here / "results.csv").read_text().splitlines() if not l.startswith("#")]
rows = list(csv.DictReader(lines))
columns = list(rows[0])
x = [float(r[columns[0]]) for r in rows]
for col in columns[1:]:
    try:
        plt.plot(x, [float(r[col]) for r in rows], ".", label=col)
    except ValueError:
        continue
plt.xlabel(columns[0])
plt.legend()
plt.savefig(here / "plot.png", dpi=120)
'''


def write_outputs(out: Path, command: str, cfg: dict, rows, summary: dict, plot_stub: bool = False) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n")
    (out / "results.csv").write_text(render_csv(command, cfg, rows))
    full = {"command": command, "master_seed": cfg["master_seed"], "config": cfg, **_clean(summary)}
    (out / "summary.json").write_text(json.dumps(full, indent=2, sort_keys=True) + "\n")
    if plot_stub:
        (out / "plot_results.py").write_text(PLOT_STUB)


def run_command(command, cfg, out, workers=1, plot_stub=False):
    if workers < 1:
        raise InvalidParameterError("--workers must be at least 1")
    rows, summary = HANDLERS[command](cfg, workers)
    write_outputs(Path(out), command, cfg, rows, summary, plot_stub)
    return rows, summary


# ---------------------------------------------------------------- argparse

def _common(parser, suppress):
    d = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=d, help="JSON config file")
    parser.add_argument("--preset", default=d, help=f"named preset ({', '.join(sorted(PRESETS))})")
    parser.add_argument("--seed", type=int, default=d, help="master seed (overrides the config)")
    parser.add_argument("--out", default=d, help="output directory (default: runs/<command>)")
    parser.add_argument("--workers", type=int, default=argparse.SUPPRESS if suppress else 1,
                        help="parallel workers; results do not depend on this")
    parser.add_argument("--set", dest="overrides", action="append", default=argparse.SUPPRESS if suppress else [],
                        metavar="KEY=VALUE", help="override a config field, e.g. --set trials=200")
    parser.add_argument("--plot-stub", action="store_true", default=argparse.SUPPRESS if suppress else False,
                        help="also write a small matplotlib script for the CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairopt", description="Optimizer-fairness experiments.")
    _common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    helps = {
        "warmup": "Monte-Carlo warm-up: fraction of runs near the fair minimum",
        "density": "closed-form stationary densities and the bias threshold",
        "theorems": "empirical checks of the update-disparity and DP-gap bounds",
        "train": "train classifiers with several optimizers and seeds",
        "sweep": "paired comparison across minority fractions",
        "metrics": "fairness metrics from a prediction log or count table",
    }
    for name in COMMANDS:
        _common(sub.add_parser(name, help=helps[name]), suppress=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        command, cfg = resolve_config(args.command, args.preset, args.config, args.overrides, args.seed)
        out = args.out or str(Path("runs") / (args.preset or command))
        rows, summary = run_command(command, cfg, out, args.workers, args.plot_stub)
    except ValidationError as exc:
        print(f"fairopt: error: {exc}", file=sys.stderr)
        return 2
    except (NumericError, FairoptError, OSError) as exc:
        print(f"fairopt: runtime error: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {len(rows)} rows to {Path(out) / 'results.csv'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
