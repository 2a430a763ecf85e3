"""Command-line front-end: ``treefanova <command> [options]``.

Commands: simulate, train, search, import, interpret, prune, explain,
importance, report. Every command writes its JSON/CSV/SVG outputs atomically
and records a ``<command>.manifest.json`` with the config snapshot, SHA-256
hashes of the inputs and the list of outputs.

Any option can also be given through the environment as ``TREEFANOVA_<DEST>``,
e.g. ``TREEFANOVA_SEED=3`` or ``TREEFANOVA_MAX_DEPTH=1``. Command-line flags win.

Exit codes: 0 success, 1 a post-run verification failed, 2 bad configuration
or input data, 3 unreadable or unsupported model, 4 training failure.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import logging
import math
import os
import re
import sys
import tempfile
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, attribution, boosting, ensemble, fanova, plotting, pruning
from .data import Dataset, gen_friedman, load_csv, split
from .exceptions import (
    ConfigError,
    IngestionError,
    ModelFormatError,
    TrainingError,
    TreeFanovaError,
    UnsupportedArityError,
)
from .metrics import auc, rmse

ENV_PREFIX = "TREEFANOVA_"
EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_MODEL, EXIT_TRAINING = 0, 1, 2, 3, 4
VERIFY_TOL = 1e-8

logger = logging.getLogger("treefanova")


# ---------------------------------------------------------------------------
# Output plumbing
# ---------------------------------------------------------------------------


def atomic_write(path, payload) -> Path:
    """Write ``payload`` (str or bytes) to ``path`` via a temp file + rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = payload.encode("utf-8") if isinstance(payload, str) else payload
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _json_text(obj) -> str:
    return json.dumps(_strict(obj), sort_keys=True, indent=2, allow_nan=False, default=_json_default) + "\n"


def _strict(obj):
    # strict JSON has no NaN/Infinity: NaN becomes null, infinities "inf"/"-inf"
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, dict):
        return {k: _strict(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_strict(v) for v in obj]
    return obj


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


class Run:
    """Collects inputs and outputs of one command and writes its manifest."""

    def __init__(self, args):
        self.args = args
        self.out = Path(args.out)
        self.inputs = {}
        self.outputs = []
        self.started = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")

    def input(self, path):
        if path is not None:
            self.inputs[str(path)] = sha256(path)
        return path

    def write(self, name: str, payload) -> Path:
        path = atomic_write(self.out / name, payload)
        self.outputs.append(str(path))
        return path

    def write_json(self, name: str, obj) -> Path:
        return self.write(name, _json_text(obj))

    def write_dataset(self, name: str, data: Dataset) -> Path:
        tmp = self.out / f".{name}.tmp"
        self.out.mkdir(parents=True, exist_ok=True)
        data.to_csv(tmp, self.args.target)
        os.replace(tmp, self.out / name)
        self.outputs.append(str(self.out / name))
        return self.out / name

    def finish(self, status: int, checks: dict | None = None) -> int:
        config = {
            k: v for k, v in sorted(vars(self.args).items()) if k != "func" and not callable(v)
        }
        manifest = {
            "command": self.args.command,
            "argv": sys.argv[1:],
            "config": config,
            "inputs": self.inputs,
            "seed": getattr(self.args, "seed", None),
            "outputs": self.outputs,
            "checks": checks or {},
            "exit_code": status,
            "tool_version": __version__,
            "started": self.started,
            "finished": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        }
        atomic_write(self.out / f"{self.args.command}.manifest.json", _json_text(manifest))
        return status


# ---------------------------------------------------------------------------
# Argument helpers
# ---------------------------------------------------------------------------


def _parse_monotone(items) -> dict:
    out = {}
    for item in items or []:
        name, sep, direction = item.rpartition(":")
        if not sep or direction not in ("+1", "1", "-1", "0"):
            raise ConfigError(f"--monotone expects FEATURE:+1|-1|0, got {item!r}")
        out[name] = int(direction)
    return out


def _parse_groups(items):
    if not items:
        return None
    return [[s.strip() for s in item.split(",") if s.strip()] for item in items]


def _parse_fractions(text: str):
    parts = [float(s) for s in text.split(",")]
    if len(parts) != 3:
        raise ConfigError("--fractions expects three comma-separated numbers")
    return tuple(parts)


TRAIN_FLAGS = {
    "n_estimators": int,
    "learning_rate": float,
    "max_depth": int,
    "l1": float,
    "l2": float,
    "max_bins": int,
    "early_stopping_rounds": int,
    "min_samples_leaf": int,
    "min_gain": float,
}


def _train_config(args) -> boosting.TrainConfig:
    if args.config:
        cfg = boosting.TrainConfig.from_json(Path(args.config).read_text())
    else:
        cfg = boosting.TrainConfig()
    overrides = {k: getattr(args, k) for k in TRAIN_FLAGS if getattr(args, k) is not None}
    if args.monotone:
        overrides["monotone"] = _parse_monotone(args.monotone)
    if args.interaction:
        overrides["interaction_allow"] = _parse_groups(args.interaction)
    overrides["seed"] = args.seed
    return replace(cfg, **overrides)


def _load(args, path, run: Run | None = None) -> Dataset:
    if run is not None:
        run.input(path)
    return load_csv(path, args.target, args.task)


def _splits(args, run: Run):
    data = _load(args, args.data, run)
    if args.valid or args.test:
        if not (args.valid and args.test):
            raise ConfigError("--valid and --test must be given together")
        return data, _load(args, args.valid, run), _load(args, args.test, run), False
    train, valid, test = split(data, _parse_fractions(args.fractions), seed=args.seed)
    return train, valid, test, True


def _metric(task: str, y, raw) -> tuple[str, float]:
    if task == "regression":
        return "rmse", rmse(y, raw)
    return "auc", auc(y, raw)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    run = Run(args)
    data = gen_friedman(args.n, args.sigma, seed=args.seed)
    run.write_dataset(args.name, data)
    print(f"wrote {data.n_samples} Friedman samples to {run.out / args.name}")
    return run.finish(EXIT_OK)


def _write_splits(run: Run, parts, written: bool) -> None:
    if written:
        for name, part in zip(("train.csv", "valid.csv", "test.csv"), parts):
            run.write_dataset(name, part)


def cmd_train(args) -> int:
    run = Run(args)
    cfg = _train_config(args)
    train, valid, test, generated = _splits(args, run)
    _write_splits(run, (train, valid, test), generated)
    if args.search:
        model, cfg, result = boosting.tune(train, valid, cfg, n_trials=args.search, seed=args.seed, n_jobs=args.jobs)
        run.write_json("search.json", {"best_score": result.score, "trials": result.trials})
    else:
        model, report = boosting.fit(train, valid, cfg, n_jobs=args.jobs)
        run.write_json("fit_report.json", report.to_dict())
    run.write("model.json", ensemble.serialize(model))
    run.write("config.json", cfg.to_json() + "\n")

    name, test_value = _metric(test.task, test.target, ensemble.predict_raw(model, test.features))
    checks = {}
    status = EXIT_OK
    for key, direction in cfg.monotone.items():
        if direction == 0:
            continue
        j = boosting._resolve_feature(key, list(train.feature_names))
        worst = boosting.monotone_violation(model, j, direction, train.features, seed=args.seed)
        checks[f"monotone:{train.feature_names[j]}"] = {"max_violation": worst, "passed": worst <= 1e-12}
        if worst > 1e-12:
            status = EXIT_VERIFY
    metrics = {"n_trees": model.n_trees, "max_depth": model.max_depth, f"test_{name}": test_value}
    run.write_json("metrics.json", {"metrics": metrics, "checks": checks})
    print(f"trained {model.n_trees} trees; test {name} = {test_value:.4f}")
    for label, check in checks.items():
        print(f"{label}: {'ok' if check['passed'] else 'VIOLATED'} (max step {check['max_violation']:.3g})")
    return run.finish(status, checks)


def cmd_search(args) -> int:
    run = Run(args)
    cfg = _train_config(args)
    train, valid, _, _ = _splits(args, run)
    result = boosting.random_search(train, valid, cfg, n_trials=args.trials, seed=args.seed, n_jobs=args.jobs)
    run.write_json("search.json", {"best_score": result.score, "trials": result.trials})
    run.write("config.json", result.config.to_json() + "\n")
    print(f"best validation score {result.score:.4f} over {args.trials} trials")
    return run.finish(EXIT_OK)


def cmd_import(args) -> int:
    run = Run(args)
    names = [s.strip() for s in args.feature_names.split(",")] if args.feature_names else None
    model = ensemble.import_tree_dump(run.input(args.dump), feature_names=names)
    run.write("model.json", ensemble.serialize(model))
    print(f"imported {model.n_trees} trees over {model.n_features} features (link={model.link})")
    return run.finish(EXIT_OK)


def _effect_ranking(model: fanova.FanovaModel, X) -> list:
    if X is not None and X.shape[0] >= 2 and model.effects:
        imp = attribution.global_importance(model, X).effect_importance
    else:
        imp = {}
        for key, eff in model.effects.items():
            W = eff.weights if eff.weights is not None else np.ones(eff.shape)
            total = W.sum()
            imp[key] = float((W * eff.values**2).sum() / total) if total > 0 else 0.0
    return sorted(imp, key=lambda k: (-imp[k], len(k), k))


def _slug(model: fanova.FanovaModel, key) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", "_x_".join(model.feature_names[j] for j in key))


def _write_effect_plots(run: Run, model: fanova.FanovaModel, X, top_k: int, folder="effects") -> list:
    files = []
    for rank, key in enumerate(_effect_ranking(model, X)[:top_k], start=1):
        name = f"{folder}/effect_{rank:02d}_{_slug(model, key)}.svg"
        run.write(name, plotting.effect_svg(model, key))
        files.append(name)
    return files


def _interpret(args, run: Run):
    model = ensemble.load(run.input(args.model))
    data = _load(args, args.data, run) if args.data else None
    domain = None
    if data is not None and model.bin_grid is None:
        domain = np.column_stack([data.features.min(axis=0), data.features.max(axis=0)])
    if args.weighting == "empirical" and data is None:
        raise ConfigError("--weighting empirical needs --data")
    raw = fanova.aggregate(model, domain=domain)
    fm = fanova.purify(
        raw, args.weighting, X=None if data is None else data.features, tol=args.tol, max_iter=args.max_iter
    )
    return model, data, fm


def _verify(model, fm, data, seed) -> float:
    if data is not None:
        X = data.features
    else:
        rng = np.random.default_rng(seed)
        if fm.domain is None:
            X = rng.normal(size=(10_000, model.n_features))
        else:
            X = rng.uniform(fm.domain[:, 0], fm.domain[:, 1], size=(10_000, model.n_features))
    return float(np.max(np.abs(fanova.evaluate(fm, X) - ensemble.predict_raw(model, X))))


def cmd_interpret(args) -> int:
    run = Run(args)
    model, data, fm = _interpret(args, run)
    run.write("fanova.json", fanova.dumps(fm))
    plots = _write_effect_plots(run, fm, None if data is None else data.features, args.top_k)
    counts = fm.count_by_arity()
    print(
        f"{len(fm.effects)} effects ({', '.join(f'{counts[t]} of arity {t}' for t in counts)}); "
        f"intercept {fm.intercept:.6g}; {len(plots)} plots"
    )
    checks, status = {}, EXIT_OK
    if args.verify:
        error = _verify(model, fm, data, args.seed)
        passed = error < VERIFY_TOL
        checks["reconstruction"] = {"max_abs_error": error, "tolerance": VERIFY_TOL, "passed": passed}
        print(f"max |evaluate - predict_raw| = {error:.3e} ({'ok' if passed else 'FAILED'})")
        status = EXIT_OK if passed else EXIT_VERIFY
    return run.finish(status, checks)


def cmd_prune(args) -> int:
    run = Run(args)
    fm = fanova.load(run.input(args.fanova))
    data = _load(args, args.data, run)
    cfg = pruning.PruneConfig(
        lam=args.lam, slack=args.slack, k=args.k, threshold=args.threshold, folds=args.folds, seed=args.seed
    )
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", pruning.PruningWarning)
        pruned, result = pruning.prune(fm, data, cfg)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    run.write("pruned.json", fanova.dumps(pruned))
    summary = result.to_dict(fm)
    if args.test:
        test = _load(args, args.test, run)
        name, before = _metric(test.task, test.target, fanova.evaluate(fm, test.features))
        _, after = _metric(test.task, test.target, fanova.evaluate(pruned, test.features))
        summary["test"] = {"metric": name, "unpruned": before, "pruned": after, "delta": after - before}
        print(f"test {name}: unpruned {before:.4f}, pruned {after:.4f}, delta {after - before:+.4f}")
    run.write_json("prune_result.json", summary)
    if result.path:
        run.write("path.svg", plotting.path_svg(summary["path"], result.metric, result.lam))
    names = ", ".join(fm.effect_name(k) for k in result.selected) or "(intercept only)"
    print(f"kept {len(result.selected)} of {len(fm.effects)} effects: {names}")
    return run.finish(EXIT_OK)


def cmd_explain(args) -> int:
    run = Run(args)
    fm = fanova.load(run.input(args.fanova))
    actual = None
    if args.row is not None:
        x = np.array([float(s) for s in args.row.split(",")])
    else:
        if args.data is None or args.index is None:
            raise ConfigError("explain needs --row, or --data with --index")
        data = _load(args, args.data, run)
        if not 0 <= args.index < data.n_samples:
            raise ConfigError(f"--index {args.index} out of range for {data.n_samples} samples")
        x, actual = data.features[args.index], float(data.target[args.index])
    att = attribution.attribute_local(fm, x)
    payload = att.to_dict(fm)
    payload["actual"] = actual
    run.write_json("explain.json", payload)

    shown = att.response if att.response is not None else att.prediction
    title = f"predicted {shown:.4g}" + ("" if actual is None else f", actual {actual:.4g}")
    items = sorted(att.effect_contributions.items(), key=lambda kv: (-abs(kv[1]), len(kv[0]), kv[0]))
    labels = ["intercept"] + [fm.effect_name(k) for k, _ in items]
    values = [att.intercept] + [v for _, v in items]
    run.write("explain_effects.svg", plotting.bar_svg(labels, values, f"Effect contributions ({title})"))
    order = np.argsort(-np.abs(att.feature_contributions), kind="stable")
    labels = ["intercept"] + [fm.feature_names[j] for j in order]
    values = [att.intercept] + [float(att.feature_contributions[j]) for j in order]
    run.write("explain_features.svg", plotting.bar_svg(labels, values, f"Feature contributions ({title})"))
    print(f"prediction {att.prediction:.6g} = intercept {att.intercept:.6g} + {len(items)} effect contributions")
    return run.finish(EXIT_OK)


def _importance(run: Run, fm, data) -> dict:
    report = attribution.global_importance(fm, data)
    payload = report.to_dict(fm)
    run.write_json("importance.json", payload)
    run.write(
        "importance_effects.svg",
        plotting.bar_svg([e["name"] for e in payload["effects"]], [e["importance"] for e in payload["effects"]],
                         "Effect importance", "share of variance"),
    )
    run.write(
        "importance_features.svg",
        plotting.bar_svg([f["name"] for f in payload["features"]], [f["importance"] for f in payload["features"]],
                         "Feature importance", "share of variance"),
    )
    return payload


def cmd_importance(args) -> int:
    run = Run(args)
    fm = fanova.load(run.input(args.fanova))
    payload = _importance(run, fm, _load(args, args.data, run))
    top = payload["features"][0] if payload["features"] else None
    if top:
        print(f"most important feature: {top['name']} ({top['importance']:.3f})")
    return run.finish(EXIT_OK)


def cmd_report(args) -> int:
    run = Run(args)
    model, data, fm = _interpret(args, run)
    run.write("fanova.json", fanova.dumps(fm))
    plots = _write_effect_plots(run, fm, data.features, args.top_k)
    payload = _importance(run, fm, data)
    error = _verify(model, fm, data, args.seed)
    summary = {
        "n_trees": model.n_trees,
        "n_effects": len(fm.effects),
        "effects_by_arity": {str(k): v for k, v in fm.count_by_arity().items()},
        "intercept": fm.intercept,
        "reconstruction_error": error,
        "top_features": payload["features"][: args.top_k],
        "top_effects": payload["effects"][: args.top_k],
    }
    if args.test:
        test = _load(args, args.test, run)
        name, value = _metric(test.task, test.target, ensemble.predict_raw(model, test.features))
        summary[f"test_{name}"] = value
    run.write_json("summary.json", summary)
    figures = ["importance_features.svg", "importance_effects.svg"] + plots
    body = "\n".join(f'<figure><img src="{f}" alt="{f}"/></figure>' for f in figures)
    rows = "\n".join(
        f"<tr><td>{e['name']}</td><td>{e['importance']:.4f}</td></tr>" for e in payload["effects"][: args.top_k]
    )
    html = (
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>Model report</title></head><body>\n"
        f"<h1>Model report</h1>\n<p>{model.n_trees} trees, {len(fm.effects)} effects, "
        f"max reconstruction error {error:.3e}</p>\n"
        f"<table><tr><th>effect</th><th>importance</th></tr>\n{rows}\n</table>\n{body}\n</body></html>\n"
    )
    run.write("report.html", html)
    passed = error < VERIFY_TOL
    print(f"report with {len(figures)} figures written to {run.out}")
    return run.finish(EXIT_OK if passed else EXIT_VERIFY, {"reconstruction": {"max_abs_error": error, "passed": passed}})


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_common(p, out_default="."):
    p.add_argument("--out", default=out_default, help="output directory (default: %(default)s)")
    p.add_argument("--seed", type=int, default=0, help="random seed (default: %(default)s)")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")


def _add_data(p, required=True):
    p.add_argument("--data", required=required, help="CSV file with a header row")
    p.add_argument("--target", default="y", help="target column name (default: %(default)s)")
    p.add_argument("--task", choices=["regression", "binary"], default="regression")


def _add_training(p):
    _add_data(p)
    p.add_argument("--valid", help="validation CSV (otherwise --data is split)")
    p.add_argument("--test", help="test CSV (otherwise --data is split)")
    p.add_argument("--fractions", default="0.64,0.16,0.20", help="train,valid,test fractions for splitting")
    p.add_argument("--config", help="TrainConfig JSON file; flags override its fields")
    for name, kind in TRAIN_FLAGS.items():
        p.add_argument("--" + name.replace("_", "-"), type=kind, default=None)
    p.add_argument("--monotone", action="append", metavar="FEATURE:+1|-1", help="monotone constraint (repeatable)")
    p.add_argument("--interaction", action="append", metavar="F1,F2,...", help="interaction allow-set (repeatable)")
    p.add_argument("--jobs", type=int, default=None, help="threads for split search (default: all)")


def _add_interpret(p):
    p.add_argument("--model", required=True, help="native model JSON")
    p.add_argument("--weighting", choices=["uniform", "empirical"], default="uniform")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--top-k", type=int, default=8, help="number of effects to plot (default: %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="treefanova",
        description="Train shallow boosted trees and interpret them as purified functional ANOVA models.",
        epilog=f"Options may also be set through {ENV_PREFIX}<OPTION> environment variables.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a Friedman benchmark CSV")
    _add_common(p)
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--sigma", type=float, default=0.1)
    p.add_argument("--name", default="friedman.csv")
    p.add_argument("--target", default="y", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", help="fit a boosted ensemble (optionally after a random search)")
    _add_common(p)
    _add_training(p)
    p.add_argument("--search", type=int, default=0, metavar="TRIALS", help="random-search trials before refitting")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("search", help="random hyperparameter search only")
    _add_common(p)
    _add_training(p)
    p.add_argument("--trials", type=int, default=30)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("import", help="convert a nested-JSON tree dump to a native model")
    _add_common(p)
    p.add_argument("--dump", required=True)
    p.add_argument("--feature-names", help="comma-separated feature names")
    p.set_defaults(func=cmd_import)

    p = sub.add_parser("interpret", help="aggregate and purify a model, plot its top effects")
    _add_common(p)
    _add_interpret(p)
    _add_data(p, required=False)
    p.add_argument("--verify", action="store_true", help="check reconstruction against the ensemble")
    p.set_defaults(func=cmd_interpret)

    p = sub.add_parser("prune", help="select effects with Lasso + FBED and refit")
    _add_common(p)
    p.add_argument("--fanova", required=True)
    _add_data(p)
    p.add_argument("--test", help="held-out CSV for the pruned vs unpruned comparison")
    p.add_argument("--lambda", dest="lam", type=float, default=None, help="fixed penalty ('inf' allowed)")
    p.add_argument("--slack", type=float, default=0.01)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--threshold", type=float, default=0.001)
    p.add_argument("--folds", type=int, default=5)
    p.set_defaults(func=cmd_prune)

    p = sub.add_parser("explain", help="local explanation of one sample")
    _add_common(p)
    p.add_argument("--fanova", required=True)
    _add_data(p, required=False)
    p.add_argument("--index", type=int, help="row of --data to explain")
    p.add_argument("--row", help="comma-separated feature values to explain")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("importance", help="global effect and feature importance")
    _add_common(p)
    p.add_argument("--fanova", required=True)
    _add_data(p)
    p.set_defaults(func=cmd_importance)

    p = sub.add_parser("report", help="interpretation, importance and plots in one HTML page")
    _add_common(p)
    _add_interpret(p)
    _add_data(p)
    p.add_argument("--test", help="optional test CSV for the reported metric")
    p.set_defaults(func=cmd_report)

    for p in sub.choices.values():
        _apply_env(p)
    return parser


def _apply_env(parser: argparse.ArgumentParser) -> None:
    for action in parser._actions:
        if not action.option_strings or action.dest in ("help", "version"):
            continue
        value = os.environ.get(ENV_PREFIX + action.dest.upper())
        if value is None:
            continue
        if isinstance(action, argparse._StoreTrueAction):
            action.default = value.strip().lower() in ("1", "true", "yes", "on")
        elif isinstance(action, argparse._AppendAction):
            action.default = [v for v in value.split(";") if v]
        else:
            action.default = action.type(value) if action.type else value
        action.required = False


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        return args.func(args)
    except (ConfigError, IngestionError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ModelFormatError, UnsupportedArityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except (TrainingError, TreeFanovaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRAINING


if __name__ == "__main__":
    sys.exit(main())
