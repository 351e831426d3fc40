"""Command-line entry point: ``stresslab <subcommand> [flags]``.

Exit status is 0 on success, 1 on usage errors and 2 on data errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import fields
from pathlib import Path

from . import __version__
from .classifiers import FAMILIES, model_from_dict, model_to_dict, train
from .dataset import (
    drop_short_windows,
    filter_by_validity,
    load_dataset,
    write_dataset,
    write_predictions,
)
from .evaluation import F1_MODES, cross_val_score
from .features import (
    DEFAULT_EPS,
    FeatureMatrix,
    extract_matrix,
    read_matrix_csv,
    write_matrix_csv,
)
from .pipeline import (
    BALANCE_MODES,
    SELECTORS,
    PipelineConfig,
    format_summary,
    format_sweep,
    majority_label,
    predict_windows,
    prepare_training,
    run_pipeline,
    select_features,
    sweep,
)
from .selection import DIRECTIONS, FeatureSubset, ridge_screen
from .synth import SynthConfig, generate

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("stresslab")

USAGE_ERROR = 1
DATA_ERROR = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _threads(value) -> int:
    if value is None:
        value = os.environ.get("STRESSLAB_THREADS") or os.cpu_count() or 1
    n = int(value)
    if n < 1:
        raise UsageError("--threads must be >= 1")
    return n


def _param(text: str):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def _p_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated ratios, got {text!r}") from None


def _write_json(doc, path) -> None:
    text = json.dumps(doc, indent=2) + "\n"
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# configuration shared by the modelling subcommands

CONFIG_FLAGS = {
    # dest -> PipelineConfig field
    "train": "train_path",
    "test": "test_path",
    "p": "p",
    "threshold": "threshold",
    "seed": "seed",
    "family": "family",
    "selector": "selector",
    "k_target": "k_target",
    "direction": "direction",
    "folds": "folds",
    "f1_mode": "f1_mode",
    "balance": "balance",
    "eps": "eps",
    "ridge_lambda": "ridge_lambda",
    "ridge_lower": "ridge_lower",
    "ridge_upper": "ridge_upper",
    "report": "report_path",
    "answer": "answer_path",
}


def build_config(args) -> PipelineConfig:
    """Defaults, then the TOML file (if any), then explicit flags."""
    values = {}
    params = {}
    if getattr(args, "config", None):
        with open(args.config, "rb") as fh:
            doc = tomllib.load(fh)
        known = {f.name for f in fields(PipelineConfig)}
        for key, value in doc.items():
            if key == "params":
                params.update(value)
            elif key == "threads":
                continue  # read by main() before any work starts
            elif key in known:
                values[key] = value
            else:
                raise UsageError(f"{args.config}: unknown config key {key!r}")
    for dest, name in CONFIG_FLAGS.items():
        value = getattr(args, dest, None)
        if value is not None:
            values[name] = value
    if getattr(args, "k", None) is not None:
        params["k"] = args.k
    if getattr(args, "C", None) is not None:
        params["C"] = args.C
    for key, value in getattr(args, "param", None) or []:
        params[key] = value
    values["params"] = params
    cfg = PipelineConfig(**values)
    try:
        cfg.validate()
        cfg.classifier()
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return cfg


def _add_common(sp, config=True):
    if config:
        sp.add_argument("--config", help="TOML file with pipeline settings; flags win")
    sp.add_argument("--threads", type=int, default=None,
                    help="worker threads (default: $STRESSLAB_THREADS or all cores)")
    sp.add_argument("-v", "--verbose", action="store_true")


def _add_prep(sp):
    sp.add_argument("--p", type=float, default=None, help="minimum valid fraction per frame (0.5)")
    sp.add_argument("--threshold", type=int, default=None, help="raw label cut for class 1 (1)")
    sp.add_argument("--seed", type=int, default=None, help="seed for balancing and models (42)")
    sp.add_argument("--balance", choices=BALANCE_MODES, default=None)
    sp.add_argument("--eps", type=float, default=None, help="LF/HF denominator floor")


def _add_classifier(sp):
    sp.add_argument("--family", choices=FAMILIES, default=None)
    sp.add_argument("--k", type=int, default=None, help="neighbours for knn")
    sp.add_argument("--C", type=float, default=None, help="linear_svc penalty")
    sp.add_argument("--param", type=_param, action="append", metavar="KEY=VALUE",
                    help="classifier hyperparameter (repeatable)")


def _add_training_source(sp):
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--train", "--input", dest="train", help="labeled JSONL windows")
    src.add_argument("--matrix", help="feature CSV written by 'extract'")


def _add_selection(sp):
    sp.add_argument("--selector", choices=SELECTORS, default=None)
    sp.add_argument("--k-target", dest="k_target", type=int, default=None)
    sp.add_argument("--direction", choices=DIRECTIONS, default=None)
    sp.add_argument("--folds", type=int, default=None)


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stresslab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"stresslab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("synth", help="write a synthetic JSONL dataset")
    sp.add_argument("--n", type=int, default=400)
    sp.add_argument("--frames", type=int, default=60)
    sp.add_argument("--stress-fraction", type=float, default=0.5)
    sp.add_argument("--effect", type=float, default=0.15)
    sp.add_argument("--invalid-rate", type=float, default=0.1)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--unlabeled", action="store_true", help="write test-schema windows")
    sp.add_argument("--out", required=True)
    _add_common(sp, config=False)

    sp = sub.add_parser("extract", help="windows -> feature CSV")
    sp.add_argument("--input", required=True)
    sp.add_argument("--schema", choices=("train", "test"), default="train")
    _add_prep(sp)
    sp.add_argument("--out", required=True)
    _add_common(sp)

    sp = sub.add_parser("screen", help="ridge correlation report (JSON)")
    _add_training_source(sp)
    _add_prep(sp)
    sp.add_argument("--lambda", dest="ridge_lambda", type=float, default=None)
    sp.add_argument("--lower", dest="ridge_lower", type=float, default=None)
    sp.add_argument("--upper", dest="ridge_upper", type=float, default=None)
    sp.add_argument("--out")
    _add_common(sp)

    sp = sub.add_parser("select", help="wrapper feature selection (subset JSON)")
    _add_training_source(sp)
    _add_prep(sp)
    _add_classifier(sp)
    _add_selection(sp)
    sp.add_argument("--out")
    _add_common(sp)

    for name, text in (("train", "fit a model (model JSON)"),
                       ("evaluate", "ordered k-fold report (JSON)")):
        sp = sub.add_parser(name, help=text)
        _add_training_source(sp)
        _add_prep(sp)
        _add_classifier(sp)
        feats = sp.add_mutually_exclusive_group()
        feats.add_argument("--subset", help="subset JSON written by 'select'")
        feats.add_argument("--features", help="comma-separated feature indices")
        if name == "evaluate":
            sp.add_argument("--folds", type=int, default=None)
            sp.add_argument("--f1-mode", dest="f1_mode", choices=F1_MODES, default=None)
        sp.add_argument("--out")
        _add_common(sp)

    sp = sub.add_parser("predict", help="model + windows -> answer.txt")
    sp.add_argument("--model", required=True)
    sp.add_argument("--input", required=True, help="JSONL windows (labels ignored)")
    sp.add_argument("--p", type=float, default=None, help="defaults to the model's training p")
    sp.add_argument("--out", default="answer.txt")
    _add_common(sp, config=False)

    for name, text in (("pipeline", "full workflow: report JSON + answer.txt"),
                       ("sweep", "pipeline across filter ratios")):
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--train", default=None)
        _add_classifier(sp)
        _add_selection(sp)
        sp.add_argument("--f1-mode", dest="f1_mode", choices=F1_MODES, default=None)
        if name == "pipeline":
            sp.add_argument("--test", default=None)
            _add_prep(sp)
            sp.add_argument("--report", default=None, help="report JSON path (default: stdout)")
            sp.add_argument("--answer", default=None, help="prediction file (answer.txt)")
        else:
            sp.add_argument("--p", dest="p_values", type=_p_list, default=[0.3, 0.4, 0.5, 0.6, 0.7])
            for flag, kind in (("--threshold", int), ("--seed", int), ("--eps", float)):
                sp.add_argument(flag, type=kind, default=None)
            sp.add_argument("--balance", choices=BALANCE_MODES, default=None)
            sp.add_argument("--out", help="sweep rows as JSON")
        _add_common(sp)
    return parser


# --------------------------------------------------------------------------
# subcommands

def _training_matrix(args, cfg: PipelineConfig) -> FeatureMatrix:
    if getattr(args, "matrix", None):
        matrix = read_matrix_csv(args.matrix)
        if matrix.labels is None:
            raise UsageError(f"{args.matrix} has no labels")
        return matrix
    ds, counts = prepare_training(load_dataset(cfg.train_path, "train"), cfg.p,
                                  cfg.threshold, cfg.seed,
                                  balance=cfg.balance == "before_split")
    log.info("training windows: %s", counts)
    return extract_matrix(ds, cfg.eps)


def _feature_indices(args, width: int) -> list[int]:
    if getattr(args, "subset", None):
        doc = json.loads(Path(args.subset).read_text(encoding="utf-8"))
        return list(FeatureSubset.from_dict(doc).indices)
    if getattr(args, "features", None):
        idx = sorted({int(v) for v in args.features.split(",") if v.strip()})
        if not idx or idx[0] < 0 or idx[-1] >= width:
            raise UsageError(f"--features must be indices in [0, {width})")
        return idx
    return list(range(width))


def cmd_synth(args, threads):
    cfg = SynthConfig(args.n, args.frames, args.stress_fraction, args.effect,
                      args.invalid_rate, args.seed)
    write_dataset(generate(cfg, labeled=not args.unlabeled), args.out)


def cmd_extract(args, threads):
    cfg = build_config(args)
    ds = load_dataset(args.input, args.schema)
    if args.schema == "train":
        ds, counts = prepare_training(ds, cfg.p, cfg.threshold, cfg.seed,
                                      balance=cfg.balance == "before_split")
        log.info("training windows: %s", counts)
    else:
        ds = drop_short_windows(filter_by_validity(ds, cfg.p), 2)
    write_matrix_csv(extract_matrix(ds, cfg.eps), args.out)


def cmd_screen(args, threads):
    cfg = build_config(args)
    m = _training_matrix(args, cfg)
    report = ridge_screen(m.X, m.y, cfg.ridge_lambda, cfg.ridge_lower, cfg.ridge_upper, m.names)
    _write_json(report.to_dict(), args.out)


def cmd_select(args, threads):
    cfg = build_config(args)
    m = _training_matrix(args, cfg)
    subset = select_features(cfg, m.X, m.y, m.names, threads)
    _write_json({"selector": cfg.selector, **subset.to_dict()}, args.out)


def cmd_train(args, threads):
    cfg = build_config(args)
    m = _training_matrix(args, cfg)
    cols = _feature_indices(args, m.X.shape[1])
    model = train(cfg.classifier(), m.X[:, cols], m.y, threads=threads)
    doc = {
        "tool": "stresslab",
        "version": __version__,
        "features": cols,
        "feature_names": [m.names[i] for i in cols],
        "fallback_label": majority_label(m.y),
        "p": cfg.p,
        "eps": cfg.eps,
        "spec": cfg.classifier().to_dict(),
        "model": model_to_dict(model),
    }
    _write_json(doc, args.out)


def cmd_evaluate(args, threads):
    cfg = build_config(args)
    m = _training_matrix(args, cfg)
    cols = _feature_indices(args, m.X.shape[1])
    fold_seed = cfg.seed if cfg.balance == "train_folds" else None
    cv = cross_val_score(cfg.classifier(), m.X[:, cols], m.y, cfg.folds,
                         f1_mode=cfg.f1_mode, balance_seed=fold_seed, threads=threads)
    doc = {
        "tool": "stresslab",
        "version": __version__,
        "config": cfg.echo(),
        "features": [m.names[i] for i in cols],
        "folds": [f.to_dict() for f in cv.folds],
        "mean_accuracy": cv.mean_accuracy,
        "mean_f1": cv.mean_f1,
        "mean_f1_positive": cv.mean_f1_positive,
        "mean_f1_macro": cv.mean_f1_macro,
        "confusion": cv.confusion,
    }
    _write_json(doc, args.out)


def cmd_predict(args, threads):
    doc = json.loads(Path(args.model).read_text(encoding="utf-8"))
    model = model_from_dict(doc["model"])
    p = doc.get("p", 0.5) if args.p is None else args.p
    ds = load_dataset(args.input, "test")
    labels, n_fallback = predict_windows(model, doc["features"], ds, p,
                                         int(doc.get("fallback_label", 0)),
                                         doc.get("eps", DEFAULT_EPS))
    if n_fallback:
        log.warning("%d window(s) had too few valid frames; used fallback label", n_fallback)
    write_predictions(labels, args.out)


def cmd_pipeline(args, threads):
    cfg = build_config(args)
    if not cfg.train_path:
        raise UsageError("--train (or train_path in --config) is required")
    if cfg.test_path and not cfg.answer_path:
        cfg.answer_path = "answer.txt"
    report = run_pipeline(cfg, threads)
    if not cfg.report_path:
        sys.stdout.write(report.to_json())
    sys.stderr.write(format_summary(report))


def cmd_sweep(args, threads):
    cfg = build_config(args)
    if not cfg.train_path:
        raise UsageError("--train (or train_path in --config) is required")
    rows = sweep(cfg, args.p_values, threads)
    if args.out:
        _write_json({"tool": "stresslab", "version": __version__, "config": cfg.echo(),
                     "rows": rows}, args.out)
    sys.stdout.write(format_sweep(rows))


COMMANDS = {
    "synth": cmd_synth,
    "extract": cmd_extract,
    "screen": cmd_screen,
    "select": cmd_select,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "predict": cmd_predict,
    "pipeline": cmd_pipeline,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if getattr(args, "config", None) and args.threads is None:
            with open(args.config, "rb") as fh:
                args.threads = tomllib.load(fh).get("threads")
        threads = _threads(args.threads)
        COMMANDS[args.command](args, threads)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"stresslab: error: {exc}\n")
        return USAGE_ERROR
    except (OSError, ValueError, RuntimeError, KeyError, tomllib.TOMLDecodeError) as exc:
        sys.stderr.write(f"stresslab: {exc}\n")
        return DATA_ERROR
    return 0


if __name__ == "__main__":
    sys.exit(main())
