"""Command-line entry point: ``erpquant {gen,run,inspect,stats}``.

Exit codes: 0 success, 2 usage, 3 data/format, 4 numeric.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import evaluation as ev
from .errors import (ConfigurationError, ErpQuantError, EvaluationError, FormatError,
                     NumericError, OutOfBoundsError, TrainingError)
from .modelfmt import load_model, logical_bits, save_model
from .report import build_report
from .stats import bonferroni_threshold, pairwise_pvalues, pairwise_significance
from .synthdata import GeneratorConfig, generate_subject, load_epochs, save_epochs

log = logging.getLogger("erpquant")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4
EPOCH_SUFFIX = ".erpq"
MODEL_SUFFIX = ".ptqm"

DEFAULTS = {
    "seed": 42,
    "subjects": 19,
    "classifier": "blda",
    "conditions": None,
    "folds": 5,
    "out": "results",
    "data": None,
    "jobs": 1,
    "alpha": 0.05,
}
GENERATOR_KEYS = ("erp_amplitude", "noise_std", "erp_latency_s", "erp_width_s",
                  "n_targets", "n_nontargets")


class UsageError(ErpQuantError):
    pass


def read_config_file(path):
    """Flat ``key=value`` file; ``#`` starts a comment, dashes in keys become underscores."""
    values = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        key, value = (p.strip() for p in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def resolve(args):
    """Merge flags over config file over defaults."""
    merged = dict(DEFAULTS)
    merged.update({k: None for k in GENERATOR_KEYS})
    if getattr(args, "config", None):
        for key, value in read_config_file(args.config).items():
            if key not in merged:
                raise UsageError(f"unknown config key {key!r}")
            merged[key] = value
    for key in merged:
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag
    casts = dict.fromkeys(("seed", "subjects", "folds", "jobs", "n_targets", "n_nontargets"), int)
    casts.update(dict.fromkeys(("erp_amplitude", "noise_std", "erp_latency_s", "erp_width_s", "alpha"), float))
    for key, cast in casts.items():
        if merged[key] is not None:
            try:
                merged[key] = cast(merged[key])
            except ValueError:
                raise UsageError(f"{key} must be {cast.__name__}, got {merged[key]!r}") from None
    return merged


def generator_config(cfg):
    overrides = {k: cfg[k] for k in GENERATOR_KEYS if cfg[k] is not None}
    return GeneratorConfig(n_subjects=cfg["subjects"], seed=cfg["seed"], **overrides)


# ---------------------------------------------------------------------------


def cmd_gen(cfg):
    if cfg["subjects"] < 1:
        raise UsageError(f"--subjects must be positive, got {cfg['subjects']}")
    gen = generator_config(cfg)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for s in range(gen.n_subjects):
        epochs = generate_subject(gen, s)
        path = save_epochs(epochs, out / f"{epochs.subject_id}{EPOCH_SUFFIX}")
        files.append(path.name)
        log.info("wrote %s (%d targets, %d non-targets)", path, epochs.n_targets, epochs.n_nontargets)
    manifest = {"generator": gen.to_dict(), "files": files}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    print(f"wrote {len(files)} subject files to {out}")
    return files


def _subject_task(args):
    path, conditions, folds, cv_seed = args
    epochs = load_epochs(path)
    aucs = ev.evaluate_subject(epochs, conditions, folds, cv_seed)
    return epochs.subject_id, {label: float(v.mean()) for label, v in aucs.items()}


def cmd_run(cfg):
    classifier = cfg["classifier"]
    if classifier not in ("blda", "elm"):
        raise UsageError(f"--classifier must be 'blda' or 'elm', got {classifier!r}")
    labels = cfg["conditions"]
    labels = (labels.split(",") if isinstance(labels, str) else
              list(ev.BLDA_TABLE_LABELS if classifier == "blda" else ev.ELM_TABLE_LABELS))
    try:
        conditions = [ev.parse_condition(classifier, lab) for lab in labels]
    except ConfigurationError as exc:
        raise UsageError(str(exc)) from None

    data_dir = Path(cfg["data"] or cfg["out"])
    if not data_dir.is_dir():
        raise FileNotFoundError(f"data directory {data_dir} does not exist")
    files = sorted(data_dir.glob(f"*{EPOCH_SUFFIX}"))
    if not files:
        raise FileNotFoundError(f"no {EPOCH_SUFFIX} epoch files in {data_dir}")
    if cfg["subjects"] is not None and cfg.get("_subjects_explicit"):
        if len(files) < cfg["subjects"]:
            raise FileNotFoundError(f"{cfg['subjects']} subjects requested, {len(files)} found")
        files = files[: cfg["subjects"]]

    tasks = [(f, conditions, cfg["folds"], [cfg["seed"], i]) for i, f in enumerate(files)]
    if cfg["jobs"] > 1:
        with ProcessPoolExecutor(cfg["jobs"]) as pool:
            results = list(pool.map(_subject_task, tasks))
    else:
        results = [_subject_task(t) for t in tasks]

    subjects = [sid for sid, _ in results]
    grid = {c.label: [r[c.label] for _, r in results] for c in conditions}
    sizes = {c.label: ev.condition_sizes(c) for c in conditions}
    report = build_report(classifier, grid, sizes, subjects=list(range(1, len(subjects) + 1)),
                          alpha=cfg["alpha"])

    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "auc.csv").write_text(report.auc_csv())
    (out / "sizes.csv").write_text(report.sizes_csv())
    (out / "significance.csv").write_text(report.significance_csv())
    (out / "report.md").write_text(report.markdown())

    models = out / "models"
    models.mkdir(exist_ok=True)
    first = load_epochs(files[0])
    for cond in conditions:
        sections = ev.fit_condition_model(first, cond, seed=[cfg["seed"], 0])
        save_model(sections, models / f"{cond.filename}{MODEL_SUFFIX}")
    print(report.markdown())
    return report


def describe_model(path):
    sections = load_model(path)
    lines = [f"{path}: {len(sections)} sections"]
    for i, sec in enumerate(sections):
        t = sec.tensor
        params = t.norm_params
        shown = ", ".join(f"{p:.6g}" for p in params[:4]) + (", ..." if params.size > 4 else "")
        lines.append(f"  [{i}] {sec.kind.name.lower():<13} scheme={t.scheme.tag:<18} "
                     f"dims={'x'.join(map(str, t.shape)):<10} norm_params[{params.size}]=[{shown}] "
                     f"bits={t.size_bits}")
    lines.append(f"total {logical_bits(sections)} bits")
    return "\n".join(lines)


def cmd_inspect(path):
    text = describe_model(path)
    print(text)
    return text


def cmd_stats(auc_path, alpha=0.05):
    """Recompute the significance matrix from an ``auc.csv`` written by ``run``."""
    with open(auc_path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    subject_rows = [r for r in body if r[0].isdigit()]
    if len(subject_rows) < 5:
        raise EvaluationError(f"{auc_path}: need at least 5 subject rows, found {len(subject_rows)}")
    grid = np.array([[float(v) for v in r[1:]] for r in subject_rows])
    conds = header[1:]
    p = pairwise_pvalues(grid)
    sig = pairwise_significance(grid, alpha)
    print(f"Bonferroni threshold: {bonferroni_threshold(len(conds), alpha):.3g}")
    table = [["x" if i == j else ("-" if j < i else f"{int(sig[i, j])} (p={p[i, j]:.2g})")
              for j in range(len(conds))] for i in range(len(conds))]
    width = max(len(s) for s in conds + [c for row in table for c in row]) + 2
    print("".ljust(width) + "".join(c.rjust(width) for c in conds))
    for c, cells in zip(conds, table):
        print(c.ljust(width) + "".join(s.rjust(width) for s in cells))
    return sig


# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="erpquant", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int)
        p.add_argument("--subjects", type=int)
        p.add_argument("--out")
        p.add_argument("--config", help="key=value file; flags take precedence")

    gen = sub.add_parser("gen", help="write synthetic epoch files")
    common(gen)
    gen.add_argument("--erp-amplitude", dest="erp_amplitude", type=float)
    gen.add_argument("--noise-std", dest="noise_std", type=float)

    run = sub.add_parser("run", help="cross-validate conditions and write reports")
    common(run)
    run.add_argument("--classifier", choices=("blda", "elm"))
    run.add_argument("--conditions", help="comma-separated labels, e.g. 0/0,1/1 or 1,11")
    run.add_argument("--folds", type=int)
    run.add_argument("--data", help="directory of epoch files (default: --out)")
    run.add_argument("--jobs", type=int)

    insp = sub.add_parser("inspect", help="dump a model file")
    insp.add_argument("model")

    st = sub.add_parser("stats", help="pairwise Wilcoxon/Bonferroni matrix from auc.csv")
    st.add_argument("auc_csv")
    st.add_argument("--alpha", type=float, default=0.05)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "inspect":
            cmd_inspect(args.model)
        elif args.command == "stats":
            cmd_stats(args.auc_csv, args.alpha)
        else:
            cfg = resolve(args)
            if args.command == "gen":
                cmd_gen(cfg)
            else:
                cfg["_subjects_explicit"] = args.subjects is not None or (
                    args.config is not None and "subjects" in read_config_file(args.config))
                cmd_run(cfg)
    except (UsageError, ConfigurationError) as exc:
        parser.print_usage(sys.stderr)
        print(f"erpquant: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, OutOfBoundsError, FileNotFoundError, EvaluationError, TrainingError) as exc:
        print(f"erpquant: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"erpquant: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, ValueError) as exc:
        print(f"erpquant: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
