"""Result tables: AUC grid with Mean/SD rows, size rows, significance matrix."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import ReportError
from .quant import SizeBreakdown
from .stats import pairwise_significance


@dataclass
class EvalReport:
    classifier: str
    conditions: list
    subjects: list
    per_subject_auc: np.ndarray  # subjects x conditions
    mean: np.ndarray
    sd: np.ndarray
    sizes: dict  # label -> SizeBreakdown
    significance: np.ndarray

    @property
    def show_sizes(self):
        return self.classifier == "blda"

    def auc_csv(self):
        return _csv(_auc_rows(self))

    def sizes_csv(self):
        rows = [["Method"] + self.conditions]
        for name, attr in (("Filter", "filter_bits"), ("Classifier", "classifier_bits"),
                           ("Total", "total_bits")):
            rows.append([name] + [str(getattr(self.sizes[c], attr)) for c in self.conditions])
        return _csv(rows)

    def significance_csv(self):
        return _csv(_significance_rows(self))

    def markdown(self):
        title = {"blda": "xDAWN+BLDA", "elm": "xDAWN+ELM"}.get(self.classifier, self.classifier)
        parts = [f"# AUC for single-trial detection ({title})", "", _md(_auc_rows(self)), "",
                 f"## Pairwise significance ({title}, Wilcoxon signed-rank, Bonferroni)", "",
                 _md(_significance_rows(self)), ""]
        return "\n".join(parts)


def _csv(rows):
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _md(rows):
    head, *body = rows
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    lines += ["| " + " | ".join(r) + " |" for r in body]
    return "\n".join(lines)


def _auc_rows(report):
    rows = [["Method"] + list(report.conditions)]
    if report.show_sizes:
        for name, attr in (("Filter", "filter_bits"), ("Classifier", "classifier_bits"),
                           ("Total", "total_bits")):
            rows.append([name] + [str(getattr(report.sizes[c], attr)) for c in report.conditions])
    for subj, vals in zip(report.subjects, report.per_subject_auc):
        rows.append([str(subj)] + [f"{v:.3f}" for v in vals])
    rows.append(["Mean"] + [f"{v:.3f}" for v in report.mean])
    rows.append(["SD"] + [f"{v:.3f}" for v in report.sd])
    return rows


def _significance_rows(report):
    conds = list(report.conditions)
    rows = [["Method"] + conds]
    for i, c in enumerate(conds[:-1]):
        cells = []
        for j in range(len(conds)):
            if j < i:
                cells.append("-")
            elif j == i:
                cells.append("x")
            else:
                v = report.significance[i, j]
                cells.append("n/a" if np.isnan(v) else str(int(v)))
        rows.append([c] + cells)
    return rows


def build_report(classifier, results, sizes, subjects=None, alpha=0.05) -> EvalReport:
    """Assemble an :class:`EvalReport`.

    ``results`` maps condition label to a per-subject AUC sequence (or to a
    dict keyed by subject); ``sizes`` maps label to :class:`SizeBreakdown`.
    SD is the population standard deviation over subjects.
    """
    conditions = list(results)
    if not conditions:
        raise ReportError("no conditions to report")
    if subjects is None:
        first = results[conditions[0]]
        subjects = list(first) if isinstance(first, dict) else list(range(1, len(first) + 1))
    missing = []
    grid = np.full((len(subjects), len(conditions)), np.nan)
    for j, cond in enumerate(conditions):
        col = results[cond]
        for i, subj in enumerate(subjects):
            try:
                v = col[subj] if isinstance(col, dict) else col[i]
            except (KeyError, IndexError):
                v = None
            if v is None or not np.isfinite(v):
                missing.append(f"subject {subj} / condition {cond}")
            else:
                grid[i, j] = v
    missing += [f"sizes for condition {c}" for c in conditions
                if classifier == "blda" and not isinstance(sizes.get(c), SizeBreakdown)]
    if missing:
        raise ReportError("missing cells: " + "; ".join(missing))
    sig = (pairwise_significance(grid, alpha) if len(conditions) >= 2 and len(subjects) >= 5
           else np.full((len(conditions),) * 2, np.nan))
    return EvalReport(
        classifier=classifier,
        conditions=conditions,
        subjects=list(subjects),
        per_subject_auc=grid,
        mean=grid.mean(axis=0),
        sd=grid.std(axis=0),
        sizes=dict(sizes),
        significance=sig,
    )
