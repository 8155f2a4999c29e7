"""Evaluation metrics: micro-averaged AUC, top-k accuracy, log-likelihood."""
from __future__ import annotations

import csv
import json
import statistics
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels
from .errors import ContractError
from .numeric import PROB_FLOOR

TOP_KS = (1, 2, 3)


def _aligned(predictions, targets):
    p = np.ascontiguousarray(predictions, dtype=np.float64)
    t = np.ascontiguousarray(targets, dtype=np.int64)
    if p.ndim != 2 or t.shape != (p.shape[0],) or p.shape[0] == 0:
        raise ContractError("predictions must be (n, k) and targets (n,) with n >= 1")
    if t.min() < 0 or t.max() >= p.shape[1]:
        raise ContractError("target index out of range")
    return p, t


def _flatten(p, t):
    labels = np.zeros(p.shape, dtype=np.int8)
    labels[np.arange(p.shape[0]), t] = 1
    return p.ravel(), labels.ravel()


def binary_auc(scores, labels) -> float:
    """Mann-Whitney AUC with midranks for ties."""
    s = np.ascontiguousarray(scores, dtype=np.float64)
    y = np.ascontiguousarray(labels, dtype=np.int8)
    order = np.argsort(s, kind="stable")
    rank_sum, n_pos = kernels.midrank_positive_sum(s[order], y[order])
    n_neg = s.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ContractError("AUC undefined: need both positive and negative labels")
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def micro_auc(predictions, targets) -> float:
    """AUC over the pooled one-vs-rest (probability, indicator) pairs."""
    p, t = _aligned(predictions, targets)
    return binary_auc(*_flatten(p, t))


def roc_points(predictions, targets) -> np.ndarray:
    """``(m, 2)`` array of (fpr, tpr) from (0, 0) to (1, 1) over pooled pairs."""
    p, t = _aligned(predictions, targets)
    s, y = _flatten(p, t)
    order = np.argsort(-s, kind="stable")
    fp, tp = kernels.roc_staircase(np.ascontiguousarray(s[order]), np.ascontiguousarray(y[order]))
    return np.stack([fp / fp[-1], tp / tp[-1]], axis=1)


def trapezoid_area(points) -> float:
    pts = np.asarray(points, dtype=np.float64)
    dx = np.diff(pts[:, 0])
    return float(np.sum(dx * (pts[1:, 1] + pts[:-1, 1]) / 2.0))


def top_k_accuracy(predictions, targets, k: int) -> float:
    if k < 1:
        raise ContractError("k must be >= 1")
    p, t = _aligned(predictions, targets)
    return kernels.top_k_hits(p, t, int(k)) / p.shape[0]


def accuracy(predictions, targets) -> float:
    return top_k_accuracy(predictions, targets, 1)


def avg_log_likelihood(predictions, targets) -> float:
    p, t = _aligned(predictions, targets)
    return float(np.mean(np.log(np.maximum(p[np.arange(p.shape[0]), t], PROB_FLOOR))))


@dataclass
class EvalReport:
    micro_auc: float
    accuracy: float
    top_k_accuracy: dict
    avg_log_likelihood: float
    n_examples: int
    per_class_counts: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["top_k_accuracy"] = {str(k): v for k, v in self.top_k_accuracy.items()}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        return cls(
            micro_auc=d["micro_auc"],
            accuracy=d["accuracy"],
            top_k_accuracy={int(k): v for k, v in d["top_k_accuracy"].items()},
            avg_log_likelihood=d["avg_log_likelihood"],
            n_examples=d["n_examples"],
            per_class_counts=list(d.get("per_class_counts", [])),
        )


def evaluate(predictions, targets) -> EvalReport:
    p, t = _aligned(predictions, targets)
    top = {k: top_k_accuracy(p, t, k) for k in TOP_KS}
    return EvalReport(
        micro_auc=micro_auc(p, t),
        accuracy=top[1],
        top_k_accuracy=top,
        avg_log_likelihood=avg_log_likelihood(p, t),
        n_examples=int(p.shape[0]),
        per_class_counts=np.bincount(t, minlength=p.shape[1]).tolist(),
    )


METRICS = ("micro_auc", "accuracy", "top_2_accuracy", "top_3_accuracy", "avg_log_likelihood")


def _metric(report: EvalReport, name: str) -> float:
    if name.startswith("top_"):
        return report.top_k_accuracy[int(name.split("_")[1])]
    return getattr(report, name)


def aggregate_trials(reports) -> dict:
    """Per-metric mean and sample (n-1) standard deviation."""
    reports = list(reports)
    if len(reports) < 2:
        raise ContractError("aggregate_trials needs at least two reports")
    out = {}
    for name in METRICS:
        vals = [float(_metric(r, name)) for r in reports]
        out[name] = {"mean": statistics.fmean(vals), "std": statistics.stdev(vals)}
    out["n_trials"] = len(reports)
    return out


_LABELS = {
    "micro_auc": "AUC",
    "accuracy": "Accuracy",
    "top_2_accuracy": "Top-2",
    "top_3_accuracy": "Top-3",
    "avg_log_likelihood": "Avg LL",
}


def format_aggregate(agg: dict) -> str:
    """Lines like ``AUC 0.689 ± 0.005``."""
    lines = []
    for name in METRICS:
        m = agg[name]
        lines.append(f"{_LABELS[name]} {m['mean']:.3f} ± {m['std']:.3f}")
    return "\n".join(lines)


def write_roc_csv(points, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["fpr", "tpr"])
        for fpr, tpr in points:
            w.writerow([repr(float(fpr)), repr(float(tpr))])
