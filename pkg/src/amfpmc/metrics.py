"""Ranking and classification metrics for single-label multiclass output.

AUROC is the Mann-Whitney statistic computed from midranks (ties count one
half), which equals exhaustive positive-negative pair counting exactly.
AUPR is step-wise average precision with stable tie handling, the
conservative convention for imbalanced link prediction. Macro averages skip
zero-support classes instead of imputing zeros.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    AllEmptyError,
    DegenerateLabelsError,
    EmptyInputError,
    NoPositivesError,
    ShapeMismatchError,
)


def _as_scores_labels(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=bool)
    if s.shape != y.shape or s.ndim != 1:
        raise ShapeMismatchError("scores and labels must be equal-length 1-d arrays")
    if not np.all(np.isfinite(s)):
        raise ValueError("scores must be finite")
    return s, y


def midranks(scores: np.ndarray) -> np.ndarray:
    """1-based ranks with tied values sharing their average rank."""
    order = np.argsort(scores, kind="mergesort")
    s = scores[order]
    m = s.size
    boundaries = np.flatnonzero(np.r_[True, s[1:] != s[:-1], True])
    ranks_sorted = np.empty(m, dtype=np.float64)
    for start, stop in zip(boundaries[:-1], boundaries[1:]):
        ranks_sorted[start:stop] = 0.5 * (start + 1 + stop)
    ranks = np.empty(m, dtype=np.float64)
    ranks[order] = ranks_sorted
    return ranks


def roc_auc(scores, labels) -> float:
    """Fraction of (positive, negative) pairs ranked concordantly, ties 0.5."""
    s, y = _as_scores_labels(scores, labels)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabelsError("need at least one positive and one negative")
    ranks = midranks(s)
    rank_sum = ranks[y].sum()
    return float((rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def average_precision(scores, labels) -> float:
    """Mean of precision at each positive's rank, descending score order.

    Ties are broken by stable input order.
    """
    s, y = _as_scores_labels(scores, labels)
    n_pos = int(y.sum())
    if n_pos == 0:
        raise NoPositivesError("need at least one positive")
    order = np.argsort(-s, kind="mergesort")
    hits = y[order]
    precision_at = np.cumsum(hits) / np.arange(1, s.size + 1)
    return float(precision_at[hits].sum() / n_pos)


def class_weights(counts) -> np.ndarray:
    """Balanced weights total/(K_effective * count_k); empty classes get 0."""
    c = np.asarray(counts, dtype=np.int64)
    total = int(c.sum())
    if total <= 0:
        raise AllEmptyError("all class counts are zero")
    nonzero = c > 0
    k_eff = int(nonzero.sum())
    w = np.zeros(c.size, dtype=np.float64)
    w[nonzero] = total / (k_eff * c[nonzero])
    return w


@dataclass
class PerClassMetrics:
    class_id: int
    support: int
    auroc: Optional[float]
    aupr: Optional[float]


@dataclass
class MultiClassReport:
    """Accuracy plus micro/macro aggregates and per-class ranking curves.

    For single-label multiclass over pooled one-vs-rest confusion counts,
    micro precision, recall, and F1 all equal accuracy; the fields are kept
    separate because the text report mirrors published table layouts.
    """

    accuracy: float
    micro_precision: float
    micro_recall: float
    micro_f1: float
    micro_auroc: Optional[float]
    micro_aupr: Optional[float]
    macro_precision: Optional[float]
    macro_recall: Optional[float]
    macro_f1: Optional[float]
    macro_auroc: Optional[float]
    macro_aupr: Optional[float]
    per_class: list[PerClassMetrics] = field(default_factory=list)

    def scalar_items(self) -> list[tuple[str, Optional[float]]]:
        return [
            ("accuracy", self.accuracy),
            ("micro_precision", self.micro_precision),
            ("micro_recall", self.micro_recall),
            ("micro_f1", self.micro_f1),
            ("micro_auroc", self.micro_auroc),
            ("micro_aupr", self.micro_aupr),
            ("macro_precision", self.macro_precision),
            ("macro_recall", self.macro_recall),
            ("macro_f1", self.macro_f1),
            ("macro_auroc", self.macro_auroc),
            ("macro_aupr", self.macro_aupr),
        ]


def _check_prob_matrix(prob_matrix, truths) -> tuple[np.ndarray, np.ndarray]:
    P = np.asarray(prob_matrix, dtype=np.float64)
    t = np.asarray(truths, dtype=np.int64)
    if P.ndim != 2:
        raise ShapeMismatchError("prob_matrix must be 2-d")
    if P.shape[0] == 0:
        raise EmptyInputError("no rows to score")
    if t.shape != (P.shape[0],):
        raise ShapeMismatchError("truths must align with prob_matrix rows")
    if t.min() < 0 or t.max() >= P.shape[1]:
        raise ShapeMismatchError("truth classes outside 0..K-1")
    return P, t


def multiclass_report(prob_matrix, truths, mode: str = "both") -> MultiClassReport:
    """Score a probability matrix against integer truths.

    Predictions are per-row argmax (ties to the lowest index). Macro metrics
    average one-vs-rest values over classes with nonzero support; micro AUROC
    and AUPR pool all row-class (score, label) pairs; micro P/R/F1 pool
    confusion counts. mode selects 'micro', 'macro', or 'both'.
    """
    if mode not in ("micro", "macro", "both"):
        raise ValueError(f"mode must be micro, macro, or both, got {mode!r}")
    P, t = _check_prob_matrix(prob_matrix, truths)
    n_rows, n_classes = P.shape
    preds = np.argmax(P, axis=1)
    accuracy = float(np.mean(preds == t))

    support = np.bincount(t, minlength=n_classes)
    # pooled one-vs-rest confusion counts collapse to the accuracy identity
    micro_p = micro_r = micro_f1 = accuracy

    micro_auroc: Optional[float] = None
    micro_aupr: Optional[float] = None
    if mode in ("micro", "both"):
        onehot = np.zeros((n_rows, n_classes), dtype=bool)
        onehot[np.arange(n_rows), t] = True
        flat_scores = P.reshape(-1)
        flat_labels = onehot.reshape(-1)
        if flat_labels.any() and not flat_labels.all():
            micro_auroc = roc_auc(flat_scores, flat_labels)
            micro_aupr = average_precision(flat_scores, flat_labels)

    per_class: list[PerClassMetrics] = []
    macro_precision = macro_recall = macro_f1 = None
    macro_auroc = macro_aupr = None
    if mode in ("macro", "both"):
        precisions, recalls, f1s, aurocs, auprs = [], [], [], [], []
        for k in range(n_classes):
            sup = int(support[k])
            if sup == 0:
                per_class.append(PerClassMetrics(k, 0, None, None))
                continue
            pos = t == k
            pred_k = preds == k
            tp = int((pos & pred_k).sum())
            fp = int((~pos & pred_k).sum())
            fn = int((pos & ~pred_k).sum())
            prec = tp / (tp + fp) if tp + fp > 0 else 0.0
            rec = tp / (tp + fn)
            f1 = 2 * prec * rec / (prec + rec) if prec + rec > 0 else 0.0
            auroc_k = roc_auc(P[:, k], pos) if sup < n_rows else None
            aupr_k = average_precision(P[:, k], pos)
            per_class.append(PerClassMetrics(k, sup, auroc_k, aupr_k))
            precisions.append(prec)
            recalls.append(rec)
            f1s.append(f1)
            if auroc_k is not None:
                aurocs.append(auroc_k)
            auprs.append(aupr_k)
        if not precisions:
            raise DegenerateLabelsError("no class has support")
        macro_precision = float(np.mean(precisions))
        macro_recall = float(np.mean(recalls))
        macro_f1 = float(np.mean(f1s))
        if not aurocs:
            raise DegenerateLabelsError("no class has both positives and negatives")
        macro_auroc = float(np.mean(aurocs))
        macro_aupr = float(np.mean(auprs))

    return MultiClassReport(
        accuracy=accuracy,
        micro_precision=micro_p,
        micro_recall=micro_r,
        micro_f1=micro_f1,
        micro_auroc=micro_auroc,
        micro_aupr=micro_aupr,
        macro_precision=macro_precision,
        macro_recall=macro_recall,
        macro_f1=macro_f1,
        macro_auroc=macro_auroc,
        macro_aupr=macro_aupr,
        per_class=per_class,
    )
