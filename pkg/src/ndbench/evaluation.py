"""ROC analysis of the distance-threshold classifier D(x, y) < t over labelled pairs."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .dataset import Label, NdPair
from .mining import HardNegativeSet

Z95 = 1.96


@dataclass(frozen=True)
class ScoredPair:
    pair: NdPair
    distance: float

    def __post_init__(self):
        if not (math.isfinite(self.distance) and self.distance >= 0):
            raise ValueError(f"pair distance must be finite and >= 0, got {self.distance}")


@dataclass(frozen=True, eq=False)
class RocCurve:
    thresholds: np.ndarray
    tp: np.ndarray  # positives with distance < threshold
    fp: np.ndarray  # negatives with distance < threshold
    n_pos: int
    n_neg: int
    auc: float
    auc_ci_95: tuple[float, float]
    strategy: str | None = None
    neg_sorted: np.ndarray = field(repr=False, default=None)

    @property
    def tpr(self) -> np.ndarray:
        return self.tp / self.n_pos

    @property
    def fpr(self) -> np.ndarray:
        return self.fp / self.n_neg

    @property
    def points(self) -> list[tuple[float, float, float]]:
        return list(zip(self.thresholds.tolist(), self.tpr.tolist(), self.fpr.tolist()))

    def trapezoid_auc(self) -> float:
        """Area under the (fpr, tpr) polyline, computed on integer counts."""
        dfp = np.diff(self.fp)
        return float(np.sum(dfp * (self.tp[1:] + self.tp[:-1]))) / (2.0 * self.n_pos * self.n_neg)


def split_distances(pairs: Iterable[ScoredPair], positive_labels=(Label.IND, Label.NIND)):
    """Positive and negative distance arrays.

    Pairs whose label is positive but not in ``positive_labels`` are dropped
    from both sides, e.g. NIND pairs in an IND-only evaluation.
    """
    keep = {Label(l) for l in positive_labels}
    pos, neg = [], []
    for sp in pairs:
        lab = sp.pair.label
        if lab is Label.NND:
            neg.append(sp.distance)
        elif lab in keep:
            pos.append(sp.distance)
    return np.asarray(pos, dtype=np.float64), np.asarray(neg, dtype=np.float64)


def _require(pos: np.ndarray, neg: np.ndarray) -> None:
    if len(pos) == 0 and len(neg) == 0:
        raise ValueError("no positive and no negative pairs")
    if len(pos) == 0:
        raise ValueError("no positive pairs")
    if len(neg) == 0:
        raise ValueError("no negative pairs")


def sens_spec(pos, neg, t: float) -> tuple[float, float]:
    pos, neg = np.asarray(pos, dtype=np.float64), np.asarray(neg, dtype=np.float64)
    _require(pos, neg)
    return float(np.count_nonzero(pos < t)) / len(pos), float(np.count_nonzero(neg >= t)) / len(neg)


def sens_spec_at(pairs: Sequence[ScoredPair], t: float, positive_labels=(Label.IND, Label.NIND)):
    """(sensitivity, specificity) of the classifier distance < t."""
    return sens_spec(*split_distances(pairs, positive_labels), t)


def auc_counts(pos, neg) -> tuple[int, int]:
    """(2 * #{pos < neg} + #{pos == neg}, 2 * N+ * N-). Exact integer Mann-Whitney statistic."""
    pos, neg = np.asarray(pos, dtype=np.float64), np.asarray(neg, dtype=np.float64)
    _require(pos, neg)
    neg_sorted = np.sort(neg)
    right = np.searchsorted(neg_sorted, pos, side="right")  # negatives <= p
    left = np.searchsorted(neg_sorted, pos, side="left")  # negatives < p
    greater = len(neg) - right
    ties = right - left
    num = 2 * int(greater.sum()) + int(ties.sum())
    return num, 2 * len(pos) * len(neg)


def auc_mann_whitney(pos, neg) -> float:
    """Fraction of (positive, negative) pairs with the positive strictly closer; ties count 1/2."""
    num, den = auc_counts(pos, neg)
    return num / den


def auc_ci_hanley(auc: float, n_pos: int, n_neg: int, z: float = Z95) -> tuple[float, float]:
    if not 0.0 <= auc <= 1.0:
        raise ValueError("auc must lie in [0, 1]")
    if n_pos < 1 or n_neg < 1:
        raise ValueError("n_pos and n_neg must be >= 1")
    se = hanley_se(auc, n_pos, n_neg)
    return max(0.0, auc - z * se), min(1.0, auc + z * se)


def hanley_se(auc: float, n_pos: int, n_neg: int) -> float:
    """Standard error of the AUC, Hanley & McNeil (1982)."""
    a = auc
    q1 = a / (2 - a)
    q2 = 2 * a * a / (1 + a)
    var = (a * (1 - a) + (n_pos - 1) * (q1 - a * a) + (n_neg - 1) * (q2 - a * a)) / (n_pos * n_neg)
    return math.sqrt(max(var, 0.0))


def roc_from_distances(pos, neg, grid: int | None = None, strategy: str | None = None) -> RocCurve:
    """Sweep the threshold over every distinct distance (or a fixed grid) plus -inf/+inf."""
    pos = np.sort(np.asarray(pos, dtype=np.float64))
    neg = np.sort(np.asarray(neg, dtype=np.float64))
    _require(pos, neg)
    if grid is None:
        inner = np.unique(np.concatenate([pos, neg]))
    else:
        if grid < 2:
            raise ValueError("grid needs at least 2 thresholds")
        lo, hi = min(pos[0], neg[0]), max(pos[-1], neg[-1])
        inner = np.linspace(lo, hi, grid)
    thresholds = np.concatenate([[-np.inf], inner, [np.inf]])
    tp = np.searchsorted(pos, thresholds, side="left")
    fp = np.searchsorted(neg, thresholds, side="left")
    auc = auc_mann_whitney(pos, neg)
    ci = auc_ci_hanley(auc, len(pos), len(neg))
    return RocCurve(thresholds, tp, fp, len(pos), len(neg), auc, ci, strategy, neg)


def roc(pairs: Sequence[ScoredPair], positive_labels=(Label.IND, Label.NIND), grid: int | None = None,
        strategy: str | None = None) -> RocCurve:
    pos, neg = split_distances(pairs, positive_labels)
    return roc_from_distances(pos, neg, grid, strategy)


def fp_projection(specificity: float, sizes: tuple[int, int]) -> tuple[float, float]:
    """(FP count, FP per query) for |X| queries against |Y| images, ordered pairs."""
    if not 0.0 <= specificity <= 1.0:
        raise ValueError("specificity must lie in [0, 1]")
    nx, ny = sizes
    rate = 1.0 - specificity
    return rate * nx * ny, rate * ny


def fp_count_unordered(specificity: float, n_images: int) -> float:
    """FP count for a self-join of one collection over its n(n-1)/2 distinct pairs."""
    if not 0.0 <= specificity <= 1.0:
        raise ValueError("specificity must lie in [0, 1]")
    return (1.0 - specificity) * n_images * (n_images - 1) / 2


def expected_tp(sensitivity: float, nd_count: float) -> float:
    if not 0.0 <= sensitivity <= 1.0:
        raise ValueError("sensitivity must lie in [0, 1]")
    return sensitivity * nd_count


@dataclass(frozen=True)
class BoundReport:
    auc_full: float
    auc_hn: float
    strategy: str
    exact_regime: bool
    n_pos: int
    n_full: int
    n_hn: int

    @property
    def bound_holds(self) -> bool:
        """Hard negatives can only lower the closer-is-positive AUC: auc_hn <= auc_full."""
        return self.auc_hn <= self.auc_full

    @property
    def literal_full(self) -> float:
        """Indicator-sum AUC with raw distance as the score (1 - auc_full)."""
        return 1.0 - self.auc_full

    @property
    def literal_hn(self) -> float:
        return 1.0 - self.auc_hn


def verify_upper_bound(positives, full_negatives, mined: HardNegativeSet | np.ndarray,
                       strategy: str | None = None) -> BoundReport:
    """Compare the AUC over every negative pair with the AUC over the mined subset.

    ``full_negatives`` holds all K*M negative distances (any shape). ``mined``
    is the hard-negative set or its distance array.
    """
    pos = np.asarray(positives, dtype=np.float64).ravel()
    full = np.asarray(full_negatives, dtype=np.float64).ravel()
    if isinstance(mined, HardNegativeSet):
        hn = mined.distances
        strategy = mined.strategy.value
        exact = mined.exact_regime
    else:
        hn = np.asarray(mined, dtype=np.float64).ravel()
        exact = True
    return BoundReport(auc_mann_whitney(pos, full), auc_mann_whitney(pos, hn), strategy or "unknown",
                       exact, len(pos), len(full), len(hn))


def pick_thresholds(curve: RocCurve, fp_rates: Sequence[float]) -> list[float]:
    """Largest threshold whose FP rate on the mined negatives is <= each requested rate."""
    neg = curve.neg_sorted
    if neg is None:
        raise ValueError("curve carries no negative distances")
    floor = 1.0 / curve.n_neg
    out = []
    for r in fp_rates:
        if r > 1.0:
            raise ValueError(f"fp rate {r} > 1")
        if r < floor * (1 - 1e-12):
            raise ValueError(
                f"fp rate {r:g} below the measurable floor 1/{curve.n_neg} = {floor:g} of this mined set")
        k = int(math.floor(r * curve.n_neg + 1e-9))
        out.append(math.inf if k >= curve.n_neg else float(neg[k]))
    return out


# --- output -------------------------------------------------------------------

def write_roc_csv(path: str | Path, curve: RocCurve) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["threshold", "tpr", "fpr"])
        for t, tpr, fpr in curve.points:
            w.writerow([repr(t), repr(tpr), repr(fpr)])


def summary(curve: RocCurve) -> dict:
    return {"auc": curve.auc, "ci_low": curve.auc_ci_95[0], "ci_high": curve.auc_ci_95[1],
            "n_pos": curve.n_pos, "n_neg": curve.n_neg, "strategy": curve.strategy}


def write_summary(path: str | Path, curve: RocCurve) -> None:
    Path(path).write_text(json.dumps(summary(curve), indent=1) + "\n", encoding="utf-8")
