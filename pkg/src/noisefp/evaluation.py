"""Identification metrics, cross-validation, segmentation sweeps, grid search.

Two accuracy figures are always reported side by side:

* ``acc_eq1`` micro-averages one-vs-rest TP and TN over all classes:
  (sum TP + sum TN) / (sum TP + TN + FP + FN). For two classes this equals
  the plain rate; for more classes the TN mass inflates it.
* ``acc_plain`` is the ordinary correct/total rate.

Per-class TPR is TP/(TP+FN) and FPR is FP/(FP+TN), both one-vs-rest.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import svm
from .errors import InsufficientClassDataError, RejectedInputError
from .features import extract_matrix
from .svm import LabeledDataset, MulticlassSvmModel
from .timeseries import SegmentationScheme, TimeSeries, chunk, extract_noise, segment


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """counts[p][a] = number of samples of actual class a predicted as class p."""

    classes: Tuple[str, ...]
    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        k = len(self.classes)
        if counts.shape != (k, k):
            raise RejectedInputError("counts must be a %dx%d matrix" % (k, k))
        if np.any(counts < 0):
            raise RejectedInputError("counts must be non-negative")
        counts.setflags(write=False)
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class ClassStats:
    label: str
    tpr: float
    fpr: float
    tp: int
    fp: int
    tn: int
    fn: int
    no_actuals: bool = False
    no_negatives: bool = False


@dataclass(frozen=True, eq=False)
class EvalReport:
    acc_eq1: float
    acc_plain: float
    per_class: Tuple[ClassStats, ...]
    matrix: ConfusionMatrix
    metadata: Dict[str, object] = field(default_factory=dict)

    def records(self) -> List[Tuple[str, str, float]]:
        """Machine-readable (metric, scope, value) rows."""
        rows = [
            ("acc_eq1", "overall", self.acc_eq1),
            ("acc_plain", "overall", self.acc_plain),
        ]
        for stats in self.per_class:
            rows.append(("tpr", stats.label, stats.tpr))
            rows.append(("fpr", stats.label, stats.fpr))
        return rows


def confusion(
    predictions: Sequence[Tuple[str, str]],
    classes: Optional[Iterable[str]] = None,
) -> ConfusionMatrix:
    """Tally (predicted, actual) pairs into a matrix over sorted class labels.

    When an explicit class list is given, any label outside it is rejected;
    otherwise the class list is the sorted union of labels seen.
    """
    if not predictions:
        raise RejectedInputError("cannot build a confusion matrix from no predictions")
    if classes is None:
        known = sorted({label for pair in predictions for label in pair})
    else:
        known = sorted(set(classes))
    index = {label: i for i, label in enumerate(known)}
    counts = np.zeros((len(known), len(known)), dtype=np.int64)
    for predicted, actual in predictions:
        if predicted not in index or actual not in index:
            raise RejectedInputError(
                "label pair (%r, %r) outside known classes" % (predicted, actual)
            )
        counts[index[predicted], index[actual]] += 1
    return ConfusionMatrix(classes=tuple(known), counts=counts)


def metrics(matrix: ConfusionMatrix, metadata: Optional[Dict[str, object]] = None) -> EvalReport:
    """Accuracy (both forms) and per-class TPR/FPR from a confusion matrix.

    A class with no actual samples gets TPR 0 with its no_actuals flag set;
    a class with no negatives gets FPR 0 with no_negatives set.
    """
    counts = matrix.counts
    total = matrix.total
    if total == 0:
        raise RejectedInputError("confusion matrix is empty")
    k = len(matrix.classes)
    tp = np.diag(counts)
    predicted_totals = counts.sum(axis=1)
    actual_totals = counts.sum(axis=0)
    fp = predicted_totals - tp
    fn = actual_totals - tp
    tn = total - tp - fp - fn

    sum_tp = int(tp.sum())
    sum_tn = int(tn.sum())
    sum_fp = int(fp.sum())
    sum_fn = int(fn.sum())
    acc_eq1 = (sum_tp + sum_tn) / (sum_tp + sum_tn + sum_fp + sum_fn)
    acc_plain = sum_tp / total

    per_class = []
    for i, label in enumerate(matrix.classes):
        no_actuals = actual_totals[i] == 0
        negatives = fp[i] + tn[i]
        no_negatives = negatives == 0
        tpr = 0.0 if no_actuals else tp[i] / (tp[i] + fn[i])
        fpr = 0.0 if no_negatives else fp[i] / negatives
        per_class.append(
            ClassStats(
                label=label,
                tpr=float(tpr),
                fpr=float(fpr),
                tp=int(tp[i]),
                fp=int(fp[i]),
                tn=int(tn[i]),
                fn=int(fn[i]),
                no_actuals=bool(no_actuals),
                no_negatives=bool(no_negatives),
            )
        )
    return EvalReport(
        acc_eq1=float(acc_eq1),
        acc_plain=float(acc_plain),
        per_class=tuple(per_class),
        matrix=matrix,
        metadata=dict(metadata or {}),
    )


def _fold_assignment(labels: Sequence[str], folds: int) -> np.ndarray:
    """Stratified deterministic folds: round-robin per class in input order."""
    assignment = np.empty(len(labels), dtype=np.int64)
    seen: Dict[str, int] = {}
    for pos, label in enumerate(labels):
        occurrence = seen.get(label, 0)
        assignment[pos] = occurrence % folds
        seen[label] = occurrence + 1
    return assignment


def cross_validate(
    data: LabeledDataset,
    folds: int,
    c: float = svm.DEFAULT_C,
    gamma: float = svm.DEFAULT_GAMMA,
    tol: float = svm.DEFAULT_TOL,
) -> EvalReport:
    """k-fold cross-validation pooled into a single confusion matrix."""
    if folds < 2:
        raise RejectedInputError("folds must be >= 2")
    labels = np.asarray(data.labels)
    for cls in sorted(set(data.labels)):
        count = int(np.sum(labels == cls))
        if count < folds:
            raise InsufficientClassDataError(
                "class %r has %d samples, fewer than %d folds" % (cls, count, folds)
            )
    assignment = _fold_assignment(data.labels, folds)
    pairs: List[Tuple[str, str]] = []
    for fold in range(folds):
        held = assignment == fold
        train_set = LabeledDataset(
            vectors=data.vectors[~held], labels=tuple(labels[~held])
        )
        model = svm.train(train_set, c=c, gamma=gamma, tol=tol)
        predicted = svm.predict_many(model, data.vectors[held])
        pairs.extend(zip(predicted, labels[held]))
    report = metrics(
        confusion(pairs, classes=sorted(set(data.labels))),
        metadata={"folds": folds, "C": c, "gamma": gamma},
    )
    return report


@dataclass(frozen=True)
class SweepCell:
    chunk_size: int
    scheme: SegmentationScheme
    acc_eq1: float
    acc_plain: float
    train_chunks: int
    test_chunks: int


def train_test_split_features(
    series_by_sensor: Dict[str, TimeSeries],
    chunk_size: int,
    scheme: SegmentationScheme,
) -> Tuple[LabeledDataset, LabeledDataset]:
    """Noise-extract, chunk, and segment every series into train/test datasets."""
    train_vecs, train_labels = [], []
    test_vecs, test_labels = [], []
    for sensor_id in sorted(series_by_sensor):
        noise = extract_noise(series_by_sensor[sensor_id])
        chunks = chunk(noise, chunk_size)
        train_part, test_part = segment(chunks, scheme)
        train_vecs.append(extract_matrix(train_part))
        train_labels.extend([sensor_id] * len(train_part))
        test_vecs.append(extract_matrix(test_part))
        test_labels.extend([sensor_id] * len(test_part))
    return (
        LabeledDataset(vectors=np.vstack(train_vecs), labels=tuple(train_labels)),
        LabeledDataset(vectors=np.vstack(test_vecs), labels=tuple(test_labels)),
    )


def evaluate_split(
    train_set: LabeledDataset,
    test_set: LabeledDataset,
    c: float,
    gamma: float,
    tol: float = svm.DEFAULT_TOL,
    metadata: Optional[Dict[str, object]] = None,
) -> EvalReport:
    model = svm.train(train_set, c=c, gamma=gamma, tol=tol)
    predicted = svm.predict_many(model, test_set.vectors)
    pairs = list(zip(predicted, test_set.labels))
    return metrics(confusion(pairs, classes=train_set.classes()), metadata=metadata)


def sweep(
    series_by_sensor: Dict[str, TimeSeries],
    chunk_sizes: Sequence[int],
    schemes: Sequence[SegmentationScheme],
    c: float = svm.DEFAULT_C,
    gamma: float = svm.DEFAULT_GAMMA,
    tol: float = svm.DEFAULT_TOL,
) -> List[SweepCell]:
    """Full factorial chunk-size x scheme sweep; one train/evaluate run per cell."""
    cells = []
    for size in chunk_sizes:
        for scheme in schemes:
            train_set, test_set = train_test_split_features(
                series_by_sensor, size, scheme
            )
            report = evaluate_split(
                train_set,
                test_set,
                c=c,
                gamma=gamma,
                tol=tol,
                metadata={"chunk_size": size, "scheme": str(scheme)},
            )
            cells.append(
                SweepCell(
                    chunk_size=size,
                    scheme=scheme,
                    acc_eq1=report.acc_eq1,
                    acc_plain=report.acc_plain,
                    train_chunks=len(train_set),
                    test_chunks=len(test_set),
                )
            )
    return cells


def grid_search(
    data: LabeledDataset,
    c_grid: Sequence[float],
    gamma_grid: Sequence[float],
    folds: int = 5,
    tol: float = svm.DEFAULT_TOL,
) -> Tuple[float, float, EvalReport]:
    """Exhaustive CV search maximizing plain accuracy.

    Ties go to the smaller C, then the smaller gamma, so results never depend
    on grid enumeration order.
    """
    if not c_grid or not gamma_grid:
        raise RejectedInputError("grids must be nonempty")
    best: Optional[Tuple[float, float, EvalReport]] = None
    for c in sorted(c_grid):
        for gamma in sorted(gamma_grid):
            report = cross_validate(data, folds, c=c, gamma=gamma, tol=tol)
            if best is None or report.acc_plain > best[2].acc_plain:
                best = (c, gamma, report)
    return best


def format_table(cells: Sequence[SweepCell]) -> str:
    """Sweep cells as a fixed-width text table (rows: chunk size, cols: scheme)."""
    schemes = []
    for cell in cells:
        if cell.scheme not in schemes:
            schemes.append(cell.scheme)
    sizes = []
    for cell in cells:
        if cell.chunk_size not in sizes:
            sizes.append(cell.chunk_size)
    by_key = {(c.chunk_size, str(c.scheme)): c for c in cells}
    header = ["chunk"] + ["train=%s" % s for s in schemes]
    widths = [max(8, len(h) + 2) for h in header]
    lines = ["".join(h.ljust(w) for h, w in zip(header, widths))]
    for size in sizes:
        row = [str(size)]
        for scheme in schemes:
            cell = by_key.get((size, str(scheme)))
            row.append("%.4f" % cell.acc_plain if cell else "-")
        lines.append("".join(r.ljust(w) for r, w in zip(row, widths)))
    return "\n".join(lines)
