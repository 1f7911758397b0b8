"""From-scratch soft-margin RBF SVM: SMO solver, one-vs-one voting, persistence.

The binary solver maximizes the standard dual

    W(alpha) = sum_i alpha_i - 1/2 sum_ij alpha_i alpha_j y_i y_j K(x_i, x_j)
    subject to 0 <= alpha_i <= C and sum_i alpha_i y_i = 0

with K(x, z) = exp(-gamma * ||x - z||^2), by sequential minimal optimization:
repeatedly pick the first point whose KKT condition is violated beyond tol,
pair it with the point of maximal error gap |E_i - E_j| (falling back down
the ranking when a partner cannot move), and solve the two-variable
subproblem analytically with box clipping. Each sweep ends by optimizing
the most mutually inconsistent movable pair until the duality gap closes,
which guarantees progress the per-point ranking alone cannot. Selection is
fully deterministic (index order, stable sorts, no randomness), so identical
data and hyperparameters produce bit-identical models.

Multi-class training standardizes features (z-score fitted on the training
data), trains one binary model per unordered label pair, and predicts by
majority vote with ties broken toward the smallest label.
"""

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    InsufficientClassDataError,
    RejectedInputError,
    TrainingBudgetExceededError,
)
from .features import FEATURE_COUNT, FeatureVector

DEFAULT_C = 1.0
DEFAULT_GAMMA = 1.0 / FEATURE_COUNT
DEFAULT_TOL = 1e-3
DEFAULT_MAX_PASSES = 1000

MODEL_HEADER = "NOISENSE-MODEL 1"

# alphas this close to a box bound are snapped onto it, which keeps the
# equality constraint exact and makes support-vector membership crisp
_BOUND_SNAP = 1e-10
# minimum relative change of alpha_j for a step to count as progress
_STEP_EPS = 1e-12


def _as_matrix(vectors) -> np.ndarray:
    arr = np.asarray(vectors, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise RejectedInputError("feature vectors must form a 2-D matrix")
    if not np.all(np.isfinite(arr)):
        raise RejectedInputError("feature matrix contains non-finite values")
    return arr


def _vector_of(x) -> np.ndarray:
    if isinstance(x, FeatureVector):
        return x.as_array()
    arr = np.asarray(x, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise RejectedInputError("feature vector contains non-finite values")
    return arr


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Feature vectors paired with class labels (sensor ids)."""

    vectors: np.ndarray
    labels: Tuple[str, ...]

    def __post_init__(self):
        mat = _as_matrix(self.vectors)
        labels = tuple(self.labels)
        if mat.shape[0] == 0:
            raise RejectedInputError("dataset must not be empty")
        if mat.shape[0] != len(labels):
            raise RejectedInputError(
                "vector count %d does not match label count %d"
                % (mat.shape[0], len(labels))
            )
        mat.setflags(write=False)
        object.__setattr__(self, "vectors", mat)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_feature_vectors(
        cls, vectors: Sequence[FeatureVector], labels: Sequence[str]
    ) -> "LabeledDataset":
        mat = np.vstack([v.as_array() for v in vectors]) if vectors else np.empty((0, 8))
        return cls(vectors=mat, labels=tuple(labels))

    def classes(self) -> List[str]:
        return sorted(set(self.labels))

    def __len__(self) -> int:
        return self.vectors.shape[0]


@dataclass(frozen=True, eq=False)
class ScalingParams:
    """Per-feature z-score parameters fitted on training data."""

    shift: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        shift = np.asarray(self.shift, dtype=np.float64).reshape(-1)
        scale = np.asarray(self.scale, dtype=np.float64).reshape(-1)
        if shift.shape != scale.shape:
            raise RejectedInputError("shift and scale must have equal length")
        if np.any(scale <= 0):
            raise RejectedInputError("scales must be positive")
        shift.setflags(write=False)
        scale.setflags(write=False)
        object.__setattr__(self, "shift", shift)
        object.__setattr__(self, "scale", scale)

    def apply(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.shift) / self.scale


def fit_scaling(data: LabeledDataset) -> ScalingParams:
    """Per-feature mean/std (population) of the training vectors.

    Features with zero variance get scale 1 so standardization stays defined.
    """
    mat = data.vectors
    shift = mat.mean(axis=0)
    scale = mat.std(axis=0)
    scale = np.where(scale == 0.0, 1.0, scale)
    return ScalingParams(shift=shift, scale=scale)


def rbf_kernel(x, z, gamma: float) -> float:
    """exp(-gamma * ||x - z||^2); always in (0, 1]."""
    if gamma <= 0:
        raise RejectedInputError("gamma must be positive")
    xv = _vector_of(x)
    zv = _vector_of(z)
    if xv.shape != zv.shape:
        raise RejectedInputError("kernel arguments must have equal dimension")
    diff = xv - zv
    return float(np.exp(-gamma * float(np.dot(diff, diff))))


def _rbf_matrix(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    sq_a = np.sum(a * a, axis=1)
    sq_b = np.sum(b * b, axis=1)
    d2 = sq_a[:, None] + sq_b[None, :] - 2.0 * (a @ b.T)
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-gamma * d2)


@dataclass(frozen=True, eq=False)
class BinarySvmModel:
    """One trained binary subproblem of the one-vs-one ensemble.

    alphas_signed holds alpha_i * y_i for every support vector; the decision
    function is sum_i alphas_signed_i * K(sv_i, x) + bias, positive meaning
    the first label of label_pair.
    """

    support_vectors: np.ndarray
    alphas_signed: np.ndarray
    bias: float
    kernel_gamma: float
    penalty: float
    label_pair: Tuple[str, str]

    def __post_init__(self):
        sv = _as_matrix(self.support_vectors)
        al = np.asarray(self.alphas_signed, dtype=np.float64).reshape(-1)
        if sv.shape[0] != al.size or sv.shape[0] < 1:
            raise RejectedInputError("support vectors and alphas must align and be nonempty")
        if np.any(np.abs(al) > self.penalty + 1e-9):
            raise RejectedInputError("|alpha| exceeds the box constraint C")
        if abs(float(al.sum())) > 1e-6:
            raise RejectedInputError("signed alphas must sum to 0 within 1e-6")
        sv.setflags(write=False)
        al.setflags(write=False)
        object.__setattr__(self, "support_vectors", sv)
        object.__setattr__(self, "alphas_signed", al)

    def decision(self, x) -> float:
        return float(self.decision_many(_vector_of(x).reshape(1, -1))[0])

    def decision_many(self, x: np.ndarray) -> np.ndarray:
        k = _rbf_matrix(np.asarray(x, dtype=np.float64), self.support_vectors,
                        self.kernel_gamma)
        return k @ self.alphas_signed + self.bias


@dataclass(frozen=True, eq=False)
class MulticlassSvmModel:
    """One-vs-one ensemble with the feature scaling it was trained under."""

    classes: Tuple[str, ...]
    binaries: Tuple[BinarySvmModel, ...]
    scaling: ScalingParams
    version: int = 1

    def __post_init__(self):
        k = len(self.classes)
        expected = k * (k - 1) // 2
        if len(self.binaries) != expected:
            raise RejectedInputError(
                "expected %d binary models for %d classes, got %d"
                % (expected, k, len(self.binaries))
            )
        covered = {b.label_pair for b in self.binaries}
        wanted = set(combinations(self.classes, 2))
        if covered != wanted:
            raise RejectedInputError("binary models do not cover each class pair exactly once")
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "binaries", tuple(self.binaries))

    def predict(self, vector) -> str:
        return predict(self, vector)

    def predict_many(self, vectors) -> List[str]:
        return predict_many(self, vectors)


class _SmoState:
    """Working state of one SMO run over a precomputed kernel matrix."""

    def __init__(self, kernel: np.ndarray, y: np.ndarray, c: float, tol: float):
        self.kernel = kernel
        self.y = y
        self.c = c
        self.tol = tol
        self.n = y.size
        self.alpha = np.zeros(self.n, dtype=np.float64)
        self.bias = 0.0
        # E_i = f(x_i) - y_i; with all alphas zero, f is identically bias = 0
        self.errors = -y.astype(np.float64)

    def refresh_errors(self):
        """Recompute the error cache from scratch, re-grounding the bias.

        The bias is re-derived from the KKT feasibility interval rather than
        trusted from the incremental Platt updates: with every support
        vector at a bound those updates can leave b outside the feasible
        interval, where points look violating although no pair step can move
        them (b cancels in E_i - E_j). The interval bias makes the
        violation measure match the 2*tol duality-gap certificate.
        """
        f0 = self.kernel @ (self.alpha * self.y)
        self.bias = self._interval_bias(f0)
        self.errors = f0 + self.bias - self.y

    def _interval_bias(self, f0: np.ndarray) -> float:
        """Best-feasible bias: b must satisfy every point's KKT bound on it.

        Each point constrains b through t_i = y_i - f0_i: margin points
        (alpha = 0) must sit outside the margin, saturated points (alpha = C)
        inside, free points exactly on it (both bounds). Returns the midpoint
        of the tightest bounds; a positive overshoot is split evenly, which
        is exactly the duality gap over 2.
        """
        t = self.y - f0
        at_zero = self.alpha <= 0.0
        at_c = self.alpha >= self.c
        free = ~at_zero & ~at_c
        lower = (at_zero & (self.y > 0)) | (at_c & (self.y < 0)) | free
        upper = (at_zero & (self.y < 0)) | (at_c & (self.y > 0)) | free
        b_low = float(t[lower].max()) if np.any(lower) else -np.inf
        b_up = float(t[upper].min()) if np.any(upper) else np.inf
        if not np.isfinite(b_low):
            return b_up
        if not np.isfinite(b_up):
            return b_low
        return 0.5 * (b_low + b_up)

    def violation_amounts(self) -> np.ndarray:
        r = self.errors * self.y
        up = np.where((self.alpha < self.c) & (r < 0), -r, 0.0)
        down = np.where((self.alpha > 0) & (r > 0), r, 0.0)
        return np.maximum(up, down)

    def extreme_violating_pair(self) -> Optional[Tuple[int, int]]:
        """Most mutually inconsistent movable pair, or None within tolerance.

        Movability mirrors _interval_bias: take the point demanding the
        largest bias among those pushing it up and the point demanding the
        smallest among those pulling it down. When their demands differ by
        more than 2*tol, optimizing that pair always gains a finite amount,
        which the error-gap partner ranking cannot guarantee (it may keep
        feeding a violator partners that admit only microscopic steps).
        """
        t = self.bias - self.errors  # equals y_i - f(x_i) + bias = y_i - g_i
        at_zero = self.alpha <= 0.0
        at_c = self.alpha >= self.c
        free = ~at_zero & ~at_c
        raisers = (at_zero & (self.y > 0)) | (at_c & (self.y < 0)) | free
        cappers = (at_zero & (self.y < 0)) | (at_c & (self.y > 0)) | free
        if not (np.any(raisers) and np.any(cappers)):
            return None
        hi = np.where(raisers, t, -np.inf)
        lo = np.where(cappers, t, np.inf)
        i = int(np.argmax(hi))
        j = int(np.argmin(lo))
        if hi[i] - lo[j] <= 2.0 * self.tol:
            return None
        return i, j

    def violates(self, i: int) -> bool:
        r = self.errors[i] * self.y[i]
        return (r < -self.tol and self.alpha[i] < self.c) or (
            r > self.tol and self.alpha[i] > 0
        )

    def take_step(self, i: int, j: int) -> bool:
        if i == j:
            return False
        k, y, alpha, c = self.kernel, self.y, self.alpha, self.c
        a_i, a_j = alpha[i], alpha[j]
        e_i, e_j = self.errors[i], self.errors[j]
        s = y[i] * y[j]
        if s > 0:
            low = max(0.0, a_i + a_j - c)
            high = min(c, a_i + a_j)
        else:
            low = max(0.0, a_j - a_i)
            high = min(c, c + a_j - a_i)
        if high - low < _STEP_EPS:
            return False
        k_ii, k_jj, k_ij = k[i, i], k[j, j], k[i, j]
        eta = k_ii + k_jj - 2.0 * k_ij
        if eta > 0:
            a_j_new = a_j + y[j] * (e_i - e_j) / eta
            a_j_new = min(high, max(low, a_j_new))
        else:
            # flat or concave direction: the maximum sits at a box end;
            # evaluate the dual objective change at both ends and keep the better
            a_j_new = self._endpoint_choice(i, j, low, high)
            if a_j_new is None:
                return False
        if a_j_new < _BOUND_SNAP:
            a_j_new = 0.0
        elif a_j_new > c - _BOUND_SNAP:
            a_j_new = c
        if abs(a_j_new - a_j) < _STEP_EPS * (a_j_new + a_j + _STEP_EPS):
            return False
        a_i_new = a_i + s * (a_j - a_j_new)
        a_i_new = min(c, max(0.0, a_i_new))
        # snap the partner onto the box as well; an alpha stranded within
        # rounding of a bound would count as free yet be unable to move
        if a_i_new < _BOUND_SNAP:
            a_i_new = 0.0
        elif a_i_new > c - _BOUND_SNAP:
            a_i_new = c

        d_i = a_i_new - a_i
        d_j = a_j_new - a_j
        b1 = self.bias - e_i - y[i] * d_i * k_ii - y[j] * d_j * k_ij
        b2 = self.bias - e_j - y[i] * d_i * k_ij - y[j] * d_j * k_jj
        if 0.0 < a_i_new < c:
            new_bias = b1
        elif 0.0 < a_j_new < c:
            new_bias = b2
        else:
            new_bias = 0.5 * (b1 + b2)
        self.errors += (
            y[i] * d_i * k[:, i] + y[j] * d_j * k[:, j] + (new_bias - self.bias)
        )
        alpha[i] = a_i_new
        alpha[j] = a_j_new
        self.bias = new_bias
        return True

    def _endpoint_choice(self, i: int, j: int, low: float, high: float) -> Optional[float]:
        k, y = self.kernel, self.y
        s = y[i] * y[j]
        # g_i = f(x_i) - bias, the kernel expansion without the bias term
        g_i = self.errors[i] + y[i] - self.bias
        g_j = self.errors[j] + y[j] - self.bias

        def objective_delta(a_j_cand: float) -> float:
            d_j = a_j_cand - self.alpha[j]
            d_i = -s * d_j
            return (
                d_i * (1.0 - y[i] * g_i)
                + d_j * (1.0 - y[j] * g_j)
                - 0.5 * d_i * d_i * k[i, i]
                - 0.5 * d_j * d_j * k[j, j]
                - s * d_i * d_j * k[i, j]
            )

        gain_low = objective_delta(low)
        gain_high = objective_delta(high)
        best, gain = (low, gain_low) if gain_low >= gain_high else (high, gain_high)
        if gain <= _STEP_EPS:
            return None
        return best


def _solve_smo(
    kernel: np.ndarray,
    y: np.ndarray,
    c: float,
    tol: float,
    max_passes: int,
) -> Tuple[np.ndarray, float]:
    state = _SmoState(kernel, y, c, tol)
    n = state.n
    for _ in range(max_passes):
        state.refresh_errors()
        amounts = state.violation_amounts()
        if not np.any(amounts > tol):
            return state.alpha, _final_bias(state)
        changed = 0
        for i in range(n):
            if not state.violates(i):
                continue
            # partner with the maximal error gap; fall back down the ranking
            # if the top candidate cannot move (keeps the sweep total)
            gaps = np.abs(state.errors - state.errors[i])
            gaps[i] = -1.0
            for j in np.argsort(-gaps, kind="stable"):
                if gaps[j] < 0:
                    break
                if state.take_step(i, int(j)):
                    changed += 1
                    break
        # the sweep alone can stall on tiny steps; finish the pass by
        # resolving the extreme inconsistent pairs, which always move
        for _ in range(n):
            pair = state.extreme_violating_pair()
            if pair is None or not state.take_step(*pair):
                break
            changed += 1
        if changed == 0:
            break
    state.refresh_errors()
    worst = float(state.violation_amounts().max(initial=0.0))
    if worst <= tol:
        return state.alpha, _final_bias(state)
    raise TrainingBudgetExceededError(
        "SMO did not converge within %d passes; worst KKT violation %.3e (tol %.3e)"
        % (max_passes, worst, tol),
        worst_violation=worst,
    )


def _final_bias(state: _SmoState) -> float:
    """Bias recomputed from KKT-satisfying support vectors.

    Free support vectors (0 < alpha < C) pin the bias exactly; without any,
    the midpoint of the feasible bias interval of the bound points is used.
    """
    g = state.kernel @ (state.alpha * state.y)
    free = (state.alpha > 0.0) & (state.alpha < state.c)
    if np.any(free):
        return float(np.mean(state.y[free] - g[free]))
    lower = -math.inf
    upper = math.inf
    for i in range(state.n):
        bound = state.y[i] - g[i]
        at_zero = state.alpha[i] == 0.0
        wants_margin_above = (at_zero and state.y[i] > 0) or (not at_zero and state.y[i] < 0)
        if wants_margin_above:
            lower = max(lower, bound)
        else:
            upper = min(upper, bound)
    if not math.isfinite(lower):
        return float(upper)
    if not math.isfinite(upper):
        return float(lower)
    return 0.5 * (lower + upper)


def train_binary(
    data: LabeledDataset,
    c: float = DEFAULT_C,
    gamma: float = DEFAULT_GAMMA,
    tol: float = DEFAULT_TOL,
    max_passes: int = DEFAULT_MAX_PASSES,
) -> BinarySvmModel:
    """Train one binary model on an already-standardized 2-class dataset.

    The positive class is the lexicographically smaller of the two labels.
    Duplicated points with conflicting labels are fine (soft margin absorbs
    them); failure to converge raises TrainingBudgetExceededError carrying
    the worst remaining KKT violation.
    """
    if c <= 0 or gamma <= 0 or tol <= 0:
        raise RejectedInputError("C, gamma, and tol must all be positive")
    classes = data.classes()
    if len(classes) != 2:
        raise RejectedInputError(
            "binary training needs exactly 2 classes, got %d" % len(classes)
        )
    pos, neg = classes[0], classes[1]
    y = np.where(np.asarray(data.labels) == pos, 1.0, -1.0)
    x = data.vectors
    kernel = _rbf_matrix(x, x, gamma)
    alpha, bias = _solve_smo(kernel, y, c, tol, max_passes)
    sv_mask = alpha > 0.0
    return BinarySvmModel(
        support_vectors=x[sv_mask].copy(),
        alphas_signed=(alpha * y)[sv_mask],
        bias=bias,
        kernel_gamma=gamma,
        penalty=c,
        label_pair=(pos, neg),
    )


def train(
    data: LabeledDataset,
    c: float = DEFAULT_C,
    gamma: float = DEFAULT_GAMMA,
    tol: float = DEFAULT_TOL,
    max_passes: int = DEFAULT_MAX_PASSES,
) -> MulticlassSvmModel:
    """Train the one-vs-one ensemble: scaling, then one binary per label pair."""
    classes = data.classes()
    if len(classes) < 2:
        raise InsufficientClassDataError("multi-class training needs at least 2 classes")
    labels = np.asarray(data.labels)
    for cls in classes:
        count = int(np.sum(labels == cls))
        if count < 2:
            raise InsufficientClassDataError(
                "class %r has %d sample(s); at least 2 required" % (cls, count)
            )
    scaling = fit_scaling(data)
    standardized = scaling.apply(data.vectors)
    binaries = []
    for pos, neg in combinations(classes, 2):
        mask = (labels == pos) | (labels == neg)
        subset = LabeledDataset(
            vectors=standardized[mask], labels=tuple(labels[mask])
        )
        binaries.append(train_binary(subset, c=c, gamma=gamma, tol=tol,
                                     max_passes=max_passes))
    return MulticlassSvmModel(
        classes=tuple(classes), binaries=tuple(binaries), scaling=scaling
    )


def predict(model: MulticlassSvmModel, vector) -> str:
    """Majority vote over all pairwise binaries for a single feature vector."""
    return predict_many(model, _vector_of(vector).reshape(1, -1))[0]


def predict_many(model: MulticlassSvmModel, vectors) -> List[str]:
    """Vectorized prediction for a feature matrix (rows are vectors).

    Each binary votes for its positive label when its decision value is
    >= 0 (an exact zero therefore goes to the lexicographically smaller
    label of the pair); the class with most votes wins, ties broken by the
    smallest label in class sort order.
    """
    x = model.scaling.apply(_as_matrix(vectors))
    index = {label: pos for pos, label in enumerate(model.classes)}
    votes = np.zeros((x.shape[0], len(model.classes)), dtype=np.int64)
    for binary in model.binaries:
        d = binary.decision_many(x)
        pos_idx = index[binary.label_pair[0]]
        neg_idx = index[binary.label_pair[1]]
        positive = d >= 0.0
        votes[positive, pos_idx] += 1
        votes[~positive, neg_idx] += 1
    winners = np.argmax(votes, axis=1)  # argmax takes the first max: smallest label
    return [model.classes[w] for w in winners]


def _format_real(value: float) -> str:
    # 17 significant digits round-trip any float64 exactly
    return "%.17e" % value


def _reals_line(prefix: str, values: np.ndarray) -> str:
    return prefix + " " + " ".join(_format_real(v) for v in values)


def save_model(model: MulticlassSvmModel, path) -> None:
    """Write a model as versioned plain text; loading reproduces predictions bit-exactly."""
    lines = [MODEL_HEADER]
    lines.append("classes %d" % len(model.classes))
    for label in model.classes:
        if "\n" in label or "\r" in label:
            raise RejectedInputError("class label %r is not file-safe" % label)
        lines.append(label)
    lines.append(_reals_line("scaling shift", model.scaling.shift))
    lines.append(_reals_line("scaling scale", model.scaling.scale))
    lines.append("binaries %d" % len(model.binaries))
    index = {label: pos for pos, label in enumerate(model.classes)}
    for binary in model.binaries:
        lines.append(
            "binary %d %d gamma %s C %s bias %s sv %d"
            % (
                index[binary.label_pair[0]],
                index[binary.label_pair[1]],
                _format_real(binary.kernel_gamma),
                _format_real(binary.penalty),
                _format_real(binary.bias),
                binary.alphas_signed.size,
            )
        )
        for alpha, row in zip(binary.alphas_signed, binary.support_vectors):
            lines.append(_format_real(alpha) + " " + " ".join(_format_real(v) for v in row))
    lines.append("end")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")


class _ModelReader:
    def __init__(self, path):
        self.path = path
        with open(path, "r", encoding="ascii") as fh:
            self.lines = fh.read().splitlines()
        self.pos = 0

    def next_line(self, what: str) -> str:
        if self.pos >= len(self.lines):
            raise RejectedInputError(
                "%s:%d: unexpected end of model file while reading %s"
                % (self.path, self.pos + 1, what)
            )
        line = self.lines[self.pos]
        self.pos += 1
        return line

    def fail(self, msg: str):
        raise RejectedInputError("%s:%d: %s" % (self.path, self.pos, msg))


def load_model(path) -> MulticlassSvmModel:
    """Read a model written by save_model, validating structure line by line."""
    reader = _ModelReader(path)
    if reader.next_line("header") != MODEL_HEADER:
        reader.fail("expected header %r" % MODEL_HEADER)

    def expect_fields(line: str, keyword: str, count: int) -> List[str]:
        parts = line.split()
        if len(parts) != count or parts[0] != keyword:
            reader.fail("malformed %s line: %r" % (keyword, line))
        return parts

    parts = expect_fields(reader.next_line("class count"), "classes", 2)
    try:
        k = int(parts[1])
    except ValueError:
        reader.fail("class count %r is not an integer" % parts[1])
    classes = tuple(reader.next_line("class label") for _ in range(k))

    def reals_from(parts: List[str]) -> np.ndarray:
        try:
            return np.array([float(p) for p in parts], dtype=np.float64)
        except ValueError:
            reader.fail("expected real numbers, got %r" % (parts,))

    shift_parts = reader.next_line("scaling shift").split()
    if shift_parts[:2] != ["scaling", "shift"]:
        reader.fail("expected 'scaling shift' line")
    scale_parts = reader.next_line("scaling scale").split()
    if scale_parts[:2] != ["scaling", "scale"]:
        reader.fail("expected 'scaling scale' line")
    scaling = ScalingParams(
        shift=reals_from(shift_parts[2:]), scale=reals_from(scale_parts[2:])
    )

    parts = expect_fields(reader.next_line("binary count"), "binaries", 2)
    binary_count = int(parts[1])
    binaries = []
    for _ in range(binary_count):
        head = reader.next_line("binary header").split()
        if (
            len(head) != 11
            or head[0] != "binary"
            or head[3] != "gamma"
            or head[5] != "C"
            or head[7] != "bias"
            or head[9] != "sv"
        ):
            reader.fail("malformed binary header: %r" % " ".join(head))
        try:
            pos_idx, neg_idx = int(head[1]), int(head[2])
            gamma = float(head[4])
            c = float(head[6])
            bias = float(head[8])
            sv_count = int(head[10])
        except ValueError:
            reader.fail("malformed binary header numbers")
        if not (0 <= pos_idx < k and 0 <= neg_idx < k):
            reader.fail("binary class index out of range")
        alphas = np.empty(sv_count, dtype=np.float64)
        rows = np.empty((sv_count, scaling.shift.size), dtype=np.float64)
        for r in range(sv_count):
            values = reals_from(reader.next_line("support vector").split())
            if values.size != 1 + scaling.shift.size:
                reader.fail("support vector row has %d fields" % values.size)
            alphas[r] = values[0]
            rows[r] = values[1:]
        binaries.append(
            BinarySvmModel(
                support_vectors=rows,
                alphas_signed=alphas,
                bias=bias,
                kernel_gamma=gamma,
                penalty=c,
                label_pair=(classes[pos_idx], classes[neg_idx]),
            )
        )
    if reader.next_line("terminator") != "end":
        reader.fail("expected terminating 'end' line")
    return MulticlassSvmModel(classes=classes, binaries=tuple(binaries), scaling=scaling)
