"""Multi-class RBF-kernel SVM for the finger-count gesture.

One binary machine per class pair (one-vs-one), trained with an SMO dual
solver, predictions by majority vote. Class ids double as commanded walking
speeds in km/h (0 = both-fists stop, 1..5 = number of extended fingers).

Training is deterministic given the sample order; prediction is a pure
function of (model, features). Models persist to a versioned text format,
see MODEL_FORMAT_VERSION below.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from ._backend import kernels
from .errors import ModelFormatError
from .features import FEATURE_DIM

N_CLASSES = 6
DEFAULT_C_REG = 10.0
KKT_TOLERANCE = 1e-3
MAX_SMO_ITERATIONS = 200_000

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True, slots=True)
class LabeledSample:
    features: np.ndarray  # shape (30,)
    label: int            # class id == commanded speed in km/h


@dataclass(frozen=True, slots=True)
class BinaryMachine:
    """Decision machine for one class pair; positive decisions vote class_pos."""

    class_pos: int
    class_neg: int
    support_vectors: np.ndarray  # (n_sv, FEATURE_DIM)
    dual_coef: np.ndarray        # (n_sv,), alpha_i * y_i
    bias: float
    kkt_violation: float = float("nan")  # informational, not persisted


@dataclass(frozen=True, slots=True)
class ClassifierModel:
    classes: tuple[int, ...]
    rbf_gamma: float
    c_reg: float
    machines: tuple[BinaryMachine, ...]
    # all machines' support vectors stacked once for fast kernel rows
    _sv_stack: np.ndarray = field(repr=False, default=None)
    _sv_slices: tuple[tuple[int, int], ...] = field(repr=False, default=None)


def _build_model(classes, gamma, c_reg, machines) -> ClassifierModel:
    stack = np.concatenate([m.support_vectors for m in machines], axis=0) \
        if machines else np.zeros((0, FEATURE_DIM))
    slices = []
    pos = 0
    for m in machines:
        slices.append((pos, pos + len(m.support_vectors)))
        pos += len(m.support_vectors)
    return ClassifierModel(tuple(classes), float(gamma), float(c_reg),
                           tuple(machines), stack, tuple(slices))


def _check_features(features: np.ndarray) -> np.ndarray:
    arr = np.asarray(features, dtype=np.float64)
    if arr.shape != (FEATURE_DIM,):
        raise ValueError(f"feature vector must have shape ({FEATURE_DIM},), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("feature vector contains non-finite values")
    return arr


def scale_gamma(x: np.ndarray) -> float:
    """Variance-scaled default kernel width, 1 / (dim * var(X)).

    Features are unscaled metres, so a fixed gamma has no natural unit; this
    heuristic makes typical pairwise distances O(1) inside the kernel.
    """
    var = float(x.var())
    return 1.0 / (x.shape[1] * var) if var > 0.0 else 1.0 / x.shape[1]


def train(samples: list[LabeledSample], rbf_gamma: float | None = None,
          c_reg: float = DEFAULT_C_REG) -> ClassifierModel:
    """Train a one-vs-one model; requires >= 2 classes, >= 1 sample each.

    ``rbf_gamma=None`` selects the variance-scaled default; the resolved
    numeric value is stored on the model.
    """
    if not samples:
        raise ValueError("no training samples")
    x = np.stack([_check_features(s.features) for s in samples])
    labels = np.array([int(s.label) for s in samples])
    classes = sorted(set(labels.tolist()))
    if len(classes) < 2:
        raise ValueError(f"need at least 2 classes, got {classes}")
    if rbf_gamma is None:
        rbf_gamma = scale_gamma(x)
    if rbf_gamma <= 0.0 or c_reg <= 0.0:
        raise ValueError("rbf_gamma and c_reg must be positive")

    machines = []
    for ca, cb in combinations(classes, 2):  # lower class id is the +1 side
        mask = (labels == ca) | (labels == cb)
        xp = x[mask]
        y = np.where(labels[mask] == ca, 1.0, -1.0)
        k = kernels.rbf_gram(xp, rbf_gamma)
        alpha, bias, violation, _ = kernels.smo_solve(
            k, y, c_reg, KKT_TOLERANCE, MAX_SMO_ITERATIONS)
        sv = alpha > 0.0
        machines.append(BinaryMachine(
            class_pos=ca, class_neg=cb,
            support_vectors=np.ascontiguousarray(xp[sv]),
            dual_coef=np.ascontiguousarray(alpha[sv] * y[sv]),
            bias=float(bias),
            kkt_violation=float(violation),
        ))
    return _build_model(classes, rbf_gamma, c_reg, machines)


def decision_values(model: ClassifierModel, features: np.ndarray) -> np.ndarray:
    """Per-pair decision values, in the model's machine order."""
    if not model.machines:
        raise ValueError("model has no trained machines")
    arr = _check_features(features)
    krow = kernels.rbf_cross(arr[None, :], model._sv_stack, model.rbf_gamma)[0]
    out = np.empty(len(model.machines))
    for idx, (m, (lo, hi)) in enumerate(zip(model.machines, model._sv_slices)):
        out[idx] = float(np.dot(m.dual_coef, krow[lo:hi])) + m.bias
    return out


def predict(model: ClassifierModel, features: np.ndarray) -> int:
    """Majority vote over all pair decisions; vote ties go to the lowest class id."""
    values = decision_values(model, features)
    votes = {c: 0 for c in model.classes}
    for m, d in zip(model.machines, values):
        votes[m.class_pos if d >= 0.0 else m.class_neg] += 1
    # sorted classes + strict > keeps the lowest id among tied winners
    best, best_votes = None, -1
    for c in model.classes:
        if votes[c] > best_votes:
            best, best_votes = c, votes[c]
    return best


def predict_batch(model: ClassifierModel, features: np.ndarray) -> np.ndarray:
    """Vectorized predict over rows of ``features`` (n, FEATURE_DIM)."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != FEATURE_DIM:
        raise ValueError(f"expected (n, {FEATURE_DIM}) array, got {x.shape}")
    if not model.machines:
        raise ValueError("model has no trained machines")
    krows = kernels.rbf_cross(x, model._sv_stack, model.rbf_gamma)
    class_index = {c: i for i, c in enumerate(model.classes)}
    votes = np.zeros((len(x), len(model.classes)), dtype=np.int64)
    for m, (lo, hi) in zip(model.machines, model._sv_slices):
        d = krows[:, lo:hi] @ m.dual_coef + m.bias
        pos = d >= 0.0
        votes[pos, class_index[m.class_pos]] += 1
        votes[~pos, class_index[m.class_neg]] += 1
    winners = np.argmax(votes, axis=1)  # argmax returns the first = lowest id
    return np.array([model.classes[i] for i in winners])


# --- persistence --------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(x, ".16e")  # 17 significant digits: exact round-trip


def save_model(model: ClassifierModel) -> bytes:
    lines = [f"gestloco-svm v{MODEL_FORMAT_VERSION}",
             "classes " + " ".join(str(c) for c in model.classes),
             f"gamma {_fmt(model.rbf_gamma)}",
             f"c_reg {_fmt(model.c_reg)}",
             f"machines {len(model.machines)}"]
    for m in model.machines:
        lines.append(f"pair {m.class_pos} {m.class_neg}")
        lines.append(f"bias {_fmt(m.bias)}")
        lines.append(f"nsv {len(m.dual_coef)}")
        for coef, row in zip(m.dual_coef, m.support_vectors):
            lines.append(" ".join([_fmt(coef)] + [_fmt(v) for v in row]))
    return ("\n".join(lines) + "\n").encode("utf-8")


def load_model(data: bytes) -> ClassifierModel:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ModelFormatError(f"model file is not UTF-8: {exc}") from None
    lines = text.splitlines()
    cursor = 0

    def next_line(context: str) -> str:
        nonlocal cursor
        if cursor >= len(lines):
            raise ModelFormatError(f"truncated model file: expected {context}")
        line = lines[cursor]
        cursor += 1
        return line

    header = next_line("header")
    if header != f"gestloco-svm v{MODEL_FORMAT_VERSION}":
        raise ModelFormatError(f"unsupported model header {header!r}")
    try:
        classes = tuple(int(c) for c in next_line("classes").split()[1:])
        gamma = float(next_line("gamma").split()[1])
        c_reg = float(next_line("c_reg").split()[1])
        n_machines = int(next_line("machine count").split()[1])
        machines = []
        for _ in range(n_machines):
            pair = next_line("pair").split()
            if pair[0] != "pair":
                raise ModelFormatError(f"expected 'pair' line, got {pair[0]!r}")
            class_pos, class_neg = int(pair[1]), int(pair[2])
            bias = float(next_line("bias").split()[1])
            nsv = int(next_line("nsv").split()[1])
            coefs = np.empty(nsv)
            vectors = np.empty((nsv, FEATURE_DIM))
            for r in range(nsv):
                row = next_line("support vector row").split()
                if len(row) != 1 + FEATURE_DIM:
                    raise ModelFormatError(
                        f"support vector row has {len(row)} numbers, expected {1 + FEATURE_DIM}")
                coefs[r] = float(row[0])
                vectors[r] = [float(v) for v in row[1:]]
            machines.append(BinaryMachine(class_pos, class_neg, vectors, coefs, bias))
    except ModelFormatError:
        raise
    except (IndexError, ValueError) as exc:
        raise ModelFormatError(f"malformed model file: {exc}") from None
    expected = len(classes) * (len(classes) - 1) // 2
    if n_machines != expected:
        raise ModelFormatError(
            f"{len(classes)} classes require {expected} machines, file has {n_machines}")
    return _build_model(classes, gamma, c_reg, machines)
