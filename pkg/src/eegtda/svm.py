"""Support vector classification on feature vectors.

A compact SMO solver optimizes the usual box-constrained dual, two
coefficients at a time. The partner index of each violating coefficient is
drawn from a tiny inline LCG, so identical seeds give identical models on
every platform, with or without numba. Standardization is fitted inside
training (and inside every cross-validation fold) on the training rows
only; models carry their scaler and apply it to raw features at predict
time.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, InsufficientDataError, ParseError
from .features import N_FEATURES

MODEL_FORMAT = "eegtda-svm-1"

LCG_A = 6364136223846793005
LCG_C = 1442695040888963407
LCG_MASK = (1 << 64) - 1

_USE_NUMBA = os.environ.get("EEGTDA_PURE_PYTHON", "") != "1"
if _USE_NUMBA:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover
        _USE_NUMBA = False


@dataclass(frozen=True)
class KernelSpec:
    kind: str  # "linear" or "rbf"
    gamma: float | None = None

    def __post_init__(self):
        if self.kind not in ("linear", "rbf"):
            raise ConfigError(f"unknown kernel {self.kind!r}")
        if self.kind == "rbf" and (self.gamma is None or self.gamma <= 0):
            raise ConfigError("rbf kernel needs gamma > 0")
        if self.kind == "linear" and self.gamma is not None:
            raise ConfigError("linear kernel takes no gamma")

    def label(self) -> str:
        return "linear" if self.kind == "linear" else f"rbf(gamma={self.gamma:g})"


LINEAR = KernelSpec("linear")


@dataclass(frozen=True, eq=False)
class Scaler:
    means: np.ndarray
    stds: np.ndarray  # zeros already replaced by 1


def fit_scaler(x: np.ndarray) -> Scaler:
    """Per-column z-score parameters; constant columns get std 1."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise InsufficientDataError(
            f"scaler needs at least 2 rows, got shape {x.shape}"
        )
    means = x.mean(axis=0)
    stds = x.std(axis=0)
    stds = np.where(stds == 0.0, 1.0, stds)
    return Scaler(means=means, stds=stds)


def apply_scaler(scaler: Scaler, x: np.ndarray) -> np.ndarray:
    return (np.asarray(x, dtype=np.float64) - scaler.means) / scaler.stds


def kernel_matrix(spec: KernelSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if spec.kind == "linear":
        return a @ b.T
    sq = (
        (a * a).sum(axis=1)[:, None]
        + (b * b).sum(axis=1)[None, :]
        - 2.0 * (a @ b.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-spec.gamma * sq)


if _USE_NUMBA:

    @njit(cache=True)
    def _smo_numba(k, y, c, tol, max_passes, seed):
        n = k.shape[0]
        alpha = np.zeros(n)
        ay = np.zeros(n)
        b = 0.0
        state = np.uint64(seed)
        a_mul = np.uint64(LCG_A)
        c_add = np.uint64(LCG_C)
        converged = False
        sweeps = 0
        for _ in range(max_passes):
            sweeps += 1
            for i in range(n):
                ei = np.dot(ay, k[i]) + b - y[i]
                ri = y[i] * ei
                if (ri < -tol and alpha[i] < c) or (ri > tol and alpha[i] > 0.0):
                    state = state * a_mul + c_add
                    # int() would promote uint64 through float64 here
                    j = np.int64(state % np.uint64(n - 1))
                    if j >= i:
                        j += 1
                    ej = np.dot(ay, k[j]) + b - y[j]
                    ai_old = alpha[i]
                    aj_old = alpha[j]
                    if y[i] != y[j]:
                        lo = max(0.0, aj_old - ai_old)
                        hi = min(c, c + aj_old - ai_old)
                    else:
                        lo = max(0.0, ai_old + aj_old - c)
                        hi = min(c, ai_old + aj_old)
                    if lo == hi:
                        continue
                    eta = 2.0 * k[i, j] - k[i, i] - k[j, j]
                    if eta >= 0.0:
                        continue
                    aj = aj_old - y[j] * (ei - ej) / eta
                    if aj < lo:
                        aj = lo
                    elif aj > hi:
                        aj = hi
                    if abs(aj - aj_old) < 1e-5:
                        continue
                    ai = ai_old + y[i] * y[j] * (aj_old - aj)
                    b1 = (
                        b - ei
                        - y[i] * (ai - ai_old) * k[i, i]
                        - y[j] * (aj - aj_old) * k[i, j]
                    )
                    b2 = (
                        b - ej
                        - y[i] * (ai - ai_old) * k[i, j]
                        - y[j] * (aj - aj_old) * k[j, j]
                    )
                    alpha[i] = ai
                    alpha[j] = aj
                    ay[i] = ai * y[i]
                    ay[j] = aj * y[j]
                    if 0.0 < ai < c:
                        b = b1
                    elif 0.0 < aj < c:
                        b = b2
                    else:
                        b = (b1 + b2) / 2.0
            # KKT check over all points
            ok = True
            for i in range(n):
                ei = np.dot(ay, k[i]) + b - y[i]
                ri = y[i] * ei
                if (ri < -tol and alpha[i] < c - 1e-12) or (
                    ri > tol and alpha[i] > 1e-12
                ):
                    ok = False
                    break
            if ok:
                converged = True
                break
        return alpha, b, converged, sweeps


def _smo_python(k, y, c, tol, max_passes, seed):
    n = k.shape[0]
    alpha = np.zeros(n)
    ay = np.zeros(n)
    b = 0.0
    state = seed & LCG_MASK
    converged = False
    sweeps = 0
    for _ in range(max_passes):
        sweeps += 1
        for i in range(n):
            ei = float(np.dot(ay, k[i])) + b - y[i]
            ri = y[i] * ei
            if (ri < -tol and alpha[i] < c) or (ri > tol and alpha[i] > 0.0):
                state = (state * LCG_A + LCG_C) & LCG_MASK
                j = int(state % (n - 1))
                if j >= i:
                    j += 1
                ej = float(np.dot(ay, k[j])) + b - y[j]
                ai_old = alpha[i]
                aj_old = alpha[j]
                if y[i] != y[j]:
                    lo = max(0.0, aj_old - ai_old)
                    hi = min(c, c + aj_old - ai_old)
                else:
                    lo = max(0.0, ai_old + aj_old - c)
                    hi = min(c, ai_old + aj_old)
                if lo == hi:
                    continue
                eta = 2.0 * k[i, j] - k[i, i] - k[j, j]
                if eta >= 0.0:
                    continue
                aj = aj_old - y[j] * (ei - ej) / eta
                aj = min(max(aj, lo), hi)
                if abs(aj - aj_old) < 1e-5:
                    continue
                ai = ai_old + y[i] * y[j] * (aj_old - aj)
                b1 = (
                    b - ei
                    - y[i] * (ai - ai_old) * k[i, i]
                    - y[j] * (aj - aj_old) * k[i, j]
                )
                b2 = (
                    b - ej
                    - y[i] * (ai - ai_old) * k[i, j]
                    - y[j] * (aj - aj_old) * k[j, j]
                )
                alpha[i] = ai
                alpha[j] = aj
                ay[i] = ai * y[i]
                ay[j] = aj * y[j]
                if 0.0 < ai < c:
                    b = b1
                elif 0.0 < aj < c:
                    b = b2
                else:
                    b = (b1 + b2) / 2.0
        e_all = k @ ay + b - y
        r_all = y * e_all
        viol = ((r_all < -tol) & (alpha < c - 1e-12)) | (
            (r_all > tol) & (alpha > 1e-12)
        )
        if not viol.any():
            converged = True
            break
    return alpha, b, converged, sweeps


@dataclass(frozen=True, eq=False)
class SvmModel:
    kernel: KernelSpec
    c: float
    support_vectors: np.ndarray  # rows already standardized
    dual_coef: np.ndarray  # alpha_i * y_i for the support vectors
    bias: float
    scaler: Scaler
    converged: bool
    n_features: int

    def decision_function(self, x_raw: np.ndarray) -> np.ndarray:
        x = np.asarray(x_raw, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.n_features:
            raise ConfigError(
                f"expected S x {self.n_features} feature matrix, got {x.shape}"
            )
        xs = apply_scaler(self.scaler, x)
        k = kernel_matrix(self.kernel, xs, self.support_vectors)
        return k @ self.dual_coef + self.bias

    def predict(self, x_raw: np.ndarray) -> np.ndarray:
        """Class labels in {-1, +1}; the boundary itself maps to +1."""
        return np.where(self.decision_function(x_raw) >= 0.0, 1, -1)


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    confusion: tuple[tuple[int, int], tuple[int, int]]  # rows true, cols predicted, class order (-1, +1)
    count: int
    per_fold: tuple[float, ...] | None = None


def train_svc(
    x: np.ndarray,
    y: np.ndarray,
    kernel: KernelSpec = LINEAR,
    c: float = 1.0,
    tol: float = 1e-3,
    max_passes: int = 200,
    seed: int = 0,
) -> SvmModel:
    """Fit a soft-margin SVC on raw features.

    y holds class labels in {-1, +1}. Standardization is fitted here on x.
    If the sweep budget runs out before every point satisfies the KKT
    conditions within tol, the best iterate is returned with
    converged=False rather than raising.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ConfigError(f"feature matrix {x.shape} does not match {y.shape} labels")
    classes = np.unique(y)
    if not np.array_equal(classes, [-1.0, 1.0]):
        raise ConfigError(f"need both classes -1 and +1, got {classes}")
    if c <= 0:
        raise ConfigError(f"C must be positive, got {c}")

    scaler = fit_scaler(x)
    xs = apply_scaler(scaler, x)
    k = kernel_matrix(kernel, xs, xs)
    if _USE_NUMBA:
        alpha, bias, converged, _ = _smo_numba(
            np.ascontiguousarray(k), y, float(c), float(tol), int(max_passes),
            np.uint64(seed & LCG_MASK),
        )
    else:
        alpha, bias, converged, _ = _smo_python(
            k, y, float(c), float(tol), int(max_passes), seed
        )

    sv = alpha > 1e-12
    return SvmModel(
        kernel=kernel,
        c=float(c),
        support_vectors=xs[sv],
        dual_coef=(alpha * y)[sv],
        bias=float(bias),
        scaler=scaler,
        converged=bool(converged),
        n_features=x.shape[1],
    )


def evaluate(model: SvmModel, x: np.ndarray, y: np.ndarray) -> EvalReport:
    """Accuracy and confusion matrix on raw features (scaled internally)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    if x.shape[0] < 1:
        raise InsufficientDataError("evaluation needs at least one row")
    pred = model.predict(x)
    conf = [[0, 0], [0, 0]]
    for t, p in zip(y, pred):
        conf[int(t > 0)][int(p > 0)] += 1
    correct = conf[0][0] + conf[1][1]
    return EvalReport(
        accuracy=correct / len(y),
        confusion=((conf[0][0], conf[0][1]), (conf[1][0], conf[1][1])),
        count=int(len(y)),
    )


def stratified_folds(y: np.ndarray, folds: int, seed: int) -> list[np.ndarray]:
    """Deterministic stratified partition of indices into `folds` groups."""
    y = np.asarray(y)
    if folds < 2:
        raise ConfigError(f"need at least 2 folds, got {folds}")
    rng = np.random.Generator(np.random.PCG64(seed))
    buckets: list[list[int]] = [[] for _ in range(folds)]
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        if len(idx) < folds:
            raise ConfigError(
                f"class {cls} has {len(idx)} samples, fewer than {folds} folds"
            )
        idx = idx[rng.permutation(len(idx))]
        for pos, sample in enumerate(idx):
            buckets[pos % folds].append(int(sample))
    return [np.array(sorted(b), dtype=np.int64) for b in buckets]


def default_grid(x: np.ndarray) -> list[tuple[KernelSpec, float]]:
    """C in {0.1, 1, 10, 100} crossed with linear and three RBF gammas.

    The data-driven gamma is 1 / (n_features * var) with var the mean
    feature variance after standardization (about 1 except for constant
    columns).
    """
    xs = apply_scaler(fit_scaler(x), x)
    var = float(xs.var(axis=0).mean())
    if var <= 0:
        var = 1.0
    gammas = sorted({1.0 / (x.shape[1] * var), 0.01, 0.1})
    cells = []
    for c in (0.1, 1.0, 10.0, 100.0):
        cells.append((LINEAR, c))
        for g in gammas:
            cells.append((KernelSpec("rbf", g), c))
    return cells


@dataclass(frozen=True)
class GridCell:
    kernel: KernelSpec
    c: float
    mean_accuracy: float
    fold_accuracies: tuple[float, ...]


def cross_validate(
    x: np.ndarray,
    y: np.ndarray,
    grid: list[tuple[KernelSpec, float]] | None = None,
    folds: int = 5,
    seed: int = 0,
    tol: float = 1e-3,
    max_passes: int = 200,
) -> tuple[tuple[KernelSpec, float], list[GridCell]]:
    """Stratified k-fold grid search.

    Every fold refits the scaler on its own training part (train_svc does
    that internally). Ties in mean accuracy go to the smaller C, then
    linear before rbf, then the smaller gamma.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if grid is None:
        grid = default_grid(x)
    fold_idx = stratified_folds(y, folds, seed)
    all_idx = np.arange(len(y))

    def cell_order(cell):
        kernel, c = cell
        return (c, 0 if kernel.kind == "linear" else 1, kernel.gamma or 0.0)

    results = []
    for kernel, c in sorted(grid, key=cell_order):
        accs = []
        for f in range(folds):
            test_idx = fold_idx[f]
            train_mask = np.ones(len(y), dtype=bool)
            train_mask[test_idx] = False
            train_idx = all_idx[train_mask]
            model = train_svc(
                x[train_idx], y[train_idx], kernel=kernel, c=c,
                tol=tol, max_passes=max_passes, seed=seed + f,
            )
            accs.append(evaluate(model, x[test_idx], y[test_idx]).accuracy)
        results.append(
            GridCell(
                kernel=kernel, c=c,
                mean_accuracy=float(np.mean(accs)),
                fold_accuracies=tuple(accs),
            )
        )

    best = max(results, key=lambda r: r.mean_accuracy)  # first max wins ties
    return (best.kernel, best.c), results


def save_model(model: SvmModel, path, extra: dict | None = None) -> None:
    """Persist a model as versioned JSON.

    extra entries (e.g. a pipeline config hash) are merged into the
    document; load_model ignores keys it does not know.
    """
    doc = {
        "format": MODEL_FORMAT,
        "kernel": model.kernel.kind,
        "gamma": model.kernel.gamma,
        "C": model.c,
        "bias": model.bias,
        "converged": model.converged,
        "n_features": model.n_features,
        "scaler_means": [repr(float(v)) for v in model.scaler.means],
        "scaler_stds": [repr(float(v)) for v in model.scaler.stds],
        "support_vectors": [
            [repr(float(v)) for v in row] for row in model.support_vectors
        ],
        "dual_coef": [repr(float(v)) for v in model.dual_coef],
    }
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def load_model(path, expected_features: int = N_FEATURES) -> SvmModel:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid model JSON: {exc}") from None
    if doc.get("format") != MODEL_FORMAT:
        raise ParseError(
            f"{path}: unknown model format {doc.get('format')!r}, "
            f"expected {MODEL_FORMAT}"
        )
    if doc["n_features"] != expected_features:
        raise ConfigError(
            f"{path}: model has {doc['n_features']} features, "
            f"pipeline produces {expected_features}"
        )
    kernel = (
        LINEAR if doc["kernel"] == "linear" else KernelSpec("rbf", float(doc["gamma"]))
    )
    sv = np.array(
        [[float(v) for v in row] for row in doc["support_vectors"]], dtype=np.float64
    ).reshape(-1, doc["n_features"])
    return SvmModel(
        kernel=kernel,
        c=float(doc["C"]),
        support_vectors=sv,
        dual_coef=np.array([float(v) for v in doc["dual_coef"]]),
        bias=float(doc["bias"]),
        scaler=Scaler(
            means=np.array([float(v) for v in doc["scaler_means"]]),
            stds=np.array([float(v) for v in doc["scaler_stds"]]),
        ),
        converged=bool(doc["converged"]),
        n_features=int(doc["n_features"]),
    )
