"""Readout classifiers (softmax single-layer perceptron, random forest) and
stratified 10-fold cross-validation with accuracy, macro F1, and MCC."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
from sklearn.ensemble import RandomForestClassifier

READOUT_SLP = "slp"
READOUT_FOREST = "forest"

METRIC_NAMES = ("accuracy", "f1_macro", "mcc")


class ReadoutError(ValueError):
    pass


@dataclass(frozen=True)
class SlpParams:
    learning_rate: float = 0.01
    epochs: int = 200
    batch_size: int = 32
    l2: float = 1e-4

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ReadoutError("learning_rate must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise ReadoutError("epochs and batch_size must be >= 1")
        if self.l2 < 0:
            raise ReadoutError("l2 must be non-negative")


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 500
    min_split: int = 2
    bootstrap: bool = True

    def __post_init__(self):
        if self.n_trees < 1:
            raise ReadoutError("n_trees must be >= 1")


@dataclass(frozen=True)
class ReadoutSpec:
    kind: str
    slp: SlpParams = field(default_factory=SlpParams)
    forest: ForestParams = field(default_factory=ForestParams)

    def __post_init__(self):
        if self.kind not in (READOUT_SLP, READOUT_FOREST):
            raise ReadoutError(f"unknown readout kind: {self.kind!r}")


@dataclass(frozen=True)
class CvReport:
    per_fold: dict[str, np.ndarray]  # metric -> (k,) fold values
    mean: dict[str, float]
    std: dict[str, float]  # population std over folds
    fold_digest: str


def stratified_folds(labels: np.ndarray, k: int = 10, seed=0) -> np.ndarray:
    """Fold id per example: per-class seeded shuffle, then round-robin."""
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    folds = np.empty(labels.size, dtype=np.int64)
    for cls in np.unique(labels):
        idx = np.nonzero(labels == cls)[0]
        if idx.size < k:
            raise ReadoutError(f"class {cls} has {idx.size} members, needs >= {k}")
        rng.shuffle(idx)
        folds[idx] = np.arange(idx.size) % k
    return folds


class SlpClassifier:
    """Softmax regression trained by seeded mini-batch gradient descent on
    cross-entropy with L2 penalty; features are z-scored with train-set
    statistics (zero-variance columns map to 0)."""

    def __init__(self, params: SlpParams, n_classes: int, seed=0):
        self.params = params
        self.n_classes = n_classes
        self.seed = seed
        self.mu_: np.ndarray | None = None
        self.sigma_: np.ndarray | None = None
        self.weights_: np.ndarray | None = None
        self.bias_: np.ndarray | None = None

    def _standardize(self, x: np.ndarray) -> np.ndarray:
        z = (x - self.mu_) / self.sigma_
        return z

    def fit(self, x: np.ndarray, y: np.ndarray) -> "SlpClassifier":
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=np.int64)
        if not np.isfinite(x).all():
            raise ReadoutError("non-finite feature values")
        self.mu_ = x.mean(axis=0)
        sigma = x.std(axis=0)
        self.sigma_ = np.where(sigma == 0, 1.0, sigma)  # zero-variance column -> z = 0
        z = self._standardize(x)
        n, f = z.shape
        c = self.n_classes
        self.weights_ = np.zeros((f, c))
        self.bias_ = np.zeros(c)
        onehot = np.zeros((n, c))
        onehot[np.arange(n), y] = 1.0
        rng = np.random.default_rng(self.seed)
        p = self.params
        for _ in range(p.epochs):
            order = rng.permutation(n)
            for start in range(0, n, p.batch_size):
                sel = order[start : start + p.batch_size]
                zb, tb = z[sel], onehot[sel]
                logits = zb @ self.weights_ + self.bias_
                logits -= logits.max(axis=1, keepdims=True)
                probs = np.exp(logits)
                probs /= probs.sum(axis=1, keepdims=True)
                delta = (probs - tb) / sel.size
                grad_w = zb.T @ delta + p.l2 * self.weights_
                grad_b = delta.sum(axis=0)
                self.weights_ -= p.learning_rate * grad_w
                self.bias_ -= p.learning_rate * grad_b
        return self

    def predict(self, x: np.ndarray) -> np.ndarray:
        z = self._standardize(np.asarray(x, dtype=float))
        return np.argmax(z @ self.weights_ + self.bias_, axis=1)


def train_slp(x, y, spec: ReadoutSpec, n_classes: int, seed=0) -> SlpClassifier:
    return SlpClassifier(spec.slp, n_classes, seed=seed).fit(x, y)


def train_forest(x, y, spec: ReadoutSpec, seed=0) -> RandomForestClassifier:
    """CART forest: Gini splits, sqrt(F) features per node, bootstrap
    resamples, trees grown until pure."""
    p = spec.forest
    rng = np.random.default_rng(seed)
    model = RandomForestClassifier(
        n_estimators=p.n_trees,
        criterion="gini",
        max_features="sqrt",
        min_samples_split=p.min_split,
        bootstrap=p.bootstrap,
        random_state=int(rng.integers(2**31 - 1)),
        n_jobs=1,
    )
    model.fit(x, y)
    return model


def confusion_matrix(y_true: np.ndarray, y_pred: np.ndarray, n_classes: int) -> np.ndarray:
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise ReadoutError("y_true and y_pred must have equal length")
    if y_true.size and (
        min(y_true.min(), y_pred.min()) < 0 or max(y_true.max(), y_pred.max()) >= n_classes
    ):
        raise ReadoutError("label out of range")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    return cm


def metrics(y_true, y_pred, n_classes: int) -> dict[str, float]:
    """Accuracy, macro F1 (degenerate per-class denominators map to 0), and
    the multiclass Matthews correlation (0 when a radicand factor is 0)."""
    cm = confusion_matrix(y_true, y_pred, n_classes)
    s = cm.sum()
    correct = np.trace(cm)
    accuracy = correct / s

    f1s = np.zeros(n_classes)
    for k in range(n_classes):
        tp = cm[k, k]
        denom = cm[k, :].sum() + cm[:, k].sum()  # 2*tp + fp + fn
        f1s[k] = 2.0 * tp / denom if denom > 0 else 0.0
    f1_macro = float(f1s.mean())

    t = cm.sum(axis=1).astype(float)  # true counts per class
    p = cm.sum(axis=0).astype(float)  # predicted counts per class
    cov = correct * s - p @ t
    var_p = s * s - p @ p
    var_t = s * s - t @ t
    mcc = float(cov / np.sqrt(var_p * var_t)) if var_p > 0 and var_t > 0 else 0.0
    return {"accuracy": float(accuracy), "f1_macro": f1_macro, "mcc": mcc}


def _fit_predict(x_train, y_train, x_test, spec: ReadoutSpec, n_classes: int, seed):
    if spec.kind == READOUT_SLP:
        model = train_slp(x_train, y_train, spec, n_classes, seed=seed)
        return model.predict(x_test)
    model = train_forest(x_train, y_train, spec, seed=seed)
    return model.predict(x_test)


def cross_validate(
    features: np.ndarray, labels: np.ndarray, readout: ReadoutSpec, seed=0, k: int = 10
) -> CvReport:
    """k-fold stratified CV; per-metric mean and population std over folds."""
    x = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=np.int64)
    n_classes = int(y.max()) + 1
    root = np.random.SeedSequence(seed) if isinstance(seed, int) else seed
    s_folds, s_models = root.spawn(2)
    folds = stratified_folds(y, k=k, seed=s_folds)
    per_fold = {m: np.zeros(k) for m in METRIC_NAMES}
    model_seeds = s_models.spawn(k)
    for fold in range(k):
        test = folds == fold
        y_pred = _fit_predict(x[~test], y[~test], x[test], readout, n_classes, model_seeds[fold])
        scores = metrics(y[test], y_pred, n_classes)
        for m in METRIC_NAMES:
            per_fold[m][fold] = scores[m]
    digest = hashlib.sha256(folds.tobytes()).hexdigest()[:16]
    return CvReport(
        per_fold=per_fold,
        mean={m: float(per_fold[m].mean()) for m in METRIC_NAMES},
        std={m: float(per_fold[m].std()) for m in METRIC_NAMES},
        fold_digest=digest,
    )
