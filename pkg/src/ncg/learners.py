"""Shallow classifier heads shared by the trait and STAC models.

Two families are offered behind one predict/predict_proba surface: a
gradient-boosted tree ensemble (histogram-based, fixed hyperparameters
from config) and a single-layer softmax head trained by full-batch
gradient descent with early stopping on validation loss. Both are
deterministic for a fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.ensemble import HistGradientBoostingClassifier

from .errors import DegenerateDataError


@dataclass(frozen=True)
class TreeParams:
    """Tree-ensemble hyperparameters.

    Validation-based early stopping is on by default as the overfitting
    guard; it also keeps noise-only fits from burning the full tree budget.
    """

    max_depth: int = 6
    n_trees: int = 200
    learning_rate: float = 0.1
    l2: float = 1.0
    min_samples_leaf: int = 4
    early_stopping: bool = True
    validation_fraction: float = 0.1
    n_iter_no_change: int = 10
    tol: float = 1e-2


DEFAULT_TREE_PARAMS = TreeParams()


class TreeEnsembleHead:
    """Gradient-boosted decision trees over a fixed feature layout."""

    def __init__(self, params: TreeParams = DEFAULT_TREE_PARAMS, seed: int = 0):
        self.params = params
        self.seed = seed
        self._model = HistGradientBoostingClassifier(
            max_depth=params.max_depth,
            max_iter=params.n_trees,
            learning_rate=params.learning_rate,
            l2_regularization=params.l2,
            min_samples_leaf=params.min_samples_leaf,
            early_stopping=params.early_stopping,
            validation_fraction=params.validation_fraction,
            n_iter_no_change=params.n_iter_no_change,
            tol=params.tol,
            random_state=seed,
        )
        self.n_classes: int | None = None

    def fit(self, features: np.ndarray, class_indices: np.ndarray, n_classes: int) -> "TreeEnsembleHead":
        present = np.unique(class_indices)
        if len(present) < 2:
            raise DegenerateDataError(
                f"training data contains a single class (index {present[0]})"
            )
        self.n_classes = n_classes
        self._model.fit(features, class_indices)
        return self

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        if self.n_classes is None:
            raise DegenerateDataError("model is not fitted")
        raw = self._model.predict_proba(np.asarray(features, dtype=np.float64))
        # Re-expand to the full class list: classes absent from training get 0.
        proba = np.zeros((raw.shape[0], self.n_classes))
        for col, cls in enumerate(self._model.classes_):
            proba[:, int(cls)] = raw[:, col]
        return proba


class LinearSoftmaxHead:
    """Single-layer softmax trained by full-batch gradient descent.

    Weights start at zero (the loss is convex, so no random init is
    needed); the only randomness is the validation split, which the seed
    pins. Training stops early when validation loss stops improving.
    """

    def __init__(
        self,
        learning_rate: float = 0.5,
        max_epochs: int = 400,
        l2: float = 1e-4,
        patience: int = 20,
        validation_fraction: float = 0.1,
        seed: int = 0,
    ):
        self.learning_rate = learning_rate
        self.max_epochs = max_epochs
        self.l2 = l2
        self.patience = patience
        self.validation_fraction = validation_fraction
        self.seed = seed
        self.weights: np.ndarray | None = None
        self.bias: np.ndarray | None = None
        self._mean: np.ndarray | None = None
        self._scale: np.ndarray | None = None
        self.n_classes: int | None = None
        self.epochs_run: int = 0

    @staticmethod
    def _softmax(logits: np.ndarray) -> np.ndarray:
        shifted = logits - logits.max(axis=1, keepdims=True)
        exp = np.exp(shifted)
        return exp / exp.sum(axis=1, keepdims=True)

    def _loss(self, X: np.ndarray, onehot: np.ndarray) -> float:
        proba = self._softmax(X @ self.weights + self.bias)
        ce = -np.mean(np.sum(onehot * np.log(proba + 1e-12), axis=1))
        return float(ce + 0.5 * self.l2 * np.sum(self.weights**2))

    def fit(self, features: np.ndarray, class_indices: np.ndarray, n_classes: int) -> "LinearSoftmaxHead":
        X = np.asarray(features, dtype=np.float64)
        y = np.asarray(class_indices, dtype=int)
        if len(np.unique(y)) < 2:
            raise DegenerateDataError("training data contains a single class")
        self.n_classes = n_classes
        self._mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale[scale == 0] = 1.0
        self._scale = scale
        X = (X - self._mean) / self._scale

        n = X.shape[0]
        rng = np.random.Generator(np.random.PCG64(self.seed))
        order = rng.permutation(n)
        n_val = max(1, int(round(n * self.validation_fraction)))
        val_idx, train_idx = order[:n_val], order[n_val:]
        if len(train_idx) == 0:
            train_idx = order
        onehot = np.eye(n_classes)[y]
        Xtr, Ytr = X[train_idx], onehot[train_idx]
        Xva, Yva = X[val_idx], onehot[val_idx]

        self.weights = np.zeros((X.shape[1], n_classes))
        self.bias = np.zeros(n_classes)
        best = (np.inf, self.weights.copy(), self.bias.copy())
        stall = 0
        for epoch in range(1, self.max_epochs + 1):
            proba = self._softmax(Xtr @ self.weights + self.bias)
            grad_logits = (proba - Ytr) / len(Xtr)
            self.weights -= self.learning_rate * (Xtr.T @ grad_logits + self.l2 * self.weights)
            self.bias -= self.learning_rate * grad_logits.sum(axis=0)
            val_loss = self._loss(Xva, Yva)
            self.epochs_run = epoch
            if val_loss < best[0] - 1e-5:
                best = (val_loss, self.weights.copy(), self.bias.copy())
                stall = 0
            else:
                stall += 1
                if stall >= self.patience:
                    break
        _, self.weights, self.bias = best
        return self

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        if self.weights is None:
            raise DegenerateDataError("model is not fitted")
        X = (np.asarray(features, dtype=np.float64) - self._mean) / self._scale
        return self._softmax(X @ self.weights + self.bias)


def argmax_first(proba_row: np.ndarray) -> int:
    """Index of the max probability; ties resolve to the earliest class."""
    return int(np.argmax(proba_row))


def split_indices(n: int, seed: int, test_fraction: float = 0.2) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic shuffled train/test split over range(n)."""
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must be in (0, 1)")
    rng = np.random.Generator(np.random.PCG64(seed))
    order = rng.permutation(n)
    n_test = int(round(n * test_fraction))
    return np.sort(order[n_test:]), np.sort(order[:n_test])
