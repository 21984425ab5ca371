"""Scikit-learn style front end for the link network."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .. import defaults
from .._validation import check_window_pairs

from .model import init_params
from .samples import TrainConfig
from .training import _fit, predict_proba as _predict_proba


class LinkClassifier(BaseEstimator, ClassifierMixin):
    """Binary classifier over ordered (predecessor, successor) window pairs.

    X is an array of shape (n, 2, 30, 5); y holds 0/1 labels. After fit,
    ``params_`` carries the trained network and ``loss_history_`` the mean
    loss per epoch.
    """

    def __init__(self, learning_rate: float = defaults.LEARNING_RATE,
                 epochs: int = defaults.EPOCHS,
                 batch_size: int = defaults.BATCH_SIZE,
                 label_smoothing: float = defaults.LABEL_SMOOTHING,
                 seed: int = 0):
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.label_smoothing = label_smoothing
        self.seed = seed

    def _config(self) -> TrainConfig:
        return TrainConfig(learning_rate=self.learning_rate, epochs=self.epochs,
                           batch_size=self.batch_size,
                           label_smoothing=self.label_smoothing, seed=self.seed)

    def fit(self, X, y) -> "LinkClassifier":
        X = check_window_pairs(X)
        y = np.asarray(y)
        if y.shape != (len(X),):
            raise ValueError(f"y must have shape ({len(X)},), got {y.shape}")
        if not np.isin(y, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")
        config = self._config()
        params = init_params(config.seed, dtype=np.float32)
        if config.epochs == 0:
            self.params_, self.loss_history_ = params, []
        else:
            wa = np.ascontiguousarray(X[:, 0], dtype=np.float32)
            wb = np.ascontiguousarray(X[:, 1], dtype=np.float32)
            self.params_, self.loss_history_ = _fit(params, wa, wb,
                                                    y.astype(np.int64), config)
        self.classes_ = np.array([0, 1])
        return self

    def predict_proba(self, X) -> np.ndarray:
        self._check_fitted()
        X = check_window_pairs(X)
        p_same = _predict_proba(self.params_, X[:, 0].astype(np.float32),
                                X[:, 1].astype(np.float32))
        return np.stack([1.0 - p_same, p_same], axis=1)

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X)[:, 1] >= 0.5).astype(np.int64)

    def _check_fitted(self) -> None:
        if not hasattr(self, "params_"):
            raise RuntimeError("LinkClassifier is not fitted; call fit first")
