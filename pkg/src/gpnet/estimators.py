"""Estimator-style wrappers around the functional core.

Both classes follow scikit-learn conventions (constructor stores
hyperparameters verbatim, ``fit`` validates and learns, fitted state
carries a trailing underscore, ``get_params``/``set_params`` round-trip)
without importing scikit-learn, so they duck-type cleanly with
``sklearn.base.clone`` and pipelines when that package is present.

The models are transductive: the graph is part of the training data, so
``fit`` takes the edge list as a keyword argument alongside ``X``.
"""

from __future__ import annotations

import inspect

import numpy as np

from .classifier import ModelParams, TrainConfig, forward, predict, train
from .data import GraphDataset
from .errors import UsageError
from .filters import FilterConfig, propagate
from .sparse import build_adjacency, sym_normalize
from .validation import as_feature_matrix, as_index_mask, as_label_vector


class _ParamsMixin:
    """get_params/set_params over the __init__ signature, sklearn style."""

    @classmethod
    def _param_names(cls):
        sig = inspect.signature(cls.__init__)
        return [p for p in sig.parameters if p != "self"]

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params):
        valid = set(self._param_names())
        for key, value in params.items():
            if key not in valid:
                raise UsageError(
                    f"invalid parameter {key!r} for {type(self).__name__}; "
                    f"valid parameters: {sorted(valid)}"
                )
            setattr(self, key, value)
        return self

    def _check_fitted(self, attr: str):
        if not hasattr(self, attr):
            raise UsageError(f"{type(self).__name__} instance is not fitted yet; call fit first")


def _resolve_graph(X, edges):
    """Accept (features, edges) or a GraphDataset in X's place."""
    if isinstance(X, GraphDataset):
        if edges is not None:
            raise UsageError("pass edges only when X is a plain feature matrix")
        return X.X, X.edges
    if edges is None:
        raise UsageError("edges are required; pass edges=... or a GraphDataset")
    return as_feature_matrix(X), edges


class GeometricPropagation(_ParamsMixin):
    """Transformer computing multi-hop propagated features of a graph.

    Parameters mirror the filter configuration: ``m`` channels, each
    summing ``k`` powers of the normalized adjacency with exponents
    ``i * q[c] + d[c] + q0``, scaled by the sign ``beta`` and combined
    with an ``alpha``-weighted identity, then aggregated across channels.
    """

    def __init__(
        self,
        m: int = 1,
        k: int = 2,
        q0: int = 1,
        q: tuple = (1,),
        d: tuple = (0,),
        alpha: float = 1.0,
        beta: float = 1.0,
        aggregation: str = "sum",
        self_loops: bool = True,
    ):
        self.m = m
        self.k = k
        self.q0 = q0
        self.q = q
        self.d = d
        self.alpha = alpha
        self.beta = beta
        self.aggregation = aggregation
        self.self_loops = self_loops

    def _config(self) -> FilterConfig:
        return FilterConfig(
            m=self.m,
            k=self.k,
            q0=self.q0,
            q=tuple(self.q),
            d=tuple(self.d),
            alpha=self.alpha,
            beta=self.beta,
            aggregation=self.aggregation,
            self_loops=self.self_loops,
        )

    def fit(self, X, y=None, *, edges=None):
        X, edges = _resolve_graph(X, edges)
        self.config_ = self._config()
        adj = build_adjacency(edges, X.shape[0], add_self_loops=self.self_loops)
        self.operator_ = sym_normalize(adj)
        return self

    def transform(self, X) -> np.ndarray:
        self._check_fitted("operator_")
        if isinstance(X, GraphDataset):
            X = X.X
        X = as_feature_matrix(X)
        if X.shape[0] != self.operator_.n:
            raise UsageError(
                f"X has {X.shape[0]} rows but the fitted graph has {self.operator_.n} nodes"
            )
        return propagate(self.config_, self.operator_, X).H_bar

    def fit_transform(self, X, y=None, *, edges=None) -> np.ndarray:
        return self.fit(X, edges=edges).transform(X)


class GPNetClassifier(_ParamsMixin):
    """Node classifier: propagated features followed by a softmax layer.

    ``fit`` needs the graph (``edges=``) and a ``train_mask``; rows
    outside the mask contribute nothing to the loss. ``val_mask`` picks
    the checkpointing epoch; it defaults to the training rows.
    """

    def __init__(
        self,
        m: int = 1,
        k: int = 2,
        q0: int = 1,
        q: tuple = (1,),
        d: tuple = (0,),
        alpha: float = 1.0,
        beta: float = 1.0,
        aggregation: str = "sum",
        self_loops: bool = True,
        learning_rate: float = 0.01,
        weight_decay: float = 0.0,
        dropout_rate: float = 0.0,
        epochs: int = 100,
        runs: int = 1,
        seed: int = 0,
        relu: bool = False,
        use_bias: bool = False,
    ):
        self.m = m
        self.k = k
        self.q0 = q0
        self.q = q
        self.d = d
        self.alpha = alpha
        self.beta = beta
        self.aggregation = aggregation
        self.self_loops = self_loops
        self.learning_rate = learning_rate
        self.weight_decay = weight_decay
        self.dropout_rate = dropout_rate
        self.epochs = epochs
        self.runs = runs
        self.seed = seed
        self.relu = relu
        self.use_bias = use_bias

    def fit(self, X, y, *, edges=None, train_mask=None, val_mask=None, test_mask=None):
        X, edges = _resolve_graph(X, edges)
        n = X.shape[0]
        y = as_label_vector(y, n)
        propagator = GeometricPropagation(
            m=self.m, k=self.k, q0=self.q0, q=self.q, d=self.d,
            alpha=self.alpha, beta=self.beta,
            aggregation=self.aggregation, self_loops=self.self_loops,
        )
        self.H_ = propagator.fit(X, edges=edges).transform(X)
        self.propagator_ = propagator

        train_mask = (
            np.ones(n, dtype=bool) if train_mask is None else as_index_mask(train_mask, n, "train_mask")
        )
        val_mask = train_mask if val_mask is None else as_index_mask(val_mask, n, "val_mask")
        test_mask = val_mask if test_mask is None else as_index_mask(test_mask, n, "test_mask")
        config = TrainConfig(
            learning_rate=self.learning_rate,
            weight_decay=self.weight_decay,
            dropout_rate=self.dropout_rate,
            epochs=self.epochs,
            seed=self.seed,
            runs=self.runs,
            relu=self.relu,
            use_bias=self.use_bias,
        )
        self.params_, self.metrics_ = train(
            self.H_, y, (train_mask, val_mask, test_mask), config
        )
        self.classes_ = np.arange(self.params_.W.shape[1])
        return self

    def _features(self, X):
        if X is None:
            H = self.H_
        else:
            if isinstance(X, GraphDataset):
                X = X.X
            H = self.propagator_.transform(X)
        return np.maximum(H, 0.0) if self.relu else H

    def decision_function(self, X=None) -> np.ndarray:
        self._check_fitted("params_")
        logits, _ = forward(self._features(X), self.params_)
        return logits

    def predict_proba(self, X=None) -> np.ndarray:
        self._check_fitted("params_")
        _, probs = forward(self._features(X), self.params_)
        return probs

    def predict(self, X=None) -> np.ndarray:
        self._check_fitted("params_")
        return predict(self._features(X), self.params_)

    def score(self, X, y, mask=None) -> float:
        """Mean accuracy over ``mask`` (all nodes when omitted)."""
        self._check_fitted("params_")
        pred = self.predict(X)
        y = as_label_vector(y, len(pred))
        if mask is None:
            return float(np.mean(pred == y))
        mask = as_index_mask(mask, len(pred), "mask")
        if not mask.any():
            raise UsageError("score mask selects no nodes")
        return float(np.mean(pred[mask] == y[mask]))
