"""Regression trees, bagged random forests and squared-loss gradient boosting."""

from dataclasses import dataclass

import numpy as np

from ._tree import apply_bins, bin_edges, build_tree, predict_binned


@dataclass
class TreeEnsemble:
    """``init + sum_t weight_t * tree_t(x)``; a single tree is a one-member ensemble."""

    edges: list
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    offsets: np.ndarray
    weights: np.ndarray
    init: float = 0.0
    oob_prediction: np.ndarray = None

    @property
    def n_trees(self):
        return len(self.offsets) - 1

    def _predict_bins(self, Xb):
        out = np.full(Xb.shape[0], self.init, dtype=float)
        if self.n_trees:
            predict_binned(Xb, self.feature, self.threshold, self.left, self.right,
                           self.value, self.offsets, self.weights, out)
        return out

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        return self._predict_bins(apply_bins(X, self.edges))


class _Builder:
    def __init__(self, X, max_bins=255):
        X = np.asarray(X, dtype=float)
        self.edges = bin_edges(X, max_bins)
        self.Xb = np.ascontiguousarray(apply_bins(X, self.edges))
        self.nbins = np.array([len(e) + 1 for e in self.edges], dtype=np.int64)
        self.parts = []

    def grow(self, y, idx, max_depth, min_leaf, min_split):
        f, t, l, r, v, _ = build_tree(self.Xb, np.ascontiguousarray(y, dtype=float),
                                      idx.astype(np.int64), self.nbins, max_depth,
                                      min_leaf, min_split)
        self.parts.append((f, t, l, r, v))
        return len(self.parts) - 1

    def leaf_values(self, k):
        """Predictions of tree ``k`` on the training rows."""
        f, t, l, r, v = self.parts[k]
        out = np.zeros(self.Xb.shape[0])
        predict_binned(self.Xb, f, t, l, r, v, np.array([0, len(f)], dtype=np.int64),
                       np.ones(1), out)
        return out

    def finish(self, weights, init):
        sizes = [len(p[0]) for p in self.parts]
        offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        cat = [np.concatenate([p[i] for p in self.parts]) if self.parts else np.empty(0)
               for i in range(5)]
        return TreeEnsemble(self.edges, cat[0].astype(np.int32), cat[1].astype(np.int32),
                            cat[2].astype(np.int32), cat[3].astype(np.int32),
                            cat[4].astype(float), offsets, np.asarray(weights, float),
                            float(init))


def fit_tree(X, y, max_depth=None, min_samples_leaf=1, min_samples_split=2):
    y = np.asarray(y, dtype=float)
    b = _Builder(X)
    b.grow(y, np.arange(len(y)), -1 if max_depth is None else max_depth,
           min_samples_leaf, min_samples_split)
    return b.finish([1.0], 0.0)


def fit_random_forest(X, y, n_estimators=1024, bootstrap=True, min_samples_leaf=1,
                      min_samples_split=2, max_depth=None, seed=0, oob=False):
    """Bagged fully-grown trees using every feature at every split; mean prediction.

    With ``oob=True`` each training row also gets the mean prediction of the
    trees that did not see it (NaN if every tree drew it).
    """
    y = np.asarray(y, dtype=float)
    n = len(y)
    if n < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    b = _Builder(X)
    depth = -1 if max_depth is None else max_depth
    oob_sum = np.zeros(n)
    oob_cnt = np.zeros(n)
    for _ in range(n_estimators):
        idx = rng.integers(0, n, n) if bootstrap else np.arange(n)
        k = b.grow(y, np.sort(idx), depth, min_samples_leaf, min_samples_split)
        if oob:
            out = np.ones(n, dtype=bool)
            out[idx] = False
            oob_sum[out] += b.leaf_values(k)[out]
            oob_cnt[out] += 1
    model = b.finish(np.full(n_estimators, 1.0 / n_estimators), 0.0)
    if oob:
        with np.errstate(invalid="ignore", divide="ignore"):
            model.oob_prediction = oob_sum / oob_cnt
    return model


def fit_gbt(X, y, n_estimators=1024, learning_rate=0.05, max_depth=3, min_samples_leaf=1,
            min_samples_split=2, seed=0):
    """Squared-loss gradient boosting: each tree fits the current residuals."""
    y = np.asarray(y, dtype=float)
    if len(y) < 1:
        raise ValueError("need at least one sample")
    b = _Builder(X)
    init = float(np.mean(y))
    pred = np.full(len(y), init)
    idx = np.arange(len(y))
    for _ in range(n_estimators):
        k = b.grow(y - pred, idx, max_depth, min_samples_leaf, min_samples_split)
        pred += learning_rate * b.leaf_values(k)
    return b.finish(np.full(n_estimators, learning_rate), init)
