"""One-hidden-layer tanh regressor trained with Adam and plateau-halved step size."""

from dataclasses import dataclass

import numpy as np

from ..errors import FitError


@dataclass
class MLPModel:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: float
    y_mean: float
    y_scale: float
    epochs: int = 0
    final_lr: float = 0.0

    def predict(self, X):
        h = np.tanh(np.asarray(X, dtype=float) @ self.W1 + self.b1)
        return (h @ self.W2 + self.b2) * self.y_scale + self.y_mean


def init_params(n_in, n_hidden, rng):
    """Glorot-uniform weights, zero biases."""
    b1 = np.sqrt(6.0 / (n_in + n_hidden))
    b2 = np.sqrt(6.0 / (n_hidden + 1))
    return [rng.uniform(-b1, b1, (n_in, n_hidden)), np.zeros(n_hidden),
            rng.uniform(-b2, b2, n_hidden), np.zeros(())]


def loss_and_grad(params, X, y, l2=1e-4):
    """Half mean squared error plus ``l2/(2n) * ||W||^2``, with exact gradients."""
    W1, b1, W2, b2 = params
    n = X.shape[0]
    h = np.tanh(X @ W1 + b1)
    err = h @ W2 + b2 - y
    loss = 0.5 * float(err @ err) / n + 0.5 * l2 * (np.sum(W1 * W1) + W2 @ W2) / n
    g_out = err / n
    gW2 = h.T @ g_out + l2 * W2 / n
    gb2 = np.asarray(g_out.sum())
    g_h = np.outer(g_out, W2) * (1.0 - h * h)
    gW1 = X.T @ g_h + l2 * W1 / n
    gb1 = g_h.sum(axis=0)
    return loss, [gW1, gb1, gW2, gb2]


def fit_mlp(X, y, hidden=23, learning_rate=0.1, max_epochs=400, batch_size=200, l2=1e-4,
            validation_fraction=0.1, patience=10, min_lr=1e-5, tol=1e-6, seed=0):
    """Fit on standardised inputs; the target is standardised internally.

    A held-out ``validation_fraction`` of rows watches for plateaus: after
    ``patience`` epochs without improvement the step size halves, and
    training stops once it falls under ``min_lr``.  The best-validation
    weights are kept.  ``max_epochs=0`` returns the initialised network.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    rng = np.random.default_rng(seed)
    y_mean = float(y.mean())
    y_scale = float(y.std()) or 1.0
    ys = (y - y_mean) / y_scale
    params = init_params(X.shape[1], hidden, rng)
    n = len(y)
    n_val = int(round(validation_fraction * n)) if n >= 10 else 0
    perm = rng.permutation(n)
    val, tr = perm[:n_val], perm[n_val:]
    if n_val == 0:
        val = tr

    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    lr = learning_rate
    best = np.inf
    best_params = [p.copy() for p in params]
    stall = 0
    step = 0
    epoch = 0
    for epoch in range(1, max_epochs + 1):
        order = tr[rng.permutation(len(tr))]
        for s in range(0, len(order), batch_size):
            b = order[s:s + batch_size]
            loss, grads = loss_and_grad(params, X[b], ys[b], l2)
            if not np.isfinite(loss):
                raise FitError(f"MLP diverged at epoch {epoch} (loss {loss})")
            step += 1
            for k in range(4):
                m[k] = beta1 * m[k] + (1 - beta1) * grads[k]
                v[k] = beta2 * v[k] + (1 - beta2) * grads[k] ** 2
                mh = m[k] / (1 - beta1 ** step)
                vh = v[k] / (1 - beta2 ** step)
                params[k] = params[k] - lr * mh / (np.sqrt(vh) + eps)
        val_loss, _ = loss_and_grad(params, X[val], ys[val], 0.0)
        if not np.isfinite(val_loss):
            raise FitError(f"MLP diverged at epoch {epoch}")
        if val_loss < best - tol:
            best = val_loss
            best_params = [p.copy() for p in params]
            stall = 0
        else:
            stall += 1
            if stall >= patience:
                lr /= 2.0
                stall = 0
                if lr < min_lr:
                    break
    if max_epochs == 0:
        best_params = params
        epoch = 0
    W1, b1, W2, b2 = best_params
    return MLPModel(W1, b1, W2, float(b2), y_mean, y_scale, epoch, lr)
