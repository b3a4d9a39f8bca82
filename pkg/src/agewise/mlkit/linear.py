"""Penalised linear regression: closed-form ridge, coordinate-descent lasso / elastic net."""

import warnings
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from ..errors import FitError


class ConvergenceWarning(UserWarning):
    pass


@dataclass
class LinearModel:
    coef: np.ndarray
    intercept: float
    n_iter: int = 0
    converged: bool = True
    history: np.ndarray = field(default_factory=lambda: np.empty(0))

    def predict(self, X):
        return np.asarray(X, dtype=float) @ self.coef + self.intercept


def _center(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    xm = X.mean(axis=0)
    ym = float(y.mean())
    return X - xm, y - ym, xm, ym


def fit_ridge(X, y, alpha=1.0, max_iter=5000):
    """Minimise ||y - Xw - b||^2 + alpha ||w||^2 with an unpenalised intercept.

    ``max_iter`` is accepted for interface parity; the solve is direct.
    """
    Xc, yc, xm, ym = _center(X, y)
    A = Xc.T @ Xc + alpha * np.eye(Xc.shape[1])
    try:
        w = np.linalg.solve(A, Xc.T @ yc)
    except np.linalg.LinAlgError:
        raise FitError("singular ridge system; use alpha > 0") from None
    return LinearModel(w, ym - float(xm @ w))


@njit(cache=True)
def _cd(X, y, l1, l2, max_iter, tol, positive, history):
    n, d = X.shape
    w = np.zeros(d)
    r = y.copy()
    sq = np.zeros(d)
    for j in range(d):
        s = 0.0
        for i in range(n):
            s += X[i, j] * X[i, j]
        sq[j] = s / n
    it = 0
    converged = False
    for it in range(max_iter):
        max_step = 0.0
        for j in range(d):
            if sq[j] == 0.0:
                continue
            old = w[j]
            rho = 0.0
            for i in range(n):
                rho += X[i, j] * r[i]
            rho = rho / n + sq[j] * old
            if rho > l1:
                new = (rho - l1) / (sq[j] + l2)
            elif rho < -l1 and not positive:
                new = (rho + l1) / (sq[j] + l2)
            else:
                new = 0.0
            if new != old:
                delta = new - old
                for i in range(n):
                    r[i] -= X[i, j] * delta
                w[j] = new
                if abs(delta) > max_step:
                    max_step = abs(delta)
        obj = 0.0
        for i in range(n):
            obj += r[i] * r[i]
        obj = obj / (2.0 * n)
        for j in range(d):
            obj += l1 * abs(w[j]) + 0.5 * l2 * w[j] * w[j]
        history[it] = obj
        if max_step <= tol:
            converged = True
            break
    return w, it + 1, converged


def fit_enet(X, y, alpha=0.001, l1_ratio=0.5, max_iter=1000, tol=1e-6, positive=False):
    """Minimise (1/2n)||y - Xw - b||^2 + alpha*l1_ratio*|w|_1 + alpha*(1-l1_ratio)/2*||w||^2.

    Cyclic coordinate descent from zero; stops when no coefficient moves by
    more than ``tol`` in a full sweep.  Non-convergence warns and returns
    the last iterate.
    """
    Xc, yc, xm, ym = _center(X, y)
    history = np.zeros(max_iter)
    w, n_iter, ok = _cd(np.ascontiguousarray(Xc), yc, alpha * l1_ratio,
                        alpha * (1.0 - l1_ratio), max_iter, tol, positive, history)
    if not ok:
        warnings.warn(f"coordinate descent did not converge in {max_iter} sweeps",
                      ConvergenceWarning, stacklevel=2)
    return LinearModel(w, ym - float(xm @ w), n_iter, ok, history[:n_iter])


def fit_lasso(X, y, alpha=0.001, max_iter=5000, tol=1e-6, positive=False):
    return fit_enet(X, y, alpha=alpha, l1_ratio=1.0, max_iter=max_iter, tol=tol,
                    positive=positive)
