"""Two-component 1-D Gaussian mixture fitted by EM with k-means++ restarts."""

from dataclasses import dataclass, field

import numpy as np

_LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class BimodalFit:
    """Components are ordered so that ``mu_lap <= mu_map``."""

    w_lap: float
    w_map: float
    mu_lap: float
    mu_map: float
    sigma_lap: float
    sigma_map: float
    log_likelihood: float
    iterations: int
    single_mode: bool = False
    history: tuple = field(default=(), compare=False, repr=False)

    def as_dict(self):
        return {k: getattr(self, k) for k in
                ("w_lap", "w_map", "mu_lap", "mu_map", "sigma_lap", "sigma_map",
                 "log_likelihood", "iterations", "single_mode")}


def _loglik_parts(x, w, mu, sd):
    return (np.log(w)[None, :] - 0.5 * _LOG_2PI - np.log(sd)[None, :]
            - 0.5 * ((x[:, None] - mu[None, :]) / sd[None, :]) ** 2)


def _kmeanspp(x, rng):
    c0 = x[rng.integers(len(x))]
    d2 = (x - c0) ** 2
    if d2.sum() == 0:
        return None
    c1 = x[rng.choice(len(x), p=d2 / d2.sum())]
    for _ in range(50):  # Lloyd refinement
        lab = np.abs(x - c0) > np.abs(x - c1)
        if lab.all() or (~lab).all():
            return None
        n0, n1 = x[~lab].mean(), x[lab].mean()
        if n0 == c0 and n1 == c1:
            break
        c0, c1 = n0, n1
    return lab


def _em(x, lab, tol, max_iter, min_sigma):
    w = np.array([np.mean(~lab), np.mean(lab)])
    mu = np.array([x[~lab].mean(), x[lab].mean()])
    sd = np.array([x[~lab].std(), x[lab].std()])
    if np.any(sd < min_sigma):
        return None
    hist = []
    prev = -np.inf
    it = 0
    for it in range(1, max_iter + 1):
        parts = _loglik_parts(x, w, mu, sd)
        top = parts.max(axis=1, keepdims=True)
        norm = top[:, 0] + np.log(np.exp(parts - top).sum(axis=1))
        ll = float(norm.sum())
        hist.append(ll)
        resp = np.exp(parts - norm[:, None])
        nk = resp.sum(axis=0)
        if np.any(nk <= 0):
            return None
        w = nk / len(x)
        mu = (resp * x[:, None]).sum(axis=0) / nk
        sd = np.sqrt((resp * (x[:, None] - mu[None, :]) ** 2).sum(axis=0) / nk)
        if np.any(sd < min_sigma) or np.any(w <= 0) or np.any(w >= 1):
            return None
        if abs(ll - prev) <= tol * len(x):
            break
        prev = ll
    parts = _loglik_parts(x, w, mu, sd)
    top = parts.max(axis=1, keepdims=True)
    ll = float((top[:, 0] + np.log(np.exp(parts - top).sum(axis=1))).sum())
    hist.append(ll)
    return w, mu, sd, ll, it, hist


def fit_gmm2(values, restarts=10, tol=1e-8, max_iter=500, min_sigma=1e-6, seed=0):
    """Fit ``w1 N(mu1, s1) + w2 N(mu2, s2)`` to raw values by maximum likelihood.

    Data are centred before fitting so that results are location-equivariant.
    If every restart collapses a component, ``single_mode`` is set and the
    sample mean and deviation are reported for both components.
    """
    x = np.asarray(values, dtype=float)
    if len(x) < 20:
        raise ValueError("need at least 20 values for a bimodal fit")
    center = float(x.mean())
    xc = x - center
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        lab = _kmeanspp(xc, rng)
        if lab is None:
            continue
        res = _em(xc, lab, tol, max_iter, min_sigma)
        if res is not None and (best is None or res[3] > best[3]):
            best = res
    if best is None:
        s = float(x.std())
        return BimodalFit(0.5, 0.5, center, center, s, s, float("nan"), 0, True)
    w, mu, sd, ll, it, hist = best
    lo, hi = (0, 1) if mu[0] <= mu[1] else (1, 0)
    return BimodalFit(float(w[lo]), float(w[hi]), float(mu[lo] + center),
                      float(mu[hi] + center), float(sd[lo]), float(sd[hi]), ll, it, False,
                      tuple(hist))
