"""Gaussian-process kriging over the normalized design space.

Gaussian correlation exp(-sum eta_k dx_k^2), profile maximum likelihood for
(mu, sigma2, eta), best-linear-unbiased prediction with closed-form
predictive variance. The profile negative log-likelihood and its analytic
gradient are optimized with L-BFGS-B in log(eta), multi-started from a
seeded space-filling set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np
from scipy import optimize
from scipy.linalg import cho_factor, cho_solve, LinAlgError
from scipy.stats import qmc

from . import kernels
from .errors import IllConditioned

__all__ = [
    "GPModel",
    "gaussian_correlation",
    "fit_mle",
    "fit_fixed",
    "predict",
    "confidence_halfwidth",
    "profile_params",
]

LOG_ETA_BOUNDS = (-6.0, 8.0)
DEGENERATE_REL_RANGE = 1e-14


@dataclass
class GPModel:
    """Immutable fitted kriging model."""

    designs: np.ndarray  # (n, p) normalized training inputs
    y: np.ndarray  # (n,) responses
    mu: float
    sigma2: float
    eta: np.ndarray  # (p,) correlation decay rates
    nugget: float
    nll: float = math.nan
    degenerate: bool = False
    # solver state, rebuilt on load
    _chol: tuple = field(default=None, repr=False)
    _alpha: np.ndarray = field(default=None, repr=False)  # C^-1 (y - mu 1)
    _ones_sol: np.ndarray = field(default=None, repr=False)  # C^-1 1

    @property
    def n(self) -> int:
        return self.designs.shape[0]

    @property
    def p(self) -> int:
        return self.designs.shape[1]


def gaussian_correlation(a, b, eta) -> float:
    """Correlation between two normalized designs."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    out = kernels.gaussian_corr(a, b, np.asarray(eta, dtype=float))
    return float(out[0, 0]) if out.size == 1 else out


def _sq_diff_tensor(X) -> np.ndarray:
    # D2[k] = squared coordinate-k differences, (p, n, n)
    diff = X[:, None, :] - X[None, :, :]
    return np.ascontiguousarray((diff * diff).transpose(2, 0, 1))


def _profile_terms(C, y):
    """mu, sigma2, alpha and log-det for a factorized correlation matrix."""
    cf = cho_factor(C, lower=True)
    ones = np.ones_like(y)
    Ci_y = cho_solve(cf, y)
    Ci_1 = cho_solve(cf, ones)
    mu = float(ones @ Ci_y) / float(ones @ Ci_1)
    resid = y - mu
    alpha = Ci_y - mu * Ci_1
    sigma2 = float(resid @ alpha) / len(y)
    logdet = 2.0 * float(np.sum(np.log(np.diag(cf[0]))))
    return mu, sigma2, alpha, Ci_1, logdet, cf


def profile_params(designs, y, eta, nugget: float = 0.0):
    """Profile-likelihood (mu, sigma2) at fixed eta."""
    X = np.asarray(designs, dtype=float)
    y = np.asarray(y, dtype=float)
    C = kernels.gaussian_corr(X, X, np.asarray(eta, dtype=float))
    C[np.diag_indices_from(C)] += nugget
    mu, sigma2, *_ = _profile_terms(C, y)
    return mu, sigma2


def _nll_and_grad(log_eta, D2, y, nugget):
    """Profile negative log-likelihood and gradient in log(eta).

    nll = n log sigma2_hat + log det C with mu profiled out; the gradient
    uses the envelope theorem so only the explicit eta dependence enters.
    """
    eta = np.exp(log_eta)
    n = len(y)
    C = np.exp(-np.tensordot(eta, D2, axes=1))
    C[np.diag_indices_from(C)] += nugget
    try:
        mu, sigma2, alpha, _, logdet, cf = _profile_terms(C, y)
    except (LinAlgError, np.linalg.LinAlgError):
        return np.inf, np.zeros_like(log_eta)
    sigma2 = max(sigma2, 1e-300)
    nll = n * math.log(sigma2) + logdet
    R = C.copy()
    R[np.diag_indices_from(R)] -= nugget
    Cinv = cho_solve(cf, np.eye(n))
    grad = np.empty_like(log_eta)
    for k in range(len(eta)):
        dC = -D2[k] * R
        grad[k] = (-(alpha @ dC @ alpha) / sigma2 + np.sum(Cinv * dC)) * eta[k]
    return nll, grad


def _is_degenerate(y) -> bool:
    scale = max(1.0, float(np.abs(y).max()))
    return float(y.max() - y.min()) <= DEGENERATE_REL_RANGE * scale


def _finalize(X, y, eta, nugget, nll, degenerate=False) -> GPModel:
    if degenerate:
        mu = float(np.mean(y))
        return GPModel(X, y, mu, 0.0, np.asarray(eta, dtype=float), nugget, nll, True)
    C = kernels.gaussian_corr(X, X, eta)
    C[np.diag_indices_from(C)] += nugget
    mu, sigma2, alpha, Ci_1, _, cf = _profile_terms(C, y)
    return GPModel(
        X, y, mu, max(sigma2, 0.0), np.asarray(eta, dtype=float), nugget, nll,
        False, _chol=cf, _alpha=alpha, _ones_sol=Ci_1,
    )


def _start_points(p, n_starts, seed) -> np.ndarray:
    lo, hi = LOG_ETA_BOUNDS
    sampler = qmc.Sobol(d=p, scramble=True, seed=np.random.default_rng(seed))
    pts = sampler.random(n_starts)
    return lo + pts * (hi - lo)


def fit_mle(
    designs,
    responses,
    nugget: float = 1e-8,
    n_starts: int = 8,
    seed: int = 0,
    warm_start=None,
    maxiter: int = 80,
) -> GPModel:
    """Fit a GP by profile maximum likelihood.

    Multi-starts L-BFGS-B from a seeded space-filling set in log(eta);
    `warm_start` prepends an extra starting point (used when sweeping
    across timesteps). Constant responses short-circuit to a flagged
    degenerate model with sigma2 = 0.
    """
    X = np.asarray(designs, dtype=float)
    y = np.asarray(responses, dtype=float)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError(f"designs {X.shape} and responses {y.shape} do not line up")
    n, p = X.shape
    if n < 2:
        raise ValueError("need at least two training points")
    if _is_degenerate(y):
        return _finalize(X, y, np.zeros(p), nugget, math.nan, degenerate=True)

    D2 = _sq_diff_tensor(X)
    starts = list(_start_points(p, n_starts, seed))
    if warm_start is not None:
        starts.insert(0, np.asarray(warm_start, dtype=float))

    best = None
    for x0 in starts:
        res = optimize.minimize(
            _nll_and_grad,
            x0,
            args=(D2, y, nugget),
            jac=True,
            method="L-BFGS-B",
            bounds=[LOG_ETA_BOUNDS] * p,
            options={"maxiter": maxiter},
        )
        if not math.isfinite(res.fun):
            continue
        if best is None or res.fun < best[0]:
            best = (float(res.fun), np.exp(res.x))
    if best is None:
        raise IllConditioned("correlation matrix factorization failed at every start")
    nll, eta = best
    return _finalize(X, y, eta, nugget, nll)


def fit_fixed(designs, responses, eta, nugget: float = 0.0) -> GPModel:
    """Build a model at fixed eta (no optimization)."""
    X = np.asarray(designs, dtype=float)
    y = np.asarray(responses, dtype=float)
    if _is_degenerate(y):
        return _finalize(X, y, np.asarray(eta, dtype=float), nugget, math.nan, degenerate=True)
    return _finalize(X, y, np.asarray(eta, dtype=float), nugget, math.nan)


def _ensure_solver_state(model: GPModel):
    if model._chol is None and not model.degenerate:
        C = kernels.gaussian_corr(model.designs, model.designs, model.eta)
        C[np.diag_indices_from(C)] += model.nugget
        _, _, alpha, Ci_1, _, cf = _profile_terms(C, model.y)
        model._chol = cf
        model._alpha = alpha
        model._ones_sol = Ci_1


def predict(model: GPModel, c_new):
    """BLUE mean and predictive variance at new normalized designs.

    Accepts a single point (p,) or a batch (m, p); returns floats for a
    single point, arrays for a batch.
    """
    single = np.asarray(c_new).ndim == 1
    C_new = np.atleast_2d(np.asarray(c_new, dtype=float))
    if model.degenerate:
        mean = np.full(len(C_new), model.mu)
        var = np.zeros(len(C_new))
        return (float(mean[0]), float(var[0])) if single else (mean, var)
    _ensure_solver_state(model)
    r = kernels.gaussian_corr(C_new, model.designs, model.eta)  # (m, n)
    mean = model.mu + r @ model._alpha
    Ci_r = cho_solve(model._chol, r.T)  # (n, m)
    one_Ci_1 = float(np.sum(model._ones_sol))
    quad = np.sum(r.T * Ci_r, axis=0)
    bias = 1.0 - r @ model._ones_sol
    var = model.sigma2 * (1.0 - quad + bias * bias / one_Ci_1)
    var = np.maximum(var, 0.0)
    return (float(mean[0]), float(var[0])) if single else (mean, var)


def confidence_halfwidth(variance, level: float = 0.80):
    """One-sided confidence width z_(1+level)/2 * sqrt(variance)."""
    if not 0.0 < level < 1.0:
        raise ValueError("level must be in (0, 1)")
    z = NormalDist().inv_cdf(0.5 * (1.0 + level))
    out = z * np.sqrt(np.asarray(variance, dtype=float))
    return float(out) if np.isscalar(variance) or np.asarray(variance).ndim == 0 else out
