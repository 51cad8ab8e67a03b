"""Model fitting: weighted least squares, IRLS, description loss, inference.

Every candidate model is fit with the intercept always included.  The
description loss is ``q_hat = -2 * loglik`` throughout; case weights enter
as likelihood weights (each observation's log-likelihood contribution is
multiplied by its weight), so for a gaussian fit the ML scale estimate is
the weighted residual sum of squares over the total weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy import special, stats

from . import masks
from .dataset import Dataset
from .errors import DegenerateProbability, RankDeficientSubmodel, SeparationDetected
from .families import GAUSSIAN, ModelFamily

# IRLS controls (GLM fits): stop when the relative deviance change drops
# below the tolerance, cap the iteration count, halve steps that increase
# the deviance.
IRLS_TOL = 1e-8
IRLS_MAX_ITER = 50
SEPARATION_TOL = 1e-10


@dataclass(frozen=True)
class FitResult:
    """Outcome of fitting one candidate model.

    ``beta`` is ordered intercept first, then the selected columns in mask
    order.  ``q_hat`` is exactly ``-2 * loglik``.  For gaussian fits
    ``sigma2_hat`` is the ML variance (weighted RSS over total weight);
    standard errors use the unbiased ``rss / (n - p_alpha)`` instead so that
    printed tables match classical output.  ``working_residuals`` carries
    the link-scale residuals ``(y - mu) / v(mu)`` for binomial fits (used by
    the WLS surrogate); response residuals ``y - mu`` are in ``residuals``.
    """

    model: int
    names: tuple
    beta: np.ndarray
    loglik: float
    q_hat: float
    rss: float | None
    sigma2_hat: float | None
    se: np.ndarray
    fitted: np.ndarray
    residuals: np.ndarray
    working_residuals: np.ndarray | None
    converged: bool
    iterations: int
    family_kind: str
    n: int
    total_weight: float

    @property
    def p_alpha(self) -> int:
        return masks.dimension(self.model)


def gic(q_hat: float, p_alpha: int, lam: float) -> float:
    """Generalised information criterion: description loss plus ``lam`` per parameter.

    ``lam = 2`` gives AIC; ``lam = log(n)`` gives BIC.
    """
    return q_hat + lam * p_alpha


def gaussian_loglik(rss: float, total_weight: float) -> float:
    """Gaussian ML log-likelihood from a (weighted) residual sum of squares."""
    if rss <= 0.0:
        return math.inf  # perfect fit; description loss attains its minimum
    return -0.5 * total_weight * (math.log(2.0 * math.pi * rss / total_weight) + 1.0)


def _effective_weights(d: Dataset, case_weights) -> np.ndarray | None:
    """Combine dataset base weights with per-call (e.g. bootstrap) weights."""
    if case_weights is None:
        return d.case_weights
    w = np.asarray(case_weights, dtype=float)
    if w.shape != (d.n,) or np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise ValueError("case_weights must be positive, finite, length n")
    if d.case_weights is None:
        return w
    return d.case_weights * w


def fit(d: Dataset, m: int, case_weights=None) -> FitResult:
    """Fit model ``m`` (a column bitmask) on ``d``.

    Gaussian fits use a QR-based weighted least squares solve; binomial and
    poisson fits use IRLS.  ``case_weights`` multiply the dataset's own base
    weights when both are present.

    Raises
    ------
    RankDeficientSubmodel
        If the selected columns plus intercept are collinear under the weights.
    SeparationDetected
        If a binomial fit pins fitted probabilities at 0/1 beyond tolerance.
    """
    w = _effective_weights(d, case_weights)
    X1 = d.columns(m)
    names = ("(Intercept)",) + tuple(d.names[j] for j in masks.indices(m))
    if d.family.is_gaussian:
        return _fit_gaussian(d, m, X1, names, w)
    return _fit_glm(d, m, X1, names, w)


def _wls_solve(X1: np.ndarray, z: np.ndarray, w: np.ndarray | None):
    """Weighted least squares via QR; returns (beta, rss, XtWX_inverse_factor R)."""
    if w is None:
        A, b = X1, z
    else:
        sw = np.sqrt(w)
        A, b = X1 * sw[:, None], z * sw
    Q, R = np.linalg.qr(A)
    diag = np.abs(np.diag(R))
    ref = diag.max() if diag.size else 0.0
    if ref == 0.0 or diag.min() <= 1e-10 * ref:
        raise RankDeficientSubmodel("selected columns are collinear under the given weights")
    beta = scipy.linalg.solve_triangular(R, Q.T @ b)
    return beta, R


def _fit_gaussian(d: Dataset, m: int, X1, names, w) -> FitResult:
    y = d.y
    beta, R = _wls_solve(X1, y, w)
    fitted = X1 @ beta
    resid = y - fitted
    weights = np.ones(d.n) if w is None else w
    rss = float(np.sum(weights * resid * resid))
    total_w = float(np.sum(weights))
    loglik = gaussian_loglik(rss, total_w)
    p_alpha = X1.shape[1]
    # Unbiased variance for the printed table; df counts observations.
    sigma2_unbiased = rss / (d.n - p_alpha)
    Rinv = scipy.linalg.solve_triangular(R, np.eye(p_alpha))
    se = np.sqrt(sigma2_unbiased * np.sum(Rinv * Rinv, axis=1))
    return FitResult(
        model=m, names=names, beta=beta, loglik=loglik, q_hat=-2.0 * loglik,
        rss=rss, sigma2_hat=rss / total_w, se=se, fitted=fitted, residuals=resid,
        working_residuals=None, converged=True, iterations=0,
        family_kind=d.family.kind, n=d.n, total_weight=total_w,
    )


def _glm_loglik(family: ModelFamily, y, mu, w) -> float:
    if family.kind == "binomial-logit":
        ll = y * np.log(mu) + (1.0 - y) * np.log1p(-mu)
    elif family.kind == "poisson-log":
        ll = y * np.log(mu) - mu - special.gammaln(y + 1.0)
        ll = np.where((y == 0) & (mu > 0), -mu, ll)  # 0*log(mu) := 0
    else:
        raise ValueError(family.kind)
    return float(np.sum(ll if w is None else w * ll))


def _fit_glm(d: Dataset, m: int, X1, names, w) -> FitResult:
    family = d.family
    y = d.y
    n = d.n
    weights = np.ones(n) if w is None else w
    ybar = float(np.average(y, weights=weights))

    mu = (y + ybar) / 2.0
    if family.kind == "binomial-logit" and (ybar <= 0.0 or ybar >= 1.0):
        mu = (y + 0.5) / 2.0
    if family.kind == "poisson-log":
        mu = np.maximum(mu, 0.5 * max(ybar, 1e-3))
    eta = _link(family, mu)

    dev = -2.0 * _glm_loglik(family, y, mu, w)
    beta = None
    converged = False
    iterations = 0
    for it in range(1, IRLS_MAX_ITER + 1):
        iterations = it
        v = family.variance_fn(mu)
        # Canonical links: d(mu)/d(eta) equals the variance function.
        z = eta + (y - mu) / v
        wls_w = weights * v
        new_beta, _ = _wls_solve(X1, z, wls_w)
        step = 1.0
        while True:
            cand_beta = new_beta if beta is None or step == 1.0 else beta + step * (new_beta - beta)
            cand_eta = X1 @ cand_beta
            cand_mu = family.inverse_link(cand_eta)
            cand_mu = _clip_mean(family, cand_mu)
            cand_dev = -2.0 * _glm_loglik(family, y, cand_mu, w)
            if cand_dev <= dev + 1e-12 or beta is None or step < 1e-8:
                break
            step /= 2.0
        rel_change = abs(dev - cand_dev) / (abs(cand_dev) + 0.1)
        beta, eta, mu, dev = cand_beta, cand_eta, cand_mu, cand_dev
        if rel_change < IRLS_TOL:
            converged = True
            break

    if converged:
        # One polishing Newton step: quadratic convergence drives the score
        # to machine precision once the deviance has stabilised.
        v = family.variance_fn(mu)
        z = eta + (y - mu) / v
        beta, _ = _wls_solve(X1, z, weights * v)
        eta = X1 @ beta
        mu = _clip_mean(family, family.inverse_link(eta))
        dev = -2.0 * _glm_loglik(family, y, mu, w)

    if family.kind == "binomial-logit":
        raw_mu = family.inverse_link(eta)
        if np.any(raw_mu < SEPARATION_TOL) or np.any(raw_mu > 1.0 - SEPARATION_TOL):
            raise SeparationDetected("fitted probabilities pinned at 0/1")

    loglik = -0.5 * dev
    v = family.variance_fn(mu)
    # Observed = expected information under canonical links: X' diag(w v) X.
    sw = np.sqrt(weights * v)
    _, R = np.linalg.qr(X1 * sw[:, None])
    Rinv = scipy.linalg.solve_triangular(R, np.eye(X1.shape[1]))
    se = np.sqrt(np.sum(Rinv * Rinv, axis=1))
    working = (y - mu) / v if family.kind == "binomial-logit" else None
    return FitResult(
        model=m, names=names, beta=beta, loglik=loglik, q_hat=dev,
        rss=None, sigma2_hat=None, se=se, fitted=mu, residuals=y - mu,
        working_residuals=working, converged=converged, iterations=iterations,
        family_kind=family.kind, n=n, total_weight=float(np.sum(weights)),
    )


def _link(family: ModelFamily, mu):
    if family.kind == "binomial-logit":
        return np.log(mu / (1.0 - mu))
    if family.kind == "poisson-log":
        return np.log(mu)
    return mu


def _clip_mean(family: ModelFamily, mu):
    if family.kind == "binomial-logit":
        return np.clip(mu, 1e-300, 1.0 - 1e-16)
    if family.kind == "poisson-log":
        return np.maximum(mu, 1e-300)
    return mu


def glm_to_wls(d: Dataset, full_fit: FitResult) -> Dataset:
    """Gaussian surrogate of a binomial-logit problem via one IRLS step.

    Builds the working response ``z = logit(pi) + (y - pi) / (pi (1 - pi))``
    and observation weights ``pi (1 - pi)`` from the full-model fit, so that
    weighted least squares on the surrogate reproduces the full-model logit
    coefficients exactly and approximates every submodel's fit.
    """
    if d.family.kind != "binomial-logit":
        raise ValueError("the WLS surrogate applies to binomial-logit datasets")
    if full_fit.model != d.full_mask():
        raise ValueError("full_fit must be the full-model fit")
    pi = np.asarray(full_fit.fitted, dtype=float)
    if np.any(pi < 1e-10) or np.any(pi > 1.0 - 1e-10):
        raise DegenerateProbability("fitted probabilities too close to 0/1")
    v = pi * (1.0 - pi)
    z = np.log(pi / (1.0 - pi)) + (d.y - pi) / v
    base = np.ones(d.n) if d.case_weights is None else d.case_weights
    return Dataset(
        y=z, X=d.X, names=d.names, family=GAUSSIAN, case_weights=base * v,
        rv_index=d.rv_index, response_name=d.response_name, factor_info=d.factor_info,
    )


def coef_table(f: FitResult):
    """Rows of ``(name, estimate, std.error, statistic, p.value)``.

    Gaussian fits report t statistics on ``n - p_alpha`` degrees of freedom;
    binomial and poisson fits report z statistics.
    """
    if not f.converged:
        raise ValueError("coefficient table requires a converged fit")
    est = np.asarray(f.beta, dtype=float)
    se = np.asarray(f.se, dtype=float)
    stat = est / se
    if f.family_kind == "gaussian-identity":
        df = f.n - f.p_alpha
        pval = 2.0 * stats.t.sf(np.abs(stat), df)
    else:
        pval = 2.0 * stats.norm.sf(np.abs(stat))
    return [
        (f.names[i], float(est[i]), float(se[i]), float(stat[i]), float(pval[i]))
        for i in range(len(est))
    ]


def format_coef_table(rows) -> str:
    """Fixed-width rendering of a coefficient table, two decimals."""
    width = max(len(r[0]) for r in rows)
    header = f"{'':<{width}} {'Estimate':>9} {'Std. Error':>10} {'statistic':>9} {'p.value':>8}"
    lines = [header]
    for name, est, se, stat, p in rows:
        lines.append(f"{name:<{width}} {est:>9.2f} {se:>10.2f} {stat:>9.2f} {p:>8.2f}")
    return "\n".join(lines)
