"""Numba kernels for subset search over the candidate-model space.

The gaussian kernels work on the cross-product (Gram) matrix of
``[1, X, y]`` under observation weights, using the sweep operator: after
sweeping the intercept and a set of columns, the bottom-right element is
the weighted RSS of that subset's regression.  The branch-and-bound search
walks a deletion tree from the full model; any submodel's RSS is bounded
below by its supermodel's, which lets whole subtrees be pruned against the
current per-size incumbents.

All kernels are ``nogil`` so bootstrap replicates can run in plain threads.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

_NB = dict(cache=True, nogil=True)


@njit(**_NB)
def weighted_gram(A, w):
    """Gram matrix ``A' diag(w) A`` with deterministic summation order."""
    n, m = A.shape
    G = np.zeros((m, m))
    for i in range(n):
        wi = w[i]
        for a in range(m):
            va = wi * A[i, a]
            for b in range(a, m):
                G[a, b] += va * A[i, b]
    for a in range(m):
        for b in range(a):
            G[a, b] = G[b, a]
    return G


@njit(**_NB)
def _sweep(G, k):
    """In-place sweep of pivot ``k``; exactly self-inverse."""
    m = G.shape[0]
    d = G[k, k]
    for i in range(m):
        if i == k:
            continue
        gik = G[i, k] / d
        for j in range(m):
            if j == k:
                continue
            G[i, j] -= gik * G[k, j]
    for j in range(m):
        if j != k:
            G[k, j] /= d
    for i in range(m):
        if i != k:
            G[i, k] /= -d
    G[k, k] = 1.0 / d


@njit(**_NB)
def sweep_full(G, p, diag0):
    """Sweep the intercept and all ``p`` columns; returns the smallest pivot ratio.

    After this call ``G[p+1, p+1]`` is the full-model RSS.  ``diag0`` holds
    the original Gram diagonal; the return value is the smallest pivot
    magnitude relative to it, a rank-deficiency witness (tiny means the
    column is numerically in the span of the previous ones).
    """
    worst = np.inf
    for k in range(p + 1):
        ref = diag0[k] if diag0[k] > 0.0 else 1.0
        r = abs(G[k, k]) / ref
        if r < worst:
            worst = r
        _sweep(G, k)
    return worst


@njit(**_NB)
def bnb_best_subsets(G0, p, nbest, kmin, kmax):
    """Branch-and-bound per-size best subsets by weighted RSS.

    Parameters
    ----------
    G0 : (p+2, p+2) Gram of ``[1, X, y]`` (columns already in branching order,
        least important first).
    nbest : incumbents kept per size.
    kmin, kmax : inclusive popcount range to record.

    Returns
    -------
    rss : (kmax+1, nbest) per-size RSS, +inf padded.
    mask : (kmax+1, nbest) int64 subset masks (bit i = column i+1 of G0).
    count : (kmax+1,) entries filled per size.
    nodes : number of subsets whose RSS was evaluated.
    """
    m = p + 2
    yy = p + 1
    rss_out = np.full((kmax + 1, nbest), np.inf)
    mask_out = np.zeros((kmax + 1, nbest), dtype=np.int64)
    count = np.zeros(kmax + 1, dtype=np.int64)
    worst_idx = np.zeros(kmax + 1, dtype=np.int64)

    diag0 = np.empty(m)
    for a in range(m):
        diag0[a] = G0[a, a]
    G_full = G0.copy()
    sweep_full(G_full, p, diag0)
    nodes = 1
    full_mask = (np.int64(1) << p) - np.int64(1)
    if kmin <= p <= kmax:
        rss_out[p, 0] = G_full[yy, yy]
        mask_out[p, 0] = full_mask
        count[p] = 1

    if p == 0:
        return rss_out, mask_out, count, nodes

    # Explicit DFS stack: one Gram copy per depth.
    stack_G = np.empty((p + 1, m, m))
    stack_mask = np.empty(p + 1, dtype=np.int64)
    stack_size = np.empty(p + 1, dtype=np.int64)
    stack_j = np.empty(p + 1, dtype=np.int64)

    stack_G[0] = G_full
    stack_mask[0] = full_mask
    stack_size[0] = p
    stack_j[0] = 0
    depth = 0

    while depth >= 0:
        j = stack_j[depth]
        if j >= p:
            depth -= 1
            continue
        stack_j[depth] = j + 1
        G = stack_G[depth]
        v = j + 1  # Gram index of the column being deleted
        piv = G[v, v]
        # RSS of the child subset in O(1): the sweep update of the y,y cell.
        child_rss = G[yy, yy] - G[yy, v] * G[v, yy] / piv
        child_mask = stack_mask[depth] & ~(np.int64(1) << j)
        child_size = stack_size[depth] - 1
        nodes += 1

        if kmin <= child_size <= kmax:
            c = count[child_size]
            if c < nbest:
                rss_out[child_size, c] = child_rss
                mask_out[child_size, c] = child_mask
                count[child_size] = c + 1
                if c + 1 == nbest:
                    wi = 0
                    for t in range(1, nbest):
                        if (rss_out[child_size, t] > rss_out[child_size, wi]) or (
                            rss_out[child_size, t] == rss_out[child_size, wi]
                            and mask_out[child_size, t] > mask_out[child_size, wi]
                        ):
                            wi = t
                    worst_idx[child_size] = wi
            else:
                wi = worst_idx[child_size]
                if (child_rss < rss_out[child_size, wi]) or (
                    child_rss == rss_out[child_size, wi]
                    and child_mask < mask_out[child_size, wi]
                ):
                    rss_out[child_size, wi] = child_rss
                    mask_out[child_size, wi] = child_mask
                    for t in range(nbest):
                        if (rss_out[child_size, t] > rss_out[child_size, wi]) or (
                            rss_out[child_size, t] == rss_out[child_size, wi]
                            and mask_out[child_size, t] > mask_out[child_size, wi]
                        ):
                            wi = t
                    worst_idx[child_size] = wi

        # Descend when some size reachable below the child is still improvable;
        # every subset in that subtree has RSS >= child_rss.
        remaining = p - (j + 1)
        lo = child_size - remaining
        if lo < kmin:
            lo = kmin
        hi = child_size - 1
        if hi > kmax:
            hi = kmax
        improvable = False
        for k in range(lo, hi + 1):
            if count[k] < nbest or child_rss <= rss_out[k, worst_idx[k]]:
                improvable = True
                break
        if improvable:
            depth += 1
            dst = stack_G[depth]
            for a in range(m):
                for b in range(m):
                    dst[a, b] = G[a, b]
            _sweep(dst, v)
            stack_mask[depth] = child_mask
            stack_size[depth] = child_size
            stack_j[depth] = j + 1

    return rss_out, mask_out, count, nodes


@njit(**_NB)
def all_subsets_rss(G0, p, kmin, kmax):
    """Weighted RSS of every subset with popcount in ``[kmin, kmax]``.

    Returns an array indexed by mask (length ``2**p``), with NaN for masks
    outside the size range.  Each subset is solved independently by Cholesky
    on its own sub-Gram, so no sweep round-off accumulates.
    """
    m = p + 2
    yy = p + 1
    total = 1 << p
    out = np.full(total, np.nan)
    idx = np.empty(p + 1, dtype=np.int64)
    for mask in range(total):
        k = 0
        mm = mask
        while mm:
            mm &= mm - 1
            k += 1
        if k < kmin or k > kmax:
            continue
        # Gather sub-Gram of [1, selected columns]; solve for RSS.
        q = 0
        idx[q] = 0
        q += 1
        for j in range(p):
            if (mask >> j) & 1:
                idx[q] = j + 1
                q += 1
        S = np.empty((q, q))
        g = np.empty(q)
        for a in range(q):
            ia = idx[a]
            g[a] = G0[ia, yy]
            for b in range(q):
                S[a, b] = G0[ia, idx[b]]
        coef = np.linalg.solve(S, g)
        acc = G0[yy, yy]
        for a in range(q):
            acc -= coef[a] * g[a]
        out[mask] = acc
    return out


@njit(**_NB)
def glm_loglik_by_mask(X1, y, w, fam, kmin, kmax, tol, max_iter):
    """Exact per-mask GLM log-likelihood over all subsets in a size range.

    ``X1`` is the full design with the intercept in column 0; mask bit j
    selects column j+1.  ``fam`` is 1 for binomial-logit, 2 for poisson-log.
    Returns ``(loglik_by_mask, status_by_mask)`` with status 0 ok,
    1 not converged, 2 separated/degenerate.  NaN loglik outside the range.
    """
    n, m1 = X1.shape
    p = m1 - 1
    total = 1 << p
    out = np.full(total, np.nan)
    status = np.zeros(total, dtype=np.int8)

    wsum = 0.0
    ybar = 0.0
    for i in range(n):
        wsum += w[i]
        ybar += w[i] * y[i]
    ybar /= wsum

    cols = np.empty(p + 1, dtype=np.int64)
    for mask in range(total):
        k = 0
        mm = mask
        while mm:
            mm &= mm - 1
            k += 1
        if k < kmin or k > kmax:
            continue
        q = 1
        cols[0] = 0
        for j in range(p):
            if (mask >> j) & 1:
                cols[q] = j + 1
                q += 1
        ll, st = _glm_fit_ll(X1, y, w, cols[:q], fam, ybar, tol, max_iter)
        out[mask] = ll
        status[mask] = st
    return out, status


@njit(**_NB)
def _glm_fit_ll(X1, y, w, cols, fam, ybar, tol, max_iter):
    """IRLS fit of one subset; returns (loglik, status)."""
    n = X1.shape[0]
    q = cols.shape[0]
    mu = np.empty(n)
    eta = np.empty(n)
    if fam == 1:
        degen = ybar <= 0.0 or ybar >= 1.0
        for i in range(n):
            mu[i] = (y[i] + 0.5) / 2.0 if degen else (y[i] + ybar) / 2.0
            eta[i] = np.log(mu[i] / (1.0 - mu[i]))
    else:
        floor = 0.5 * max(ybar, 1e-3)
        for i in range(n):
            v = (y[i] + ybar) / 2.0
            if v < floor:
                v = floor
            mu[i] = v
            eta[i] = np.log(v)

    dev = -2.0 * _glm_ll(y, mu, w, fam)
    beta = np.zeros(q)
    cand = np.empty(q)
    have_beta = False
    converged = False
    S = np.empty((q, q))
    rhs = np.empty(q)
    new_eta = np.empty(n)
    new_mu = np.empty(n)

    for _ in range(max_iter):
        _irls_normal_eqs(X1, y, w, cols, mu, eta, fam, S, rhs)
        new_beta = np.linalg.solve(S, rhs)
        step = 1.0
        cand_dev = dev
        while True:
            for a in range(q):
                cand[a] = new_beta[a] if (not have_beta or step == 1.0) else beta[a] + step * (new_beta[a] - beta[a])
            for i in range(n):
                acc = 0.0
                for a in range(q):
                    acc += X1[i, cols[a]] * cand[a]
                new_eta[i] = acc
                new_mu[i] = _mean_from_eta(acc, fam)
            cand_dev = -2.0 * _glm_ll(y, new_mu, w, fam)
            if cand_dev <= dev + 1e-12 or not have_beta or step < 1e-8:
                break
            step /= 2.0
        for a in range(q):
            beta[a] = cand[a]
        have_beta = True
        rel = abs(dev - cand_dev) / (abs(cand_dev) + 0.1)
        for i in range(n):
            eta[i] = new_eta[i]
            mu[i] = new_mu[i]
        dev = cand_dev
        if rel < tol:
            converged = True
            break

    if converged:
        # Polishing Newton step, mirroring the reference fitter.
        _irls_normal_eqs(X1, y, w, cols, mu, eta, fam, S, rhs)
        beta = np.linalg.solve(S, rhs)
        for i in range(n):
            acc = 0.0
            for a in range(q):
                acc += X1[i, cols[a]] * beta[a]
            eta[i] = acc
            mu[i] = _mean_from_eta(acc, fam)
        dev = -2.0 * _glm_ll(y, mu, w, fam)

    st = 0 if converged else 1
    if fam == 1:
        for i in range(n):
            raw = 1.0 / (1.0 + np.exp(-eta[i]))
            if raw < 1e-10 or raw > 1.0 - 1e-10:
                st = 2
                break
    return -0.5 * dev, st


@njit(**_NB)
def _mean_from_eta(eta, fam):
    if fam == 1:
        v = 1.0 / (1.0 + np.exp(-eta))
        if v < 1e-300:
            v = 1e-300
        elif v > 1.0 - 1e-16:
            v = 1.0 - 1e-16
        return v
    v = np.exp(eta)
    if v < 1e-300:
        v = 1e-300
    return v


@njit(**_NB)
def _glm_ll(y, mu, w, fam):
    acc = 0.0
    n = y.shape[0]
    if fam == 1:
        for i in range(n):
            acc += w[i] * (y[i] * np.log(mu[i]) + (1.0 - y[i]) * np.log1p(-mu[i]))
    else:
        for i in range(n):
            if y[i] == 0.0:
                acc += w[i] * (-mu[i])
            else:
                acc += w[i] * (y[i] * np.log(mu[i]) - mu[i] - math.lgamma(y[i] + 1.0))
    return acc


@njit(**_NB)
def _irls_normal_eqs(X1, y, w, cols, mu, eta, fam, S, rhs):
    """Weighted normal equations of the IRLS working regression (canonical links)."""
    n = X1.shape[0]
    q = cols.shape[0]
    for a in range(q):
        rhs[a] = 0.0
        for b in range(q):
            S[a, b] = 0.0
    for i in range(n):
        v = mu[i] * (1.0 - mu[i]) if fam == 1 else mu[i]
        wi = w[i] * v
        z = eta[i] + (y[i] - mu[i]) / v
        for a in range(q):
            xa = X1[i, cols[a]]
            rhs[a] += wi * xa * z
            for b in range(a, q):
                S[a, b] += wi * xa * X1[i, cols[b]]
    for a in range(q):
        for b in range(a):
            S[a, b] = S[b, a]
