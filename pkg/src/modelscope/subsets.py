"""Per-size best-subset search.

For every model size ``k`` the search returns the ``nbest`` models with the
smallest description loss.  Gaussian problems use an exact RSS
branch-and-bound over the deletion tree (or plain enumeration when every
model is wanted); binomial/poisson problems are refit exactly for small
``p`` and ranked through the weighted-least-squares surrogate above that,
with exact refits of the shortlisted models.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _leaps, masks
from .dataset import Dataset
from .errors import RankDeficientSubmodel, SeparationDetected
from .fitting import IRLS_MAX_ITER, IRLS_TOL, _effective_weights, fit, gaussian_loglik, glm_to_wls

# Largest GLM candidate count that is refit exactly for every subset;
# beyond this the surrogate ranking with exact shortlist refits takes over.
GLM_EXHAUSTIVE_MAX_P = 15

# Enumerating all subsets materialises 2^p losses.
_ENUMERATION_MAX_P = 24

_FAM_CODE = {"binomial-logit": 1, "poisson-log": 2}


@dataclass(frozen=True)
class SizeBestTable:
    """Per-size best models, ascending in description loss within each size.

    ``entries[k]`` lists ``(mask, q_hat)`` for models with ``k`` candidate
    columns (dimension ``k + 1`` counting the intercept), best first.
    """

    entries: tuple
    search_method: str
    nbest: object
    p: int
    nvmax: int
    skipped: int = 0
    nodes: int | None = None
    meta: dict = field(default_factory=dict)

    def sizes(self):
        return range(len(self.entries))

    def best(self, k: int):
        """Best ``(mask, q_hat)`` at size ``k``."""
        if not self.entries[k]:
            raise ValueError(f"no models recorded at size {k}")
        return self.entries[k][0]

    def best_q(self) -> np.ndarray:
        """Array of best q_hat per size (NaN where a size has no models)."""
        return np.array([e[0][1] if e else np.nan for e in self.entries])


def _gaussian_gram(d: Dataset, w: np.ndarray | None):
    weights = np.ones(d.n) if w is None else np.asarray(w, dtype=float)
    A = np.empty((d.n, d.p + 2))
    A[:, 0] = 1.0
    A[:, 1 : d.p + 1] = d.X
    A[:, d.p + 1] = d.y
    G0 = _leaps.weighted_gram(A, weights)
    return G0, float(np.sum(weights))


def _check_full_rank(G0: np.ndarray, p: int):
    diag0 = np.diag(G0).copy()
    G = G0.copy()
    worst = _leaps.sweep_full(G, p, diag0)
    if not np.isfinite(worst) or worst < 1e-10:
        raise RankDeficientSubmodel("full model is rank deficient under the given weights")
    return G


def gaussian_size_table(d: Dataset, nbest, case_weights=None, nvmax=None):
    """Raw per-size (mask, rss) lists for a gaussian problem, plus metadata.

    Shared by :func:`best_subsets` and the bootstrap engines, which convert
    weighted RSS to description loss themselves.
    """
    p = d.p
    nvmax = p if nvmax is None else min(int(nvmax), p)
    w = _effective_weights(d, case_weights)
    G0, total_w = _gaussian_gram(d, w)
    G_swept = _check_full_rank(G0, p)
    yy = p + 1

    if nbest == "all":
        if p > _ENUMERATION_MAX_P:
            raise ValueError(f"nbest='all' enumerates 2^{p} models; use a numeric nbest")
        rss_by_mask = _leaps.all_subsets_rss(G0, p, 0, nvmax)
        entries = []
        for k in range(nvmax + 1):
            ms = np.fromiter(masks.masks_of_size(p, k), dtype=np.int64, count=-1)
            rs = rss_by_mask[ms]
            order = np.lexsort((ms, rs))
            entries.append([(int(ms[i]), float(rs[i])) for i in order])
        return entries, total_w, None, "exhaustive"

    nbest = int(nbest)
    if nbest < 1:
        raise ValueError("nbest must be at least 1")
    # Branching order: delete the cheapest column first.  The drop-one RSS
    # increase falls out of the swept full Gram in O(1) per column.
    rss_full = G_swept[yy, yy]
    drop = np.array(
        [rss_full - (G_swept[yy, yy] - G_swept[yy, v] * G_swept[v, yy] / G_swept[v, v]) for v in range(1, p + 1)]
    )
    perm = np.argsort(np.abs(drop), kind="stable")  # ascending RSS increase
    take = np.concatenate(([0], perm + 1, [p + 1]))
    Gp = np.ascontiguousarray(G0[np.ix_(take, take)])
    rss_b, mask_b, count_b, nodes = _leaps.bnb_best_subsets(Gp, p, nbest, 0, nvmax)
    entries = []
    for k in range(nvmax + 1):
        rows = []
        for t in range(int(count_b[k])):
            km = int(mask_b[k, t])
            orig = 0
            for i in range(p):
                if (km >> i) & 1:
                    orig |= 1 << int(perm[i])
            rows.append((orig, float(rss_b[k, t])))
        rows.sort(key=lambda r: (r[1], r[0]))
        entries.append(rows)
    return entries, total_w, int(nodes), "branch_and_bound"


def _rss_entries_to_q(entries, total_w):
    return tuple(
        tuple((m, -2.0 * gaussian_loglik(r, total_w)) for m, r in ent) for ent in entries
    )


def glm_size_table(d: Dataset, case_weights=None, nvmax=None):
    """Exact per-size (mask, q_hat) lists for a GLM by refitting every subset."""
    p = d.p
    nvmax = p if nvmax is None else min(int(nvmax), p)
    if p > _ENUMERATION_MAX_P:
        raise ValueError("exact GLM enumeration is limited to small p")
    w = _effective_weights(d, case_weights)
    weights = np.ones(d.n) if w is None else w
    X1 = np.column_stack([np.ones(d.n), d.X])
    fam = _FAM_CODE[d.family.kind]
    ll, status = _leaps.glm_loglik_by_mask(X1, d.y, weights, fam, 0, nvmax, IRLS_TOL, IRLS_MAX_ITER)
    entries = []
    skipped = 0
    nonconverged = 0
    for k in range(nvmax + 1):
        rows = []
        for m in masks.masks_of_size(p, k):
            st = int(status[m])
            if st == 2:
                skipped += 1
                continue
            if st == 1:
                nonconverged += 1
            rows.append((m, -2.0 * float(ll[m])))
        rows.sort(key=lambda r: (r[1], r[0]))
        entries.append(rows)
    return entries, skipped, nonconverged


def best_subsets(d: Dataset, nbest="all", case_weights=None, nvmax=None, method="auto") -> SizeBestTable:
    """Find, for each size, the ``nbest`` models minimising description loss.

    ``method`` is ``"auto"`` (exact search, surrogate for large GLMs),
    ``"exhaustive"``, ``"branch_and_bound"`` (gaussian only) or
    ``"surrogate"`` (GLM only).
    """
    p = d.p
    nvmax_eff = p if nvmax is None else min(int(nvmax), p)
    if d.family.is_gaussian:
        if method == "surrogate":
            raise ValueError("the surrogate search applies to binomial-logit datasets")
        use = nbest if method != "exhaustive" else "all"
        entries, total_w, nodes, how = gaussian_size_table(d, use, case_weights, nvmax_eff)
        q_entries = _rss_entries_to_q(entries, total_w)
        if method == "exhaustive" and nbest != "all":
            q_entries = tuple(ent[: int(nbest)] for ent in q_entries)
            how = "exhaustive"
        return SizeBestTable(entries=q_entries, search_method=how, nbest=nbest,
                             p=p, nvmax=nvmax_eff, nodes=nodes)

    if method == "branch_and_bound":
        raise ValueError("branch-and-bound operates on gaussian problems; GLMs go exact or surrogate")
    exact = method == "exhaustive" or (method == "auto" and p <= GLM_EXHAUSTIVE_MAX_P)
    if exact:
        entries, skipped, nonconv = glm_size_table(d, case_weights, nvmax_eff)
        if nbest != "all":
            entries = [ent[: int(nbest)] for ent in entries]
        return SizeBestTable(entries=tuple(tuple(e) for e in entries), search_method="exhaustive",
                             nbest=nbest, p=p, nvmax=nvmax_eff, skipped=skipped,
                             meta={"nonconverged": nonconv})
    return _surrogate_table(d, nbest, case_weights, nvmax_eff)


def _surrogate_table(d: Dataset, nbest, case_weights, nvmax) -> SizeBestTable:
    """Rank GLM subsets by surrogate weighted RSS, then refit the shortlist exactly."""
    if nbest == "all":
        raise ValueError("the surrogate search needs a numeric nbest")
    nbest = int(nbest)
    full_fit = fit(d, d.full_mask(), case_weights=case_weights)
    sur = glm_to_wls(d, full_fit)
    shortlist = max(3 * nbest, 10)
    entries, _, nodes, _ = gaussian_size_table(sur, shortlist, case_weights, nvmax)
    out = []
    skipped = 0
    for k, ent in enumerate(entries):
        rows = []
        for m, _rss in ent:
            try:
                f = fit(d, m, case_weights=case_weights)
            except (RankDeficientSubmodel, SeparationDetected):
                skipped += 1
                continue
            rows.append((m, f.q_hat))
        rows.sort(key=lambda r: (r[1], r[0]))
        out.append(tuple(rows[:nbest]))
    return SizeBestTable(entries=tuple(out), search_method="surrogate", nbest=nbest,
                         p=d.p, nvmax=nvmax, skipped=skipped, nodes=nodes)


def rank_within_size(table: SizeBestTable, lam: float) -> int:
    """The GIC minimiser over the per-size bests for penalty multiplier ``lam``.

    Ties break toward the smaller size, then the smaller mask.
    """
    best = None
    for k in table.sizes():
        if not table.entries[k]:
            continue
        m, q = table.entries[k][0]
        key = (q + lam * (k + 1), k, m)
        if best is None or key < best:
            best = key
    if best is None:
        raise ValueError("empty table")
    return best[2]
