"""Simplified adaptive fence for linear and generalised linear models.

A model is *within the fence* at parameter ``c`` when its description loss
exceeds the full model's by at most ``c``.  The adaptive procedure draws
parametric-bootstrap responses under the full model, finds the smallest
in-fence model per replicate over a grid of ``c`` values, and tracks the
empirical probability ``p*(c)`` of the most frequently selected model; the
first peak of that curve locates ``c*``.  Models containing the injected
redundant variable are known noise, so they are excluded from the tally,
which kills the otherwise automatic peak at ``c = 0``.

Only the tallying is grid-dependent: each replicate's per-size loss spectrum
is computed once (exactly, over all subsets) and then scanned per ``c``.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

from . import _leaps, masks
from ._parallel import ordered_map, resolve_cores
from .dataset import Dataset
from .errors import (
    AllModelsContainRV,
    NoPeak,
    RankDeficientSubmodel,
    RedundantVariableRequired,
    TooManySkips,
)
from .fitting import IRLS_MAX_ITER, IRLS_TOL, fit, gaussian_loglik
from .stepwise import screen_sizes
from .subsets import GLM_EXHAUSTIVE_MAX_P, SizeBestTable, _FAM_CODE, best_subsets

_MAX_SKIP_FRACTION = 0.1
_MAX_REDRAWS_PER_REPLICATE = 20
C_MAX_HEADROOM = 1.2


@dataclass(frozen=True)
class FenceCurve:
    """One ``p*(c)`` curve: probabilities and per-``c`` argmax masks (-1: none)."""

    p_star: np.ndarray
    argmax: np.ndarray


@dataclass(frozen=True)
class AfResult:
    """Adaptive-fence output: both tally modes over a shared c-grid."""

    dataset: Dataset
    B: int
    seed: int
    c_grid: np.ndarray
    curves: dict  # {True: FenceCurve (best-only), False: FenceCurve (weighted)}
    c_star: dict  # {True: float | None, False: float | None}
    screening: tuple | None
    skipped: int
    meta: dict = field(default_factory=dict)

    @property
    def names(self):
        return self.dataset.names


def _rep_rng(seed: int, b: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=(seed, 2, b)))


@dataclass(frozen=True)
class _RepSpectrum:
    """Per-size loss spectrum of one bootstrap replicate."""

    q_full: float
    best_mask: np.ndarray  # per size, the loss-minimising mask
    sorted_q: tuple  # per size, ascending losses of all fittable models


def _gaussian_spectrum(d: Dataset, y_star: np.ndarray) -> _RepSpectrum:
    w = np.ones(d.n) if d.case_weights is None else d.case_weights
    A = np.empty((d.n, d.p + 2))
    A[:, 0] = 1.0
    A[:, 1 : d.p + 1] = d.X
    A[:, d.p + 1] = y_star
    G0 = _leaps.weighted_gram(A, w)
    diag0 = np.diag(G0).copy()
    Gs = G0.copy()
    if _leaps.sweep_full(Gs, d.p, diag0) < 1e-10:
        raise RankDeficientSubmodel("full model rank deficient in a bootstrap replicate")
    rss = _leaps.all_subsets_rss(G0, d.p, 0, d.p)
    total_w = float(np.sum(w))
    with np.errstate(divide="ignore"):
        q_by_mask = total_w * (np.log(2.0 * np.pi * rss / total_w) + 1.0)
    return _spectrum_from_q(q_by_mask, d.p)


def _glm_spectrum(d: Dataset, y_star: np.ndarray) -> _RepSpectrum:
    w = np.ones(d.n) if d.case_weights is None else d.case_weights
    X1 = np.column_stack([np.ones(d.n), d.X])
    ll, status = _leaps.glm_loglik_by_mask(
        X1, y_star, w, _FAM_CODE[d.family.kind], 0, d.p, IRLS_TOL, IRLS_MAX_ITER
    )
    full = (1 << d.p) - 1
    if status[full] == 2:
        raise _SeparatedReplicate()
    q = -2.0 * ll
    q[status == 2] = np.nan
    return _spectrum_from_q(q, d.p)


class _SeparatedReplicate(Exception):
    pass


def _spectrum_from_q(q_by_mask: np.ndarray, p: int) -> _RepSpectrum:
    best_mask = np.empty(p + 1, dtype=np.int64)
    sorted_q = []
    pops = _popcounts(p)
    for k in range(p + 1):
        sel = np.flatnonzero(pops == k)
        qs = q_by_mask[sel]
        ok = ~np.isnan(qs)
        sel, qs = sel[ok], qs[ok]
        order = np.lexsort((sel, qs))
        best_mask[k] = sel[order[0]] if order.size else -1
        sorted_q.append(qs[order])
    full = (1 << p) - 1
    return _RepSpectrum(q_full=float(q_by_mask[full]), best_mask=best_mask,
                        sorted_q=tuple(sorted_q))


_POPCOUNT_CACHE: dict = {}


def _popcounts(p: int) -> np.ndarray:
    got = _POPCOUNT_CACHE.get(p)
    if got is None:
        got = np.array([m.bit_count() for m in range(1 << p)], dtype=np.int64)
        _POPCOUNT_CACHE[p] = got
    return got


def _draw_response(d: Dataset, full_fit, rng: np.random.Generator) -> np.ndarray:
    mu = full_fit.fitted
    if d.family.is_gaussian:
        # Unbiased scale for the noise; heteroskedastic under case weights.
        sigma2 = full_fit.rss / (d.n - full_fit.p_alpha)
        scale = np.sqrt(sigma2 / (d.case_weights if d.case_weights is not None else 1.0))
        return mu + rng.normal(size=d.n) * scale
    if d.family.kind == "binomial-logit":
        return rng.binomial(1, mu).astype(float)
    return rng.poisson(mu).astype(float)


def run_af(d: Dataset, B: int = 150, n_c: int = 50, c_max: float | None = None,
           initial_stepwise: bool = True, seed: int | None = None, cores=None) -> AfResult:
    """Run the simplified adaptive fence.

    Parameters
    ----------
    d : Dataset
        Must carry an injected redundant variable (see
        :func:`modelscope.dataset.add_redundant_variable`).
    B : int
        Parametric-bootstrap replicates.
    n_c : int
        Grid size; ``c`` values are evenly spaced on ``[0, c_max]``.
    c_max : float, optional
        Upper end of the grid.  By default it is 1.2x the largest
        original-data loss gap over the stepwise-screened size range
        (all sizes when ``initial_stepwise`` is off).
    initial_stepwise : bool
        Run the four-way stepwise screen to bound the c-range.
    seed : int
        Required; replicate ``b`` draws from a stream keyed by ``(seed, b)``.
    """
    if d.rv_index is None:
        raise RedundantVariableRequired("run_af needs the redundant variable; add it first")
    if seed is None:
        raise ValueError("seed is required for reproducible bootstrap runs")
    if B < 1 or n_c < 2:
        raise ValueError("need B >= 1 and n_c >= 2")
    seed = int(seed)
    if not d.family.is_gaussian and d.p > GLM_EXHAUSTIVE_MAX_P:
        raise ValueError(
            "exact GLM fence search is limited to p <= "
            f"{GLM_EXHAUSTIVE_MAX_P}; transform with glm_to_wls for larger problems"
        )

    full_fit = fit(d, d.full_mask())
    screening = None
    if c_max is None or initial_stepwise:
        lo, hi = screen_sizes(d) if initial_stepwise else (0, d.p)
        if initial_stepwise:
            screening = (lo, hi)
        if c_max is None:
            # The null model's gap is always covered so the grid reaches the
            # c where every replicate collapses to the null model.
            table = best_subsets(d, nbest=1)
            gaps = [table.best(k)[1] - full_fit.q_hat
                    for k in range(0, hi + 1) if table.entries[k]]
            c_max = C_MAX_HEADROOM * max(gaps)
    if not c_max or c_max <= 0:
        raise ValueError("c_max must be positive")
    c_grid = np.linspace(0.0, float(c_max), int(n_c))

    spectrum_fn = _gaussian_spectrum if d.family.is_gaussian else _glm_spectrum
    redraws = [0] * B

    def one(b):
        rng = _rep_rng(seed, b)
        for _attempt in range(_MAX_REDRAWS_PER_REPLICATE):
            y_star = _draw_response(d, full_fit, rng)
            try:
                return spectrum_fn(d, y_star)
            except _SeparatedReplicate:
                redraws[b] += 1
        return None

    reps = ordered_map(one, B, resolve_cores(cores))
    n_redraws = sum(redraws)
    dropped = sum(r is None for r in reps)
    if n_redraws > _MAX_SKIP_FRACTION * B:
        raise TooManySkips(n_redraws, B)
    reps = [r for r in reps if r is not None]

    curves = _tally_curves(reps, c_grid, d.rv_index)
    if all(c.argmax.max() < 0 for c in curves.values()):
        raise AllModelsContainRV("every in-fence candidate carried the redundant variable")
    c_star = {}
    for mode, curve in curves.items():
        try:
            c_star[mode] = first_peak(curve.p_star, c_grid)
        except NoPeak:
            c_star[mode] = None
    return AfResult(
        dataset=d, B=B, seed=seed, c_grid=c_grid, curves=curves, c_star=c_star,
        screening=screening, skipped=n_redraws,
        meta={"c_max": float(c_max), "B_effective": len(reps), "dropped_replicates": dropped},
    )


def _tally_curves(reps, c_grid, rv_index) -> dict:
    rv_bit = 1 << rv_index
    B_eff = len(reps)
    p_true = np.zeros(c_grid.size)
    p_false = np.zeros(c_grid.size)
    am_true = np.full(c_grid.size, -1, dtype=np.int64)
    am_false = np.full(c_grid.size, -1, dtype=np.int64)
    for ci, c in enumerate(c_grid):
        tally_true: dict = {}
        tally_false: dict = {}
        for rep in reps:
            thresh = rep.q_full + c
            for k in range(len(rep.sorted_q)):
                qs = rep.sorted_q[k]
                if qs.size and qs[0] <= thresh:
                    best = int(rep.best_mask[k])
                    if not best & rv_bit:
                        m = bisect_right(qs, thresh)
                        tally_true[best] = tally_true.get(best, 0.0) + 1.0
                        tally_false[best] = tally_false.get(best, 0.0) + 1.0 / m
                    break
        for tally, p_out, am_out in ((tally_true, p_true, am_true), (tally_false, p_false, am_false)):
            if tally:
                best = min(tally.items(), key=lambda t: (-t[1], masks.popcount(t[0]), t[0]))
                p_out[ci] = best[1] / B_eff
                am_out[ci] = best[0]
    return {
        True: FenceCurve(p_star=p_true, argmax=am_true),
        False: FenceCurve(p_star=p_false, argmax=am_false),
    }


def models_within_fence(table: SizeBestTable, q_full: float, c: float):
    """All stored models of the smallest size that reaches inside the fence.

    Returns ``(candidates, best)`` where ``candidates`` are the in-fence
    ``(mask, q_hat)`` pairs of that minimal size and ``best`` is the one
    with the smallest loss.  The full model always qualifies at ``c >= 0``.
    """
    thresh = q_full + c
    for k in table.sizes():
        ent = table.entries[k]
        if ent and ent[0][1] <= thresh:
            cands = [mq for mq in ent if mq[1] <= thresh]
            return cands, cands[0]
    raise ValueError("no model within the fence; is q_full consistent with the table?")


def pstar(per_replicate_candidates, mode: bool, rv_index: int):
    """Aggregate fence-candidate lists into ``(p_star, argmax_mask)``.

    ``mode`` True is best-only (each replicate gives weight 1 to its best
    candidate); False shares weight ``1/m`` when ``m`` same-size models sit
    inside the fence.  Candidates containing the redundant variable are
    excluded from the tally; with nothing left the probability is 0 and the
    argmax is ``None``.
    """
    rv_bit = 1 << rv_index
    tally: dict = {}
    B = len(per_replicate_candidates)
    if B == 0:
        raise ValueError("need at least one replicate")
    for cands in per_replicate_candidates:
        if not cands:
            continue
        best = min(cands, key=lambda mq: (mq[1], mq[0]))[0]
        if best & rv_bit:
            continue
        weight = 1.0 if mode else 1.0 / len(cands)
        tally[best] = tally.get(best, 0.0) + weight
    if not tally:
        return 0.0, None
    best = min(tally.items(), key=lambda t: (-t[1], masks.popcount(t[0]), t[0]))
    return best[1] / B, best[0]


def first_peak(curve, c_grid) -> float:
    """Location of the first peak of ``p*(c)`` after plateau merging.

    Consecutive equal values collapse into one plateau located at its
    midpoint; the first plateau that strictly dominates both neighbours is
    the peak.  Without a strict interior maximum, the start of the first
    flat run (length two or more, not terminal) at least as high as
    everything before it is returned.  A monotone curve has no peak.
    """
    vals = np.asarray(curve, dtype=float)
    grid = np.asarray(c_grid, dtype=float)
    if vals.size < 3 or vals.size != grid.size:
        raise ValueError("need matching curve and grid with at least 3 points")
    plateaus = []  # (value, first_idx, last_idx)
    start = 0
    for i in range(1, vals.size + 1):
        if i == vals.size or vals[i] != vals[start]:
            plateaus.append((vals[start], start, i - 1))
            start = i
    for t in range(1, len(plateaus) - 1):
        v, a, b = plateaus[t]
        if v > plateaus[t - 1][0] and v > plateaus[t + 1][0]:
            return float((grid[a] + grid[b]) / 2.0)
    running = -np.inf
    for t, (v, a, b) in enumerate(plateaus):
        if t > 0 and t < len(plateaus) - 1 and b > a and v >= running:
            return float(grid[a])
        running = max(running, v)
    raise NoPeak("selection-probability curve has no interior peak")
