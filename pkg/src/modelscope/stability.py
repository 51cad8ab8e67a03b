"""Exponential-weighted bootstrap over the model space.

Each replicate reweights the observations with i.i.d. Exp(mean 1) draws and
finds the best model of every size under those weights.  Tallying the
winners gives per-size model stability; minimising the GIC per replicate
across a penalty grid gives variable inclusion curves.  Replicate ``b``
draws its weights from a stream keyed by ``(seed, b)``, so results do not
depend on worker scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _leaps, masks
from ._parallel import ordered_map, resolve_cores
from .dataset import Dataset, add_redundant_variable
from .errors import TooManySkips, UnknownVariable
from .fitting import IRLS_MAX_ITER, IRLS_TOL, _effective_weights, fit, gaussian_loglik
from .subsets import (
    GLM_EXHAUSTIVE_MAX_P,
    SizeBestTable,
    _FAM_CODE,
    best_subsets,
    gaussian_size_table,
)

LAMBDA_GRID_POINTS = 101
_MAX_SKIP_FRACTION = 0.1


def _draw_weights(rng: np.random.Generator, n: int) -> np.ndarray:
    """Exponential(mean 1) bootstrap weights; patchable in tests."""
    return rng.exponential(1.0, n)


def _weight_rng(seed: int, b: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=(seed, 1, b)))


def rv_rng(seed: int) -> np.random.Generator:
    """Stream used to draw the injected redundant-variable column."""
    return np.random.default_rng(np.random.SeedSequence(entropy=(seed, 0)))


@dataclass(frozen=True)
class VisResult:
    """Everything the model-stability and variable-inclusion views need.

    ``rep_masks``/``rep_q`` hold, per replicate and per size ``k`` (candidate
    columns, 0..p), the winning mask under that replicate's weights and its
    weighted description loss.  ``stability`` maps model *dimension*
    (``k + 1``, counting the intercept) to ``{mask: selection frequency}``.
    ``inclusion`` has one row per candidate column over ``lambda_grid``.
    """

    dataset: Dataset
    B: int
    seed: int
    rep_masks: np.ndarray
    rep_q: np.ndarray
    original_table: SizeBestTable
    lambda_grid: np.ndarray
    inclusion: np.ndarray
    stability: dict
    skipped: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def names(self):
        return self.dataset.names

    @property
    def rv_index(self):
        return self.dataset.rv_index


def _replicate_bests(d: Dataset, w: np.ndarray):
    """Best (mask, q_hat) per size under bootstrap weights ``w``."""
    if d.family.is_gaussian:
        entries, total_w, _, _ = gaussian_size_table(d, 1, case_weights=w)
        ms = np.array([e[0][0] for e in entries], dtype=np.int64)
        qs = np.array([-2.0 * gaussian_loglik(e[0][1], total_w) for e in entries])
        return ms, qs
    if d.p > GLM_EXHAUSTIVE_MAX_P:
        raise ValueError(
            "exact GLM bootstrap search is limited to p <= "
            f"{GLM_EXHAUSTIVE_MAX_P}; transform with glm_to_wls for larger problems"
        )
    eff = _effective_weights(d, w)
    X1 = np.column_stack([np.ones(d.n), d.X])
    ll, status = _leaps.glm_loglik_by_mask(
        X1, d.y, eff, _FAM_CODE[d.family.kind], 0, d.p, IRLS_TOL, IRLS_MAX_ITER
    )
    ms = np.empty(d.p + 1, dtype=np.int64)
    qs = np.empty(d.p + 1)
    for k in range(d.p + 1):
        best = None
        for m in masks.masks_of_size(d.p, k):
            if status[m] == 2:
                continue
            key = (-2.0 * float(ll[m]), m)
            if best is None or key < best:
                best = key
        if best is None:
            raise ValueError(f"no fittable model at size {k}")
        qs[k], ms[k] = best
    return ms, qs


def run_vis(d: Dataset, B: int = 150, nbest=5, redundant: bool = True,
            seed: int | None = None, cores=None, nvmax=None) -> VisResult:
    """Run the exponential-weighted bootstrap and derive the stability tables.

    Parameters
    ----------
    d : Dataset
    B : int
        Bootstrap replicate count.
    nbest : int or "all"
        How many models per size the stored original-data table keeps (the
        per-replicate tally always uses the single best per size).
    redundant : bool
        Append a standard-normal redundant column (named ``RV``) before
        searching, drawn once from a stream keyed by ``seed``.
    seed : int
        Required; drives the RV draw and every replicate's weights.
    cores : int, optional
        Worker threads (``MODELSCOPE_CORES`` overrides; default all-but-one).
    """
    if B < 1:
        raise ValueError("B must be at least 1")
    if seed is None:
        raise ValueError("seed is required for reproducible bootstrap runs")
    seed = int(seed)
    if redundant:
        d = add_redundant_variable(d, rv_rng(seed))
    original_table = best_subsets(d, nbest=nbest, nvmax=nvmax)

    def one(b):
        w = _draw_weights(_weight_rng(seed, b), d.n)
        try:
            return _replicate_bests(d, w)
        except Exception as exc:  # noqa: BLE001 - skip-and-count policy
            return exc

    results = ordered_map(one, B, resolve_cores(cores))
    failures = [r for r in results if isinstance(r, Exception)]
    if len(failures) > _MAX_SKIP_FRACTION * B:
        raise TooManySkips(len(failures), B)
    kept = [r for r in results if not isinstance(r, Exception)]
    rep_masks = np.stack([r[0] for r in kept])
    rep_q = np.stack([r[1] for r in kept])

    lam_grid = np.linspace(0.0, 2.0 * np.log(d.n), LAMBDA_GRID_POINTS)
    inclusion = _inclusion_matrix(rep_masks, rep_q, lam_grid, d.p)
    stability = _stability_frequencies(rep_masks)
    return VisResult(
        dataset=d, B=B, seed=seed, rep_masks=rep_masks, rep_q=rep_q,
        original_table=original_table, lambda_grid=lam_grid, inclusion=inclusion,
        stability=stability, skipped=len(failures),
        meta={"B_effective": len(kept)},
    )


def _inclusion_matrix(rep_masks, rep_q, lam_grid, p):
    """Share of replicates whose GIC-best model contains each column."""
    dims = np.arange(rep_q.shape[1]) + 1.0
    out = np.zeros((p, lam_grid.size))
    B_eff = rep_masks.shape[0]
    for li, lam in enumerate(lam_grid):
        scores = rep_q + lam * dims  # ties resolve to the smaller size
        winners = rep_masks[np.arange(B_eff), np.argmin(scores, axis=1)]
        for j in range(p):
            out[j, li] = np.mean((winners >> j) & 1)
    return out


def _stability_frequencies(rep_masks):
    B_eff = rep_masks.shape[0]
    table = {}
    for k in range(rep_masks.shape[1]):
        counts = {}
        for m in rep_masks[:, k]:
            counts[int(m)] = counts.get(int(m), 0) + 1
        table[k + 1] = {m: c / B_eff for m, c in sorted(counts.items())}
    return table


def vip(v: VisResult):
    """Inclusion matrix plus the legend order (descending mean inclusion)."""
    means = v.inclusion.mean(axis=1)
    order = sorted(range(v.dataset.p), key=lambda j: (-means[j], j))
    return v.inclusion, order


def stability_table(v: VisResult, min_prob: float = 0.3):
    """Printable rows ``(formula, prob, loglik, dimension)`` for dominant models.

    Models selected with frequency at least ``min_prob``, ascending by size
    and then descending by probability; log-likelihoods are unweighted refits
    on the original data.  The full-dimension model is omitted: it is the
    only model of its size, so its frequency is always 1.
    """
    d = v.dataset
    rows = []
    top_dim = d.p + 1
    for dim in sorted(v.stability):
        if dim == top_dim:
            continue
        chosen = [(m, prob) for m, prob in v.stability[dim].items() if prob >= min_prob]
        chosen.sort(key=lambda t: (-t[1], t[0]))
        for m, prob in chosen:
            ll = fit(d, m).loglik
            rows.append((d.formula(m), prob, ll, dim))
    return rows


def format_stability_table(rows) -> str:
    width = max((len(r[0]) for r in rows), default=4)
    lines = [f"{'name':>{width}} {'prob':>5} {'logLikelihood':>14}"]
    for formula_str, prob, ll, _dim in rows:
        lines.append(f"{formula_str:>{width}} {prob:>5.2f} {ll:>14.2f}")
    return "\n".join(lines)


def lvk(v: VisResult, highlight: str | None = None):
    """Loss-versus-dimension points from the stored original-data table.

    Returns rows ``(dimension, q_hat, contains_highlight, mask)`` for every
    stored model.
    """
    d = v.dataset
    j = None
    if highlight is not None:
        if highlight not in d.names:
            raise UnknownVariable(f"{highlight!r} is not a candidate column")
        j = d.names.index(highlight)
    pts = []
    for k in v.original_table.sizes():
        for m, q in v.original_table.entries[k]:
            contains = bool((m >> j) & 1) if j is not None else False
            pts.append((k + 1, q, contains, m))
    return pts
