"""Greedy stepwise selection under a GIC penalty.

``step`` adds (forward, from the null model) or drops (backward, from the
full model) one variable at a time, always taking the move that most
improves the criterion, and stops when no move improves it.  Also provides
the four-way screening pass (forward/backward x AIC/BIC) that bounds the
plausible model sizes for the adaptive fence's c-grid.
"""

from __future__ import annotations

import math

import numpy as np

from . import masks
from .dataset import Dataset
from .errors import RankDeficientSubmodel, SeparationDetected
from .fitting import fit, gic

_MIN_IMPROVEMENT = 1e-12


def step(d: Dataset, direction: str = "backward", lam: float = 2.0, case_weights=None):
    """Greedy single-variable stepwise search minimising the GIC.

    Parameters
    ----------
    d : Dataset
    direction : {"backward", "forward"}
        Backward starts from the full model and drops; forward starts from
        the null model and adds.
    lam : float
        GIC penalty multiplier (2 is AIC, ``log n`` is BIC).

    Returns
    -------
    (mask, path) : the final model and the visited masks, start to finish.
    """
    if direction not in ("forward", "backward"):
        raise ValueError("direction must be 'forward' or 'backward'")
    current = d.full_mask() if direction == "backward" else 0
    score = _gic_of(d, current, lam, case_weights)
    path = [current]
    while True:
        best_move = None
        for j in range(d.p):
            bit = 1 << j
            if direction == "backward":
                if not current & bit:
                    continue
                cand = current & ~bit
            else:
                if current & bit:
                    continue
                cand = current | bit
            try:
                cand_score = _gic_of(d, cand, lam, case_weights)
            except (RankDeficientSubmodel, SeparationDetected):
                continue
            if best_move is None or cand_score < best_move[0] or (
                cand_score == best_move[0] and cand < best_move[1]
            ):
                best_move = (cand_score, cand)
        if best_move is None or best_move[0] >= score - _MIN_IMPROVEMENT:
            return current, path
        score, current = best_move
        path.append(current)


def _gic_of(d, mask, lam, case_weights):
    f = fit(d, mask, case_weights=case_weights)
    return gic(f.q_hat, masks.dimension(mask), lam)


def screen_sizes(d: Dataset, case_weights=None):
    """Size bounds from four stepwise runs: directions x {AIC, BIC}.

    Returns ``(k_lo, k_hi)`` in candidate-column counts: the smallest and
    largest stepwise model size, widened by two each way and clamped to
    ``[0, p]``.
    """
    lam_bic = math.log(d.n)
    found = []
    for direction in ("forward", "backward"):
        for lam in (2.0, lam_bic):
            m, _ = step(d, direction, lam, case_weights)
            found.append(masks.popcount(m))
    k_lo = max(0, min(found) - 2)
    k_hi = min(d.p, max(found) + 2)
    return k_lo, k_hi
