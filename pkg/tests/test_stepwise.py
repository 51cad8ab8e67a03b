import math

import numpy as np
import pytest

import modelscope.stepwise as sw
from conftest import random_gaussian
from modelscope import fit, gic, masks, screen_sizes, step
from modelscope.dataset import Dataset
from modelscope.families import GAUSSIAN


def test_backward_drops_x8_on_artificialeg(artificialeg):
    final, path = step(artificialeg, "backward", 2.0)
    assert final == artificialeg.full_mask() & ~(1 << 7)
    assert path == [artificialeg.full_mask(), final]


def test_forward_bic_on_birthwt(birthwt):
    final, _ = step(birthwt, "forward", math.log(birthwt.n))
    assert final == masks.from_names(birthwt.names, ["ptdTRUE"])


def test_null_signal_large_penalty():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((60, 5))
    y = rng.standard_normal(60)
    d = Dataset(y=y, X=X, names=tuple("abcde"), family=GAUSSIAN)
    final, path = step(d, "forward", 50.0)
    assert final == 0 and path == [0]


def test_path_strictly_improves_gic():
    d = random_gaussian(n=100, p=8, seed=4)
    for direction in ("forward", "backward"):
        for lam in (2.0, math.log(d.n)):
            final, path = step(d, direction, lam)
            scores = [gic(fit(d, m).q_hat, masks.dimension(m), lam) for m in path]
            assert all(a - b > 1e-12 for a, b in zip(scores, scores[1:]))
            assert len(path) <= d.p + 1


def test_direction_validation():
    d = random_gaussian(seed=5)
    with pytest.raises(ValueError):
        step(d, "both", 2.0)


def test_screen_sizes_bounds(monkeypatch):
    d = random_gaussian(n=80, p=12, seed=6)
    canned = iter([3, 5, 5, 7])

    def fake_step(dd, direction, lam, case_weights=None):
        k = next(canned)
        return masks.from_indices(range(k)), []

    monkeypatch.setattr(sw, "step", fake_step)
    assert sw.screen_sizes(d) == (1, 9)


def test_screen_sizes_clamped():
    d = random_gaussian(n=60, p=4, seed=7)
    lo, hi = screen_sizes(d)
    assert 0 <= lo <= hi <= d.p


def test_screen_sizes_contains_x8_size(artificialeg):
    from modelscope.dataset import add_redundant_variable

    dr = add_redundant_variable(artificialeg, 1)
    lo, hi = screen_sizes(dr)
    assert lo <= 1, "the single-variable model must stay reachable"
    assert hi >= 8


def test_screen_sizes_birthwt_bounds(birthwt):
    lo, hi = screen_sizes(birthwt)
    # forward-BIC reaches the single-variable model; backward-AIC a larger one
    assert lo == 0
    assert hi >= 5
