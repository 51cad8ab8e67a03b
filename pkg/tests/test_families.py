import numpy as np
import pytest

from modelscope.families import BINOMIAL, GAUSSIAN, POISSON, get_family


def test_gaussian_identity_links():
    x = np.array([-2.0, 0.0, 3.5])
    assert np.allclose(GAUSSIAN.inverse_link(x), x)
    assert np.allclose(GAUSSIAN.variance_fn(x), 1.0)
    assert not GAUSSIAN.dispersion_known


def test_binomial_logit_links():
    assert BINOMIAL.inverse_link(0.0) == pytest.approx(0.5)
    assert BINOMIAL.inverse_link(np.log(3.0)) == pytest.approx(0.75)
    assert BINOMIAL.variance_fn(0.25) == pytest.approx(0.1875)
    assert BINOMIAL.dispersion_known


def test_poisson_log_links():
    assert POISSON.inverse_link(np.log(4.0)) == pytest.approx(4.0)
    assert POISSON.variance_fn(np.array([2.0]))[0] == pytest.approx(2.0)
    assert POISSON.dispersion_known


def test_response_validation():
    BINOMIAL.validate_response(np.array([0.0, 1.0, 1.0]))
    with pytest.raises(ValueError):
        BINOMIAL.validate_response(np.array([0.0, 0.5]))
    POISSON.validate_response(np.array([0.0, 3.0]))
    with pytest.raises(ValueError):
        POISSON.validate_response(np.array([-1.0]))
    with pytest.raises(ValueError):
        POISSON.validate_response(np.array([1.5]))


def test_get_family_aliases():
    assert get_family("gaussian") is GAUSSIAN
    assert get_family("logistic") is BINOMIAL
    assert get_family("poisson-log") is POISSON
    assert get_family(BINOMIAL) is BINOMIAL
    with pytest.raises(ValueError):
        get_family("gamma")
