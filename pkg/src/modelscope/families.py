"""Model families: the mean/variance structure shared by all fitting code.

Each family bundles the inverse link ``h`` and the variance function ``v``
of a generalised linear model with canonical link, so that
``E[y] = h(X beta)`` and ``var(y) = sigma^2 * v(E[y])``.  The gaussian
family with identity link recovers ordinary least squares.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class ModelFamily:
    """A response distribution with canonical link.

    Attributes
    ----------
    kind : str
        One of ``"gaussian-identity"``, ``"binomial-logit"``, ``"poisson-log"``.
    inverse_link : callable
        ``h`` mapping the linear predictor to the mean.
    variance_fn : callable
        ``v`` mapping the mean to the variance function value.
    dispersion_known : bool
        True when the scale parameter is fixed at 1 (binomial, poisson).
    """

    kind: str
    inverse_link: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    variance_fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    dispersion_known: bool

    @property
    def is_gaussian(self) -> bool:
        return self.kind == "gaussian-identity"

    def validate_response(self, y: np.ndarray) -> None:
        """Raise ``ValueError`` if the response is outside the family's domain."""
        if self.kind == "binomial-logit":
            if not np.all(np.isin(y, (0.0, 1.0))):
                raise ValueError("binomial-logit requires a 0/1 response")
        elif self.kind == "poisson-log":
            if np.any(y < 0) or not np.allclose(y, np.round(y)):
                raise ValueError("poisson-log requires non-negative integer counts")


def _logistic(eta):
    return 1.0 / (1.0 + np.exp(-eta))


GAUSSIAN = ModelFamily(
    kind="gaussian-identity",
    inverse_link=lambda eta: eta,
    variance_fn=lambda mu: np.ones_like(mu),
    dispersion_known=False,
)

BINOMIAL = ModelFamily(
    kind="binomial-logit",
    inverse_link=_logistic,
    variance_fn=lambda mu: mu * (1.0 - mu),
    dispersion_known=True,
)

POISSON = ModelFamily(
    kind="poisson-log",
    inverse_link=np.exp,
    variance_fn=lambda mu: mu,
    dispersion_known=True,
)

_FAMILIES = {
    "gaussian": GAUSSIAN,
    "gaussian-identity": GAUSSIAN,
    "binomial": BINOMIAL,
    "binomial-logit": BINOMIAL,
    "logistic": BINOMIAL,
    "poisson": POISSON,
    "poisson-log": POISSON,
}


def get_family(name) -> ModelFamily:
    """Resolve a family from a name (or pass a ``ModelFamily`` through)."""
    if isinstance(name, ModelFamily):
        return name
    try:
        return _FAMILIES[str(name).lower()]
    except KeyError:
        raise ValueError(f"unknown family {name!r}; expected one of {sorted(set(_FAMILIES))}") from None
