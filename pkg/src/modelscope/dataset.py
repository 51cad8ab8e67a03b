"""Datasets: ingestion, factor expansion, redundant-variable injection.

A :class:`Dataset` is the immutable universe a model search runs over: a
response vector, a full-rank candidate design matrix (intercept excluded),
column names, and the model family.  Candidate models are bitmasks over the
columns (see :mod:`modelscope.masks`).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import combinations
from pathlib import Path

import numpy as np
import pandas as pd
import scipy.linalg

from . import masks
from .errors import (
    AlreadyHasRV,
    MissingColumn,
    NonFiniteValue,
    NotPositiveDefinite,
    RankDeficient,
    TooFewMains,
)
from .families import GAUSSIAN, ModelFamily, get_family

RV_NAME = "RV"

# Relative singular-value threshold below which a design is declared
# rank deficient.
_RANK_RTOL = 1e-9


@dataclass(frozen=True)
class Dataset:
    """An immutable regression problem over a fixed candidate-column set.

    Attributes
    ----------
    y : ndarray, shape (n,)
        Response vector.
    X : ndarray, shape (n, p)
        Candidate columns; the intercept is implicit and never a candidate.
    names : tuple of str
        One unique, non-empty name per candidate column.
    family : ModelFamily
        Response family; decides the fitting algorithm.
    case_weights : ndarray or None
        Optional positive per-observation likelihood weights.
    rv_index : int or None
        Column index of the injected redundant variable, if any.
    response_name : str
        Name used for the left-hand side of display formulas.
    factor_info : dict
        For columns created by factor expansion, maps the expanded name to
        ``(source_column, level)``.
    """

    y: np.ndarray
    X: np.ndarray
    names: tuple
    family: ModelFamily
    case_weights: np.ndarray | None = None
    rv_index: int | None = None
    response_name: str = "y"
    factor_info: dict = field(default_factory=dict)

    def __post_init__(self):
        y = np.ascontiguousarray(np.asarray(self.y, dtype=float))
        X = np.ascontiguousarray(np.asarray(self.X, dtype=float))
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "names", tuple(str(s) for s in self.names))
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise ValueError("X must be (n, p) and y (n,) with matching n")
        n, p = X.shape
        if len(self.names) != p:
            raise ValueError("need exactly one name per candidate column")
        if len(set(self.names)) != p or any(not s for s in self.names):
            raise ValueError("column names must be unique and non-empty")
        if n <= p + 1:
            raise ValueError(f"need n > p+1 observations (got n={n}, p={p})")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("X and y must be finite")
        if self.case_weights is not None:
            w = np.ascontiguousarray(np.asarray(self.case_weights, dtype=float))
            if w.shape != (n,) or np.any(w <= 0) or not np.all(np.isfinite(w)):
                raise ValueError("case_weights must be positive, finite, length n")
            object.__setattr__(self, "case_weights", w)
            w.setflags(write=False)
        self.family.validate_response(y)
        dependent = _dependent_columns(X, self.names)
        if dependent:
            raise RankDeficient(dependent)
        y.setflags(write=False)
        X.setflags(write=False)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def full_mask(self) -> int:
        return masks.full_mask(self.p)

    def formula(self, mask: int) -> str:
        return masks.formula(mask, self.names, self.response_name)

    def columns(self, mask: int) -> np.ndarray:
        """Design matrix of the model: intercept column then selected columns."""
        idx = masks.indices(mask)
        return np.column_stack([np.ones(self.n)] + [self.X[:, j] for j in idx])


def _dependent_columns(X: np.ndarray, names) -> list[str]:
    """Names of columns that are collinear with the intercept + earlier columns."""
    n, p = X.shape
    A = np.column_stack([np.ones(n), X])
    # Pivoted QR: columns whose R-diagonal collapses are linear combinations
    # of the better-conditioned ones.
    _, R, piv = scipy.linalg.qr(A, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    ref = diag[0] if diag[0] > 0 else 1.0
    bad = [piv[i] for i in range(len(diag)) if diag[i] <= _RANK_RTOL * ref]
    bad += list(piv[len(diag):])
    return sorted(names[j - 1] for j in bad if j > 0)


def _parse_factor_spec(factor_columns):
    """Split ``name`` / ``name=level1,level2,...`` specs into an ordered dict."""
    spec = {}
    for item in factor_columns or ():
        if "=" in item:
            name, levels = item.split("=", 1)
            spec[name.strip()] = [lv.strip() for lv in levels.split(",")]
        else:
            spec[item.strip()] = None
    return spec


def load_csv(path, response: str, family="gaussian", factor_columns=()) -> Dataset:
    """Load a dataset from an RFC-4180 CSV file with a header row.

    Factor columns are expanded with treatment contrasts: the first level is
    the baseline and each remaining level becomes one 0/1 column named
    ``<column><level>``.  Levels default to sorted order; an explicit order
    can be given as ``"column=level1,level2,..."``.

    Parameters
    ----------
    path : str or Path
        CSV file to read.
    response : str
        Name of the response column.
    family : str or ModelFamily
        Response family.
    factor_columns : sequence of str
        Columns to expand as factors (with optional explicit level order).

    Returns
    -------
    Dataset
    """
    family = get_family(family)
    path = Path(path)
    frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=False)
    if response not in frame.columns:
        raise MissingColumn(f"response column {response!r} not in {path.name}")
    spec = _parse_factor_spec(factor_columns)
    for name in spec:
        if name not in frame.columns:
            raise MissingColumn(f"factor column {name!r} not in {path.name}")
        if "." in name:
            raise ValueError(f"'.' is reserved for interaction names (column {name!r})")

    y = _numeric_column(frame, response)

    cols: list[np.ndarray] = []
    names: list[str] = []
    factor_info: dict = {}
    for name in frame.columns:
        if name == response:
            continue
        if name in spec:
            levels = spec[name]
            observed = list(frame[name])
            if levels is None:
                levels = sorted(set(observed))
            else:
                extra = set(observed) - set(levels)
                if extra:
                    raise ValueError(f"column {name!r} has levels {sorted(extra)} outside the declared order")
            # Treatment contrasts: first level is the baseline.
            for level in levels[1:]:
                cols.append(np.asarray([1.0 if v == level else 0.0 for v in observed]))
                colname = f"{name}{level}"
                names.append(colname)
                factor_info[colname] = (name, level)
        else:
            if "." in name:
                raise ValueError(f"'.' is reserved for interaction names (column {name!r})")
            cols.append(_numeric_column(frame, name))
            names.append(name)

    X = np.column_stack(cols) if cols else np.empty((len(frame), 0))
    return Dataset(y=y, X=X, names=tuple(names), family=family,
                   response_name=response, factor_info=factor_info)


def _numeric_column(frame: pd.DataFrame, name: str) -> np.ndarray:
    values = pd.to_numeric(frame[name], errors="coerce").to_numpy(dtype=float)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise NonFiniteValue(int(bad[0]), name)
    return values


def add_redundant_variable(d: Dataset, seed) -> Dataset:
    """Append one column of independent N(0, 1) draws, named ``RV``.

    The existing columns are untouched; the new column's index is recorded in
    ``rv_index``.  ``seed`` may be an int or a ``numpy.random.Generator``.
    """
    if d.rv_index is not None:
        raise AlreadyHasRV("dataset already has a redundant variable")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    rv = rng.standard_normal(d.n)
    X = np.column_stack([d.X, rv])
    return replace(d, X=X, names=d.names + (RV_NAME,), rv_index=d.p)


def make_interaction_followup(d: Dataset, mains: int, fit) -> Dataset:
    """Follow-up dataset for interaction screening after a main-effects fit.

    The response is the residual vector of the main-effects fit and the
    candidate columns are all pairwise products of the main-effect columns,
    named ``<a>.<b>``.  The main effects themselves are excluded, so the
    search asks only what the interactions explain beyond them.
    """
    idx = masks.indices(mains)
    if len(idx) < 2:
        raise TooFewMains("need at least two main effects to form interactions")
    if getattr(fit, "model", None) != mains:
        raise ValueError("fit must be the fit of `mains` on this dataset")
    cols = []
    names = []
    for a, b in combinations(idx, 2):
        cols.append(d.X[:, a] * d.X[:, b])
        names.append(f"{d.names[a]}.{d.names[b]}")
    return Dataset(
        y=np.asarray(fit.residuals, dtype=float),
        X=np.column_stack(cols),
        names=tuple(names),
        family=GAUSSIAN,
        case_weights=d.case_weights,
        response_name=d.response_name,
    )


def generate_artificial(n: int, seed, covariance) -> Dataset:
    """Simulate the pathological stepwise example's data-generating process.

    Rows of ``X`` are jointly gaussian with the given covariance and the
    response is ``y = 0.6 * x8 + eps`` with ``eps ~ N(0, 2^2)``.  Meant for
    property tests; the vendored ``artificialeg.csv`` fixture is the
    reference dataset for reproducing documented numbers.
    """
    cov = np.asarray(covariance, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise NotPositiveDefinite("covariance must be square")
    if cov.shape[0] < 8:
        raise NotPositiveDefinite("covariance must cover at least 8 variables (x8 drives y)")
    if not np.allclose(cov, cov.T, atol=1e-12):
        raise NotPositiveDefinite("covariance must be symmetric")
    try:
        L = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("covariance must be positive definite") from None
    p = cov.shape[0]
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    X = rng.standard_normal((n, p)) @ L.T
    eps = rng.normal(scale=2.0, size=n)
    y = 0.6 * X[:, 7] + eps
    return Dataset(y=y, X=X, names=tuple(f"x{j + 1}" for j in range(p)), family=GAUSSIAN)
