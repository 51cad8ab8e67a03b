"""Exception types raised by the modelscope engines."""

from __future__ import annotations


class ModelscopeError(Exception):
    """Base class for all modelscope errors."""


class MissingColumn(ModelscopeError):
    """A named column is not present in the input table."""


class RankDeficient(ModelscopeError):
    """The design matrix (with intercept) is not of full column rank.

    ``columns`` names the offending, linearly dependent columns.
    """

    def __init__(self, columns):
        self.columns = list(columns)
        super().__init__(f"design matrix is rank deficient; dependent columns: {self.columns}")


class NonFiniteValue(ModelscopeError):
    """A cell failed to parse as a finite real number."""

    def __init__(self, row, column):
        self.row = row
        self.column = column
        super().__init__(f"non-finite value at row {row}, column {column!r}")


class AlreadyHasRV(ModelscopeError):
    """The dataset already carries an injected redundant variable."""


class TooFewMains(ModelscopeError):
    """Interaction follow-up needs at least two main effects."""


class NotPositiveDefinite(ModelscopeError):
    """A covariance matrix is not symmetric positive-definite."""


class RankDeficientSubmodel(ModelscopeError):
    """The selected columns (plus intercept) are collinear under the given weights."""


class NonConvergence(ModelscopeError):
    """IRLS hit the iteration cap without meeting the deviance tolerance.

    Fits report this through ``FitResult.converged``; the exception is only
    raised by callers that insist on a converged fit.
    """

    def __init__(self, iterations):
        self.iterations = iterations
        super().__init__(f"IRLS did not converge after {iterations} iterations")


class SeparationDetected(ModelscopeError):
    """Logistic fit drove fitted probabilities to 0/1 beyond tolerance."""


class DegenerateProbability(ModelscopeError):
    """Fitted probabilities too close to 0/1 for the WLS surrogate transform."""


class UnknownVariable(ModelscopeError):
    """A variable name does not appear among the dataset's candidate columns."""


class NoPeak(ModelscopeError):
    """The selection-probability curve has no detectable first peak."""


class AllModelsContainRV(ModelscopeError):
    """Every candidate model in a fence tally contains the redundant variable."""


class RedundantVariableRequired(ModelscopeError):
    """The adaptive fence needs a dataset with an injected redundant variable."""


class TooManySkips(ModelscopeError):
    """More than the tolerated share of bootstrap replicates had to be skipped."""

    def __init__(self, skipped, total):
        self.skipped = skipped
        self.total = total
        super().__init__(f"{skipped} of {total} bootstrap replicates failed")
