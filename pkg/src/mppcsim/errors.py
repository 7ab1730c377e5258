"""Exception and warning types shared across the package."""


class UndefinedStatisticError(ValueError):
    """A statistic is requested from data on which it is not defined,
    e.g. g2 of an all-vacuum histogram or NRF with zero total counts."""


class IllConditionedFitError(ValueError):
    """The calibration fit cannot be carried out on the given sweep,
    e.g. all points share the same mean count rate."""


class CrosstalkRangeWarning(UserWarning):
    """Crosstalk probability is inside the hard cap but large enough that
    the second-order model is strained (p > 0.3)."""


class BoundaryFitWarning(UserWarning):
    """The fitted crosstalk probability landed on the edge of the allowed
    interval; the quoted uncertainty is one-sided."""


class DarkSubtractionWarning(UserWarning):
    """Dark-count subtraction clamped one or more bins at zero."""
