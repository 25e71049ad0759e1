"""Exception types shared across the engines."""


class BosonLabError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(BosonLabError, ValueError):
    """An argument violates a documented precondition."""


class UnsupportedSizeError(BosonLabError):
    """The requested instance exceeds an exact-computation limit.

    Raised instead of silently approximating.
    """


class MissingWeightError(BosonLabError, KeyError):
    """A polymer weight table lacks a required support."""

    def __init__(self, support):
        self.support = tuple(sorted(support))
        super().__init__(f"no weight tabulated for support {self.support}")


class SubcriticalityError(BosonLabError):
    """The ideal-gas fugacity condition is violated; message reports the inequality."""


class SamplingError(BosonLabError):
    """A stochastic engine cannot make progress (e.g. immobile chain, zero acceptance)."""


class ConfigError(BosonLabError):
    """Configuration text failed validation; carries every violation found."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class DivergenceWarning(UserWarning):
    """Cluster shells stopped decreasing; the truncated sum is not trustworthy."""
