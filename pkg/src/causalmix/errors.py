"""Exception types shared across the package."""


class CausalMixError(Exception):
    """Base class for all package errors."""


class DataError(CausalMixError):
    """Malformed input data (CSV parse problems, schema violations, missing cells)."""


class ConfigError(CausalMixError):
    """Invalid configuration; maps to CLI exit code 2 and HTTP 400."""


class DiscoveryTimeout(CausalMixError):
    """A single structure-discovery run exceeded its wall-clock cap."""


class BudgetExceeded(CausalMixError):
    """A benchmark run exceeded its wall-clock budget."""
