"""
Exception hierarchy for the workbench.

Every error carries the CLI exit code it maps to: 2 for bad input,
1 for numerical failures.
"""


class PendulaError(Exception):
    """Base class for all workbench errors."""
    exit_code = 1


class InputError(PendulaError):
    """Invalid user input: files, specs, dimensions, domains."""
    exit_code = 2


class GraphFormatError(InputError):
    pass


class PotentialFormatError(InputError):
    pass


class DimensionError(InputError):
    pass


class DomainError(InputError):
    pass


class PartitionStructureError(InputError):
    """Matched partition does not cover V, has an even class count, or a broken matching."""


class ConfigError(InputError):
    pass


class NumericalError(PendulaError):
    """A computation failed to produce a trustworthy number."""
    exit_code = 1


class ConvergenceError(NumericalError):
    pass


class StiffnessError(NumericalError):
    pass


class DivergenceError(NumericalError):
    pass


class RenormalizationError(NumericalError):
    pass


class NotClassConstantError(NumericalError):
    pass


class NoOscillationError(NumericalError):
    pass


class SearchIncompleteError(NumericalError):
    pass
