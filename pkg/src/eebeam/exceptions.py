"""Exception types raised by eebeam."""


class EEBeamError(Exception):
    """Base class for all package errors."""


class InvalidScenarioError(EEBeamError, ValueError):
    """Scenario parameters or gain data violate their invariants."""


class GainTableError(InvalidScenarioError):
    """A gain table file could not be parsed or validated."""


class DegenerateInputError(EEBeamError, ValueError):
    """The energy-efficiency ratio is undefined (zero denominator)."""


class ScenarioInfeasibleError(EEBeamError, RuntimeError):
    """No precoder meeting the power budget and QoS thresholds was found."""


class SolverError(EEBeamError, RuntimeError):
    """The conic subproblem did not return a usable optimal point."""
