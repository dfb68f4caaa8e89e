"""Exception types shared across the toolkit."""


class EtsmcError(Exception):
    """Base class for all toolkit errors."""


class ContractError(EtsmcError):
    """An argument violated an operation's stated precondition."""


class DimensionError(ContractError):
    """Matrix or vector dimensions are inconsistent."""


class DesignError(EtsmcError):
    """The requested control design is infeasible: non-Hurwitz reduced
    dynamics, an uncontrollable pair, or a singular input channel."""


class NumericalError(EtsmcError):
    """An iterative numerical scheme failed to meet its accuracy target."""


class ConfigurationError(EtsmcError):
    """A configuration value is inconsistent with its declared contract."""


class SimulationError(EtsmcError):
    """The simulated state left the representable floating-point range.

    ``t_last`` / ``x_last`` carry the last finite sample seen before the
    divergence was detected.
    """

    def __init__(self, message, t_last=None, x_last=None):
        super().__init__(message)
        self.t_last = t_last
        self.x_last = x_last
