"""Exception types shared across the package."""


class ThermoportError(Exception):
    """Base class for all errors raised by thermoport."""


class DimensionError(ThermoportError, ValueError):
    """Vector lengths do not match the coordinate space."""


class GaugeError(ThermoportError, ValueError):
    """The co-variable chosen as gauge is zero, so the chart is undefined."""


class DomainError(ThermoportError, ValueError):
    """A state left the admissible domain of a constitutive relation.

    Parameters
    ----------
    constraint : str
        Name of the violated constraint, e.g. ``"V > 0"``.
    """

    def __init__(self, constraint, detail=""):
        self.constraint = constraint
        msg = f"domain violation: {constraint}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class ConvergenceError(ThermoportError, RuntimeError):
    """An iterative solve did not converge; ``last`` holds the final iterate."""

    def __init__(self, message, last=None):
        self.last = last
        super().__init__(message)


class SingularHessianError(ThermoportError, ValueError):
    """A Hessian block required to be invertible is (numerically) singular."""


class PortError(ThermoportError, ValueError):
    """Unknown port label or a port of the wrong kind."""


class CouplingError(ThermoportError, ValueError):
    """An interconnection could not be formed (bad binding, units, loops)."""


class AlgebraicLoopError(CouplingError):
    """Coupled outputs depend circularly on bound inputs."""


class NotCycloPassiveError(ThermoportError, ValueError):
    """The supplied storage does not make the system cyclo-passive."""


class CycleNotClosedError(ThermoportError, ValueError):
    """A trajectory offered as a cycle does not return to its start."""

    def __init__(self, gap, tol):
        self.gap = gap
        super().__init__(f"trajectory not closed: endpoint gap {gap:.3e} > {tol:.1e}")


class ConfigError(ThermoportError, ValueError):
    """Malformed scenario configuration; ``key`` names the offending entry."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")
