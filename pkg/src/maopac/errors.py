"""Exception hierarchy shared by every module."""


class MaopacError(Exception):
    """Base class for all package errors."""


class ConfigurationError(MaopacError, ValueError):
    """Invalid configuration.

    ``violations`` lists every problem found, not just the first.
    """

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class TopologyError(MaopacError, ValueError):
    pass


class BeliefError(MaopacError, ValueError):
    """A belief update produced zero mass on every state."""


class AssumptionViolation(MaopacError, ValueError):
    pass


class DivergenceError(MaopacError, ArithmeticError):
    def __init__(self, quantity, step=None, agent=None):
        self.quantity = quantity
        self.step = step
        self.agent = agent
        where = []
        if step is not None:
            where.append(f"step {step}")
        if agent is not None:
            where.append(f"agent {agent}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(f"non-finite {quantity}{suffix}")


class PairingError(MaopacError, ValueError):
    """Two traces that should come from one lockstep pair do not match."""
