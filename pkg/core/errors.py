"""
Error Hierarchy
All failures raised by the simulator derive from SupplyNetError
"""


class SupplyNetError(Exception):
    """Base class for every simulator error"""


# Network validation

class ValidationFailure(SupplyNetError):
    """Network or scenario does not satisfy the structural invariants"""


class CycleDetected(ValidationFailure):
    pass


class MultipleSources(ValidationFailure):
    pass


class MultipleIncoming(ValidationFailure):
    pass


class DisconnectedNode(ValidationFailure):
    pass


class NonPositiveVelocity(ValidationFailure):
    pass


class NegativeDamping(ValidationFailure):
    pass


class NoSuchPath(SupplyNetError):
    """Target node is not a demand descendant of the origin"""


# Numerical failures

class NumericalFailure(SupplyNetError):
    """A numerical routine could not produce a valid result"""


class OutOfHorizon(NumericalFailure):
    """Transit (or back-tracing) leaves the time horizon [t0, T]"""


class NegativeDampingFactor(NumericalFailure):
    """Time step too coarse for the damping magnitude (dt * mu > 1)"""


class WrongThetaVariant(NumericalFailure):
    pass


class AllNegative(NumericalFailure):
    pass


class EmptyWindow(NumericalFailure):
    pass


class NotConverged(NumericalFailure):
    """
    Iterative optimizer stopped before reaching the tolerance.
    The best iterate is attached so callers can still use it.
    """

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


# Scenario loading

class ScenarioError(SupplyNetError):
    pass


class ParseError(ScenarioError):
    pass


class SchemaError(ScenarioError):
    """
    Scenario document violates the schema.

    Args:
        field_path: dotted location of the offending field, e.g. "arcs[id=2].velocity"
    """

    def __init__(self, field_path: str, message: str):
        super().__init__(f"{field_path}: {message}")
        self.field_path = field_path
