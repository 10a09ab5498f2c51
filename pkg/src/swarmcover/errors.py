"""Exception types raised across the package."""


class SwarmCoverError(Exception):
    """Base class for all package errors."""


class DegeneratePosition(SwarmCoverError, ValueError):
    """Agent position coincides with an obstacle center."""


class InvalidParameter(SwarmCoverError, ValueError):
    pass


class NoRelativeDegree(SwarmCoverError):
    pass


class InvalidHorizon(SwarmCoverError, ValueError):
    pass


class EmptyDistribution(SwarmCoverError, ValueError):
    pass


class NonFiniteCoordinates(SwarmCoverError, ValueError):
    pass


class TooLarge(SwarmCoverError, ValueError):
    pass


class ZeroWeight(SwarmCoverError, ValueError):
    pass


class FieldExhausted(SwarmCoverError):
    """Every sample point has zero remaining weight."""


class FieldMismatch(SwarmCoverError, ValueError):
    pass


class UnstableGains(SwarmCoverError, ValueError):
    pass


class BoundaryDenominator(SwarmCoverError):
    """Velocity barrier evaluated at the obstacle boundary with an approaching velocity."""


class UnsafeState(SwarmCoverError):
    """The input-independent predicted output already lies inside an obstacle."""


class ScenarioInvalid(SwarmCoverError):
    pass


class ParseError(ScenarioInvalid):
    pass


class SchemaError(ScenarioInvalid):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class MissingRun(SwarmCoverError):
    pass


class MalformedLog(SwarmCoverError):
    pass
