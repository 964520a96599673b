"""Exception hierarchy shared by all modules."""


class HypGraphError(Exception):
    """Base class for every error raised by the package."""


class NotInCone(HypGraphError, ValueError):
    """A curvature vector (or matrix spectrum) lies outside the admissible cone."""


class PreconditionViolated(HypGraphError, ValueError):
    pass


class NonpositiveHeight(HypGraphError, ValueError):
    pass


class OutsideFootprint(HypGraphError, ValueError):
    pass


class DomainError(HypGraphError, ValueError):
    pass


class BracketFailure(HypGraphError, RuntimeError):
    pass


class NoCapInitializer(HypGraphError, ValueError):
    pass


class NewtonDiverged(HypGraphError, RuntimeError):
    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace or [])


class ConeViolation(HypGraphError, ValueError):
    def __init__(self, message, nodes=None):
        super().__init__(message)
        self.nodes = list(nodes if nodes is not None else [])


class LineSearchStalled(HypGraphError, RuntimeError):
    pass


class SingularJacobian(HypGraphError, RuntimeError):
    pass


class ContinuationStalled(HypGraphError, RuntimeError):
    def __init__(self, message, report=None, field=None):
        super().__init__(message)
        self.report = report
        self.field = field


class ConfigError(HypGraphError, ValueError):
    pass
