"""Exception types shared across the toolkit."""


class StableSurfError(Exception):
    """Base class for all toolkit errors."""


class ParseError(StableSurfError):
    pass


class NonManifold(StableSurfError):
    pass


class NonOrientable(StableSurfError):
    pass


class DegenerateFace(StableSurfError):
    pass


class EmptySource(StableSurfError):
    pass


class EmptyRegion(StableSurfError):
    pass


class NegativeRadius(StableSurfError):
    pass


class DomainMismatch(StableSurfError):
    pass


class SelfIntersectingCurve(StableSurfError):
    pass


class OpenCurve(StableSurfError):
    pass


class NotClosed(StableSurfError):
    pass


class NotConnected(StableSurfError):
    pass


class IrregularLocus(StableSurfError):
    pass


class NotRegular(StableSurfError):
    pass


class NonTubeTopology(StableSurfError):
    pass


class BadParameter(StableSurfError):
    pass


class DomainError(StableSurfError):
    pass


class ConfigError(StableSurfError):
    pass
