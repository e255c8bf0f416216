"""Exception hierarchy.

Geometric failures during a flight are all :class:`GeometryError`
subclasses; the experiment runner treats any of them as a run abort.
"""


class GeometryError(ValueError):
    """Base class for geometric degeneracies and domain violations."""


class DomainError(GeometryError):
    pass


class PoleSingularityError(GeometryError):
    pass


class IrregularCurveError(GeometryError):
    pass


class UndefinedDirectionError(GeometryError):
    pass


class FrameUndefinedError(GeometryError):
    pass


class NoBracketError(RuntimeError):
    pass


class ConfigError(ValueError):
    pass
