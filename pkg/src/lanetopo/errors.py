"""Exception hierarchy shared by all modules."""


class LaneTopoError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(LaneTopoError, ValueError):
    """An argument is out of range or has inconsistent dimensions."""


class StructureError(ParameterError):
    """A lane graph is malformed (duplicate ids, dangling incidence, ...)."""


class SchemaError(LaneTopoError):
    """A JSON document does not conform to its versioned schema."""


class AssumptionViolation(LaneTopoError):
    """Input geometry breaks one of the lane-graph assumptions.

    ``kind`` is one of the ``Violation`` kinds from :mod:`lanetopo.lanegraph`
    (``"MultipleIntersections"``, ``"SelfIntersection"``, ``"Floating"``, ...).
    """

    def __init__(self, kind, message, curves=()):
        super().__init__(message)
        self.kind = kind
        self.curves = tuple(curves)


class ArrangementError(LaneTopoError):
    """Face tracing found an inconsistent half-edge structure."""


class DeformationRejected(LaneTopoError):
    """A deformation produced a graph that violates the assumptions."""


class GenerationError(LaneTopoError):
    """Rejection sampling gave up before producing a valid scene."""


class CoverNotFound(LaneTopoError, KeyError):
    """No minimal cycle has the queried cover."""


class AmbiguousCover(LaneTopoError):
    """Two or more minimal cycles share the queried cover."""
