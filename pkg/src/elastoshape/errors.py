"""Exception types raised by the package."""


class ElastoShapeError(Exception):
    """Base class for all package errors."""


class DegenerateCurve(ElastoShapeError):
    pass


class OddNodeCount(ElastoShapeError):
    pass


class SelfIntersectionRisk(ElastoShapeError):
    pass


class OriginEvaluation(ElastoShapeError):
    pass


class TooCloseToBoundary(ElastoShapeError):
    pass


class SingularSystem(ElastoShapeError):
    pass


class SideMismatch(ElastoShapeError):
    pass


class InvalidParameters(ElastoShapeError):
    pass


class NotLameSolution(ElastoShapeError):
    pass


class AsymmetricStrain(ElastoShapeError):
    pass


class CurveDoesNotEncloseInclusion(ElastoShapeError):
    pass


class ConfigInvalid(ElastoShapeError):
    def __init__(self, path: str, message: str) -> None:
        super().__init__(f"{path}: {message}")
        self.path = path


class ComputeFailure(ElastoShapeError):
    """A module error raised while running an experiment."""
