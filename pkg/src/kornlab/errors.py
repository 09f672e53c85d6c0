"""Exception hierarchy shared by all kornlab modules."""

from __future__ import annotations


class KornlabError(Exception):
    """Base exception for kornlab errors."""

    pass


class GeometryError(KornlabError):
    """Invalid rectilinear domain."""

    pass


class NotInDomainError(GeometryError):
    """Point lies outside the domain."""

    pass


class WhitneyError(GeometryError):
    """Whitney decomposition could not be built or queried."""

    pass


class GalleryError(KornlabError):
    """Infeasible gallery domain parameters."""

    pass


class FieldError(KornlabError):
    """Invalid grid field operation."""

    pass


class QuasihyperbolicError(KornlabError):
    """Quasihyperbolic distance or classification failure."""

    def __init__(self, message: str, required_level: int | None = None) -> None:
        super().__init__(message)
        self.required_level = required_level


class ScalingError(KornlabError):
    """Invalid exponents or failed scaling measurement."""

    pass


class DivSolveError(KornlabError):
    """Divergence-equation solver failure."""

    pass


class ConstantsError(KornlabError):
    """Constant estimation failure."""

    pass


class ReportError(KornlabError):
    """Report or plot-data emission failure."""

    pass
