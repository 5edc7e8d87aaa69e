from __future__ import annotations

from typing import ClassVar


class BodyFitError(Exception):
    """Base class for every failure the pipeline knows how to report."""

    exit_code: ClassVar[int] = 5

    def __init__(self, message: str, *, measurement: str | None = None) -> None:
        super().__init__(message)
        self.measurement = measurement
        self.stage: str | None = None

    def __str__(self) -> str:
        message = super().__str__()
        if self.measurement is not None:
            return f"{message} (measurement: {self.measurement})"
        return message


class InputError(BodyFitError):
    exit_code = 2


class IoError(InputError):
    def __init__(self, path: object, reason: str) -> None:
        super().__init__(f"{path}: {reason}")
        self.path = path


class ParamOutOfRange(InputError):
    pass


class MissingSourceJoint(InputError):
    def __init__(self, name: str) -> None:
        super().__init__(f"source joint {name!r} is missing")
        self.name = name


class NonPositiveDepth(InputError):
    pass


class ModelOutOfFrustum(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class DuplicateId(InputError):
    pass


class EmptyCloud(InputError):
    pass


class DegenerateInput(InputError):
    pass


class FormatError(BodyFitError):
    exit_code = 4


class MeasurementError(BodyFitError):
    exit_code = 3


class PostureError(MeasurementError):
    pass


class DegenerateSkeleton(MeasurementError):
    pass


class NoSubject(MeasurementError):
    pass


class InsufficientContour(MeasurementError):
    pass


class EmptySection(MeasurementError):
    pass


class NotAnEllipse(MeasurementError):
    pass


class SparseNeighborhood(MeasurementError):
    pass


class Disconnected(MeasurementError):
    pass


class MissingDescriptor(MeasurementError):
    pass


class OutOfChart(MeasurementError):
    pass
