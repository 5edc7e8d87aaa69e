from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, fields

import numpy as np

from .. import constants
from ..errors import FormatError, InputError


@dataclass(frozen=True)
class Tolerances:
    eps1: float = constants.TOLERANCE_EPS
    eps2: float = constants.TOLERANCE_EPS
    eps3: float = constants.TOLERANCE_EPS
    section_radius: float = constants.SECTION_RADIUS
    # dot-product form of the posture test, kept for comparison runs
    literal_verticality: bool = False

    def __post_init__(self) -> None:
        for name in ("eps1", "eps2", "eps3"):
            if not 0 < getattr(self, name) < 0.5:
                raise InputError(f"{name} must lie in (0, 0.5)")
        if self.section_radius <= 0:
            raise InputError("section_radius must be positive")


@dataclass(frozen=True, eq=False)
class PrincipalAxes:
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray

    def as_matrix(self) -> np.ndarray:
        return np.stack((self.u, self.v, self.w))


@dataclass(frozen=True)
class EllipseFit:
    center: tuple[float, float]
    a: float
    b: float
    orientation: float


# JSON key for each Measurements field
_JSON_KEYS = {
    "height": "height_cm",
    "sleeve_length": "sleeve_cm",
    "leg_length": "leg_cm",
    "shoulder_length": "shoulder_cm",
    "girth_neck": "girth_neck_cm",
    "girth_shoulder": "girth_shoulder_cm",
    "girth_chest": "girth_chest_cm",
    "girth_waist": "girth_waist_cm",
    "girth_hip": "girth_hip_cm",
}

GIRTH_NAMES = ("girth_neck", "girth_shoulder", "girth_chest", "girth_waist", "girth_hip")


@dataclass(frozen=True)
class Measurements:
    """Body measurements in centimetres."""

    height: float
    sleeve_length: float
    leg_length: float
    shoulder_length: float
    girth_neck: float
    girth_shoulder: float
    girth_chest: float
    girth_waist: float
    girth_hip: float

    def to_dict(self) -> dict[str, float]:
        return {_JSON_KEYS[field.name]: getattr(self, field.name) for field in fields(self)}

    @classmethod
    def from_dict(cls, data: Mapping[str, float]) -> Measurements:
        try:
            return cls(**{name: float(data[key]) for name, key in _JSON_KEYS.items()})
        except KeyError as exc:
            raise FormatError(f"measurements are missing {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            raise FormatError(f"bad measurement value ({exc})") from None
