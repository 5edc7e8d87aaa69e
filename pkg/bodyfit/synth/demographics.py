from __future__ import annotations

import enum
import logging
import math
import os
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np
from scipy import special

from .. import constants
from ..errors import FormatError, ParamOutOfRange
from ..utils import data_path, read_json, rng_for

log = logging.getLogger(__name__)

AGE_GROUPS = ("18-24", "25-44", "45-64", "65-74")


class Gender(str, enum.Enum):
    MALE = "male"
    FEMALE = "female"


@dataclass(frozen=True)
class BodyParams:
    age_group: str
    gender: Gender
    # metres
    height: float
    # kilograms
    weight: float

    def __post_init__(self) -> None:
        if self.age_group not in AGE_GROUPS:
            raise ParamOutOfRange(f"unknown age group {self.age_group!r}")
        try:
            object.__setattr__(self, "gender", Gender(self.gender))
        except ValueError:
            raise ParamOutOfRange(f"unknown gender {self.gender!r}") from None
        low, high = constants.HEIGHT_LIMITS
        if not low <= self.height <= high:
            raise ParamOutOfRange(f"height {self.height} m is outside [{low}, {high}]")
        low, high = constants.WEIGHT_LIMITS
        if not low <= self.weight <= high:
            raise ParamOutOfRange(f"weight {self.weight} kg is outside [{low}, {high}]")

    @property
    def bmi(self) -> float:
        return self.weight / self.height**2

    def to_dict(self) -> dict[str, object]:
        return {
            "age_group": self.age_group,
            "gender": self.gender.value,
            "height_m": self.height,
            "weight_kg": self.weight,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> BodyParams:
        try:
            return cls(
                age_group=str(data["age_group"]),
                gender=Gender(data["gender"]),
                height=float(data["height_m"]),  # type: ignore[arg-type]
                weight=float(data["weight_kg"]),  # type: ignore[arg-type]
            )
        except KeyError as exc:
            raise FormatError(f"body parameters are missing {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            raise FormatError(f"bad body parameters ({exc})") from None


@dataclass(frozen=True)
class GroupStats:
    age_group: str
    gender: Gender
    # centimetres
    height_mean: float
    height_sd: float
    # kilograms
    weight_mean: float
    weight_sd: float
    group_weight: float


@dataclass(frozen=True)
class DemographicTable:
    groups: tuple[GroupStats, ...]

    def __post_init__(self) -> None:
        if not self.groups:
            raise FormatError("demographic table has no groups")
        seen = set()
        for group in self.groups:
            key = (group.age_group, group.gender)
            if key in seen:
                raise FormatError(f"demographic group {key} is listed twice")
            seen.add(key)
            if group.height_sd <= 0 or group.weight_sd <= 0:
                raise FormatError(f"demographic group {key} has a non-positive sd")
            if group.group_weight < 0:
                raise FormatError(f"demographic group {key} has a negative weight")
        if not math.isclose(sum(self.weights), 1.0, abs_tol=1e-9):
            raise FormatError("demographic group weights must sum to 1")

    @property
    def weights(self) -> np.ndarray:
        return np.array([group.group_weight for group in self.groups])

    def group(self, age_group: str, gender: Gender | str) -> GroupStats:
        for group in self.groups:
            if group.age_group == age_group and group.gender == Gender(gender):
                return group
        raise KeyError((age_group, gender))

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> DemographicTable:
        try:
            rows: Sequence[Mapping[str, object]] = data["groups"]  # type: ignore[assignment]
            groups = tuple(
                GroupStats(
                    age_group=str(row["age_group"]),
                    gender=Gender(row["gender"]),
                    height_mean=float(row["height_mean"]),  # type: ignore[arg-type]
                    height_sd=float(row["height_sd"]),  # type: ignore[arg-type]
                    weight_mean=float(row["weight_mean"]),  # type: ignore[arg-type]
                    weight_sd=float(row["weight_sd"]),  # type: ignore[arg-type]
                    group_weight=float(row["group_weight"]),  # type: ignore[arg-type]
                )
                for row in rows
            )
        except KeyError as exc:
            raise FormatError(f"demographic table is missing {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            raise FormatError(f"bad demographic table ({exc})") from None
        for group in groups:
            if group.age_group not in AGE_GROUPS:
                raise FormatError(f"unknown age group {group.age_group!r}")
        return cls(groups)


def load_demographic_table(path: str | os.PathLike[str] | None = None) -> DemographicTable:
    data = read_json(path or data_path("demographics.json"))
    if not isinstance(data, dict):
        raise FormatError(f"{path}: demographic table must be a JSON object")
    return DemographicTable.from_dict(data)


def truncated_normal(
    rng: np.random.Generator, mean: float, sd: float, low: float, high: float
) -> float:
    """One inverse-CDF draw from N(mean, sd^2) restricted to [low, high]."""
    lower = special.ndtr((low - mean) / sd)
    upper = special.ndtr((high - mean) / sd)
    value = mean + sd * special.ndtri(lower + rng.random() * (upper - lower))
    return float(np.clip(value, low, high))


def _spread(sd_scale: float | None) -> tuple[float, float]:
    if sd_scale is None:
        return constants.HEIGHT_SD_SCALE, constants.WEIGHT_SD_SCALE
    if sd_scale > 0:
        return sd_scale, sd_scale
    raise ParamOutOfRange("sd_scale must be positive")


def sample_params(
    rng: np.random.Generator, group: GroupStats, sd_scale: float | None = None
) -> BodyParams:
    """One body of `group`: height then weight, each from its truncated normal."""
    height_scale, weight_scale = _spread(sd_scale)
    height_low, height_high = (limit * 100 for limit in constants.HEIGHT_LIMITS)
    weight_low, weight_high = constants.WEIGHT_LIMITS
    height = truncated_normal(
        rng, group.height_mean, group.height_sd * height_scale, height_low, height_high
    )
    weight = truncated_normal(
        rng, group.weight_mean, group.weight_sd * weight_scale, weight_low, weight_high
    )
    return BodyParams(group.age_group, group.gender, height / 100, weight)


def sample_population(
    table: DemographicTable,
    n: int,
    seed: int,
    sd_scale: float | None = None,
) -> list[BodyParams]:
    """
    Draw `n` body parameter sets.

    Model `i` uses its own generator seeded with `(seed, i)`, so any slice of the population
    can be reproduced without drawing the ones before it. `sd_scale` multiplies both table
    spreads; when omitted, height and weight get their own default multipliers.
    """
    if n < 1:
        raise ParamOutOfRange(f"cannot sample {n} bodies")
    _spread(sd_scale)  # rejects a bad scale before drawing

    cumulative = np.cumsum(table.weights)
    population = []
    for index in range(n):
        rng = rng_for(seed, index)
        choice = int(np.searchsorted(cumulative, rng.random() * cumulative[-1], side="right"))
        group = table.groups[min(choice, len(table.groups) - 1)]
        population.append(sample_params(rng, group, sd_scale))
    log.debug("Sampled %d bodies with seed %d", n, seed)
    return population
