from __future__ import annotations

import bisect
import logging
import os
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Any

from .anthropometrics import Measurements
from .errors import FormatError, OutOfChart
from .utils import data_path, read_json

log = logging.getLogger(__name__)

SIZE_LABELS = ("XS", "S", "M", "L", "XL", "2XL", "3XL")
# chest range every chart has to cover, cm
CHART_DOMAIN = (70.0, 140.0)


@dataclass(frozen=True)
class SizeBand:
    label: str
    chest_min: float
    chest_max: float
    height_min: float | None = None
    height_max: float | None = None

    @property
    def has_height(self) -> bool:
        return self.height_min is not None and self.height_max is not None

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {"label": self.label, "chest_cm": [self.chest_min, self.chest_max]}
        if self.has_height:
            data["height_cm"] = [self.height_min, self.height_max]
        return data


@dataclass(frozen=True)
class SizeChart:
    """
    Ordered T-shirt size bands.

    Chest bands are half-open and lower-inclusive, except the last one which also holds its
    upper bound. Height ranges of neighbouring bands must overlap so that the one-band height
    adjustment can never reverse the chest order.
    """

    bands: tuple[SizeBand, ...]

    def __post_init__(self) -> None:
        bands = tuple(self.bands)
        object.__setattr__(self, "bands", bands)
        if not bands:
            raise FormatError("size chart has no bands")

        positions = []
        for band in bands:
            if band.label not in SIZE_LABELS:
                raise FormatError(f"unknown size label {band.label!r}")
            positions.append(SIZE_LABELS.index(band.label))
            if not band.chest_min < band.chest_max:
                raise FormatError(f"band {band.label}: chest range is empty")
            if (band.height_min is None) != (band.height_max is None):
                raise FormatError(f"band {band.label}: height range needs both ends")
            if band.has_height and not band.height_min <= band.height_max:  # type: ignore
                raise FormatError(f"band {band.label}: height range is reversed")
        if positions != sorted(set(positions)):
            raise FormatError(f"size labels must follow the order {', '.join(SIZE_LABELS)}")

        low, high = CHART_DOMAIN
        if bands[0].chest_min > low or bands[-1].chest_max < high:
            raise FormatError(f"chest bands must cover [{low:g}, {high:g}] cm")
        for below, above in zip(bands, bands[1:]):
            if below.chest_max != above.chest_min:
                raise FormatError(
                    f"chest bands {below.label} and {above.label} are not contiguous"
                )
            if below.has_height and above.has_height:
                if (
                    above.height_min < below.height_min  # type: ignore[operator]
                    or above.height_max < below.height_max  # type: ignore[operator]
                    or above.height_min > below.height_max  # type: ignore[operator]
                ):
                    raise FormatError(
                        f"height ranges of {below.label} and {above.label} must rise and overlap"
                    )

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(band.label for band in self.bands)

    def band_index(self, chest: float) -> int:
        if not self.bands[0].chest_min <= chest <= self.bands[-1].chest_max:
            raise OutOfChart(
                f"chest girth {chest:.1f} cm is outside the chart"
                f" [{self.bands[0].chest_min:g}, {self.bands[-1].chest_max:g}]",
                measurement="girth_chest",
            )
        lower_bounds = [band.chest_min for band in self.bands]
        return min(bisect.bisect_right(lower_bounds, chest) - 1, len(self.bands) - 1)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> SizeChart:
        try:
            bands = []
            for entry in data["bands"]:
                chest_min, chest_max = (float(value) for value in entry["chest_cm"])
                height = entry.get("height_cm")
                height_min, height_max = (
                    (float(height[0]), float(height[1])) if height is not None else (None, None)
                )
                bands.append(
                    SizeBand(str(entry["label"]), chest_min, chest_max, height_min, height_max)
                )
        except KeyError as exc:
            raise FormatError(f"size chart band is missing {exc.args[0]!r}") from None
        except (TypeError, ValueError, IndexError) as exc:
            raise FormatError(f"invalid size chart ({exc})") from None
        return cls(tuple(bands))

    def to_dict(self) -> dict[str, Any]:
        return {"bands": [band.to_dict() for band in self.bands]}


def load_size_chart(path: str | os.PathLike[str] | None = None) -> SizeChart:
    path = path or data_path("size_chart.json")
    data = read_json(path)
    if not isinstance(data, Mapping):
        raise FormatError(f"{path}: expected a JSON object")
    try:
        return SizeChart.from_dict(data)
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from None


def predict_size(m: Measurements, chart: SizeChart, *, use_height: bool = True) -> str:
    """
    Label of the band holding the chest girth.

    When that band has a height range the body falls outside, the label moves one band
    towards it, clamped to the chart.
    """
    index = chart.band_index(m.girth_chest)
    band = chart.bands[index]
    if use_height and band.has_height:
        if m.height < band.height_min:  # type: ignore[operator]
            index = max(index - 1, 0)
        elif m.height > band.height_max:  # type: ignore[operator]
            index = min(index + 1, len(chart.bands) - 1)
    label = chart.bands[index].label
    log.debug("Chest %.1f cm, height %.1f cm -> %s", m.girth_chest, m.height, label)
    return label

