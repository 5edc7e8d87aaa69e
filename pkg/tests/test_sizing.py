from __future__ import annotations

import json

import numpy as np
import pytest

from bodyfit.anthropometrics import Measurements
from bodyfit.errors import FormatError, IoError, OutOfChart
from bodyfit.sizing import SIZE_LABELS, SizeBand, SizeChart, load_size_chart, predict_size


@pytest.fixture(scope="module")
def chart() -> SizeChart:
    return load_size_chart()


def _measurements(chest: float, height: float = 175.0) -> Measurements:
    return Measurements(
        height=height,
        sleeve_length=60.0,
        leg_length=80.0,
        shoulder_length=40.0,
        girth_neck=38.0,
        girth_shoulder=110.0,
        girth_chest=chest,
        girth_waist=85.0,
        girth_hip=98.0,
    )


def test_default_chart(chart):
    assert chart.labels == SIZE_LABELS
    assert SizeChart.from_dict(chart.to_dict()) == chart


@pytest.mark.parametrize(
    "chest, label",
    [(70.0, "XS"), (81.9, "XS"), (82.0, "S"), (96.0, "M"), (100.0, "L"), (140.0, "3XL")],
)
def test_bands_are_lower_inclusive(chart, chest, label):
    assert predict_size(_measurements(chest, height=170.0), chart) == label


@pytest.mark.parametrize("chest", [69.9, 140.1, 200.0])
def test_chest_outside_chart(chart, chest):
    with pytest.raises(OutOfChart) as exc_info:
        predict_size(_measurements(chest), chart)
    assert exc_info.value.measurement == "girth_chest"


def test_size_never_shrinks_with_chest(chart):
    sweep = np.arange(70.0, 140.0, 0.5)
    labels = [predict_size(_measurements(chest, height=170.0), chart) for chest in sweep]
    positions = [SIZE_LABELS.index(label) for label in labels]
    assert positions == sorted(positions)
    assert labels[0] == "XS" and labels[-1] == "3XL"


def test_height_moves_one_band(chart):
    assert predict_size(_measurements(96.0, height=190.0), chart) == "L"
    assert predict_size(_measurements(96.0, height=145.0), chart) == "S"
    assert predict_size(_measurements(96.0, height=190.0), chart, use_height=False) == "M"


def test_height_shift_is_clamped(chart):
    assert predict_size(_measurements(75.0, height=130.0), chart) == "XS"
    assert predict_size(_measurements(135.0, height=220.0), chart) == "3XL"


def test_chart_without_heights():
    chart = SizeChart((SizeBand("S", 60.0, 100.0), SizeBand("L", 100.0, 150.0)))
    assert predict_size(_measurements(99.0, height=250.0), chart) == "S"


@pytest.mark.parametrize(
    "bands",
    [
        [],
        [{"label": "XXS", "chest_cm": [70, 140]}],
        [{"label": "M", "chest_cm": [70, 100]}, {"label": "S", "chest_cm": [100, 140]}],
        [{"label": "S", "chest_cm": [70, 100]}, {"label": "M", "chest_cm": [101, 140]}],
        [{"label": "S", "chest_cm": [75, 140]}],
        [{"label": "S", "chest_cm": [70, 140], "height_cm": [150]}],
        [{"label": "S", "chest_cm": [140, 70]}],
        [{"chest_cm": [70, 140]}],
        [
            {"label": "S", "chest_cm": [70, 100], "height_cm": [150, 170]},
            {"label": "M", "chest_cm": [100, 140], "height_cm": [175, 190]},
        ],
    ],
    ids=[
        "empty",
        "label",
        "order",
        "gap",
        "coverage",
        "height-pair",
        "reversed",
        "no-label",
        "height-overlap",
    ],
)
def test_invalid_charts(tmp_path, bands):
    path = tmp_path / "chart.json"
    path.write_text(json.dumps({"bands": bands}))
    with pytest.raises(FormatError):
        load_size_chart(path)


def test_chart_must_be_an_object(tmp_path):
    path = tmp_path / "chart.json"
    path.write_text("[]")
    with pytest.raises(FormatError):
        load_size_chart(path)


def test_missing_chart(tmp_path):
    with pytest.raises(IoError):
        load_size_chart(tmp_path / "missing.json")
