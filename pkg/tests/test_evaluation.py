from __future__ import annotations

import math

import pytest

from bodyfit.errors import InputError
from bodyfit.evaluation import (
    BENCH_HEADER,
    HeightRow,
    bench_query,
    evaluate_gender,
    evaluate_retrieval,
    height_bin,
    summarize_height,
)


@pytest.mark.parametrize(
    "height, label",
    [
        (150.0, "<160"),
        (160.0, "160-170"),
        (179.9, "170-180"),
        (185.0, "180-190"),
        (190.0, ">=190"),
    ],
)
def test_height_bin(height, label):
    assert height_bin(height) == label


def _row(model_id: int, truth: float, error: float, noise_sd: float = 0.0) -> HeightRow:
    return HeightRow(model_id, "male", "25-44", noise_sd, truth, truth + error, error)


def test_summarize_height():
    rows = [
        _row(0, 165.0, 1.0),
        _row(1, 168.0, -3.0),
        _row(2, 185.0, 2.0),
        _row(3, 185.0, 4.0, noise_sd=5.0),
        HeightRow(4, "female", "25-44", 0.0, 150.0, math.nan, math.nan, "MeasurementError"),
    ]
    summary = summarize_height(rows)
    assert summary == [
        (0.0, "160-170", 2, 2.0, 3.0),
        (0.0, "180-190", 1, 2.0, 2.0),
        (0.0, "all", 3, 2.0, 3.0),
        (5.0, "180-190", 1, 4.0, 4.0),
        (5.0, "all", 1, 4.0, 4.0),
    ]


def test_evaluate_gender_small():
    evaluation = evaluate_gender(2, seed=4, workers=2)
    assert {row.split for row in evaluation.rows} <= {"train", "test"}
    assert len(evaluation.rows) <= 4
    assert 0.0 <= evaluation.accuracy <= 1.0
    assert evaluation.classifier.feature in (0, 1)


def test_evaluate_gender_needs_two_pairs():
    with pytest.raises(InputError):
        evaluate_gender(1, seed=0)


def test_evaluate_retrieval_without_noise():
    evaluation = evaluate_retrieval(2, 1, seed=6, noise_sd=0.0, k=1)
    assert evaluation.self_rate == 1.0
    assert evaluation.noisy_rate == 1.0
    kinds = [row[0] for row in evaluation.rows]
    assert kinds.count("self") == 2 and kinds.count("noisy") == 1
    assert all(row[2] == 0 and row[3] == 0.0 for row in evaluation.rows)


def test_bench_query():
    rows = bench_query([10, 20], seed=1, queries=3, threads=2)
    assert len(BENCH_HEADER) == len(rows[0])
    assert [row[0] for row in rows] == [10, 20]
    for row in rows:
        assert all(value >= 0 for value in row[1:])


def test_bench_query_needs_a_query():
    with pytest.raises(InputError):
        bench_query([10], seed=1, queries=0)
