from __future__ import annotations

import numpy as np
import pytest

from bodyfit.anthropometrics import Measurements, Scan, measure_scan
from bodyfit.geometry import DepthFrame, Skeleton15
from bodyfit.render import RenderConfig, render_depth
from bodyfit.synth import BodyModel, BodyParams, Gender, build_mesh


@pytest.fixture(scope="session")
def male_params() -> BodyParams:
    return BodyParams("25-44", Gender.MALE, 1.78, 80.0)


@pytest.fixture(scope="session")
def female_params() -> BodyParams:
    return BodyParams("25-44", Gender.FEMALE, 1.64, 64.0)


@pytest.fixture(scope="session")
def body(male_params: BodyParams) -> BodyModel:
    return build_mesh(male_params)


@pytest.fixture(scope="session")
def female_body(female_params: BodyParams) -> BodyModel:
    return build_mesh(female_params)


@pytest.fixture(scope="session")
def frontal(body: BodyModel) -> tuple[DepthFrame, Skeleton15]:
    return render_depth(body, RenderConfig())


@pytest.fixture(scope="session")
def scan(frontal: tuple[DepthFrame, Skeleton15]) -> tuple[Measurements, Scan]:
    frame, skeleton = frontal
    return measure_scan(frame, skeleton)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
