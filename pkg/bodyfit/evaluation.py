"""
Desk-scale evaluation harnesses.

Each harness returns plain rows so the command layer can write them as CSV; the bodies
involved are generated in memory from the demographic table and rendered on the fly.
"""
from __future__ import annotations

import logging
import math
import time
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import constants
from .anthropometrics import Tolerances, measure_all, measure_scan
from .errors import BodyFitError, InputError
from .features import (
    FeatureConfig,
    FeatureVector,
    GenderClassifier,
    GroupWeights,
    gender_ratios,
    oriented_cloud,
)
from .geometry import (
    DepthFrame,
    PointCloud,
    Skeleton15,
    extract_silhouette_contour,
    unproject,
    voxel_downsample,
)
from .pipeline import model_skeleton, synthetic_features
from .registration import IcpReport, icp_register, skeleton_align_init
from .render import RenderConfig, render_depth
from .retrieval import FeatureIndex, build_index, knn_query, query_many
from .synth import (
    AGE_GROUPS,
    BodyModel,
    BodyParams,
    DemographicTable,
    Gender,
    build_mesh,
    load_demographic_table,
    sample_params,
    sample_population,
    sample_surface,
)
from .utils import derive_seed, rng_for

log = logging.getLogger(__name__)

# upper bin edges in cm; the last bin is open
HEIGHT_BINS = (160.0, 170.0, 180.0, 190.0)


def height_bin(height_cm: float) -> str:
    lower = None
    for upper in HEIGHT_BINS:
        if height_cm < upper:
            return f"<{upper:g}" if lower is None else f"{lower:g}-{upper:g}"
        lower = upper
    return f">={HEIGHT_BINS[-1]:g}"


@dataclass(frozen=True)
class HeightRow:
    model_id: int
    gender: str
    age_group: str
    noise_sd: float
    truth_cm: float
    estimate_cm: float
    error_cm: float
    # empty when the measurement succeeded
    failure: str = ""


HEIGHT_HEADER = tuple(HeightRow.__dataclass_fields__)
HEIGHT_SUMMARY_HEADER = ("noise_sd", "bin", "count", "mean_abs_error_cm", "max_abs_error_cm")


def evaluate_height(
    count: int,
    seed: int,
    noise_levels: Sequence[float] = (0.0, 5.0),
    *,
    sd_scale: float | None = None,
    table: DemographicTable | None = None,
    tol: Tolerances = Tolerances(),
    workers: int | None = None,
) -> list[HeightRow]:
    """Estimated against generated stature for `count` bodies at every noise level."""
    population = sample_population(table or load_demographic_table(), count, seed, sd_scale)

    def measure(item: tuple[int, BodyParams]) -> list[HeightRow]:
        model_id, params = item
        model = build_mesh(params)
        truth = model.truth.height
        rows = []
        for noise_sd in noise_levels:
            cfg = RenderConfig(noise_sd=noise_sd, seed=derive_seed(seed, model_id))
            try:
                frame, skeleton = render_depth(model, cfg)
                estimate = measure_all(frame, skeleton, tol).height
            except BodyFitError as exc:
                log.warning("Model %d at %g mm noise: %s", model_id, noise_sd, exc)
                rows.append(
                    HeightRow(
                        model_id,
                        model.params.gender.value,
                        model.params.age_group,
                        noise_sd,
                        truth,
                        math.nan,
                        math.nan,
                        type(exc).__name__,
                    )
                )
                continue
            rows.append(
                HeightRow(
                    model_id,
                    model.params.gender.value,
                    model.params.age_group,
                    noise_sd,
                    truth,
                    estimate,
                    estimate - truth,
                )
            )
        if (model_id + 1) % 10 == 0:
            log.info("Measured %d/%d bodies", model_id + 1, count)
        return rows

    with ThreadPoolExecutor(max_workers=workers) as executor:
        results = executor.map(measure, enumerate(population))
        return [row for rows in results for row in rows]


def summarize_height(rows: Sequence[HeightRow]) -> list[tuple[float, str, int, float, float]]:
    """Mean and max absolute error per noise level and truth-height bin, then overall."""
    summary = []
    for noise_sd in sorted({row.noise_sd for row in rows}):
        measured = [row for row in rows if row.noise_sd == noise_sd and not row.failure]
        groups: dict[str, list[float]] = {}
        for row in measured:
            groups.setdefault(height_bin(row.truth_cm), []).append(abs(row.error_cm))
        labels = [height_bin(edge - 1) for edge in HEIGHT_BINS] + [height_bin(math.inf)]
        for label in [*labels, "all"]:
            errors = (
                [abs(row.error_cm) for row in measured] if label == "all" else groups.get(label)
            )
            if errors:
                summary.append(
                    (noise_sd, label, len(errors), float(np.mean(errors)), float(np.max(errors)))
                )
    return summary


def scan_cloud(frame: DepthFrame, voxel: float = constants.NORMAL_VOXEL) -> PointCloud:
    mask, _ = extract_silhouette_contour(frame)
    return voxel_downsample(unproject(frame, mask), voxel)


def evaluate_icp(
    frame: DepthFrame,
    skeleton: Skeleton15,
    target: BodyModel,
    iterations: int = constants.ICP_MAX_ITERATIONS,
    *,
    samples: int = constants.ICP_TARGET_SAMPLES,
    seed: int = 0,
) -> IcpReport:
    """Skeleton-initialized ICP of a frontal scan onto area samples of `target`."""
    source = scan_cloud(frame)
    init = skeleton_align_init(skeleton, model_skeleton(target))
    return icp_register(
        source,
        sample_surface(target, samples, seed),
        init,
        iterations,
        convergence_delta=0.0,
    )


@dataclass(frozen=True)
class GenderRow:
    pair: int
    gender: str
    ratio1: float
    ratio2: float
    split: str


GENDER_HEADER = tuple(GenderRow.__dataclass_fields__)


@dataclass(frozen=True)
class GenderEvaluation:
    classifier: GenderClassifier
    accuracy: float
    rows: list[GenderRow]


def body_ratios(
    model: BodyModel,
    render_cfg: RenderConfig = RenderConfig(),
    feature_cfg: FeatureConfig = FeatureConfig(),
    tol: Tolerances = Tolerances(),
) -> tuple[float, float]:
    frame, skeleton = render_depth(model, render_cfg)
    measurements, scan = measure_scan(frame, skeleton, tol)
    ratios = gender_ratios(
        oriented_cloud(scan.cloud, feature_cfg),
        skeleton,
        measurements,
        snap=feature_cfg.ratio_snap,
        k=feature_cfg.geodesic_k,
        max_edge=feature_cfg.geodesic_max_edge,
    )
    return ratios.as_tuple()


def evaluate_gender(
    pairs: int,
    seed: int,
    *,
    noise_sd: float = 0.0,
    sd_scale: float | None = None,
    table: DemographicTable | None = None,
    workers: int | None = None,
) -> GenderEvaluation:
    """
    Fit the ratio classifier on the first half of `pairs` male/female pairs and score it on
    the second half. Each pair shares an age group.
    """
    if pairs < 2:
        raise InputError("gender evaluation needs at least two pairs")
    table = table or load_demographic_table()
    train_pairs = pairs // 2

    def pair_rows(pair: int) -> list[GenderRow]:
        rng = rng_for(seed, pair)
        age_group = AGE_GROUPS[int(rng.integers(len(AGE_GROUPS)))]
        rows = []
        for gender in (Gender.MALE, Gender.FEMALE):
            params = sample_params(rng, table.group(age_group, gender), sd_scale)
            cfg = RenderConfig(noise_sd=noise_sd, seed=derive_seed(seed, pair))
            try:
                ratio1, ratio2 = body_ratios(build_mesh(params), cfg)
            except BodyFitError as exc:
                log.warning("Skipping %s body of pair %d: %s", gender.value, pair, exc)
                continue
            split = "train" if pair < train_pairs else "test"
            rows.append(GenderRow(pair, gender.value, ratio1, ratio2, split))
        return rows

    with ThreadPoolExecutor(max_workers=workers) as executor:
        rows = [row for result in executor.map(pair_rows, range(pairs)) for row in result]

    train = [row for row in rows if row.split == "train"]
    test = [row for row in rows if row.split == "test"]
    if not train or not test:
        raise InputError("too few bodies could be measured to fit and score the classifier")
    classifier = GenderClassifier.fit(
        np.array([(row.ratio1, row.ratio2) for row in train]), [row.gender for row in train]
    )
    accuracy = classifier.accuracy(
        np.array([(row.ratio1, row.ratio2) for row in test]), [row.gender for row in test]
    )
    log.info("Gender classifier %s: held-out accuracy %.3f", classifier, accuracy)
    return GenderEvaluation(classifier, accuracy, rows)


@dataclass(frozen=True)
class RetrievalEvaluation:
    self_rate: float
    noisy_rate: float
    # (kind, model id, rank or -1, distance of the top match)
    rows: list[tuple[str, int, int, float]]


RETRIEVAL_HEADER = ("kind", "model_id", "rank", "top_distance")


def evaluate_retrieval(
    count: int,
    trials: int,
    seed: int,
    *,
    noise_sd: float = 5.0,
    k: int = 3,
    sd_scale: float | None = None,
    table: DemographicTable | None = None,
    workers: int | None = None,
) -> RetrievalEvaluation:
    """
    Index `count` noiseless renders, query every member with its own vector, then query
    `trials` noisy re-renders and count how often the generating body ranks in the top `k`.
    """
    population = sample_population(table or load_demographic_table(), count, seed, sd_scale)
    models = [build_mesh(params) for params in population]

    def describe(model_id: int) -> FeatureVector | None:
        try:
            return synthetic_features(models[model_id], RenderConfig())[0]
        except BodyFitError as exc:
            log.warning("Skipping model %d: %s", model_id, exc)
            return None

    with ThreadPoolExecutor(max_workers=workers) as executor:
        vectors = list(executor.map(describe, range(count)))
    entries = [(model_id, v) for model_id, v in enumerate(vectors) if v is not None]
    if not entries:
        raise InputError("no generated body could be described")
    index = build_index(entries)

    rows: list[tuple[str, int, int, float]] = []
    self_hits = 0
    for model_id, vector in entries:
        result = knn_query(index, vector, 1)
        hit = result.top == (model_id, 0.0)
        self_hits += hit
        rows.append(("self", model_id, 0 if hit else -1, result.distances[0]))

    indexed = [model_id for model_id, _ in entries]
    chosen = rng_for(seed).permutation(len(indexed))
    noisy_hits = 0
    attempted = 0
    for trial in range(trials):
        model_id = indexed[int(chosen[trial % len(indexed)])]
        cfg = RenderConfig(noise_sd=noise_sd, seed=derive_seed(seed, trial))
        try:
            vector, _ = synthetic_features(models[model_id], cfg)
        except BodyFitError as exc:
            log.warning("Trial %d on model %d failed: %s", trial, model_id, exc)
            continue
        attempted += 1
        result = knn_query(index, vector, min(k, len(index)))
        rank = result.ids.index(model_id) if model_id in result.ids else -1
        noisy_hits += rank >= 0
        rows.append(("noisy", model_id, rank, result.distances[0]))

    self_rate = self_hits / len(entries)
    noisy_rate = noisy_hits / attempted if attempted else 0.0
    log.info("Self retrieval %.3f, noisy top-%d %.3f", self_rate, k, noisy_rate)
    return RetrievalEvaluation(self_rate, noisy_rate, rows)


BENCH_HEADER = ("size", "build_s", "first_query_s", "median_query_s", "threaded_query_s")


def bench_query(
    sizes: Sequence[int],
    seed: int,
    *,
    queries: int = 5,
    threads: int = 1,
) -> list[tuple[int, float, float, float, float]]:
    """
    Time exact queries over random unit-cube vectors.

    `threaded_query_s` is the wall time per query when all queries run on `threads`
    workers, or NaN for a single thread.
    """
    if queries < 1:
        raise InputError("need at least one query")
    rows = []
    for position, size in enumerate(sizes):
        rng = rng_for(seed, position)
        vectors = rng.random((size, constants.FEATURE_DIM), dtype=np.float32)
        query_vectors = rng.random((queries, constants.FEATURE_DIM))

        start = time.perf_counter()
        index = FeatureIndex(np.arange(size, dtype=np.uint64), vectors, GroupWeights())
        build = time.perf_counter() - start
        del vectors

        start = time.perf_counter()
        knn_query(index, query_vectors[0], 1)
        first = time.perf_counter() - start

        timings = []
        for query_vector in query_vectors:
            start = time.perf_counter()
            knn_query(index, query_vector, 1)
            timings.append(time.perf_counter() - start)

        threaded = math.nan
        if threads > 1:
            start = time.perf_counter()
            query_many(index, list(query_vectors), 1, workers=threads)
            threaded = (time.perf_counter() - start) / queries
        row = (size, build, first, float(np.median(timings)), threaded)
        log.info("Benchmarked %d vectors: %s", size, row)
        rows.append(row)
    return rows

