from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import constants
from .anthropometrics import Measurements, Tolerances, measure_scan
from .errors import BodyFitError, InputError, IoError
from .features import (
    FeatureConfig,
    FeatureVector,
    GroupWeights,
    extract_features,
    write_feature_vector,
)
from .geometry import PointCloud, Skeleton15, voxel_downsample
from .geometry.io import (
    read_depth_frame,
    read_skeleton,
    write_contour_csv,
    write_point_cloud,
)
from .registration import IcpReport, icp_register, skeleton_align_init
from .render import RenderConfig, remap_skeleton, render_depth
from .retrieval import (
    FeatureIndex,
    IndexedModel,
    QueryResult,
    build_index,
    knn_query,
    load_index,
    metadata_path_for,
    read_metadata,
    save_index,
    write_metadata,
)
from .sizing import load_size_chart, predict_size
from .synth import BodyModel, import_model, iter_bundles, load_model, sample_surface
from .utils import error_stage, write_json

log = logging.getLogger(__name__)


def model_skeleton(model: BodyModel) -> Skeleton15:
    """The model's 15 joints in model space, remapped from its rig when it has one."""
    return remap_skeleton(model.rig) if model.rig else model.skeleton


def synthetic_features(
    model: BodyModel,
    render_cfg: RenderConfig = RenderConfig(),
    feature_cfg: FeatureConfig = FeatureConfig(),
    tol: Tolerances = Tolerances(),
) -> tuple[FeatureVector, Measurements]:
    """Features of a model the way a camera would see it: rendered, measured and described."""
    frame, skeleton = render_depth(model, render_cfg)
    measurements, scan = measure_scan(frame, skeleton, tol)
    vector = extract_features(frame, skeleton, measurements, feature_cfg, cloud=scan.cloud)
    return vector, measurements


def index_dataset(
    dataset: str | os.PathLike[str],
    out: str | os.PathLike[str],
    *,
    render_cfg: RenderConfig = RenderConfig(),
    feature_cfg: FeatureConfig = FeatureConfig(),
    tol: Tolerances = Tolerances(),
    weights: GroupWeights | None = None,
    workers: int | None = None,
) -> tuple[FeatureIndex, list[int]]:
    """
    Render every bundle of `dataset`, index its features at `out` and write the metadata
    sidecar next to it.

    Returns the index and the ids of bundles whose measurement failed; those are skipped.
    """
    bundles = iter_bundles(dataset)
    if not bundles:
        raise InputError(f"{dataset}: dataset has no model bundles")

    def describe(item: tuple[int, Path]) -> tuple[int, Path, Any]:
        model_id, path = item
        model = import_model(path)
        try:
            vector, _ = synthetic_features(model, render_cfg, feature_cfg, tol)
        except BodyFitError as exc:
            log.warning("Skipping model %d: %s", model_id, exc)
            return model_id, path, None
        if (model_id + 1) % 100 == 0:
            log.info("Described %d/%d models", model_id + 1, len(bundles))
        return model_id, path, (vector, model.params)

    with ThreadPoolExecutor(max_workers=workers) as executor:
        described = list(executor.map(describe, bundles))

    skipped = [model_id for model_id, _, result in described if result is None]
    kept = [(model_id, path, result) for model_id, path, result in described if result is not None]
    if not kept:
        raise InputError(f"{dataset}: no model could be described")
    index = build_index(
        ((model_id, vector) for model_id, _, (vector, _) in kept),
        weights,
        metadata_path=metadata_path_for(out),
    )
    save_index(index, out)
    write_metadata(
        metadata_path_for(out),
        {
            model_id: IndexedModel(path.resolve(), params)
            for model_id, path, (_, params) in kept
        },
    )
    log.info("Indexed %d models, skipped %d", len(index), len(skipped))
    return index, skipped


@dataclass(frozen=True)
class PipelineConfig:
    depth: Path
    skeleton: Path
    index: Path
    intrinsics: Path | None = None
    chart: Path | None = None
    # builds the index from this dataset when `index` does not exist yet
    dataset: Path | None = None
    tolerances: Tolerances = field(default_factory=Tolerances)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    render: RenderConfig = field(default_factory=RenderConfig)
    weights: GroupWeights | None = None
    k: int = 5
    register: bool = True
    icp_iterations: int = constants.ICP_MAX_ITERATIONS
    icp_samples: int = constants.ICP_TARGET_SAMPLES
    keep_intermediates: Path | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.k < 1:
            raise InputError("k must be at least 1")
        if self.icp_iterations < 1 or self.icp_samples < 1:
            raise InputError("ICP needs at least one iteration and one target sample")

    def check_paths(self) -> None:
        required = [self.depth, self.skeleton]
        if self.dataset is None or self.index.exists():
            required.append(self.index)
        required += [path for path in (self.intrinsics, self.chart) if path is not None]
        for path in required:
            if not Path(path).is_file():
                raise IoError(path, "no such file")


@dataclass(frozen=True, eq=False)
class PipelineResult:
    measurements: Measurements
    features: FeatureVector
    neighbors: QueryResult
    size: str
    icp: IcpReport | None = None

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "measurements": self.measurements.to_dict(),
            "neighbors": self.neighbors.to_dict()["neighbors"],
            "size": self.size,
        }
        if self.icp is not None:
            data["icp"] = self.icp.to_dict()
        return data


def _register(
    cfg: PipelineConfig,
    index: FeatureIndex,
    neighbors: QueryResult,
    scan_cloud: PointCloud,
    sk: Skeleton15,
) -> IcpReport:
    if index.metadata_path is None:
        raise InputError("index has no metadata sidecar, cannot locate the retrieved model")
    entries = read_metadata(index.metadata_path)
    top_id, _ = neighbors.top
    try:
        entry = entries[top_id]
    except KeyError:
        raise InputError(f"index metadata has no entry for model {top_id}") from None
    model = load_model(entry.bundle)
    target = sample_surface(model, cfg.icp_samples, cfg.seed)
    source = voxel_downsample(scan_cloud, cfg.features.normal_voxel)
    init = skeleton_align_init(sk, model_skeleton(model))
    return icp_register(source, target, init, cfg.icp_iterations)


def run_pipeline(cfg: PipelineConfig) -> PipelineResult:
    """Measure, describe, retrieve, size and optionally register one depth frame."""
    with error_stage("load"):
        cfg.check_paths()
        frame = read_depth_frame(cfg.depth, cfg.intrinsics)
        sk = read_skeleton(cfg.skeleton)
        chart = load_size_chart(cfg.chart)
    with error_stage("index"):
        if cfg.dataset is not None and not cfg.index.exists():
            index, _ = index_dataset(
                cfg.dataset,
                cfg.index,
                render_cfg=cfg.render,
                feature_cfg=cfg.features,
                tol=cfg.tolerances,
                weights=cfg.weights,
            )
        else:
            index = load_index(cfg.index)
    with error_stage("measure"):
        measurements, scan = measure_scan(frame, sk, cfg.tolerances)
    with error_stage("features"):
        vector = extract_features(frame, sk, measurements, cfg.features, cloud=scan.cloud)
    with error_stage("retrieve"):
        neighbors = knn_query(index, vector, min(cfg.k, len(index)))
    with error_stage("size"):
        size = predict_size(measurements, chart)
    report = None
    if cfg.register:
        with error_stage("register"):
            report = _register(cfg, index, neighbors, scan.cloud, sk)

    result = PipelineResult(measurements, vector, neighbors, size, report)
    if cfg.keep_intermediates is not None:
        with error_stage("write"):
            out = Path(cfg.keep_intermediates)
            try:
                out.mkdir(parents=True, exist_ok=True)
            except OSError as exc:
                raise IoError(out, exc.strerror or str(exc)) from None
            write_point_cloud(out / "cloud.ply", scan.cloud)
            write_contour_csv(out / "contour.csv", scan.contour)
            write_feature_vector(out / constants.FEATURES_FILE, vector)
            write_json(out / "measurements.json", measurements.to_dict())
            write_json(out / "neighbors.json", neighbors.to_dict())
            if report is not None:
                write_json(out / "icp.json", report.to_dict())
    log.info("Top match %d, size %s", neighbors.top[0], size)
    return result
