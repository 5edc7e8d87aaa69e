from __future__ import annotations

from pathlib import Path

import click

from .. import constants
from ..pipeline import PipelineConfig, run_pipeline
from . import (
    cli,
    echo_json,
    in_file,
    index_weight_options,
    index_weights,
    make_tolerances,
    seed_option,
    tolerance_options,
)


@cli.command()
@click.option("--depth", type=in_file, required=True, help="16-bit depth PGM, millimetres.")
@click.option("--skeleton", type=in_file, required=True, help="Skeleton JSON.")
@click.option("--index", "index_path", type=in_file, required=True, help="Index file.")
@click.option("--intrinsics", type=in_file, default=None, help="Intrinsics JSON.")
@click.option("--chart", type=in_file, default=None, help="Size chart JSON.")
@click.option(
    "--dataset",
    type=click.Path(file_okay=False, path_type=Path),
    default=None,
    help="Build the index from this dataset when it does not exist yet.",
)
@click.option("-k", type=click.IntRange(min=1), default=5, show_default=True)
@click.option("--no-register", is_flag=True, help="Skip ICP onto the top match.")
@click.option(
    "--icp-iterations",
    type=click.IntRange(min=1),
    default=constants.ICP_MAX_ITERATIONS,
    show_default=True,
)
@click.option(
    "--icp-samples",
    type=click.IntRange(min=1),
    default=constants.ICP_TARGET_SAMPLES,
    show_default=True,
    help="Surface samples of the retrieved model.",
)
@click.option(
    "--keep-intermediates",
    type=click.Path(file_okay=False, path_type=Path),
    default=None,
    help="Directory for the cloud, contour, features and reports.",
)
@seed_option
@index_weight_options
@tolerance_options
def pipeline(
    depth: Path,
    skeleton: Path,
    index_path: Path,
    intrinsics: Path | None,
    chart: Path | None,
    dataset: Path | None,
    k: int,
    no_register: bool,
    icp_iterations: int,
    icp_samples: int,
    keep_intermediates: Path | None,
    seed: int,
    w_global: float,
    w_gender: float,
    w_local: float | None,
    eps: float,
    literal_verticality: bool,
) -> None:
    """Measure, retrieve, size and register one depth frame; prints JSON."""
    cfg = PipelineConfig(
        depth=depth,
        skeleton=skeleton,
        index=index_path,
        intrinsics=intrinsics,
        chart=chart,
        dataset=dataset,
        tolerances=make_tolerances(eps, literal_verticality),
        weights=index_weights(w_global, w_gender, w_local),
        k=k,
        register=not no_register,
        icp_iterations=icp_iterations,
        icp_samples=icp_samples,
        keep_intermediates=keep_intermediates,
        seed=seed,
    )
    echo_json(run_pipeline(cfg).to_dict())
