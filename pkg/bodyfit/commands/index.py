from __future__ import annotations

from pathlib import Path

import click

from ..features import read_feature_vector
from ..pipeline import index_dataset
from ..render import RenderConfig
from ..retrieval import knn_query, load_index, read_metadata
from . import (
    cli,
    echo_json,
    in_file,
    index_weight_options,
    index_weights,
    make_tolerances,
    out_file,
    tolerance_options,
    workers_option,
)


@cli.group()
def index() -> None:
    """Feature index of a synthetic dataset."""


@index.command("build")
@click.option(
    "--dataset",
    type=click.Path(file_okay=False, path_type=Path),
    required=True,
    help="Directory of model bundles.",
)
@click.option("-o", "--out", type=out_file, required=True, help="Index file.")
@index_weight_options
@workers_option
@tolerance_options
def build(
    dataset: Path,
    out: Path,
    w_global: float,
    w_gender: float,
    w_local: float | None,
    workers: int | None,
    eps: float,
    literal_verticality: bool,
) -> None:
    """Render, describe and index every model bundle of a dataset."""
    built, skipped = index_dataset(
        dataset,
        out,
        render_cfg=RenderConfig(),
        tol=make_tolerances(eps, literal_verticality),
        weights=index_weights(w_global, w_gender, w_local),
        workers=workers,
    )
    click.echo(
        f"Indexed {len(built)} models to {out} ({len(skipped)} skipped),"
        f" weights {', '.join(f'{w:g}' for w in built.weights.as_tuple())}"
    )


@index.command("query")
@click.option("--index", "index_path", type=in_file, required=True, help="Index file.")
@click.option("--features", type=in_file, required=True, help="Feature vector file.")
@click.option("-k", type=click.IntRange(min=1), default=5, show_default=True)
def query(index_path: Path, features: Path, k: int) -> None:
    """Print the K nearest indexed models as JSON."""
    loaded = load_index(index_path)
    result = knn_query(loaded, read_feature_vector(features), min(k, len(loaded)))
    data = result.to_dict()
    if loaded.metadata_path is not None:
        entries = read_metadata(loaded.metadata_path)
        for neighbor in data["neighbors"]:
            entry = entries.get(neighbor["id"])
            if entry is not None:
                neighbor["bundle"] = str(entry.bundle)
                neighbor["params"] = entry.params.to_dict()
    echo_json(data)
