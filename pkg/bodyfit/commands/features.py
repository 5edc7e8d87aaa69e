from __future__ import annotations

from pathlib import Path

import click

from ..anthropometrics import measure_scan
from ..features import GroupWeights, extract_features, write_feature_vector
from ..geometry.io import read_depth_frame, read_skeleton
from . import (
    cli,
    group_weight_options,
    in_file,
    make_tolerances,
    out_file,
    tolerance_options,
)


@cli.command()
@click.option("--depth", type=in_file, required=True, help="16-bit depth PGM.")
@click.option("--skeleton", type=in_file, required=True, help="Skeleton JSON.")
@click.option("--intrinsics", type=in_file, default=None, help="Intrinsics JSON.")
@click.option("-o", "--out", type=out_file, required=True, help="Feature vector file.")
@group_weight_options
@tolerance_options
def features(
    depth: Path,
    skeleton: Path,
    intrinsics: Path | None,
    out: Path,
    w_global: float,
    w_gender: float,
    w_local: float,
    eps: float,
    literal_verticality: bool,
) -> None:
    """Extract the 501-value feature vector of one frontal frame."""
    frame = read_depth_frame(depth, intrinsics)
    sk = read_skeleton(skeleton)
    measurements, scan = measure_scan(frame, sk, make_tolerances(eps, literal_verticality))
    weights = GroupWeights(w_global, w_gender, w_local)
    vector = extract_features(frame, sk, measurements, weights=weights, cloud=scan.cloud)
    write_feature_vector(out, vector)
    ratio1, ratio2 = vector.raw[4:6]
    click.echo(f"Wrote {len(vector)} features to {out} (ratios {ratio1:.3f}, {ratio2:.3f})")
