from __future__ import annotations

from pathlib import Path

import click

from ..anthropometrics import measure_all
from ..geometry.io import read_depth_frame, read_skeleton
from ..utils import write_json
from . import cli, echo_json, in_file, make_tolerances, out_file, tolerance_options


@cli.command()
@click.option("--depth", type=in_file, required=True, help="16-bit depth PGM.")
@click.option("--skeleton", type=in_file, required=True, help="Skeleton JSON.")
@click.option(
    "--intrinsics", type=in_file, default=None, help="Intrinsics JSON (default: depth sidecar)."
)
@click.option("-o", "--out", type=out_file, default=None, help="Measurements JSON.")
@tolerance_options
def measure(
    depth: Path,
    skeleton: Path,
    intrinsics: Path | None,
    out: Path | None,
    eps: float,
    literal_verticality: bool,
) -> None:
    """Measure height, limb lengths and girths from one frontal frame."""
    frame = read_depth_frame(depth, intrinsics)
    measurements = measure_all(
        frame, read_skeleton(skeleton), make_tolerances(eps, literal_verticality)
    )
    if out is None:
        echo_json(measurements.to_dict())
        return
    write_json(out, measurements.to_dict())
    click.echo(
        f"Height {measurements.height:.1f} cm, chest {measurements.girth_chest:.1f} cm,"
        f" waist {measurements.girth_waist:.1f} cm -> {out}"
    )
