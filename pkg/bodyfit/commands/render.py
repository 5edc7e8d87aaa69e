from __future__ import annotations

from pathlib import Path

import click

from .. import constants
from ..geometry import CameraIntrinsics
from ..geometry.io import write_depth_frame, write_preview_pgm, write_skeleton
from ..render import RenderConfig, View, load_joint_mapping, render_depth
from ..synth import import_model
from . import cli, in_file, seed_option


@cli.command()
@click.option(
    "--model",
    "model_dir",
    type=click.Path(file_okay=False, path_type=Path),
    required=True,
    help="Model bundle directory.",
)
@click.option("--out", "prefix", required=True, help="Output prefix for the frame files.")
@click.option(
    "--view",
    type=click.Choice([view.value for view in View]),
    default=View.FRONTAL.value,
    show_default=True,
)
@click.option("--noise-sd", type=click.FloatRange(min=0), default=0.0, help="Depth noise, mm.")
@click.option(
    "--distance",
    type=float,
    default=constants.CAMERA_DISTANCE,
    show_default=True,
    help="Camera distance in metres.",
)
@click.option("--landscape", is_flag=True, help="Use the 640x480 landscape sensor frame.")
@click.option("--mapping", type=in_file, default=None, help="Rig-to-skeleton joint mapping.")
@click.option("--preview", is_flag=True, help="Also write the 8-bit preview PGM.")
@seed_option
def render(
    model_dir: Path,
    prefix: str,
    view: str,
    noise_sd: float,
    distance: float,
    landscape: bool,
    mapping: Path | None,
    preview: bool,
    seed: int,
) -> None:
    """
    Render a model bundle to PREFIX.pgm (16-bit millimetres), PREFIX.json (intrinsics) and
    PREFIX_skeleton.json.
    """
    cfg = RenderConfig(
        intrinsics=(
            CameraIntrinsics.kinect_default()
            if landscape
            else CameraIntrinsics.portrait_default()
        ),
        view=View(view),
        noise_sd=noise_sd,
        camera_distance=distance,
        seed=seed,
    )
    model = import_model(model_dir)
    frame, skeleton = render_depth(model, cfg, load_joint_mapping(mapping))

    depth_path = Path(f"{prefix}.pgm")
    write_depth_frame(depth_path, frame)
    write_skeleton(Path(f"{prefix}_skeleton.json"), skeleton)
    if preview:
        write_preview_pgm(Path(f"{prefix}_preview.pgm"), frame)
    click.echo(f"Rendered {view} view to {depth_path} ({int(frame.valid.sum())} valid pixels)")
