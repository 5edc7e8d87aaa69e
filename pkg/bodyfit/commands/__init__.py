from __future__ import annotations

import csv
import importlib
import io
import json
import logging
import pkgutil
from collections.abc import Callable, Iterable, Sequence
from pathlib import Path
from typing import Any

import click

from .. import constants, utils
from ..anthropometrics import Tolerances
from ..errors import BodyFitError
from ..features import GroupWeights

log = logging.getLogger(__name__)


class BodyFitGroup(click.Group):
    """Command group turning pipeline errors into their exit codes."""

    def invoke(self, ctx: click.Context) -> Any:
        try:
            return super().invoke(ctx)
        except BodyFitError as exc:
            stage = exc.stage or ctx.invoked_subcommand or "cli"
            click.echo(f"Error[{stage}]: {exc}", err=True)
            raise click.exceptions.Exit(exc.exit_code) from None
        except (click.ClickException, click.exceptions.Exit, click.Abort):
            raise
        except Exception as exc:
            log.error("Unexpected failure in %s", ctx.invoked_subcommand, exc_info=exc)
            utils.capture_exception(exc)
            click.echo(f"Error[internal]: {exc!r}", err=True)
            raise click.exceptions.Exit(5) from None


@click.group(cls=BodyFitGroup)
def cli() -> None:
    """Body measurements, features and model retrieval from single depth frames."""


seed_option = click.option(
    "--seed", type=int, default=0, show_default=True, help="Seed for every random draw."
)
workers_option = click.option(
    "--workers", type=click.IntRange(min=1), default=None, help="Worker threads."
)
# existence is checked by the readers so missing files surface as input errors
in_file = click.Path(dir_okay=False, path_type=Path)
out_file = click.Path(dir_okay=False, writable=True, path_type=Path)


def tolerance_options(func: Callable[..., Any]) -> Callable[..., Any]:
    func = click.option(
        "--eps",
        type=click.FloatRange(0, 0.5, min_open=True, max_open=True),
        default=constants.TOLERANCE_EPS,
        show_default=True,
        help="Posture and section tolerance.",
    )(func)
    return click.option(
        "--literal-verticality",
        is_flag=True,
        help="Use the dot-product form of the posture test.",
    )(func)


def group_weight_options(func: Callable[..., Any]) -> Callable[..., Any]:
    for name in ("global", "gender", "local"):
        func = click.option(
            f"--w-{name}",
            type=click.FloatRange(min=0),
            default=1.0,
            show_default=True,
            help=f"Weight of the {name} feature group.",
        )(func)
    return func


def index_weight_options(func: Callable[..., Any]) -> Callable[..., Any]:
    """Group weights for a new index; the local weight is balanced unless given."""
    func = click.option(
        "--w-local",
        type=click.FloatRange(min=0),
        default=None,
        help="Weight of the local feature group (default: balanced against the global group).",
    )(func)
    for name in ("gender", "global"):
        func = click.option(
            f"--w-{name}",
            type=click.FloatRange(min=0),
            default=1.0,
            show_default=True,
            help=f"Weight of the {name} feature group.",
        )(func)
    return func


def index_weights(w_global: float, w_gender: float, w_local: float | None) -> GroupWeights | None:
    if w_local is not None:
        return GroupWeights(w_global, w_gender, w_local)
    if (w_global, w_gender) != (1.0, 1.0):
        raise click.BadParameter("custom group weights need an explicit --w-local")
    return None


def make_tolerances(eps: float, literal_verticality: bool) -> Tolerances:
    return Tolerances(eps, eps, eps, literal_verticality=literal_verticality)


def echo_json(data: Any) -> None:
    click.echo(json.dumps(data, indent=2, sort_keys=True))


def emit_csv(path: Path | None, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    """Write CSV to `path`, or to standard output without one."""
    if path is not None:
        utils.write_csv(path, header, rows)
        return
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    click.echo(buffer.getvalue(), nl=False)


# import all submodules in order to register every command on `cli`
for loader, module_name, is_pkg in pkgutil.iter_modules(__path__, __name__ + "."):
    importlib.import_module(module_name)
