from __future__ import annotations

import contextlib
import csv
import importlib.resources
import json
import logging
import os
from collections.abc import Generator, Iterable, Sequence
from pathlib import Path
from typing import Any

import numpy as np
import regex
import sentry_sdk

from .errors import BodyFitError, FormatError, IoError

log = logging.getLogger(__name__)

SENTRY_DSN = os.environ.get("SENTRY_DSN")
LOG_LEVEL = os.environ.get("BODYFIT_LOG_LEVEL", "INFO").upper()

_COUNT_RE = regex.compile(
    r"""
    ^\s*
    (?P<mantissa>\d+(?:\.\d+)?)
    (?:[eE](?P<exponent>\d+))?
    \s*$
    """,
    regex.VERBOSE,
)


def capture_exception(exc: BaseException) -> None:
    if SENTRY_DSN:
        sentry_sdk.capture_exception(exc)


@contextlib.contextmanager
def error_stage(stage: str) -> Generator[None, None, None]:
    """Tag any `BodyFitError` raised inside the block with the pipeline stage name."""
    try:
        yield
    except BodyFitError as exc:
        if exc.stage is None:
            exc.stage = stage
        raise


def rng_for(seed: int, *counters: int) -> np.random.Generator:
    # one independent stream per (seed, counter...) so parallel runs match serial ones
    return np.random.default_rng([seed, *counters])


def data_path(name: str) -> Path:
    return Path(str(importlib.resources.files("bodyfit") / "data" / name))


def read_json(path: str | os.PathLike[str]) -> Any:
    try:
        with open(path, encoding="utf-8") as fp:
            return json.load(fp)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from None
    except OSError as exc:
        raise IoError(path, exc.strerror or str(exc)) from None


def write_json(path: str | os.PathLike[str], data: Any) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fp:
            json.dump(data, fp, indent=2, sort_keys=True)
            fp.write("\n")
    except OSError as exc:
        raise IoError(path, exc.strerror or str(exc)) from None


def read_bytes(path: str | os.PathLike[str]) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise IoError(path, exc.strerror or str(exc)) from None


def write_bytes(path: str | os.PathLike[str], data: bytes) -> None:
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise IoError(path, exc.strerror or str(exc)) from None


def parse_count(text: str) -> int:
    """Parse a count written either plainly (``50000``) or in short scientific form (``5e4``)."""
    match = _COUNT_RE.match(text)
    if match is None:
        raise ValueError(f"not a count: {text!r}")
    value = float(match["mantissa"]) * 10 ** int(match["exponent"] or 0)
    if value < 1 or value != int(value):
        raise ValueError(f"not a positive integer count: {text!r}")
    return int(value)


def parse_counts(text: str) -> list[int]:
    return [parse_count(part) for part in text.split(",") if part.strip()]


def derive_seed(seed: int, *counters: int) -> int:
    """A 32-bit seed for a sub-task, independent of every other (seed, counter...) pair."""
    return int(np.random.SeedSequence([seed, *counters]).generate_state(1)[0])


def write_csv(
    path: str | os.PathLike[str], header: Sequence[str], rows: Iterable[Sequence[Any]]
) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fp:
            writer = csv.writer(fp, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as exc:
        raise IoError(path, exc.strerror or str(exc)) from None
