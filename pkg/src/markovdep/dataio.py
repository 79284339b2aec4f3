"""CSV and JSON input/output plus the study configuration file format.

CSV files are UTF-8, comma separated, with a header row and ``.`` as decimal
mark.  Floats are written with ``repr`` (shortest round-trip form), so a
written sample re-reads to the identical values.

Study configuration files hold one ``key = value`` pair per line; blank lines
and lines starting with ``#`` are ignored.  Recognised keys:

========================  =====================================================
``family``                independence, comonotone, frechet, gaussian, mo,
                          jump or lsl (required)
``alpha``, ``beta``       Frechet and Marshall-Olkin parameters
``rho``, ``d``            Gaussian parameters (``d`` defaults to 1)
``m``                     Jump parameter
``knots``                 LSL knots as ``t:delta`` items, comma separated
``sample_sizes``          comma-separated integers (required)
``repetitions``           integer, default 500
``grid_points``           integer, default 101
``master_seed``           integer, default 0
``kinds``                 subset of ``phi, kappa``; default both
``mc_reference``          true/false, default true
``tie_rule``              ``index`` (default) or ``random``
``tie_seed``              integer, required when ``tie_rule = random``
``nn_method``             auto, brute or kdtree
========================  =====================================================
"""

from __future__ import annotations

import csv
import json
import math
import os
import warnings

import numpy as np

from . import copulas as cop
from .errors import ConfigError, DataIOError, MarkovDepError
from .estimator import default_grid
from .ranks import Dataset, TieRule
from .study import StudyConfig


class RejectedRowsWarning(UserWarning):
    """Some CSV rows were skipped because a selected field was missing or not numeric."""

    def __init__(self, rows):
        self.rows = list(rows)
        shown = ", ".join(str(r) for r in self.rows[:20])
        more = f" (+{len(self.rows) - 20} more)" if len(self.rows) > 20 else ""
        super().__init__(f"skipped {len(self.rows)} malformed row(s): {shown}{more}")


def _number(text):
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(text)
    return value


def load_csv(path, y_column: str, x_columns) -> Dataset:
    """Read ``y_column`` and ``x_columns`` (in order) from a headed CSV file.

    Rows whose selected fields are missing, non-numeric or non-finite are
    skipped and reported in a :class:`RejectedRowsWarning`; rows are numbered
    from 1, not counting the header.
    """
    if isinstance(x_columns, str):
        x_columns = [x_columns]
    x_columns = list(x_columns)
    if not x_columns:
        raise DataIOError("at least one predictor column is required")
    try:
        handle = open(path, newline="", encoding="utf-8-sig")
    except OSError as exc:
        raise DataIOError(f"cannot open {path}: {exc.strerror or exc}") from exc
    with handle:
        reader = csv.reader(handle)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataIOError(f"{path} is empty") from None
        missing = [c for c in [y_column, *x_columns] if c not in header]
        if missing:
            raise DataIOError(f"{path} has no column(s) {', '.join(map(repr, missing))}; header is {header}")
        cols = [header.index(c) for c in [y_column, *x_columns]]
        rows, rejected = [], []
        for number, record in enumerate(reader, start=1):
            if not record or all(not f.strip() for f in record):
                continue
            try:
                rows.append([_number(record[c]) for c in cols])
            except (ValueError, IndexError):
                rejected.append(number)
    if rejected:
        warnings.warn(RejectedRowsWarning(rejected), stacklevel=2)
    if len(rows) < 2:
        raise DataIOError(f"{path} has fewer than two valid rows")
    arr = np.asarray(rows)
    return Dataset(arr[:, 0], arr[:, 1:])


def write_dataset_csv(data: Dataset, path) -> None:
    """Columns ``y, x1..xd``."""
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["y"] + [f"x{j + 1}" for j in range(data.d)])
            for yi, xi in zip(data.y, data.x):
                writer.writerow([repr(float(yi))] + [repr(float(v)) for v in xi])
    except OSError as exc:
        raise DataIOError(f"cannot write {path}: {exc.strerror or exc}") from exc


def curves_to_csv_rows(curves, labels=None):
    """Long-format rows ``label, kind, t, value`` for a list of curves."""
    labels = labels or [c.source.kind for c in curves]
    yield ["source", "kind", "t", "value"]
    for label, curve in zip(labels, curves):
        for t, v in zip(curve.grid, curve.values):
            yield [label, curve.kind, repr(float(t)), repr(float(v))]


def write_text(path, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise DataIOError(f"cannot write {path}: {exc.strerror or exc}") from exc


def write_rows(path, rows) -> None:
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            csv.writer(fh, lineterminator="\n").writerows(rows)
    except OSError as exc:
        raise DataIOError(f"cannot write {path}: {exc.strerror or exc}") from exc


def dumps(obj) -> str:
    # Python's float repr is the shortest string that round-trips exactly.
    return json.dumps(obj, indent=2, allow_nan=False)


_SPEC_KEYS = ("family", "alpha", "beta", "rho", "d", "m", "knots")
_STUDY_KEYS = (
    "sample_sizes",
    "repetitions",
    "grid_points",
    "master_seed",
    "kinds",
    "mc_reference",
    "tie_rule",
    "tie_seed",
    "nn_method",
)


def parse_knots(text: str):
    knots = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        t, _, v = item.partition(":")
        knots.append((float(t), float(v)))
    return knots


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def parse_study_config(text: str) -> StudyConfig:
    """Parse the ``key = value`` study format documented in this module."""
    values, lines = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        if key not in _SPEC_KEYS and key not in _STUDY_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r} (first set on line {lines[key]})")
        values[key] = value.strip()
        lines[key] = lineno

    def convert(key, fn, default=None):
        if key not in values:
            return default
        try:
            return fn(values[key])
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"line {lines[key]}: bad value for {key!r}: {exc}") from exc

    if "family" not in values:
        raise ConfigError("missing required key 'family'")
    if "sample_sizes" not in values:
        raise ConfigError("missing required key 'sample_sizes'")
    spec_args = {"family": values["family"]}
    spec_args["alpha"] = convert("alpha", float)
    spec_args["beta"] = convert("beta", float)
    spec_args["rho"] = convert("rho", float)
    spec_args["d"] = convert("d", int)
    spec_args["m"] = convert("m", int)
    spec_args["knots"] = convert("knots", parse_knots)
    try:
        spec = cop.spec_from_dict(spec_args)
    except ConfigError as exc:
        raise ConfigError(f"line {lines['family']}: {exc}") from exc

    def int_list(text):
        return [int(x) for x in text.split(",") if x.strip()]

    def word_list(text):
        return [x.strip() for x in text.split(",") if x.strip()]

    rule_kind = convert("tie_rule", str.strip, "index")
    tie_seed = convert("tie_seed", int)
    try:
        tie_rule = TieRule(rule_kind, tie_seed)
    except ConfigError as exc:
        raise ConfigError(f"line {lines.get('tie_rule', 0)}: {exc}") from exc
    try:
        return StudyConfig(
            spec=spec,
            sample_sizes=tuple(convert("sample_sizes", int_list)),
            repetitions=convert("repetitions", int, 500),
            grid=default_grid(convert("grid_points", int, 101)),
            master_seed=convert("master_seed", int, 0),
            kinds=tuple(convert("kinds", word_list, ["phi", "kappa"])),
            mc_reference=convert("mc_reference", _bool, True),
            tie_rule=tie_rule,
            nn_method=convert("nn_method", str.strip, "auto"),
        )
    except MarkovDepError as exc:
        raise ConfigError(str(exc)) from exc


def load_study_config(path) -> StudyConfig:
    if not os.path.exists(path):
        raise DataIOError(f"config file {path} does not exist")
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise DataIOError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return parse_study_config(text)
