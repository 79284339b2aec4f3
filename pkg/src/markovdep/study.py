"""Monte Carlo convergence study of the phi and kappa estimators.

For every sample size ``n`` and repetition ``r`` a joint sample is drawn with
the seed ``SeedSequence(master_seed, spawn_key=(n, r))``, both estimated
curves are evaluated on the grid, and the grid-based maximum deviation from
the reference curve is recorded.  Because each cell owns its seed, results do
not depend on which other cells are run or in what order.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import copulas as cop
from ._random import derive_seed
from .errors import ConfigError, InputError
from .estimator import KAPPA, PHI, CurveSource, DependenceCurve, check_grid, default_grid, estimate_gaps, kappa_curve, phi_curve
from .ranks import TieRule
from .reference import reference_curve

SCHEMA_VERSION = 1
# Spawn key of the Monte Carlo reference stream; cells use (n, r) with n >= 2.
REFERENCE_STREAM = (0,)
REFERENCE_MC_FACTOR = 10


@dataclass(frozen=True)
class StudyConfig:
    spec: object
    sample_sizes: tuple = (100, 500, 2000)
    repetitions: int = 500
    grid: np.ndarray = field(default_factory=default_grid)
    master_seed: int = 0
    kinds: tuple = (PHI, KAPPA)
    mc_reference: bool = True
    tie_rule: TieRule = field(default_factory=TieRule.by_index)
    nn_method: str = "auto"

    def __post_init__(self):
        if not isinstance(self.spec, cop.FAMILIES):
            raise ConfigError(f"not a copula specification: {self.spec!r}")
        sizes = tuple(int(n) for n in self.sample_sizes)
        if not sizes or any(n < 2 for n in sizes):
            raise ConfigError("sample sizes must be integers >= 2")
        if len(set(sizes)) != len(sizes):
            raise ConfigError("sample sizes must be distinct")
        if int(self.repetitions) < 1:
            raise ConfigError("repetitions must be >= 1")
        kinds = tuple(self.kinds)
        if not kinds or any(k not in (PHI, KAPPA) for k in kinds):
            raise ConfigError(f"kinds must be a non-empty subset of {{{PHI}, {KAPPA}}}")
        try:
            grid = check_grid(self.grid)
        except InputError as exc:
            raise ConfigError(str(exc)) from exc
        object.__setattr__(self, "sample_sizes", sizes)
        object.__setattr__(self, "repetitions", int(self.repetitions))
        object.__setattr__(self, "kinds", kinds)
        object.__setattr__(self, "grid", grid)

    def to_dict(self) -> dict:
        return {
            "spec": cop.spec_to_dict(self.spec),
            "sample_sizes": list(self.sample_sizes),
            "repetitions": self.repetitions,
            "grid_points": len(self.grid),
            "master_seed": self.master_seed,
            "kinds": list(self.kinds),
            "mc_reference": self.mc_reference,
            "tie_rule": self.tie_rule.describe(),
            "nn_method": self.nn_method,
        }


def grid_deviation(estimated: DependenceCurve, reference: DependenceCurve) -> float:
    """``max_t |estimated(t) - reference(t)|`` over a shared grid."""
    if estimated.grid.shape != reference.grid.shape or np.any(estimated.grid != reference.grid):
        raise InputError("curves are sampled on different grids")
    return float(np.max(np.abs(estimated.values - reference.values)))


def summarize(values) -> dict:
    """Five-number summary; quartiles interpolate linearly between order statistics."""
    v = np.asarray(values, dtype=float)
    q = np.quantile(v, [0.0, 0.25, 0.5, 0.75, 1.0], method="linear")
    return dict(zip(("min", "q1", "median", "q3", "max"), (float(x) for x in q)))


@dataclass
class StudyResult:
    config: StudyConfig
    deviations: dict  # (kind, n) -> array of length repetitions
    references: dict  # kind -> DependenceCurve
    summaries: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.summaries:
            self.summaries = {key: summarize(v) for key, v in self.deviations.items()}

    def median(self, kind: str, n: int) -> float:
        return self.summaries[(kind, n)]["median"]

    def to_dict(self) -> dict:
        cells = []
        for (kind, n), devs in sorted(self.deviations.items()):
            cells.append(
                {"kind": kind, "n": n, "deviations": [float(x) for x in devs], "summary": self.summaries[(kind, n)]}
            )
        return {
            "schema_version": SCHEMA_VERSION,
            "config": self.config.to_dict(),
            "references": {k: c.source.to_dict() for k, c in self.references.items()},
            "cells": cells,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["kind", "n", "rep", "deviation"])
        for (kind, n), devs in sorted(self.deviations.items()):
            for rep, dev in enumerate(devs):
                writer.writerow([kind, n, rep, repr(float(dev))])
        return buf.getvalue()


def study_references(config: StudyConfig) -> dict:
    """Reference curve per kind; Monte Carlo uses 10x the largest sample size."""
    samples = REFERENCE_MC_FACTOR * max(config.sample_sizes)
    seed = np.random.SeedSequence(config.master_seed, spawn_key=REFERENCE_STREAM)
    refs = {}
    for kind in config.kinds:
        ref = reference_curve(config.spec, kind, config.grid, mc_samples=samples, seed=seed)
        if ref.source.kind == "monte_carlo":
            if not config.mc_reference:
                raise ConfigError(f"no closed-form or quadrature reference for {config.spec!r} and MC reference is disabled")
            ref = DependenceCurve(ref.grid, ref.values, kind, CurveSource("monte_carlo", samples=samples, seed=config.master_seed))
        refs[kind] = ref
    return refs


def run_cell(config: StudyConfig, references: dict, n: int, rep: int) -> dict:
    """Deviations of one repetition at one sample size, keyed by kind."""
    data = cop.sample_joint(config.spec, n, derive_seed(config.master_seed, n, rep))
    gaps = estimate_gaps(data, config.tie_rule, method=config.nn_method)
    out = {}
    for kind in config.kinds:
        est = phi_curve(gaps, config.grid) if kind == PHI else kappa_curve(gaps, config.grid)
        out[kind] = grid_deviation(est, references[kind])
    return out


def _run_cell_star(args):
    return run_cell(*args)


def run_study(config: StudyConfig, workers: int = 1, references: dict | None = None) -> StudyResult:
    """Run every (n, repetition) cell and aggregate the deviations.

    ``workers > 1`` distributes cells over processes; the output is
    identical to a serial run.
    """
    refs = references or study_references(config)
    tasks = [(n, r) for n in config.sample_sizes for r in range(config.repetitions)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell_star, [(config, refs, n, r) for n, r in tasks], chunksize=8))
    else:
        results = [run_cell(config, refs, n, r) for n, r in tasks]
    devs = {(kind, n): np.empty(config.repetitions) for kind in config.kinds for n in config.sample_sizes}
    for (n, r), res in zip(tasks, results):
        for kind, value in res.items():
            devs[(kind, n)][r] = value
    return StudyResult(config, devs, refs)
