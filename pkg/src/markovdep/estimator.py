"""Nearest-neighbour plug-in estimators of the dependence functions phi and kappa.

With normalized rank gaps ``g_i = |R_i - R_{N(i)}| / (n + 1)``:

* ``phi_hat(t)   = mean(g_i <= t)``
* ``kappa_hat(t) = 1 - 3 t + 3 mean((t - g_i)_+)``
* ``xi_hat       = kappa_hat(1) = 1 - 3 mean(g_i)``

``kappa_hat`` is evaluated through the hinge sum, which is the exact integral
``1 - 3 int_0^t (1 - phi_hat(s)) ds`` of the step function ``phi_hat``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InputError
from .ranks import Dataset, RankPairs, TieRule, make_rank_pairs

PHI = "phi"
KAPPA = "kappa"
DEFAULT_GRID_POINTS = 101


def default_grid(points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    """Equispaced grid ``{0, 1/(k-1), ..., 1}``; each node is the correctly rounded ``i/(k-1)``."""
    if points < 2:
        raise InputError("a grid needs at least two points")
    return np.arange(points) / (points - 1)


@dataclass(frozen=True)
class CurveSource:
    """Provenance of a curve: ``estimated``, ``analytic``, ``quadrature`` or ``monte_carlo``."""

    kind: str
    n: int | None = None
    samples: int | None = None
    seed: int | None = None
    tolerance: float | None = None

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}

    @classmethod
    def from_dict(cls, data: dict) -> "CurveSource":
        return cls(**data)


@dataclass(frozen=True)
class DependenceCurve:
    grid: np.ndarray
    values: np.ndarray
    kind: str
    source: CurveSource = field(default_factory=lambda: CurveSource("analytic"))

    def __post_init__(self):
        grid = check_grid(self.grid)
        values = np.asarray(self.values, dtype=float)
        if values.shape != grid.shape:
            raise InputError("grid and values differ in length")
        if self.kind not in (PHI, KAPPA):
            raise InputError(f"curve kind must be {PHI!r} or {KAPPA!r}")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def shape_violations(self, tol: float = 1e-12) -> list[str]:
        """Names of the shape properties this curve breaks (empty if none).

        phi: non-decreasing, values in [0, 1], phi(1) = 1.
        kappa: non-increasing, convex, 3-Lipschitz, kappa(0) = 1, values <= 1.
        Finite-sample kappa estimates may dip below zero, so only the upper
        bound is enforced for kappa.
        """
        t, v = self.grid, self.values
        dt, dv = np.diff(t), np.diff(v)
        bad = []
        if self.kind == PHI:
            if np.any(dv < -tol):
                bad.append("phi not non-decreasing")
            if np.any(v < -tol) or np.any(v > 1 + tol):
                bad.append("phi outside [0, 1]")
            if t[-1] == 1.0 and abs(v[-1] - 1.0) > tol:
                bad.append("phi(1) != 1")
        else:
            if np.any(dv > tol):
                bad.append("kappa not non-increasing")
            if np.any(np.abs(dv) > 3 * dt + tol):
                bad.append("kappa not 3-Lipschitz")
            nz = dt > 0
            slopes = dv[nz] / dt[nz]
            h = dt[nz]
            # Slope increments scaled back to second differences of the values.
            if np.any(np.diff(slopes) * np.minimum(h[:-1], h[1:]) < -tol):
                bad.append("kappa not convex")
            if t[0] == 0.0 and abs(v[0] - 1.0) > tol:
                bad.append("kappa(0) != 1")
            if np.any(v > 1 + tol):
                bad.append("kappa above 1")
        return bad

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "source": self.source.to_dict(),
            "grid": self.grid.tolist(),
            "values": self.values.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DependenceCurve":
        return cls(
            np.asarray(data["grid"], dtype=float),
            np.asarray(data["values"], dtype=float),
            data["kind"],
            CurveSource.from_dict(data["source"]),
        )


def check_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) == 0:
        raise InputError("grid must be a non-empty one-dimensional sequence")
    if not np.all(np.isfinite(grid)) or grid[0] < 0 or grid[-1] > 1:
        raise InputError("grid values must lie in [0, 1]")
    if np.any(np.diff(grid) < 0):
        raise InputError("grid must be sorted")
    return grid


def _check_t(t) -> np.ndarray:
    arr = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0) or np.any(arr > 1):
        raise DomainError(f"t must lie in [0, 1], got {t!r}")
    return arr


@dataclass(frozen=True)
class NormalizedGaps:
    """Normalized nearest-neighbour rank gaps ``|R_i - R_{N(i)}| / (n + 1)``.

    When built from ranks the integer differences ``|R_i - R_{N(i)}|`` and the
    denominator ``n + 1`` are kept as well, so that sums over gaps can be
    formed exactly.
    """

    gaps: np.ndarray
    numerators: np.ndarray | None = None
    denominator: int | None = None

    def __post_init__(self):
        g = np.asarray(self.gaps, dtype=float)
        if g.ndim != 1 or len(g) < 1:
            raise InputError("gaps must be a non-empty one-dimensional array")
        if np.any(~np.isfinite(g)) or np.any(g < 0) or np.any(g >= 1):
            raise InputError("gaps must lie in [0, 1)")
        g.flags.writeable = False
        object.__setattr__(self, "gaps", g)
        if (self.numerators is None) != (self.denominator is None):
            raise InputError("numerators and denominator go together")
        if self.numerators is not None:
            num = np.asarray(self.numerators, dtype=np.int64)
            if num.shape != g.shape or not np.array_equal(num / self.denominator, g):
                raise InputError("numerators / denominator must reproduce the gaps")
            num.flags.writeable = False
            object.__setattr__(self, "numerators", num)
            object.__setattr__(self, "denominator", int(self.denominator))

    @property
    def n(self) -> int:
        return len(self.gaps)


def normalized_gaps(pairs: RankPairs) -> NormalizedGaps:
    diff = np.abs(pairs.ranks - pairs.neighbor_ranks)
    return NormalizedGaps(diff / (pairs.n + 1), diff, pairs.n + 1)


def _as_gaps(gaps) -> NormalizedGaps:
    return gaps if isinstance(gaps, NormalizedGaps) else NormalizedGaps(gaps)


def _gap_array(gaps) -> np.ndarray:
    return _as_gaps(gaps).gaps


def phi_hat(gaps, t):
    """Fraction of gaps ``<= t``; accepts a scalar or an array of ``t``."""
    g = np.sort(_gap_array(gaps))
    tt = _check_t(t)
    out = np.searchsorted(g, tt, side="right") / len(g)
    return float(out) if out.ndim == 0 else out


def kappa_hat(gaps, t):
    """Hinge sum ``1 - 3t + (3/n) sum (t - g_i)_+``; scalar or array ``t``.

    With the gaps sorted, the hinge sum at ``t`` is ``k t - (g_1 + ... + g_k)``
    where ``k`` counts gaps below ``t``.  On the rank lattice the partial sums
    are formed in integers, so e.g. all gaps equal to ``1/(n+1)`` give exactly
    the floating-point value of ``1 - 3/(n+1)`` at ``t = 1``.
    """
    ng = _as_gaps(gaps)
    tt = _check_t(t)
    flat = np.atleast_1d(tt).ravel()
    n = ng.n
    order = np.argsort(ng.gaps, kind="stable")
    k = np.searchsorted(ng.gaps[order], flat, side="left")
    if ng.numerators is not None:
        prefix = np.concatenate([[0], np.cumsum(ng.numerators[order])])
        partial = (3 * prefix[k]) / (n * ng.denominator)
    else:
        prefix = np.concatenate([[0.0], np.cumsum(ng.gaps[order])])
        partial = 3 * prefix[k] / n
    out = (1.0 - 3.0 * flat + 3.0 * (k * flat) / n - partial).reshape(tt.shape)
    return float(out) if out.ndim == 0 else out


def xi_hat(gaps) -> float:
    """Rank-correlation estimate ``kappa_hat(1)``; not clamped, may be negative."""
    return kappa_hat(gaps, 1.0)


def near_zero_threshold(n: int) -> float:
    """``b_n = 1/n``; never below ``1/(n+1)``, the smallest possible gap."""
    if n < 2:
        raise InputError("b_n is defined for n >= 2")
    return 1.0 / n


def phi_curve(gaps, grid=None) -> DependenceCurve:
    grid = default_grid() if grid is None else check_grid(grid)
    g = _as_gaps(gaps)
    return DependenceCurve(grid, phi_hat(g, grid), PHI, CurveSource("estimated", n=g.n))


def kappa_curve(gaps, grid=None) -> DependenceCurve:
    grid = default_grid() if grid is None else check_grid(grid)
    g = _as_gaps(gaps)
    return DependenceCurve(grid, kappa_hat(g, grid), KAPPA, CurveSource("estimated", n=g.n))


def estimate_gaps(data: Dataset, rule: TieRule | None = None, method: str = "auto") -> NormalizedGaps:
    """Full pipeline from a dataset to its normalized rank gaps."""
    return normalized_gaps(make_rank_pairs(data, rule, method=method))


@dataclass(frozen=True)
class IdentityCheck:
    lhs: float
    rhs: float

    @property
    def diff(self) -> float:
        return self.lhs - self.rhs

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "diff": self.diff}


def identity_check(markov_samples) -> IdentityCheck:
    """Two Monte Carlo estimates of the same rank correlation from Markov-product pairs.

    ``lhs = 6 E[min(V, V')] - 2`` and ``rhs = 3 E[1 - |V - V'|] - 2``.  For an
    exchangeable pair with uniform margins they agree in expectation.
    """
    pairs = np.asarray(markov_samples, dtype=float)
    if pairs.ndim != 2 or pairs.shape[1] != 2 or len(pairs) == 0:
        raise InputError("expected an array of (v, v') pairs")
    if np.any(pairs < 0) or np.any(pairs > 1):
        raise InputError("Markov-product samples must lie in the unit square")
    v, w = pairs[:, 0], pairs[:, 1]
    lhs = 6.0 * np.minimum(v, w).mean() - 2.0
    rhs = 3.0 * (1.0 - np.abs(v - w)).mean() - 2.0
    return IdentityCheck(float(lhs), float(rhs))
