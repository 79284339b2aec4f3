"""Copula families with uniform margins, their samplers and Markov products.

A joint sample is a :class:`~markovdep.ranks.Dataset` whose response ``y`` is
``V`` and whose predictor ``x`` is ``U`` (``d`` columns, ``d = 1`` except for
the equicorrelated Gaussian), with ``(U, V) ~ C``.

The Markov product ``psi(C)`` is the law of ``(V, V')`` where ``V`` and ``V'``
are drawn independently from the conditional law of ``V`` given ``U``.  Every
family has a conditional sampler, so ``psi(C)`` can always be sampled by two
conditional draws; where the transformed copula is known in closed form it is
sampled directly instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import ndtr, ndtri

from ._random import make_rng
from .errors import ConfigError, InputError
from .ranks import Dataset

_TOL = 1e-12


# ---------------------------------------------------------------------------
# Diagonals of lower semilinear copulas
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DiagonalSpec:
    """Piecewise-linear copula diagonal given by knots ``(t_k, delta(t_k))``.

    With ``validate=True`` (the default) the knots must describe a diagonal
    that generates a lower semilinear copula: ``delta(0) = 0``,
    ``delta(1) = 1``, non-decreasing, 2-Lipschitz, ``delta(t) <= t``,
    ``delta(t)/t`` non-decreasing and ``delta(t)/t^2`` non-increasing
    (checked at knots and interval midpoints).  ``validate=False`` skips the
    shape checks; it is meant for formula outputs and approximations that
    only need to be evaluated, never sampled.
    """

    knots: np.ndarray
    validate: bool = True

    def __post_init__(self):
        k = np.array(self.knots, dtype=float)
        if k.ndim != 2 or k.shape[1] != 2 or len(k) < 2:
            raise ConfigError("diagonal knots must be a sequence of (t, delta) pairs")
        if not np.all(np.isfinite(k)):
            raise ConfigError("diagonal knots must be finite")
        t = k[:, 0]
        if t[0] != 0.0 or t[-1] != 1.0 or np.any(np.diff(t) <= 0):
            raise ConfigError("knot abscissae must increase strictly from 0 to 1")
        if abs(k[0, 1]) > _TOL or abs(k[-1, 1] - 1.0) > _TOL:
            raise ConfigError("a diagonal needs delta(0) = 0 and delta(1) = 1")
        k.flags.writeable = False
        object.__setattr__(self, "knots", k)
        if self.validate:
            problems = self.violations()
            if problems:
                raise ConfigError("invalid LSL diagonal: " + "; ".join(problems))

    @classmethod
    def identity(cls) -> "DiagonalSpec":
        return cls([(0.0, 0.0), (1.0, 1.0)])

    @classmethod
    def from_function(cls, fn, points: int = 1001, validate: bool = False) -> "DiagonalSpec":
        t = np.linspace(0.0, 1.0, points)
        return cls(np.column_stack([t, fn(t)]), validate=validate)

    @property
    def t(self) -> np.ndarray:
        return self.knots[:, 0]

    @property
    def values(self) -> np.ndarray:
        return self.knots[:, 1]

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / np.diff(self.t)

    def segment(self, x) -> np.ndarray:
        """Index of the knot interval ``[t_j, t_{j+1})`` holding ``x`` (last one includes 1)."""
        j = np.searchsorted(self.t, np.asarray(x, dtype=float), side="right") - 1
        return np.clip(j, 0, len(self.t) - 2)

    def __call__(self, x):
        return np.interp(x, self.t, self.values)

    def derivative(self, x):
        """Right derivative (the left one at ``x = 1``)."""
        return self.slopes[self.segment(x)]

    def ratio(self, x):
        """``delta(x)/x`` with its limit (the first slope) at ``x = 0``."""
        x = np.asarray(x, dtype=float)
        safe = np.where(x > 0, x, 1.0)
        return np.where(x > 0, self(x) / safe, self.slopes[0])

    def violations(self) -> list[str]:
        t, v, s = self.t, self.values, self.slopes
        mid = 0.5 * (t[:-1] + t[1:])
        pts = np.sort(np.concatenate([t[1:], mid]))
        vals = self(pts)
        out = []
        if np.any(s < -_TOL):
            out.append("not non-decreasing")
        if np.any(s > 2 + _TOL):
            out.append("not 2-Lipschitz")
        if np.any(v > t + _TOL):
            out.append("delta(t) > t")
        if np.any(np.diff(vals / pts) < -_TOL):
            out.append("delta(t)/t not non-decreasing")
        if np.any(np.diff(vals / pts**2) > _TOL):
            out.append("delta(t)/t^2 not non-increasing")
        return out

    def to_list(self) -> list:
        return self.knots.tolist()


# ---------------------------------------------------------------------------
# Family specifications
# ---------------------------------------------------------------------------


def _unit(name, value):
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ConfigError(f"{name} must lie in [0, 1], got {value}")
    return value


@dataclass(frozen=True)
class Independence:
    d = 1


@dataclass(frozen=True)
class Comonotone:
    d = 1


@dataclass(frozen=True)
class Frechet:
    """``alpha M + (1 - alpha - beta) Pi + beta W``."""

    alpha: float
    beta: float
    d = 1

    def __post_init__(self):
        a, b = _unit("alpha", self.alpha), _unit("beta", self.beta)
        if a + b > 1 + _TOL:
            raise ConfigError(f"Frechet copula needs alpha + beta <= 1, got {a + b}")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)


@dataclass(frozen=True)
class GaussianEqui:
    """Equicorrelated ``(d+1)``-dimensional Gaussian copula."""

    rho: float
    d: int = 1

    def __post_init__(self):
        d = int(self.d)
        if d != self.d or d < 1:
            raise ConfigError(f"dimension d must be a positive integer, got {self.d}")
        rho = float(self.rho)
        if not -1.0 / d < rho < 1.0:
            raise ConfigError(f"rho must lie in (-1/d, 1) = ({-1.0 / d:.6g}, 1), got {rho}")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "d", d)

    @property
    def rho_star(self) -> float:
        """Correlation of the bivariate Gaussian Markov product."""
        r, d = self.rho, self.d
        return d * r * r / (1 + (d - 1) * r)


@dataclass(frozen=True)
class MarshallOlkin:
    """``C(u, v) = min(u^(1-alpha) v, u v^(1-beta))``; ``u`` is the predictor."""

    alpha: float
    beta: float
    d = 1

    def __post_init__(self):
        object.__setattr__(self, "alpha", _unit("alpha", self.alpha))
        object.__setattr__(self, "beta", _unit("beta", self.beta))


@dataclass(frozen=True)
class Jump:
    """Equal-weight mixture of the ``2^m`` shuffles ``v = (u + i/2^m) mod 1``."""

    m: int
    d = 1

    def __post_init__(self):
        m = int(self.m)
        if m != self.m or m < 0:
            raise ConfigError(f"jump parameter m must be a non-negative integer, got {self.m}")
        if m > 30:
            raise ConfigError("jump parameter m > 30 is not supported")
        object.__setattr__(self, "m", m)


@dataclass(frozen=True)
class LSL:
    """Lower semilinear copula ``C(x, y) = y delta(x)/x`` for ``y <= x``, symmetric otherwise."""

    diagonal: DiagonalSpec
    d = 1

    def __post_init__(self):
        if not isinstance(self.diagonal, DiagonalSpec):
            object.__setattr__(self, "diagonal", DiagonalSpec(self.diagonal))


CopulaSpec = Union[Independence, Comonotone, Frechet, GaussianEqui, MarshallOlkin, Jump, LSL]
FAMILIES = (Independence, Comonotone, Frechet, GaussianEqui, MarshallOlkin, Jump, LSL)


def _check_spec(spec):
    if not isinstance(spec, FAMILIES):
        raise ConfigError(f"not a copula specification: {spec!r}")


def _check_n(n):
    if int(n) != n or n < 2:
        raise InputError(f"sample size must be an integer >= 2, got {n}")
    return int(n)


# ---------------------------------------------------------------------------
# Building blocks
# ---------------------------------------------------------------------------


def _uniform(rng, size) -> np.ndarray:
    """Uniforms in the open interval (0, 1)."""
    u = rng.random(size)
    zero = u == 0.0
    while np.any(zero):
        u[zero] = rng.random(int(zero.sum()))
        zero = u == 0.0
    return u


def _root(x, a):
    """``x^(1/a)`` with the ``a = 0`` limit (0 for ``x < 1``)."""
    if a == 0.0:
        return np.zeros_like(x)
    return x ** (1.0 / a)


def _shift(u, k, m):
    """``(u + k/2^m) mod 1`` computed without rounding for dyadic ``u``."""
    s = k / float(2**m)
    return np.where(u < 1.0 - s, u + s, u - (1.0 - s))


def _equicorrelated_normals(rho, dim, size, rng) -> np.ndarray:
    if dim == 1:
        return rng.standard_normal((size, 1))
    if rho >= 0:
        common = rng.standard_normal((size, 1))
        return math.sqrt(rho) * common + math.sqrt(1.0 - rho) * rng.standard_normal((size, dim))
    cov = np.full((dim, dim), rho)
    np.fill_diagonal(cov, 1.0)
    chol = np.linalg.cholesky(cov)
    return rng.standard_normal((size, dim)) @ chol.T


def _lsl_conditional(diag: DiagonalSpec, u, w):
    """Invert the conditional distribution function of ``V`` given ``U = u`` at ``w``.

    Below the diagonal it is ``v (delta'(u) u - delta(u)) / u^2``, there is an
    atom at ``v = u``, and above it equals ``delta(v)/v``.
    """
    slope = diag.derivative(u)
    ratio = diag(u) / u
    lower = slope - ratio  # mass of [0, u)
    v = np.empty_like(u)
    below = w < lower
    v[below] = w[below] * u[below] / lower[below]
    atom = ~below & (w <= ratio)
    v[atom] = u[atom]
    above = ~below & ~atom
    if np.any(above):
        t, vals, s = diag.t, diag.values, diag.slopes
        h = np.concatenate([[s[0]], vals[1:] / t[1:]])
        wa = w[above]
        k = np.clip(np.searchsorted(h, wa, side="left"), 1, len(t) - 1)
        p = vals[k - 1] - s[k - 1] * t[k - 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            sol = np.where(h[k] == wa, t[k], p / (wa - s[k - 1]))
        v[above] = np.clip(sol, u[above], 1.0)
    return v


def _mo_conditional(alpha, beta, u, w):
    """Inverse of ``v -> d/du C(u, v)`` for the Marshall-Olkin copula."""
    if alpha == 0.0 or beta == 0.0:
        return w.copy()
    v0 = u ** (alpha / beta)
    lower = (1.0 - alpha) * u ** (alpha / beta - alpha)  # mass of [0, v0)
    upper = v0 ** (1.0 - beta)  # distribution function at v0, atom included
    v = np.empty_like(u)
    below = w < lower
    v[below] = w[below] * u[below] ** alpha / (1.0 - alpha)
    atom = ~below & (w <= upper)
    v[atom] = v0[atom]
    above = ~below & ~atom
    if np.any(above):
        v[above] = w[above] ** (1.0 / (1.0 - beta))
    return v


def _sample_x(spec, n, rng) -> np.ndarray:
    """Predictor sample on the uniform scale, shape ``(n, d)``."""
    if isinstance(spec, GaussianEqui):
        return ndtr(_equicorrelated_normals(spec.rho, spec.d, n, rng))
    return _uniform(rng, (n, 1))


def conditional_draw(spec, x, rng) -> np.ndarray:
    """One draw of ``V`` given ``U = x`` for each row of ``x`` (uniform scale)."""
    _check_spec(spec)
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = len(x)
    u = x[:, 0]
    if isinstance(spec, Independence):
        return _uniform(rng, n)
    if isinstance(spec, Comonotone):
        return u.copy()
    if isinstance(spec, Frechet):
        c = rng.random(n)
        w = _uniform(rng, n)
        return np.where(c < spec.alpha, u, np.where(c < spec.alpha + spec.beta, 1.0 - u, w))
    if isinstance(spec, GaussianEqui):
        r, d = spec.rho, spec.d
        z = ndtri(x).sum(axis=1)
        mean = r / (1 + (d - 1) * r) * z
        sd = math.sqrt(1.0 - spec.rho_star)
        return ndtr(mean + sd * rng.standard_normal(n))
    if isinstance(spec, MarshallOlkin):
        return _mo_conditional(spec.alpha, spec.beta, u, _uniform(rng, n))
    if isinstance(spec, Jump):
        k = rng.integers(1, 2**spec.m + 1, size=n) % 2**spec.m
        return _shift(u, k, spec.m)
    if isinstance(spec, LSL):
        return _lsl_conditional(spec.diagonal, u, _uniform(rng, n))
    raise ConfigError(f"no conditional sampler for {spec!r}")  # pragma: no cover


# ---------------------------------------------------------------------------
# Public samplers
# ---------------------------------------------------------------------------


def sample_joint(spec, n: int, seed) -> Dataset:
    """``n`` i.i.d. draws ``(V, U) ~ C`` returned as ``Dataset(y=V, x=U)``."""
    _check_spec(spec)
    n = _check_n(n)
    rng = make_rng(seed)
    if isinstance(spec, Independence):
        u = _uniform(rng, n)
        return Dataset(_uniform(rng, n), u)
    if isinstance(spec, Comonotone):
        u = _uniform(rng, n)
        return Dataset(u.copy(), u)
    if isinstance(spec, Frechet):
        u = _uniform(rng, n)
        c = rng.random(n)
        w = _uniform(rng, n)
        v = np.where(c < spec.alpha, u, np.where(c < spec.alpha + spec.beta, 1.0 - u, w))
        return Dataset(v, u)
    if isinstance(spec, GaussianEqui):
        z = ndtr(_equicorrelated_normals(spec.rho, spec.d + 1, n, rng))
        return Dataset(z[:, 0], z[:, 1:])
    if isinstance(spec, MarshallOlkin):
        # Min-of-exponentials construction on the uniform scale.
        r, s, t = _uniform(rng, n), _uniform(rng, n), _uniform(rng, n)
        a, b = spec.alpha, spec.beta
        u = np.maximum(_root(r, 1.0 - a), _root(t, a))
        v = np.maximum(_root(s, 1.0 - b), _root(t, b))
        return Dataset(v, u)
    if isinstance(spec, Jump):
        u = _uniform(rng, n)
        k = rng.integers(1, 2**spec.m + 1, size=n) % 2**spec.m
        return Dataset(_shift(u, k, spec.m), u)
    if isinstance(spec, LSL):
        u = _uniform(rng, n)
        return Dataset(_lsl_conditional(spec.diagonal, u, _uniform(rng, n)), u)
    raise ConfigError(f"no sampler for {spec!r}")  # pragma: no cover


@dataclass(frozen=True)
class MarkovSample:
    """Pairs ``(v, v')`` drawn from the Markov product of a copula."""

    pairs: np.ndarray
    method: str = "analytic"

    def __post_init__(self):
        p = np.asarray(self.pairs, dtype=float)
        if p.ndim != 2 or p.shape[1] != 2:
            raise InputError("Markov sample must have shape (n, 2)")
        object.__setattr__(self, "pairs", p)

    @property
    def v(self) -> np.ndarray:
        return self.pairs[:, 0]

    @property
    def w(self) -> np.ndarray:
        return self.pairs[:, 1]

    @property
    def distances(self) -> np.ndarray:
        return np.abs(self.pairs[:, 0] - self.pairs[:, 1])

    def __len__(self):
        return len(self.pairs)


def markov_product_spec(spec):
    """Closed-form Markov product as a bivariate spec, or ``None`` when unavailable.

    The LSL entry applies the published diagonal transform verbatim (see
    :func:`delta_star`); the result is not validated and should be checked
    against :func:`sample_markov_product` before use.
    """
    _check_spec(spec)
    if isinstance(spec, (Independence, Comonotone, Jump)):
        return spec
    if isinstance(spec, Frechet):
        a, b = spec.alpha, spec.beta
        return Frechet(a * a + b * b, 2 * a * b)
    if isinstance(spec, GaussianEqui):
        return GaussianEqui(spec.rho_star, 1)
    if isinstance(spec, MarshallOlkin):
        if min(spec.alpha, spec.beta) == 0.0:
            return Independence()
        if min(spec.alpha, spec.beta) == 1.0:
            return Comonotone()
        if spec.alpha == 1.0:
            return MarshallOlkin(spec.beta, spec.beta)
        return None
    if isinstance(spec, LSL):
        return LSL(delta_star(spec.diagonal))
    return None  # pragma: no cover


def sample_markov_product(spec, n: int, seed, method: str = "auto") -> MarkovSample:
    """``n`` pairs from ``psi(C)``.

    ``method="conditional"`` draws ``U`` and then two conditionally
    independent ``V``; ``"analytic"`` samples the closed-form product; and
    ``"auto"`` uses the closed form for every family except LSL (whose
    published transform is not trusted) and Marshall-Olkin with ``alpha != 1``.
    """
    _check_spec(spec)
    n = _check_n(n)
    if method not in ("auto", "analytic", "conditional"):
        raise ConfigError(f"unknown Markov-product method {method!r}")
    target = None
    if method != "conditional" and not isinstance(spec, LSL):
        target = markov_product_spec(spec)
    if method == "analytic" and target is None:
        raise ConfigError(f"no closed-form Markov product for {spec!r}")
    if target is not None:
        data = sample_joint(target, n, seed)
        return MarkovSample(np.column_stack([data.x[:, 0], data.y]), "analytic")
    rng = make_rng(seed)
    x = _sample_x(spec, n, rng)
    v = conditional_draw(spec, x, rng)
    w = conditional_draw(spec, x, rng)
    return MarkovSample(np.column_stack([v, w]), "conditional")


# ---------------------------------------------------------------------------
# Published transform of LSL diagonals
# ---------------------------------------------------------------------------


def delta_star(diagonal: DiagonalSpec, points: int = 1001) -> DiagonalSpec:
    """Evaluate ``delta(x)^2/x + x^2 int_x^1 (delta'(u)/u)^2 du`` exactly for piecewise-linear ``delta``.

    The evaluation uses the original knots plus ``points`` equispaced
    abscissae.  The returned diagonal is not validated: for
    ``delta(t) = t`` the formula gives ``2x - x^2`` even though the Markov
    product of ``M`` is ``M`` itself, so callers compare it with a Monte
    Carlo estimate (:func:`markovdep.reference.lsl_consistency_report`).
    """
    t, s = diagonal.t, diagonal.slopes
    x = np.union1d(t, np.linspace(0.0, 1.0, points))
    # piece[k] = int_{t_k}^{t_{k+1}} (s_k/u)^2 du; the first piece is never used whole at x = 0
    with np.errstate(divide="ignore"):
        piece = s**2 * (1.0 / t[:-1] - 1.0 / t[1:])
    tail = np.concatenate([np.cumsum(piece[::-1])[::-1], [0.0]])  # int_{t_k}^1
    j = diagonal.segment(x)
    right = t[j + 1]
    own = s[j] ** 2 * (x - x * x / right)  # x^2 int_x^{t_{j+1}} (s_j/u)^2 du
    rest = x * x * tail[j + 1]
    dx = diagonal(x)
    safe = np.where(x > 0, x, 1.0)
    first = np.where(x > 0, dx * dx / safe, 0.0)
    values = first + own + rest
    return DiagonalSpec(np.column_stack([x, values]), validate=False)


# ---------------------------------------------------------------------------
# Plain-dict form used by the CLI, config files and JSON output
# ---------------------------------------------------------------------------

_NAMES = {
    Independence: "independence",
    Comonotone: "comonotone",
    Frechet: "frechet",
    GaussianEqui: "gaussian",
    MarshallOlkin: "mo",
    Jump: "jump",
    LSL: "lsl",
}


def family_name(spec) -> str:
    _check_spec(spec)
    return _NAMES[type(spec)]


def spec_to_dict(spec) -> dict:
    name = family_name(spec)
    if isinstance(spec, (Frechet, MarshallOlkin)):
        return {"family": name, "alpha": spec.alpha, "beta": spec.beta}
    if isinstance(spec, GaussianEqui):
        return {"family": name, "rho": spec.rho, "d": spec.d}
    if isinstance(spec, Jump):
        return {"family": name, "m": spec.m}
    if isinstance(spec, LSL):
        return {"family": name, "knots": spec.diagonal.to_list()}
    return {"family": name}


def spec_from_dict(data: dict):
    """Inverse of :func:`spec_to_dict`; raises :class:`ConfigError` naming the missing parameter."""
    data = dict(data)
    family = str(data.pop("family", "")).lower()
    required = {
        "independence": (),
        "comonotone": (),
        "frechet": ("alpha", "beta"),
        "gaussian": ("rho",),
        "mo": ("alpha", "beta"),
        "jump": ("m",),
        "lsl": ("knots",),
    }
    if family not in required:
        raise ConfigError(f"unknown copula family {family!r}; expected one of {sorted(required)}")
    missing = [k for k in required[family] if data.get(k) is None]
    if missing:
        raise ConfigError(f"family {family!r} needs parameter(s): {', '.join(missing)}")
    if family == "independence":
        return Independence()
    if family == "comonotone":
        return Comonotone()
    if family == "frechet":
        return Frechet(float(data["alpha"]), float(data["beta"]))
    if family == "gaussian":
        return GaussianEqui(float(data["rho"]), int(data.get("d") or 1))
    if family == "mo":
        return MarshallOlkin(float(data["alpha"]), float(data["beta"]))
    if family == "jump":
        return Jump(int(data["m"]))
    return LSL(DiagonalSpec(data["knots"]))
