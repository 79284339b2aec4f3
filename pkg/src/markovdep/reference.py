"""Reference values of phi and kappa for the copula families.

Closed forms are used where they are known; the Gaussian and the
``alpha = 1`` Marshall-Olkin curves are computed by adaptive quadrature of the
conditional band probability ``P(|V - V'| <= t | V = u)``; the Jump family's
``|V - V'|`` is discrete and is enumerated exactly; LSL and the remaining
Marshall-Olkin curves fall back to Monte Carlo over Markov-product samples.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import ndtr, ndtri, owens_t

from . import copulas as cop
from ._random import make_rng
from .errors import ConfigError, DomainError, NumericError
from .estimator import KAPPA, PHI, CurveSource, DependenceCurve, check_grid, default_grid

QUAD_TOL = 1e-8
QUAD_LIMIT = 200
DEFAULT_MC_SAMPLES = 10**6
DEFAULT_MC_SEED = 0


@dataclass(frozen=True)
class ReferenceValue:
    value: float
    method: str  # "closed_form", "quadrature" or "monte_carlo"
    tolerance: float | None = None
    samples: int | None = None
    seed: int | None = None

    def __float__(self):
        return float(self.value)


def _t(t):
    arr = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0) or np.any(arr > 1):
        raise DomainError(f"t must lie in [0, 1], got {t!r}")
    return arr


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


# ---------------------------------------------------------------------------
# Independence and Frechet
# ---------------------------------------------------------------------------


def phi_indep(t):
    t = _t(t)
    return _out(2 * t - t * t)


def kappa_indep(t):
    t = _t(t)
    return _out((1 - t) ** 3)


def frechet_phi(alpha, beta, t):
    c = cop.Frechet(alpha, beta)
    a, b, t = c.alpha, c.beta, _t(t)
    s = a * a + b * b
    return _out(s + 2 * (1 - s - a * b) * t - (1 - (a + b) ** 2) * t * t)


def frechet_kappa(alpha, beta, t):
    c = cop.Frechet(alpha, beta)
    a, b, t = c.alpha, c.beta, _t(t)
    s = a * a + b * b
    return _out(1 + 3 * (s - 1) * t + 3 * (1 - s - a * b) * t**2 - (1 - (a + b) ** 2) * t**3)


def frechet_xi(alpha, beta) -> float:
    c = cop.Frechet(alpha, beta)
    a, b = c.alpha, c.beta
    return a * a - a * b + b * b


# ---------------------------------------------------------------------------
# Gaussian
# ---------------------------------------------------------------------------


def gaussian_rho_star(rho, d) -> float:
    d = int(d)
    if d < 1 or not -1.0 / d < rho < 1.0:
        raise DomainError(f"need d >= 1 and rho in (-1/d, 1), got rho={rho}, d={d}")
    return d * rho * rho / (1 + (d - 1) * rho)


def gaussian_xi(rho, d) -> float:
    r = gaussian_rho_star(rho, d)
    return 3.0 / math.pi * math.asin((1.0 + r) / 2.0) - 0.5


def _quad(fn, a, b, points=None, what="integral"):
    pts = None
    if points:
        pts = sorted({p for p in points if a < p < b})
    value, abserr, *rest = integrate.quad(
        fn, a, b, epsabs=QUAD_TOL / 100, epsrel=QUAD_TOL / 100, limit=QUAD_LIMIT, points=pts or None, full_output=1
    )
    if abserr > QUAD_TOL:
        msg = rest[1] if len(rest) > 1 else "no message"
        raise NumericError(
            f"quadrature did not converge for {what}",
            {"value": value, "abserr": abserr, "interval": (a, b), "message": msg},
        )
    return value


def _band_probability(cdf, t, what):
    """``int_0^1 P(|u - V'| <= t | V = u) du`` for a conditional law with no atom off the diagonal."""

    def integrand(u):
        return cdf(min(u + t, 1.0), u) - cdf(max(u - t, 0.0), u)

    return min(1.0, max(0.0, _quad(integrand, 0.0, 1.0, points=[t, 1 - t], what=what)))


def _gauss_cdf(r):
    sd = math.sqrt(1.0 - r * r)

    def cdf(v, u):
        return float(ndtr((ndtri(v) - r * ndtri(u)) / sd))

    return cdf


@functools.lru_cache(maxsize=4096)
def _gauss_phi(r, t):
    if t >= 1.0:
        return 1.0
    if t <= 0.0 or r == 0.0:
        return 2 * t - t * t
    return _band_probability(_gauss_cdf(r), t, f"Gaussian phi(rho*={r}, t={t})")


def bvn_cdf(h, k, rho):
    """Standard bivariate normal distribution function via Owen's T (finite ``h``, ``k``)."""
    h, k = np.asarray(h, dtype=float), np.asarray(k, dtype=float)
    s = math.sqrt(1.0 - rho * rho)
    with np.errstate(divide="ignore", invalid="ignore"):
        ah = np.where(h != 0, (k - rho * h) / (h * s), np.copysign(np.inf, k - rho * h))
        ak = np.where(k != 0, (h - rho * k) / (k * s), np.copysign(np.inf, h - rho * k))
    beta = np.where((h * k < 0) | ((h * k == 0) & (h + k < 0)), 0.5, 0.0)
    val = 0.5 * ndtr(h) + 0.5 * ndtr(k) - owens_t(h, ah) - owens_t(k, ak) - beta
    # Both Owen arguments are undefined at the origin; use the orthant probability.
    return _out(np.where((h == 0) & (k == 0), 0.25 + math.asin(rho) / (2 * math.pi), val))


_SQRT2 = math.sqrt(2.0)


def _bvn_scalar(h, k, rho):
    # Scalar twin of bvn_cdf without array overhead; used inside quadrature loops.
    if h == 0 and k == 0:
        return 0.25 + math.asin(rho) / (2 * math.pi)
    s = math.sqrt(1.0 - rho * rho)
    ah = (k - rho * h) / (h * s) if h != 0 else math.copysign(math.inf, k - rho * h)
    ak = (h - rho * k) / (k * s) if k != 0 else math.copysign(math.inf, h - rho * k)
    beta = 0.5 if (h * k < 0 or (h * k == 0 and h + k < 0)) else 0.0
    phi_h = 0.5 * math.erfc(-h / _SQRT2)
    phi_k = 0.5 * math.erfc(-k / _SQRT2)
    return 0.5 * phi_h + 0.5 * phi_k - float(owens_t(h, ah)) - float(owens_t(k, ak)) - beta


@functools.lru_cache(maxsize=4096)
def _gauss_kappa(r, t):
    """``1 - 3 E[min(|V - V'|, t)]`` as one quadrature over ``V = u``.

    Given ``u``, ``int_0^v P(V' <= x | u) dx`` equals
    ``v - Phi2(Phi^-1(v), c; q)`` with ``c = r z_u / sqrt(2 - r^2)`` and
    ``q = 1 / sqrt(2 - r^2)``, so the conditional expectation of
    ``min(|u - V'|, t)`` has a closed form.
    """
    if t <= 0.0:
        return 1.0
    if r == 0.0:
        return (1 - t) ** 3
    scale = math.sqrt(2.0 - r * r)
    q = 1.0 / scale

    def antiderivative(v, c):
        if v <= 0.0:
            return 0.0
        if v >= 1.0:
            return 0.5 * math.erfc(c / _SQRT2)
        return v - _bvn_scalar(float(ndtri(v)), c, q)

    def inner(u):
        c = r * float(ndtri(u)) / scale
        lo, hi = max(u - t, 0.0), min(u + t, 1.0)
        return 2 * antiderivative(u, c) - antiderivative(lo, c) - antiderivative(hi, c) + hi - u

    return 1.0 - 3.0 * _quad(inner, 0.0, 1.0, points=[t, 1 - t], what=f"Gaussian kappa(rho*={r}, t={t})")


def gaussian_kappa(rho, d, t) -> ReferenceValue:
    r = gaussian_rho_star(rho, d)
    t = float(_t(t))
    if r == 0.0 or t == 0.0:
        return ReferenceValue(_gauss_kappa(r, t), "closed_form")
    return ReferenceValue(_gauss_kappa(r, t), "quadrature", tolerance=QUAD_TOL)


def gaussian_phi(rho, d, t) -> ReferenceValue:
    """``P(|Phi(Z1) - Phi(Z2)| <= t)`` for a standard bivariate normal pair with correlation ``rho*(d)``."""
    r = gaussian_rho_star(rho, d)
    t = float(_t(t))
    value = _gauss_phi(r, t)
    if r == 0.0 or t in (0.0, 1.0):
        return ReferenceValue(value, "closed_form")
    return ReferenceValue(value, "quadrature", tolerance=QUAD_TOL)


# ---------------------------------------------------------------------------
# Marshall-Olkin (alpha = 1) and Jump endpoints
# ---------------------------------------------------------------------------


def mo_phi0(beta) -> float:
    beta = cop._unit("beta", beta)
    return beta / (2 - beta)


def mo_xi(beta) -> float:
    beta = cop._unit("beta", beta)
    return 2 * beta / (3 - beta)


def jump_phi0(m) -> float:
    return 2.0 ** -cop.Jump(m).m


def jump_xi(m) -> float:
    return 4.0 ** -cop.Jump(m).m


def _mo_cdf(b):
    """Conditional distribution function of the symmetric copula ``MO(b, b)``."""

    def cdf(v, u):
        if v < u:
            return (1.0 - b) * u ** (-b) * v
        return v ** (1.0 - b)

    return cdf


@functools.lru_cache(maxsize=4096)
def _mo_phi(beta, t):
    if t >= 1.0:
        return 1.0
    if t <= 0.0:
        return beta / (2 - beta)
    if beta == 0.0:
        return 2 * t - t * t
    if beta == 1.0:
        return 1.0
    return _band_probability(_mo_cdf(beta), t, f"Marshall-Olkin phi(beta={beta}, t={t})")


def mo_phi(beta, t) -> ReferenceValue:
    """phi for ``MO(1, beta)``, whose Markov product is ``MO(beta, beta)``."""
    beta = cop._unit("beta", beta)
    t = float(_t(t))
    return ReferenceValue(_mo_phi(beta, t), "quadrature", tolerance=QUAD_TOL)


def jump_distance_law(m):
    """Atoms and probabilities of ``|V - V'|`` under the Jump copula's Markov product."""
    size = 2 ** cop.Jump(m).m
    k = np.arange(size)
    shift = k / size
    values = np.concatenate([shift, 1.0 - shift[1:]])
    probs = np.concatenate([(1.0 - shift) / size, shift[1:] / size])
    order = np.argsort(values, kind="stable")
    values, probs = values[order], probs[order]
    uniq, inverse = np.unique(values, return_inverse=True)
    return uniq, np.bincount(inverse, weights=probs)


# ---------------------------------------------------------------------------
# Discrete laws of |V - V'|: exact enumeration and Monte Carlo
# ---------------------------------------------------------------------------


def _discrete_phi(values, probs, t):
    cum = np.cumsum(probs)
    idx = np.searchsorted(values, t, side="right")
    return np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)


def _discrete_kappa(values, probs, t):
    # kappa(t) = 1 - 3 E[min(D, t)]
    cum_p = np.concatenate([[0.0], np.cumsum(probs)])
    cum_m = np.concatenate([[0.0], np.cumsum(values * probs)])
    idx = np.searchsorted(values, t, side="right")
    mean_min = cum_m[idx] + t * (cum_p[-1] - cum_p[idx])
    return 1.0 - 3.0 * mean_min


def jump_phi(m, t):
    values, probs = jump_distance_law(m)
    return _out(np.minimum(_discrete_phi(values, probs, _t(t)), 1.0))


def jump_kappa(m, t):
    values, probs = jump_distance_law(m)
    return _out(_discrete_kappa(values, probs, _t(t)))


# ---------------------------------------------------------------------------
# Lower semilinear copulas
# ---------------------------------------------------------------------------


def _segments(diag):
    """Per knot interval: left end a, right end b, slope s, intercept p (delta = p + s u)."""
    t, v, s = diag.t, diag.values, diag.slopes
    a, b = t[:-1], t[1:]
    return a, b, s, v[:-1] - s * a


def _log_ratio(a, b):
    with np.errstate(divide="ignore"):
        return np.where(a > 0, np.log(b / np.where(a > 0, a, 1.0)), 0.0)


def _inv_diff(a, b):
    with np.errstate(divide="ignore"):
        return np.where(a > 0, 1.0 / np.where(a > 0, a, 1.0) - 1.0 / b, 0.0)


def lsl_sing(diagonal) -> ReferenceValue:
    """Singular mass ``2 int delta(x)/x dx - 1`` evaluated exactly on each knot interval."""
    a, b, s, p = _segments(diagonal)
    # delta(0) = 0 forces p = 0 on the first interval, so the log term vanishes there.
    integral = np.sum(p * _log_ratio(a, b) + s * (b - a))
    return ReferenceValue(float(2 * integral - 1), "closed_form")


def lsl_phi0(diagonal) -> ReferenceValue:
    """Published value ``-1 + 2 int delta^2/u^2 du + int delta'^2 du`` (exact per interval)."""
    a, b, s, p = _segments(diagonal)
    ratio_sq = p * p * _inv_diff(a, b) + 2 * p * s * _log_ratio(a, b) + s * s * (b - a)
    deriv_sq = s * s * (b - a)
    return ReferenceValue(float(-1 + 2 * ratio_sq.sum() + deriv_sq.sum()), "closed_form")


def lsl_atom_phi0(diagonal) -> ReferenceValue:
    """``E[atom(U)^2]`` with conditional atom ``2 delta(u)/u - delta'(u)`` at ``v = u``.

    This is ``P(V = V')`` computed directly from the conditional law used by
    the sampler, as an independent check of :func:`lsl_phi0`.
    """
    a, b, s, p = _segments(diagonal)
    # (2p/u + s)^2 integrated over [a, b]
    val = 4 * p * p * _inv_diff(a, b) + 4 * p * s * _log_ratio(a, b) + s * s * (b - a)
    return ReferenceValue(float(val.sum()), "closed_form")


def lsl_kendall_tau(diagonal, samples: int = DEFAULT_MC_SAMPLES, seed: int = DEFAULT_MC_SEED) -> ReferenceValue:
    """Kendall's tau of ``C_delta`` from ``samples`` independent pairs of draws."""
    spec = cop.LSL(diagonal)
    rng = make_rng(seed)
    first = cop.sample_joint(spec, samples, rng)
    second = cop.sample_joint(spec, samples, rng)
    sign = np.sign((first.x[:, 0] - second.x[:, 0]) * (first.y - second.y))
    return ReferenceValue(float(sign.mean()), "monte_carlo", samples=samples, seed=seed)


def lsl_xi(diagonal, samples: int = DEFAULT_MC_SAMPLES, seed: int = DEFAULT_MC_SEED) -> ReferenceValue:
    """Published ``2 tau^2 / (1 + tau)`` with Kendall's tau estimated by Monte Carlo."""
    tau = lsl_kendall_tau(diagonal, samples, seed).value
    return ReferenceValue(2 * tau * tau / (1 + tau), "monte_carlo", samples=samples, seed=seed)


def lsl_consistency_report(diagonal, samples: int = 200_000, seed: int = DEFAULT_MC_SEED, tau_samples: int | None = None) -> dict:
    """Compare the published LSL formulas with Monte Carlo over the Markov product.

    Each entry holds the formula value, the Monte Carlo value, their absolute
    difference, a tolerance of five standard errors (at least 1e-3), and a
    ``consistent`` flag.
    """
    spec = cop.LSL(diagonal)
    root_n = math.sqrt(samples)
    markov = cop.sample_markov_product(spec, samples, np.random.SeedSequence(seed, spawn_key=(1,)), "conditional")
    joint = cop.sample_joint(spec, samples, np.random.SeedSequence(seed, spawn_key=(2,)))
    dist = markov.distances
    report = {}

    def entry(name, formula, mc, se):
        tol = max(5 * se, 1e-3)
        diff = abs(formula - mc)
        report[name] = {
            "formula": float(formula),
            "monte_carlo": float(mc),
            "abs_diff": float(diff),
            "tolerance": float(tol),
            "consistent": bool(diff <= tol),
        }

    x = np.linspace(0.0, 1.0, 101)
    star = cop.delta_star(diagonal)(x)
    both = np.maximum(markov.v, markov.w)
    mc_diag = np.searchsorted(np.sort(both), x, side="right") / samples
    worst = int(np.argmax(np.abs(star - mc_diag)))
    entry("delta_star_sup", star[worst], mc_diag[worst], 0.5 / root_n)
    report["delta_star_sup"]["at"] = float(x[worst])

    p0 = float(np.mean(dist == 0.0))
    entry("phi0", lsl_phi0(diagonal).value, p0, math.sqrt(max(p0 * (1 - p0), 0.25 / samples) / samples))
    report["phi0"]["atom_integral"] = lsl_atom_phi0(diagonal).value

    ps = float(np.mean(joint.y == joint.x[:, 0]))
    entry("sing", lsl_sing(diagonal).value, ps, math.sqrt(max(ps * (1 - ps), 0.25 / samples) / samples))

    xi_mc = 3 * np.mean(1 - dist) - 2
    tau_n = tau_samples or samples
    entry("xi", lsl_xi(diagonal, tau_n, seed).value, xi_mc, 3 * np.std(dist) / root_n + 4 / math.sqrt(tau_n))
    report["samples"] = samples
    report["seed"] = seed
    report["knots"] = diagonal.to_list()
    return report


def copula_cdf(spec, u, v):
    """``C(u, v) = P(U <= u, V <= v)`` for a bivariate spec, ``U`` the predictor.

    Gaussian specs must have ``d = 1``.  Arrays broadcast.
    """
    u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    if np.any((u < 0) | (u > 1) | (v < 0) | (v > 1)):
        raise DomainError("copula arguments must lie in [0, 1]")
    if isinstance(spec, cop.Independence):
        return _out(u * v)
    if isinstance(spec, cop.Comonotone):
        return _out(np.minimum(u, v))
    if isinstance(spec, cop.Frechet):
        w = np.maximum(u + v - 1.0, 0.0)
        return _out(spec.alpha * np.minimum(u, v) + spec.beta * w + (1 - spec.alpha - spec.beta) * u * v)
    if isinstance(spec, cop.GaussianEqui):
        if spec.d != 1:
            raise ConfigError("copula_cdf needs a bivariate spec (d = 1)")
        inner = (u > 0) & (u < 1) & (v > 0) & (v < 1)
        out = np.where(u >= 1, v, np.where(v >= 1, u, 0.0))
        h = ndtri(np.where(inner, u, 0.5))
        k = ndtri(np.where(inner, v, 0.5))
        return _out(np.where(inner, bvn_cdf(h, k, spec.rho), out))
    if isinstance(spec, cop.MarshallOlkin):
        a, b = spec.alpha, spec.beta
        return _out(np.minimum(u ** (1 - a) * v, u * v ** (1 - b)))
    if isinstance(spec, cop.Jump):
        big_m = 2**spec.m
        total = np.zeros(u.shape)
        for k in range(big_m):
            s = k / big_m
            # U + s when U < 1 - s, otherwise U - (1 - s).
            total += np.maximum(0.0, np.minimum(np.minimum(u, v - s), 1 - s))
            total += np.maximum(0.0, np.minimum(u, v + 1 - s) - (1 - s))
        return _out(total / big_m)
    if isinstance(spec, cop.LSL):
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.where(hi > 0, lo * spec.diagonal(hi) / np.where(hi > 0, hi, 1.0), 0.0)
        return _out(val)
    raise ConfigError(f"no copula function for {spec!r}")  # pragma: no cover


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------


def _cumulative_kappa(phi_scalar, grid):
    """``1 - 3 int_0^t (1 - phi(s)) ds`` at each grid node, integrating segment by segment."""
    out = np.empty(len(grid))
    acc, prev = 0.0, 0.0
    for i, t in enumerate(grid):
        if t > prev:
            acc += _quad(lambda s: 1.0 - phi_scalar(s), prev, t, what="kappa segment")
            prev = t
        out[i] = 1.0 - 3.0 * acc
    return out


def markov_distances(spec, samples: int, seed) -> np.ndarray:
    """Sorted ``|V - V'|`` from Markov-product samples."""
    return np.sort(cop.sample_markov_product(spec, samples, seed).distances)


def _mc_curve(spec, kind, grid, samples, seed):
    dist = markov_distances(spec, samples, seed)
    probs = np.full(len(dist), 1.0 / len(dist))
    if kind == PHI:
        values = np.searchsorted(dist, grid, side="right") / len(dist)
    else:
        values = _discrete_kappa(dist, probs, grid)
    return DependenceCurve(grid, values, kind, CurveSource("monte_carlo", samples=samples, seed=seed))


def reference_curve(spec, kind: str, grid=None, mc_samples: int = DEFAULT_MC_SAMPLES, seed: int = DEFAULT_MC_SEED) -> DependenceCurve:
    """Reference phi or kappa curve of ``spec`` on ``grid``.

    The curve's ``source`` records whether it is analytic, obtained by
    quadrature, or estimated by Monte Carlo (with sample count and seed).
    """
    grid = default_grid() if grid is None else check_grid(grid)
    if kind not in (PHI, KAPPA):
        raise ConfigError(f"curve kind must be {PHI!r} or {KAPPA!r}")
    if not isinstance(spec, cop.FAMILIES):
        raise ConfigError(f"not a copula specification: {spec!r}")

    def analytic(values):
        return DependenceCurve(grid, values, kind, CurveSource("analytic"))

    if isinstance(spec, cop.MarshallOlkin):
        low = min(spec.alpha, spec.beta)
        if low == 0.0:
            spec = cop.Independence()
        elif low == 1.0:
            spec = cop.Comonotone()
    if isinstance(spec, cop.Independence):
        return analytic(phi_indep(grid) if kind == PHI else kappa_indep(grid))
    if isinstance(spec, cop.Comonotone):
        return analytic(np.ones_like(grid))
    if isinstance(spec, cop.Frechet):
        fn = frechet_phi if kind == PHI else frechet_kappa
        return analytic(fn(spec.alpha, spec.beta, grid))
    if isinstance(spec, cop.Jump):
        fn = jump_phi if kind == PHI else jump_kappa
        return analytic(np.atleast_1d(fn(spec.m, grid)))

    if isinstance(spec, cop.GaussianEqui):
        r = spec.rho_star
        fn = _gauss_phi if kind == PHI else _gauss_kappa
        values = np.array([fn(r, float(t)) for t in grid])
        return DependenceCurve(grid, values, kind, CurveSource("quadrature", tolerance=QUAD_TOL))
    if isinstance(spec, cop.MarshallOlkin) and spec.alpha == 1.0:
        phi_scalar = functools.partial(_mo_phi, spec.beta)
    else:
        return _mc_curve(spec, kind, grid, mc_samples, seed)

    if kind == PHI:
        values = np.array([phi_scalar(float(t)) for t in grid])
    else:
        values = _cumulative_kappa(phi_scalar, grid)
    return DependenceCurve(grid, values, kind, CurveSource("quadrature", tolerance=QUAD_TOL))
