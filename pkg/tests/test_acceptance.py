"""Acceptance criteria, one test per criterion.

Each test prints a single ``criterion N: PASS|FAIL ...`` line.  Criterion 7
is split per family; its Jump(3) case is an expected failure (strict), with
the reason given next to it.  Criterion 11 needs the external wine CSV: set
``WINE_CSV`` to its path or place it at ``data/wine.csv``; otherwise it skips.
"""

from __future__ import annotations

import functools
import json
import math
import os
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from markovdep import cli, dataio
from markovdep import copulas as cop
from markovdep import reference as ref
from markovdep.analysis import analyze
from markovdep.estimator import (
    KAPPA,
    PHI,
    NormalizedGaps,
    default_grid,
    estimate_gaps,
    kappa_curve,
    kappa_hat,
    near_zero_threshold,
    phi_curve,
    phi_hat,
    xi_hat,
)
from markovdep.ranks import Dataset, TieRule
from markovdep.study import StudyConfig, run_study

from oracles import empirical_cdf_sup, step_integral_kappa_grid

GRID = default_grid()
ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        status = ok if isinstance(ok, str) else ("PASS" if ok else "FAIL")
        with capsys.disabled():
            print(f"\ncriterion {number}: {status}  {detail}")

    return emit


# ---------------------------------------------------------------------------
# 1. equal-xi triple
# ---------------------------------------------------------------------------

EQUAL_XI = {
    "gaussian": cop.GaussianEqui(math.sqrt(math.sqrt(2) - 1), 1),
    "marshall-olkin": cop.MarshallOlkin(1.0, 1 / 3),
    "jump": cop.Jump(1),
}


@functools.lru_cache(maxsize=None)
def equal_xi_gaps():
    return {name: estimate_gaps(cop.sample_joint(spec, 10_000, 101 + i)) for i, (name, spec) in enumerate(EQUAL_XI.items())}


def test_criterion_01_equal_xi_triple(report):
    start = time.perf_counter()
    equal_xi_gaps.cache_clear()
    xis = {name: xi_hat(g) for name, g in equal_xi_gaps().items()}
    elapsed = time.perf_counter() - start
    ok = all(abs(v - 0.25) <= 0.03 for v in xis.values()) and elapsed <= 30
    shown = ", ".join(f"{k}={v:.4f}" for k, v in xis.items())
    report(1, ok, f"xi_hat {shown} (target 0.25 +- 0.03), {elapsed:.1f}s")
    assert ok


# ---------------------------------------------------------------------------
# 2. closed-form endpoints
# ---------------------------------------------------------------------------


def _gaussian_xi_by_atan(rho):
    # arcsin(x) = atan(x / sqrt(1 - x^2)); rho* = rho^2 for d = 1
    x = (1 + rho * rho) / 2
    return 3 / math.pi * math.atan2(x, math.sqrt(1 - x * x)) - 0.5


def test_criterion_02_closed_form_endpoints(report):
    third = Fraction(1, 3)
    half = Fraction(1, 2)
    checks = {
        "frechet_xi(0.5,0.5)": (ref.frechet_xi(0.5, 0.5), half * half - half * half + half * half),
        "mo_phi0(1/3)": (ref.mo_phi0(1 / 3), third / (2 - third)),
        "mo_xi(1/3)": (ref.mo_xi(1 / 3), 2 * third / (3 - third)),
        "jump_phi0(1)": (ref.jump_phi0(1), Fraction(1, 2**1)),
        "jump_xi(3)": (ref.jump_xi(3), Fraction(1, 2 ** (2 * 3))),
        "gaussian_xi": (ref.gaussian_xi(math.sqrt(math.sqrt(2) - 1), 1), Fraction(1, 4)),
    }
    rho = math.sqrt(math.sqrt(2) - 1)
    errs = {k: abs(got - float(exact)) for k, (got, exact) in checks.items()}
    errs["gaussian_xi (atan form)"] = abs(_gaussian_xi_by_atan(rho) - 0.25)
    expected = {"frechet_xi(0.5,0.5)": 0.25, "mo_phi0(1/3)": 0.2, "mo_xi(1/3)": 0.25, "jump_phi0(1)": 0.5}
    for k, v in expected.items():
        errs[k + " literal"] = abs(checks[k][0] - v)
    worst = max(errs, key=errs.get)
    ok = errs[worst] <= 1e-12
    report(2, ok, f"max error {errs[worst]:.2e} ({worst}), tolerance 1e-12")
    assert ok


# ---------------------------------------------------------------------------
# 3. independence curve
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=None)
def independence_curves():
    gaps = estimate_gaps(cop.sample_joint(cop.Frechet(0.0, 0.0), 5000, 303))
    return phi_curve(gaps, GRID), kappa_curve(gaps, GRID)


def test_criterion_03_independence_curve(report):
    phi, kappa = independence_curves()
    d_kappa = float(np.max(np.abs(kappa.values - (1 - GRID) ** 3)))
    d_phi = float(np.max(np.abs(phi.values - (2 * GRID - GRID**2))))
    ok = d_kappa <= 0.05 and d_phi <= 0.05
    report(3, ok, f"sup|kappa_hat-(1-t)^3|={d_kappa:.4f}, sup|phi_hat-(2t-t^2)|={d_phi:.4f} (<= 0.05)")
    assert ok


# ---------------------------------------------------------------------------
# 4. perfect dependence
# ---------------------------------------------------------------------------

MONOTONE_CASES = [
    (10, np.exp),
    (11, lambda x: -x),
    (57, lambda x: x**3),
    (1000, np.arctan),
    (5001, lambda x: np.exp(-x)),
    (20_000, lambda x: 2 * x + 1),
]


@functools.lru_cache(maxsize=None)
def monotone_gaps():
    out = []
    gen = np.random.default_rng(404)
    for n, f in MONOTONE_CASES:
        x = gen.normal(size=n)
        out.append((n, estimate_gaps(Dataset(f(x), x))))
    return out


def test_criterion_04_perfect_dependence(report):
    bad = []
    for n, gaps in monotone_gaps():
        if phi_hat(gaps, near_zero_threshold(n)) != 1.0:
            bad.append(f"phi_hat(b_n) != 1 at n={n}")
        if not xi_hat(gaps) >= 1 - 3 / (n + 1):
            bad.append(f"kappa_hat(1) < 1 - 3/(n+1) at n={n}")
    ok = not bad
    sizes = [n for n, _ in MONOTONE_CASES]
    report(4, ok, f"n in {sizes}: " + ("phi_hat(b_n) = 1 and kappa_hat(1) >= 1 - 3/(n+1)" if ok else "; ".join(bad)))
    assert ok


# ---------------------------------------------------------------------------
# 5. hinge formula equals exact integration
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=None)
def random_gap_sets():
    gen = np.random.default_rng(505)
    sets = []
    for i in range(1000):
        n = int(gen.integers(1, 201))
        if i % 2 == 0:
            num = gen.integers(1, n + 1, size=n)  # rank-lattice gaps
            sets.append(NormalizedGaps(num / (n + 1), num, n + 1))
        else:
            sets.append(NormalizedGaps(gen.random(n)))
    return sets


def test_criterion_05_hinge_equals_step_integral(report):
    worst = 0.0
    for gaps in random_gap_sets():
        exact = np.array([float(v) for v in step_integral_kappa_grid(gaps.gaps, GRID)])
        worst = max(worst, float(np.max(np.abs(kappa_hat(gaps, GRID) - exact))))
    ok = worst <= 1e-10
    report(5, ok, f"1000 gap sets x 101 points, max |hinge - exact integral| = {worst:.2e} (<= 1e-10)")
    assert ok


# ---------------------------------------------------------------------------
# 6. shape invariants on every curve from criteria 1-5
# ---------------------------------------------------------------------------


def criteria_curves():
    curves = []
    for name, gaps in equal_xi_gaps().items():
        curves += [(f"c1 {name} est", phi_curve(gaps, GRID)), (f"c1 {name} est", kappa_curve(gaps, GRID))]
        for kind in (PHI, KAPPA):
            curves.append((f"c1 {name} ref", ref.reference_curve(EQUAL_XI[name], kind, GRID)))
    phi, kappa = independence_curves()
    curves += [("c3 est", phi), ("c3 est", kappa)]
    curves += [("c3 ref", ref.reference_curve(cop.Independence(), k, GRID)) for k in (PHI, KAPPA)]
    for n, gaps in monotone_gaps():
        curves += [(f"c4 n={n}", phi_curve(gaps, GRID)), (f"c4 n={n}", kappa_curve(gaps, GRID))]
    for i, gaps in enumerate(random_gap_sets()):
        curves += [(f"c5 set {i}", phi_curve(gaps, GRID)), (f"c5 set {i}", kappa_curve(gaps, GRID))]
    return curves


def test_criterion_06_shape_invariants(report):
    curves = criteria_curves()
    bad = [(label, c.kind, c.shape_violations(1e-12)) for label, c in curves]
    bad = [b for b in bad if b[2]]
    ok = not bad
    detail = f"{len(curves)} curves checked" + ("" if ok else f"; violations: {bad[:5]}")
    report(6, ok, detail)
    assert ok


# ---------------------------------------------------------------------------
# 7. two-path Markov-product agreement
# ---------------------------------------------------------------------------

TWO_PATH = [
    ("frechet(0.5,0.5)", cop.Frechet(0.5, 0.5)),
    ("gaussian(sqrt .5, d=1)", cop.GaussianEqui(math.sqrt(0.5), 1)),
    ("gaussian(sqrt .5, d=5)", cop.GaussianEqui(math.sqrt(0.5), 5)),
    ("mo(1,0.2)", cop.MarshallOlkin(1.0, 0.2)),
    ("jump(3)", cop.Jump(3)),
]
TWO_PATH_MASK = GRID >= 0.02


@functools.lru_cache(maxsize=None)
def two_path_curves(index):
    _, spec = TWO_PATH[index]
    dist = np.sort(cop.sample_markov_product(spec, 100_000, 700 + index).distances)
    markov_phi = np.searchsorted(dist, GRID, side="right") / len(dist)
    markov_kappa = kappa_hat(dist, GRID)
    gaps = estimate_gaps(cop.sample_joint(spec, 10_000, 750 + index))
    return markov_phi, markov_kappa, phi_hat(gaps, GRID), kappa_hat(gaps, GRID)


# phi of Jump(3) jumps at every multiple of 1/8 and the 101-point grid contains
# 0.25, 0.5 and 0.75.  At a jump point the rank estimator tends to the midpoint
# of the jump (about 0.09 here), so a sup distance of 0.05 is out of reach.
JUMP_XFAIL = pytest.mark.xfail(
    strict=True,
    reason="phi of Jump(3) is discontinuous at grid points; the estimator is only consistent at continuity points",
)


@pytest.mark.parametrize(
    "index",
    [pytest.param(i, id=name, marks=JUMP_XFAIL if name == "jump(3)" else ()) for i, (name, _) in enumerate(TWO_PATH)],
)
def test_criterion_07_two_path_agreement(index, report):
    start = time.perf_counter()
    markov_phi, _, est_phi, _ = two_path_curves(index)
    sup = float(np.max(np.abs(markov_phi - est_phi)[TWO_PATH_MASK]))
    elapsed = time.perf_counter() - start
    ok = sup <= 0.05
    report(f"7 [{TWO_PATH[index][0]}]", ok, f"sup_(t>=0.02) |phi_markov - phi_hat| = {sup:.4f} (<= 0.05), {elapsed:.1f}s")
    assert ok


def test_criterion_07_jump_away_from_discontinuities():
    # Supplementary to the strict check above: away from the jumps the two paths
    # agree, and the integrated curve kappa (continuous) agrees everywhere.
    index = [name for name, _ in TWO_PATH].index("jump(3)")
    markov_phi, markov_kappa, est_phi, est_kappa = two_path_curves(index)
    jumps = np.arange(1, 8) / 8
    far = np.min(np.abs(GRID[:, None] - jumps[None, :]), axis=1) > 0.015
    assert np.max(np.abs(markov_phi - est_phi)[TWO_PATH_MASK & far]) <= 0.05
    assert np.max(np.abs(markov_kappa - est_kappa)) <= 0.05


def test_criterion_07_runtime():
    start = time.perf_counter()
    for i in range(len(TWO_PATH)):
        two_path_curves.__wrapped__(i)
    assert time.perf_counter() - start <= 120


# ---------------------------------------------------------------------------
# 8. desk-scale convergence study
# ---------------------------------------------------------------------------


def test_criterion_08_convergence_study(report):
    start = time.perf_counter()
    config = StudyConfig(cop.GaussianEqui(0.5, 1), sample_sizes=(100, 500, 2000), repetitions=100, master_seed=808)
    result = run_study(config)
    elapsed = time.perf_counter() - start
    med = {kind: [result.median(kind, n) for n in config.sample_sizes] for kind in (PHI, KAPPA)}
    decreasing = all(m[0] > m[1] > m[2] for m in med.values())
    kappa_smaller = all(k < p for k, p in zip(med[KAPPA], med[PHI]))
    ok = decreasing and kappa_smaller and elapsed <= 300
    fmt = lambda v: "[" + ", ".join(f"{x:.4f}" for x in v) + "]"  # noqa: E731
    report(8, ok, f"median d_G phi {fmt(med[PHI])}, kappa {fmt(med[KAPPA])} at n=100/500/2000, {elapsed:.1f}s")
    assert ok


# ---------------------------------------------------------------------------
# 9. identity check through the command line
# ---------------------------------------------------------------------------

IDENTITY_FAMILIES = [
    ["independence"],
    ["comonotone"],
    ["frechet", "--alpha", "0.5", "--beta", "0.5"],
    ["gaussian", "--rho", str(math.sqrt(0.5)), "--d", "5"],
    ["mo", "--alpha", "1", "--beta", "0.2"],
    ["mo", "--alpha", "0.4", "--beta", "0.7"],
    ["jump", "--m", "3"],
    ["lsl", "--knots", "0:0,0.5:0.35,1:1"],
]


def test_criterion_09_identity(report, capsys):
    diffs = {}
    for i, args in enumerate(IDENTITY_FAMILIES):
        code = cli.main(["check-identity", *args, "-n", "100000", "--seed", str(900 + i)])
        out = capsys.readouterr().out
        assert code == 0
        diffs[" ".join(args[:1] + args[2:3])] = abs(json.loads(out)["diff"])
    worst = max(diffs, key=diffs.get)
    ok = diffs[worst] <= 0.01
    report(9, ok, f"{len(diffs)} families, max |lhs - rhs| = {diffs[worst]:.4f} ({worst}) (<= 0.01)")
    assert ok


# ---------------------------------------------------------------------------
# 10. Gaussian monotonicity in d
# ---------------------------------------------------------------------------


def test_criterion_10_gaussian_dimension_monotone(report):
    r = math.sqrt(0.5)
    ts = [i / 20 for i in range(1, 20)]
    margins = [ref.gaussian_phi(r, 5, t).value - ref.gaussian_phi(r, 1, t).value for t in ts]
    ok = min(margins) >= -1e-8
    report(10, ok, f"19 points, min phi_d5 - phi_d1 = {min(margins):.3e} (>= -1e-8)")
    assert ok


# ---------------------------------------------------------------------------
# 11. wine data (optional)
# ---------------------------------------------------------------------------


def _wine_path():
    candidates = [os.environ.get("WINE_CSV"), ROOT / "data" / "wine.csv"]
    for c in candidates:
        if c and Path(c).is_file():
            return Path(c)
    return None


def _find_column(header, wanted):
    key = lambda s: s.strip().lower().replace("_", " ")  # noqa: E731
    for name in header:
        if key(name) == key(wanted):
            return name
    raise KeyError(wanted)


def test_criterion_11_wine(report):
    path = _wine_path()
    if path is None:
        report(11, "SKIP", "no wine CSV supplied (set WINE_CSV)")
        pytest.skip("wine CSV not supplied")
    with open(path, encoding="utf-8-sig") as fh:
        header = fh.readline().strip().split(",")
    y_col = _find_column(header, "sulphates")
    x_col = _find_column(header, "total_sulfur_dioxide")
    data = dataio.load_csv(path, y_col, [x_col])
    result = analyze(data, TieRule.random(0))
    ok = 0.40 <= result.xi_hat <= 0.46 and 0.07 <= result.phi_at_bn <= 0.11
    report(11, ok, f"n={data.n}, kappa_hat(1)={result.xi_hat:.4f} in [0.40, 0.46], phi_hat(b_n)={result.phi_at_bn:.4f} in [0.07, 0.11]")
    assert ok


# ---------------------------------------------------------------------------
# 12. LSL sampler and consistency report
# ---------------------------------------------------------------------------

LSL_DIAGONALS = {
    "two-piece": cop.DiagonalSpec([(0, 0), (0.5, 0.35), (1, 1)]),
    "three-piece": cop.DiagonalSpec([(0, 0), (0.3, 0.15), (0.7, 0.55), (1, 1)]),
}


def test_criterion_12_lsl(report):
    ks = {}
    for i, (name, diag) in enumerate(LSL_DIAGONALS.items()):
        spec = cop.LSL(diag)
        data = cop.sample_joint(spec, 100_000, 1200 + i)
        _, bound = empirical_cdf_sup(data.x[:, 0], data.y, lambda u, v: ref.copula_cdf(spec, u, v))
        ks[name] = bound
    reports = {name: ref.lsl_consistency_report(d, samples=100_000, tau_samples=200_000) for name, d in LSL_DIAGONALS.items()}
    ident = ref.lsl_consistency_report(cop.DiagonalSpec.identity(), samples=100_000, tau_samples=100_000)
    flagged = not ident["delta_star_sup"]["consistent"] and not ident["phi0"]["consistent"]
    ok = all(v <= 0.02 for v in ks.values()) and flagged
    shown = ", ".join(f"{k}={v:.4f}" for k, v in ks.items())
    status = {n: {k: r[k]["consistent"] for k in ("delta_star_sup", "phi0", "sing", "xi")} for n, r in reports.items()}
    report(12, ok, f"KS upper bounds {shown} (<= 0.02); identity flagged inconsistent: {flagged}; formula checks {status}")
    assert ok
