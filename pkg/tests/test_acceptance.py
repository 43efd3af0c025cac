"""Acceptance criteria, each run at its stated tolerance; one summary line per criterion."""

import math
import time

import numpy as np
import pytest

from ruelle import diagnostics as dg
from ruelle import potential as pt
from ruelle import shift as sh
from ruelle import suite
from ruelle import transfer as tr
from ruelle import zeta as zt
from acceptance_log import record
from oracles import TEST_MATRICES

CORPUS_SIZE = 20
SEED = 20240601


def corpus():
    """20 random complex tables of depth 1..3 (values in [-0.5, 0.5] + i[-0.5, 0.5]) per shift."""
    rng = np.random.default_rng(SEED)
    out = []
    for shift in (sh.full_shift(2), sh.golden_mean()):
        for k in range(CORPUS_SIZE):
            out.append(pt.TabulatedFunction.random(shift, 1 + k % 3, rng))
    return out


def test_criterion_1_finite_trace_formula():
    start = time.perf_counter()
    worst = 0.0
    for f in corpus():
        tm = tr.build_matrix(f)
        Z, _ = zt.orbit_sums(f, f.shift, 8)
        for q in range(1, 9):
            worst = max(worst, abs(tm.power_trace(q) - Z[q - 1]) / abs(Z[q - 1]))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-10 and elapsed < 10
    record(1, "finite trace formula", ok, f"max relative error {worst:.2e} (<= 1e-10), {elapsed:.2f} s (< 10 s)")
    assert ok


def test_criterion_2_determinant_equals_orbit_series():
    worst = 0.0
    for f in corpus():
        det = zt.zeta_coeffs_from_determinant(tr.build_matrix(f), 8)
        series = zt.zeta_series(f, f.shift, 8).coeffs
        worst = max(worst, float(np.abs(det - series).max()))
    ok = worst <= 1e-10
    record(2, "determinant vs orbit-series coefficients", ok, f"max |difference| {worst:.2e} (<= 1e-10) through degree 8")
    assert ok


def test_criterion_3_depth_stability():
    worst, mismatched = 0.0, 0
    for f in corpus():
        m = f.depth
        ref = tr.spectrum(tr.build_matrix(f))
        for d in range(max(m - 1, 1), m + 4):
            spec = tr.spectrum(tr.build_matrix(f, depth=d))
            if list(spec.multiplicities) != list(ref.multiplicities):
                mismatched += 1
                continue
            rel = np.abs(spec.eigenvalues - ref.eigenvalues) / np.abs(ref.eigenvalues)
            worst = max(worst, float(rel.max(initial=0.0)))
    ok = mismatched == 0 and worst <= 1e-8
    record(3, "depth stability", ok, f"{mismatched} multiplicity mismatches, max relative drift {worst:.2e} (<= 1e-8)")
    assert ok


def test_criterion_4_trace_formula_convergence():
    start = time.perf_counter()
    full2 = sh.full_shift(2)
    f = pt.GeometricPotential(0.5)
    details, ok = [], True
    for q in (2, 3):
        tc = zt.trace_formula_check(f, full2, q, range(2, 8), r=0.5)
        d = tc.defects
        monotone = all(b < a for a, b in zip(d[1:], d[2:]))
        slope_ok = tc.slope <= tc.envelope_log_ratio + 0.5
        ok &= monotone and d[-1] <= 1e-6 and slope_ok
        details.append(f"q={q}: delta_7={d[-1]:.1e}, monotone={monotone}, slope {tc.slope:.2f} "
                       f"<= {tc.envelope_log_ratio:.2f}+0.5")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 60
    record(4, "trace formula convergence", ok, "; ".join(details) + f"; {elapsed:.2f} s (< 60 s)")
    assert ok


def test_criterion_5_weierstrass_product():
    full2 = sh.full_shift(2)
    f = pt.GeometricPotential(0.5)
    k0 = zt.k0_bound(0.5, sh.topological_entropy(full2))[0]
    m = 8
    lead = tr.spectrum(tr.build_matrix(pt.project_Em(f, full2, m))).leading
    rng = np.random.default_rng(SEED)
    radius = 0.5 / abs(lead)
    zs = radius * np.sqrt(rng.random(20)) * np.exp(2j * np.pi * rng.random(20))
    rows, _, _ = zt.product_series_comparison(f, full2, m, 12, zs, k0)
    agree = sum(r.agrees for r in rows)
    p_rem = max(r.product_remainder for r in rows)
    s_rem = max(r.series_remainder for r in rows)
    ok = k0 == 0 and agree == 20 and p_rem < 1e-5 and s_rem < 1e-5
    record(5, "Weierstrass product vs orbit series", ok,
           f"k0={k0}, {agree}/20 points within remainders, max remainders {p_rem:.1e} / {s_rem:.1e} (< 1e-5)")
    assert ok


def test_criterion_6_inequality_suite():
    start = time.perf_counter()
    rng = np.random.default_rng(SEED)
    counts = {}
    violations = 0
    for shift in (sh.full_shift(2), sh.golden_mean()):
        proj = suite.projection_suite(shift, 100, rng)
        ly = suite.lasota_yorke_suite(shift, 100, rng)
        f = pt.GeometricPotential(0.5)
        theta = suite.default_theta(f)
        rem, _ = suite.remainder_suite(shift, f, theta, 50, rng)
        R = 1.25 * math.exp(sh.topological_entropy(shift))
        ms = [m for m in range(2, 7) if sh.word_count(shift, m - 1) <= R ** (m - 1)]
        cnt, C_alpha = suite.counting_suite(shift, f, theta, 1.0, R, ms, spectral_depth=8)
        for name, reps in (("projection", proj), ("lasota_yorke", ly), ("remainder", rem), ("counting", cnt)):
            counts[name] = counts.get(name, 0) + len(reps)
            violations += sum(not r.satisfied for r in reps)
    elapsed = time.perf_counter() - start
    ok = violations == 0 and elapsed < 120 and counts["counting"] > 0
    summary = ", ".join(f"{k} {v}" for k, v in counts.items())
    record(6, "inequality suite", ok, f"{violations} violations over {summary} reports, {elapsed:.2f} s (< 120 s)")
    assert ok


def test_criterion_7_cohomology_obstruction():
    golden = sh.golden_mean()
    wit = dg.cohomology_witness(golden)
    worst_zero, worst_bump = 0.0, math.inf
    for m in range(1, 5):
        for word in sh.enumerate_words(golden, m):
            phi = pt.TabulatedFunction.indicator(golden, tuple(word))
            worst_zero = max(worst_zero, abs(dg.cohomology_defect(phi, golden, m, 1e-10, wit)))
            for n in (1, 2, 4):
                bumped = dg.cohomology_defect(phi + dg.perturbation(golden, m, n, wit), golden, m, 1e-10, wit)
                worst_bump = min(worst_bump, bumped.real - (1 / n - 1e-10))
    ok = worst_zero <= 3e-10 and worst_bump >= 0 and not wit.violations(golden)
    record(7, "cohomology obstruction", ok,
           f"max basis defect {worst_zero:.1e} (<= 3e-10), min margin over 1/n - 1e-10 is {worst_bump:.1e} (>= 0)")
    assert ok


def test_criterion_8_exact_combinatorics():
    failures = []
    for name, rows in TEST_MATRICES.items():
        shift = sh.TransitionStructure.from_rows(rows)
        A = np.array(rows, dtype=np.int64)
        for q in range(1, 13):
            if sh.periodic_words(shift, q).shape[0] != int(np.trace(np.linalg.matrix_power(A, q))):
                failures.append(f"{name} Per_{q}")
        for m in range(1, 11):
            if sh.word_count(shift, m) != int(np.linalg.matrix_power(A, m - 1).sum()):
                failures.append(f"{name} words_{m}")
            if sh.enumerate_words(shift, m).shape[0] != sh.word_count(shift, m):
                failures.append(f"{name} enum_{m}")
    four = np.array(TEST_MATRICES["four"])
    ok = not failures and four.shape == (4, 4) and not four.all()
    record(8, "exact combinatorics", ok,
           f"{len(TEST_MATRICES)} matrices, q <= 12, m <= 10, {len(failures)} mismatches {failures[:3]}")
    assert ok


@pytest.mark.parametrize("name", sorted(TEST_MATRICES))
def test_criterion_8_matrices_are_aperiodic(name):
    assert sh.check_aperiodic(TEST_MATRICES[name]) >= 1
