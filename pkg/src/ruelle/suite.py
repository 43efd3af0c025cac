"""Batches of inequality checks on random tabulated data, shared by the CLI and the tests."""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from . import diagnostics as dg
from . import shift as sh
from .potential import (ConstantSet, GeometricPotential, Potential, TabulatedFunction, ThetaProfile,
                        closed_form_constants, constants_for, project_Em, theta_of)
from .report import BoundReport
from .shift import MarkovMeasure, TransitionStructure
from .transfer import build_matrix, lasota_yorke_check, spectrum


def apply_overrides(c: ConstantSet, overrides: dict | None) -> ConstantSet:
    """Scale named constants, e.g. ``{"C2_scale": 0.5}``; used to exercise failure paths."""
    if not overrides:
        return c
    changes = {}
    for key, factor in overrides.items():
        name = key.removesuffix("_scale")
        if name not in ("b1", "b2", "C1", "C2", "C3", "C4") or not key.endswith("_scale"):
            raise ValueError(f"unknown override {key!r}")
        value = getattr(c, name)
        if value is not None:
            changes[name] = value * float(factor)
    return dataclasses.replace(c, **changes)


def constant_reports(used: ConstantSet) -> list:
    """Each constant in use must dominate its closed form recomputed from (N, C, b1, b2)."""
    closed = closed_form_constants(used.N, used.C, used.b1, used.b2, used.D, used.r)
    out = []
    for name in ("C1", "C2", "C3", "C4"):
        v = getattr(closed, name)
        if v is None:
            continue
        out.append(BoundReport(f"constant_{name}", v, getattr(used, name), {}, kind="closed-form"))
    return out


def _random_depth_pair(rng, depths):
    depth = int(rng.choice(depths))
    m = int(rng.integers(1, depth)) if depth > 1 else 1
    return depth, m


def projection_suite(shift: TransitionStructure, count: int, rng: np.random.Generator,
                     theta: float = 0.5, theta_p: float = 0.75, depths=(2, 3, 4, 5),
                     mu: MarkovMeasure | None = None) -> list:
    reports = []
    for s in range(count):
        depth, m = _random_depth_pair(rng, depths)
        phi = TabulatedFunction.random(shift, depth, rng, real=bool(s % 2))
        for rep in dg.projection_checks(phi, m, theta, theta_p, mu):
            reports.append(dataclasses.replace(rep, parameters={**rep.parameters, "sample": s}))
    return reports


def lasota_yorke_suite(shift: TransitionStructure, count: int, rng: np.random.Generator,
                       f: Potential | None = None, f_depths=(1, 2, 3), phi_depths=(1, 2, 3, 4, 5),
                       ks=(1, 2, 3, 4)) -> list:
    reports = []
    for s in range(count):
        ff = f if f is not None else TabulatedFunction.random(shift, int(rng.choice(f_depths)), rng)
        phi = TabulatedFunction.random(shift, int(rng.choice(phi_depths)), rng)
        k = int(rng.choice(ks))
        rep = lasota_yorke_check(ff, phi, k, shift)
        reports.append(dataclasses.replace(rep, parameters={**rep.parameters, "sample": s}))
    return reports


def remainder_suite(shift: TransitionStructure, f: Potential, theta: ThetaProfile, count: int,
                    rng: np.random.Generator, m_values=(1, 2, 3, 4), g_depth: int = 5,
                    phi_depths=(2, 3, 4, 5), mu: MarkovMeasure | None = None,
                    overrides: dict | None = None) -> tuple:
    """Finite-rank remainder ratios for g = E_{g_depth} f against C2 theta_{m+1} (and C4 r^(2m))."""
    g = f if isinstance(f, TabulatedFunction) else project_Em(f, shift, g_depth, mu)
    c = apply_overrides(constants_for(g, theta, shift), overrides)
    reports = []
    for s in range(count):
        phi = TabulatedFunction.random(shift, int(rng.choice(phi_depths)), rng)
        m = int(rng.choice(m_values))
        rep = dg.finite_rank_remainder_check(g, phi, theta, c, m, mu)
        reports.append(dataclasses.replace(rep, parameters={**rep.parameters, "sample": s}))
        if c.C4 is not None and m >= 2 and c.D * c.r ** (m + 1) <= 1:
            rep = dg.finite_rank_remainder_check(g, phi, theta, c, m, mu, sharp=True)
            reports.append(dataclasses.replace(rep, parameters={**rep.parameters, "sample": s}))
    return reports, c


def counting_suite(shift: TransitionStructure, f: Potential, theta: ThetaProfile, alpha: float, R: float,
                   m_values, spectral_depth: int = 6, C_alpha: float | None = None,
                   mu: MarkovMeasure | None = None, overrides: dict | None = None) -> tuple:
    """Eigenvalue counts of E_{spectral_depth} f; C(alpha) is calibrated on the zero potential when absent."""
    m_values = list(m_values)
    if C_alpha is None:
        zero = TabulatedFunction.constant(shift, 0.0, 0)
        c0 = constants_for(zero, theta, shift)
        spec0 = spectrum(build_matrix(zero))
        C_alpha = dg.calibrate_c_alpha(spec0, theta, c0, alpha, R, m_values, shift)
    fm = f if isinstance(f, TabulatedFunction) else project_Em(f, shift, spectral_depth, mu)
    c = apply_overrides(constants_for(f, theta, shift), overrides)
    spec = spectrum(build_matrix(fm))
    return dg.counting_check(spec, theta, c, alpha, R, C_alpha, m_values, shift), C_alpha


def embedding_suite(shift: TransitionStructure, count: int, rng: np.random.Generator, theta: float,
                    theta_p: float, m_values=(1, 2, 3), depths=(2, 3, 4, 5)) -> list:
    reports = []
    for s in range(count):
        phi = TabulatedFunction.random(shift, int(rng.choice(depths)), rng)
        m = int(rng.choice(m_values))
        rep = dg.embedding_check(phi, theta, theta_p, m)
        reports.append(dataclasses.replace(rep, parameters={**rep.parameters, "sample": s}))
    info = dg.embedding_bound(theta, theta_p, 1, shift.n)
    reports.append(BoundReport("embedding_summability", shift.n * theta / theta_p, 1.0 - 1e-12,
                               {"tail": info["tail"]}, kind="threshold"))
    return reports


def cohomology_suite(shift: TransitionStructure, f: Potential, m_values, rng: np.random.Generator,
                     tol: float = 1e-10, ns=(1, 2, 4)) -> list:
    """Zero defect on random depth-m tables; an exact 1/n shift under the cylinder perturbation."""
    wit = dg.cohomology_witness(shift)
    reports = []
    for m in m_values:
        phi = TabulatedFunction.random(shift, m, rng)
        d = dg.cohomology_defect(phi, shift, m, tol, wit)
        reports.append(BoundReport("cohomology_locally_constant", abs(d), 3 * tol, {"m": m},
                                   kind="identity"))
        base = dg.cohomology_defect(f, shift, m, tol, wit)
        for n in ns:
            bumped = dg.cohomology_defect(f + dg.perturbation(shift, m, n, wit), shift, m, tol, wit)
            shift_amount = (bumped - base).real
            reports.append(BoundReport("cohomology_perturbation", 1.0 / n - shift_amount, 3 * tol,
                                       {"m": m, "n": n}, kind="identity"))
    return reports


def rank_suite(shift: TransitionStructure, c: ConstantSet, R: float, q_values, m_values) -> list:
    reports = []
    for q in q_values:
        for m in m_values:
            if q * sh.word_count(shift, m) > R ** m or m < 2 or c.D * c.r ** (m + 1) > 1:
                continue
            reports.append(dg.rank_step_bound(m, q, R, c.r, c.C4, shift, c.D))
    return reports


def default_theta(f: Potential, m_max: int = 64, r: float = 0.5) -> ThetaProfile:
    """A geometric profile dominating the variation of f (D r^m with r from f when it has one)."""
    if isinstance(f, GeometricPotential):
        r = f.r
        _, D = theta_of(f, m_max).dominating_geometric(r)
        return ThetaProfile.from_geometric(max(D, 1e-300), r, m_max)
    return ThetaProfile.from_geometric(1.0, r, m_max)


def summarize(reports) -> dict:
    bad = [r for r in reports if not r.satisfied]
    return {"total": len(reports), "violations": len(bad),
            "worst_ratio": max((r.measured / r.bound for r in reports if r.bound > 0), default=math.nan)}
