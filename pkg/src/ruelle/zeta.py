"""Periodic-orbit sums, inverse zeta coefficients and the Weierstrass product."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import shift as sh
from .errors import HypothesisViolated
from .potential import (Potential, TabulatedFunction, birkhoff_sums, max_real_upper, project_Em,
                        theta_of, var_estimate)
from .shift import MarkovMeasure, TransitionStructure
from .transfer import TransferMatrix, build_matrix, spectrum

EPS = np.finfo(float).eps


def orbit_sum(f: Potential, shift: TransitionStructure, q: int, tol: float = 1e-10) -> complex:
    """Sum of exp(S_q f) over all points of period q."""
    return complex(orbit_sums(f, shift, q, tol)[0][-1])


def orbit_sums(f: Potential, shift: TransitionStructure, Q: int, tol: float = 1e-10,
               cap: int = sh.DEFAULT_WORD_CAP):
    """(Z_1..Z_Q, error bounds). Each Birkhoff sum is evaluated to tol / #Per_q."""
    Z = np.zeros(Q, dtype=complex)
    err = np.zeros(Q)
    top = max_real_upper(f, shift)
    for q in range(1, Q + 1):
        cycles = sh.periodic_words(shift, q, cap)
        count = max(cycles.shape[0], 1)
        s = birkhoff_sums(f, cycles, tol / count)
        Z[q - 1] = np.exp(s).sum()
        err[q - 1] = tol * math.exp(q * top + tol) + 4 * EPS * count * math.exp(q * top)
    return Z, err


def zeta_coeffs_from_orbits(Z) -> np.ndarray:
    """Coefficients of exp(-sum_q Z_q z^q / q) through degree len(Z)."""
    Z = np.asarray(Z, dtype=complex)
    Q = Z.size
    c = np.zeros(Q + 1, dtype=complex)
    c[0] = 1.0
    for k in range(1, Q + 1):
        c[k] = -np.dot(Z[:k], c[k - 1::-1][:k]) / k
    return c


def newton_residual(c, Z) -> float:
    """max_k |c_k + (1/k) sum_j Z_j c_{k-j}|."""
    c = np.asarray(c, dtype=complex)
    Z = np.asarray(Z, dtype=complex)
    res = [abs(c[k] + np.dot(Z[:k], c[k - 1::-1][:k]) / k) for k in range(1, min(c.size, Z.size + 1))]
    return float(max(res, default=0.0))


def zeta_coeffs_from_determinant(M, Q: int) -> np.ndarray:
    """Coefficients of det(I - zM) through degree Q (Faddeev-LeVerrier recursion)."""
    A = M.matrix if isinstance(M, TransferMatrix) else np.asarray(M)
    n = A.shape[0]
    c = np.zeros(Q + 1, dtype=complex)
    c[0] = 1.0
    B = np.zeros_like(A, dtype=complex)
    eye = np.eye(n)
    for k in range(1, min(n, Q) + 1):
        B = A @ B + c[k - 1] * eye
        c[k] = -np.trace(A @ B) / k
    return c


@dataclass
class ZetaSeries:
    """Truncated inverse zeta coefficients with their provenance."""

    coeffs: np.ndarray
    orbit_sums: np.ndarray
    provenance: str = "orbit-series"
    errors: np.ndarray | None = None

    @property
    def Q(self) -> int:
        return self.coeffs.size - 1

    def __call__(self, z):
        return np.polyval(self.coeffs[::-1], z)

    def roots(self) -> np.ndarray:
        """Roots of the truncated polynomial (trailing near-zero coefficients dropped)."""
        c = self.coeffs.copy()
        scale = np.abs(c).max()
        while c.size > 1 and abs(c[-1]) <= 1e-12 * scale:
            c = c[:-1]
        return np.roots(c[::-1]) if c.size > 1 else np.zeros(0, complex)

    def to_json(self) -> dict:
        return {"Q": self.Q, "provenance": self.provenance,
                "coeffs": [[float(z.real), float(z.imag)] for z in self.coeffs],
                "orbit_sums": [[float(z.real), float(z.imag)] for z in self.orbit_sums]}


def zeta_series(f: Potential, shift: TransitionStructure, Q: int, tol: float = 1e-10) -> ZetaSeries:
    Z, err = orbit_sums(f, shift, Q, tol)
    return ZetaSeries(zeta_coeffs_from_orbits(Z), Z, "orbit-series", err)


def k0_bound(r: float, h_top: float):
    """(k0, p, p_min): smallest k with k + 1 > h_top / (2 ln(1/r)), and p = k + 1.

    This is an upper bound on the minimal genus, not the genus itself.
    """
    if not 0 < r < 1:
        raise ValueError("r must lie in (0, 1)")
    p_min = h_top / (2 * math.log(1 / r))
    k = max(math.floor(p_min), 0)
    return k, k + 1, p_min


def weierstrass_factor(z, k0: int):
    """(1 - z) exp(sum_{k<=k0} z^k / k)."""
    z = np.asarray(z, dtype=complex)
    s = sum(z ** k / k for k in range(1, k0 + 1)) if k0 > 0 else 0
    out = (1 - z) * np.exp(s)
    return out if out.ndim else complex(out)


def _log_factor_bound(u: np.ndarray, k0: int) -> float:
    """sum |log E(u, k0)| <= sum |u|^(k0+1) / ((k0+1)(1-|u|)), for |u| < 1."""
    u = np.abs(u)
    if (u >= 1).any():
        return math.inf
    return float((u ** (k0 + 1) / ((k0 + 1) * (1 - u))).sum())


@dataclass(frozen=True)
class ProductValue:
    value: complex
    truncation: float
    rounding: float

    @property
    def remainder(self) -> float:
        return self.truncation + self.rounding


def spectral_product(lams, z: complex, k0: int = 0, Z=None, n_terms: int | None = None) -> ProductValue:
    """exp(-sum_{q<=k0} z^q Z_q / q) * prod_n E(z lambda_n, k0) over the first n_terms eigenvalues."""
    lams = np.asarray(lams, dtype=complex)
    n_terms = lams.size if n_terms is None else min(n_terms, lams.size)
    pre = 0j
    if k0 > 0:
        if Z is None or len(Z) < k0:
            raise ValueError(f"need Z_1..Z_{k0} for the prefactor")
        pre = -sum(z ** q * Z[q - 1] / q for q in range(1, k0 + 1))
    u = z * lams[:n_terms]
    value = complex(np.exp(pre) * np.prod(weierstrass_factor(u, k0)))
    S = _log_factor_bound(z * lams[n_terms:], k0)
    trunc = abs(value) * math.expm1(S) if S < math.inf else math.inf
    rounding = 4 * EPS * (n_terms + k0 + 1) * abs(value) * math.exp(_log_factor_bound(u, k0) if k0 else 0)
    return ProductValue(value, trunc, rounding)


def elementary_tail(abs_vals, x: float, Q: int) -> float:
    """sum_{k>Q} e_k(abs_vals) x^k, computed without cancellation."""
    e = np.zeros(abs_vals.size + 1)
    e[0] = 1.0
    for a in abs_vals:
        e[1:] = e[1:] + a * x * e[:-1]
    return float(e[Q + 1:].sum())


def approximation_gap(var_m: float, N: int, rho: float, max_re: float, z_abs: float) -> float:
    """Bound on |log zeta_f^{-1}(z) - log zeta_{f_m}^{-1}(z)| given sup|f - f_m| <= var_m."""
    x = rho * math.exp(max_re) * z_abs
    if x >= 1:
        return math.inf
    return 3 * var_m * N * x / (1 - x)


@dataclass
class ProductSeriesRow:
    z: complex
    product: complex
    series: complex
    product_remainder: float
    series_remainder: float

    @property
    def delta(self) -> float:
        return abs(self.product - self.series)

    @property
    def agrees(self) -> bool:
        return self.delta <= self.product_remainder + self.series_remainder

    def as_dict(self) -> dict:
        return {"z": [self.z.real, self.z.imag], "product": [self.product.real, self.product.imag],
                "series": [self.series.real, self.series.imag], "delta": self.delta,
                "product_remainder": self.product_remainder,
                "series_remainder": self.series_remainder, "agrees": self.agrees}


def product_series_comparison(f: Potential, shift: TransitionStructure, m: int, Q: int, zs,
                              k0: int = 0, mu: MarkovMeasure | None = None, M: int | None = None,
                              tol: float = 1e-12):
    """Compare the Weierstrass product over the spectrum of E_m f with the degree-Q orbit series of f.

    Product remainder: truncation of the eigenvalue list plus the gap
    between f and its depth-m projection. Series remainder: the tail of the
    projected potential's coefficients plus a Cauchy estimate of the
    coefficient gap, both at the radius where the gap bound stays finite.
    """
    fm = project_Em(f, shift, m, mu, M)
    tm = build_matrix(fm)
    spec = spectrum(tm)
    lams = spec.expanded()
    Zm = [tm.power_trace(q) for q in range(1, k0 + 1)]
    series = zeta_series(f, shift, Q, tol)
    if isinstance(f, TabulatedFunction) and f.depth <= m:
        var_m = 0.0
    else:
        var_m = f.var_bound(m)
        if var_m is None:
            var_m = var_estimate(f, shift, m)[0]
    rho = shift.perron[0]
    top = max_real_upper(f, shift)
    coeff_err = np.abs(series.coeffs).sum() * 8 * EPS * Q + sum(series.errors)
    rows = []
    for z in np.asarray(zs, dtype=complex):
        za = abs(z)
        pv = spectral_product(lams, z, k0, Zm)
        gap = approximation_gap(var_m, shift.n, rho, top, za)
        p_rem = pv.remainder + abs(pv.value) * math.expm1(gap)
        # Cauchy radius: halfway between |z| and the edge of the gap bound's domain
        R_edge = 1.0 / (rho * math.exp(top))
        R = 0.5 * (za + R_edge)
        mod_max = float(np.prod(1 + np.abs(lams) * R))
        if k0 > 0:
            mod_max *= math.exp(sum(R ** q * abs(Zm[q - 1]) / q for q in range(1, k0 + 1)))
        diff_max = mod_max * math.expm1(approximation_gap(var_m, shift.n, rho, top, R))
        ratio = za / R
        cauchy_tail = diff_max * ratio ** (Q + 1) / (1 - ratio)
        tail = elementary_tail(np.abs(lams), za, Q) if k0 == 0 else math.inf
        s_rem = tail + cauchy_tail + coeff_err * max(1.0, za) ** Q
        rows.append(ProductSeriesRow(complex(z), pv.value, complex(series(z)), p_rem, s_rem))
    return rows, spec, series


@dataclass
class TraceCheck:
    q: int
    Z: complex
    m_values: list
    sums: list
    defects: list
    slope: float | None
    envelope_log_ratio: float | None
    orbit_error: float = 0.0
    notes: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "q": self.q, "Z_q": [self.Z.real, self.Z.imag],
            "defects": [{"m": m, "power_sum": [s.real, s.imag], "delta": d}
                        for m, s, d in zip(self.m_values, self.sums, self.defects)],
            "fit_slope": self.slope, "envelope_log_ratio": self.envelope_log_ratio,
            "orbit_error": self.orbit_error, "notes": self.notes,
        }


def decay_slope(m_values, defects) -> float | None:
    """Least-squares slope of log(defect) against m over the last half of the schedule."""
    m = np.asarray(m_values, dtype=float)
    d = np.asarray(defects, dtype=float)
    half = m.size // 2
    m, d = m[half:], d[half:]
    if m.size < 2:
        return None
    logd = np.log(np.maximum(d, 1e-300))
    return float(np.polyfit(m, logd, 1)[0])


def trace_formula_check(f: Potential, shift: TransitionStructure, q: int, m_values,
                        mu: MarkovMeasure | None = None, M: int | None = None, tol: float = 1e-12,
                        r: float | None = None) -> TraceCheck:
    """Defects |sum_n lambda_n(E_m f)^q - Z_q(f)| along a schedule of depths."""
    notes = []
    if r is not None:
        _, p, p_min = k0_bound(r, sh.topological_entropy(shift))
        if q < math.ceil(p_min) or q < 1:
            raise HypothesisViolated(f"q = {q} is below the summability exponent {p_min:.4g}")
    Z, err = orbit_sums(f, shift, q, tol)
    Zq = complex(Z[-1])
    m_values = [int(m) for m in m_values]
    sums, defects = [], []
    for m in m_values:
        fm = project_Em(f, shift, m, mu, M)
        s = spectrum(build_matrix(fm)).power_sum(q)
        sums.append(s)
        defects.append(abs(s - Zq))
    env = None
    if not isinstance(f, TabulatedFunction) and f.var_bound(1) is not None:
        theta = theta_of(f, max(m_values) + 1)
        ratios = [theta(m + 1) / theta(m) for m in m_values if theta(m) > 0 and theta(m + 1) > 0]
        if ratios:
            env = float(np.mean(np.log(ratios)))
    return TraceCheck(q, Zq, m_values, sums, defects, decay_slope(m_values, defects), env,
                      float(err[-1]), notes)
