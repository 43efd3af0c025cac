"""Quantitative envelopes: approximation numbers, eigenvalue counts, embeddings, cohomology.

True approximation numbers in these non-Hilbert norms are out of reach, so
every report here compares a computable quantity against the constructive
envelope that dominates it.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import shift as sh
from .errors import HypothesisViolated, RTooSmall
from .potential import (ConstantSet, CylinderIndicator, Potential, TabulatedFunction, ThetaProfile,
                        banach_norm, birkhoff_sums, lipschitz_norm, lipschitz_seminorm, project_Em)
from .report import BoundReport
from .shift import MarkovMeasure, TransitionStructure
from .transfer import SpectralData, apply


def _check_R(R: float, shift: TransitionStructure | None = None, h_top: float | None = None) -> float:
    if h_top is None:
        h_top = sh.topological_entropy(shift) if shift is not None else 0.0
    if R <= math.exp(h_top):
        raise RTooSmall(f"R = {R} must exceed exp(h_top) = {math.exp(h_top):.6g}")
    return h_top


def summability_exponent(q: int, r: float, R: float) -> float:
    """2q / (-log_r R) = 2q ln(1/r) / ln R."""
    return 2 * q * math.log(1 / r) / math.log(R)


def approx_bound(n: int, q: int, r: float, R: float, C4: float, shift: TransitionStructure | None = None,
                 h_top: float | None = None) -> dict:
    """Envelope for the n-th approximation number of the q-th power of the operator."""
    if n < 2:
        raise ValueError("the envelope starts at n = 2")
    if not 0 < r < 1:
        raise ValueError("r must lie in (0, 1)")
    _check_R(R, shift, h_top)
    expo = summability_exponent(q, r, R)
    log_env = q * math.log(C4 / r ** 2) - expo * math.log(n - 1)
    return {"n": n, "q": q, "envelope": math.exp(log_env), "log_envelope": log_env,
            "exponent": expo, "summable": expo > 1}


def rank_step_bound(m: int, q: int, R: float, r: float, C4: float, shift: TransitionStructure,
                    D: float = 1.0) -> BoundReport:
    """Rank hypothesis q * rank E_m <= R^m behind a_{floor(R^m)+1} <= C4^q r^(2mq).

    The report's measured side is the rank of the finite-rank approximant,
    its bound R^m; the resulting approximation-number envelope travels in
    the parameters.
    """
    _check_R(R, shift)
    rank = q * sh.word_count(shift, m)
    if rank > R ** m:
        raise HypothesisViolated(f"q * rank E_{m} = {rank} exceeds R^{m} = {R ** m:.6g}")
    if m < 2 or D * r ** (m + 1) > 1:
        raise HypothesisViolated("need m >= 2 and D r^(m+1) <= 1")
    return BoundReport("rank_step", float(rank), float(R ** m),
                       {"m": m, "q": q, "R": R, "r": r, "C4": C4, "n": math.floor(R ** m) + 1,
                        "envelope": C4 ** q * r ** (2 * m * q)}, kind="envelope")


def counting_bound(c: ConstantSet, theta: ThetaProfile, alpha: float, R: float, m: int, C_alpha: float) -> float:
    C5 = (c.C2 + 1) * (4 * c.C2) ** alpha * C_alpha
    return C5 * theta(m) ** (-alpha) * R ** (m - 1)


def _counting_threshold_ok(theta: ThetaProfile, shift: TransitionStructure, R: float, m: int) -> None:
    t = theta(m)
    if t <= 0:
        raise HypothesisViolated(f"theta_{m} = 0: the counting bound needs a positive profile")
    if t > 1 or sh.word_count(shift, m - 1) > R ** (m - 1):
        raise HypothesisViolated(f"m = {m} is below the counting threshold (theta_m <= 1, rank E_(m-1) <= R^(m-1))")


def count_above(spec: SpectralData, threshold: float) -> int:
    mask = np.abs(spec.eigenvalues) > threshold
    return int(spec.multiplicities[mask].sum())


def counting_check(spec: SpectralData, theta: ThetaProfile, c: ConstantSet, alpha: float, R: float,
                   C_alpha: float, m_values, shift: TransitionStructure) -> list:
    """One report per m: eigenvalues above (C2+1) theta_m against C5 theta_m^(-alpha) R^(m-1)."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    _check_R(R, shift)
    out = []
    for m in m_values:
        _counting_threshold_ok(theta, shift, R, m)
        measured = count_above(spec, (c.C2 + 1) * theta(m))
        bound = counting_bound(c, theta, alpha, R, m, C_alpha)
        out.append(BoundReport("eigenvalue_count", float(measured), bound,
                               {"m": m, "alpha": alpha, "R": R, "C_alpha": C_alpha, "C2": c.C2,
                                "threshold": (c.C2 + 1) * theta(m)}, kind="inequality"))
    return out


def calibrate_c_alpha(spec: SpectralData, theta: ThetaProfile, c: ConstantSet, alpha: float, R: float,
                      m_values, shift: TransitionStructure) -> float:
    """Smallest C(alpha) making the count bound hold at every m in ``m_values`` for this spectrum.

    Meant to be run once on a reference potential and reused unchanged.
    """
    _check_R(R, shift)
    best = np.finfo(float).tiny
    for m in m_values:
        _counting_threshold_ok(theta, shift, R, m)
        measured = count_above(spec, (c.C2 + 1) * theta(m))
        best = max(best, measured / counting_bound(c, theta, alpha, R, m, 1.0))
    return best


def embedding_bound(theta: float, theta_p: float, m: int, N: int) -> dict:
    """a_{N^m+1} of the embedding F_theta -> F_theta' and the tail sum over n > N."""
    if not 0 < theta < theta_p < 1:
        raise ValueError("need 0 < theta < theta' < 1")
    x = N * theta / theta_p
    summable = x < 1
    tail = 3 * (N - 1) * x / (1 - x) if summable else math.inf
    return {"m": m, "index": N ** m + 1, "bound": 3 * (theta / theta_p) ** m,
            "tail": tail, "summable": summable}


def embedding_check(phi: TabulatedFunction, theta: float, theta_p: float, m: int,
                    mu: MarkovMeasure | None = None) -> BoundReport:
    """||phi - E_m phi||_theta' / ||phi||_theta against 3 (theta/theta')^m."""
    resid = phi - project_Em(phi, phi.shift, m, mu)
    measured = lipschitz_norm(resid, theta_p) / lipschitz_norm(phi, theta)
    bound = embedding_bound(theta, theta_p, m, phi.shift.n)["bound"]
    return BoundReport("embedding", measured, bound, {"m": m, "theta": theta, "theta_prime": theta_p},
                       kind="inequality")


def projection_checks(phi: TabulatedFunction, m: int, theta: float, theta_p: float,
                      mu: MarkovMeasure | None = None) -> list:
    """The four projection inequalities on one tabulated function."""
    shift = phi.shift
    Em = project_Em(phi, shift, m, mu)
    reports = []
    if phi.is_real:
        reports.append(BoundReport("projection_max", float(Em.table.real.max()),
                                   float(phi.table.real.max()), {"m": m}, kind="inequality"))
    v_phi = phi.var_profile()
    for k in range(phi.depth + 1):
        reports.append(BoundReport("projection_var", Em.var(k), float(v_phi[k]),
                                   {"m": m, "k": k}, kind="inequality"))
    _, V = lipschitz_seminorm(phi, theta)
    Vm = float(V[m]) if m < V.size else 0.0
    resid = phi - Em
    reports.append(BoundReport("projection_sup", resid.sup_norm(), Vm * theta ** m,
                               {"m": m, "theta": theta}, kind="inequality"))
    reports.append(BoundReport("projection_lipschitz", lipschitz_norm(resid, theta_p),
                               3 * Vm * (theta / theta_p) ** m,
                               {"m": m, "theta": theta, "theta_prime": theta_p}, kind="inequality"))
    return reports


def finite_rank_remainder_check(g: TabulatedFunction, phi: TabulatedFunction, theta: ThetaProfile,
                                c: ConstantSet, m: int, mu: MarkovMeasure | None = None,
                                sharp: bool = False) -> BoundReport:
    """||L_g (phi - E_m phi)||_B / ||phi||_B against C2 theta_{m+1}, or C4 r^(2m) when ``sharp``."""
    if theta(m + 1) > 1:
        raise HypothesisViolated(f"theta_{m + 1} exceeds 1")
    resid = phi - project_Em(phi, phi.shift, m, mu)
    image = apply(g, resid)
    measured = banach_norm(image, theta) / banach_norm(phi, theta)
    if sharp:
        if c.C4 is None or m < 2:
            raise HypothesisViolated("the sharp envelope needs a geometric profile and m >= 2")
        bound = c.C4 * c.r ** (2 * m)
        name = "finite_rank_remainder_geometric"
    else:
        bound = c.C2 * theta(m + 1)
        name = "finite_rank_remainder"
    return BoundReport(name, measured, bound, {"m": m, "C2": c.C2, "C4": c.C4}, kind="inequality")


def ideal_partial_sums(spec_or_values, p: float) -> np.ndarray:
    """Cumulative sums of |lambda_n|^p in non-increasing modulus order."""
    vals = spec_or_values.expanded() if isinstance(spec_or_values, SpectralData) else np.asarray(spec_or_values)
    mods = np.sort(np.abs(np.asarray(vals, dtype=complex)))[::-1]
    return np.cumsum(mods ** p)


def power_difference_envelope(c: ConstantSet, theta: ThetaProfile, q: int, m_values) -> list:
    """q C2^(q-1) C3 theta_m: telescoped bound on the q-th power difference for each m."""
    return [(m, q * c.C2 ** (q - 1) * c.C3 * theta(m)) for m in m_values]


@dataclass(frozen=True)
class CohomologyWitness:
    """Words (w_tilde, v) with the shared-start, closing, length and avoidance properties."""

    w_tilde: tuple
    v: tuple
    branch: int
    return_word: tuple
    j1: int
    j2: int

    def violations(self, shift: TransitionStructure) -> list:
        A = shift.matrix
        w, v = self.w_tilde, self.v
        bad = []
        if not (sh.is_admissible(shift, w) and sh.is_admissible(shift, v)):
            bad.append("words must be admissible")
        if w[0] != v[0]:
            bad.append("w_tilde and v must start with the same symbol")
        if A[w[-1], w[0]] != 1 or A[v[-1], v[0]] != 1:
            bad.append("both words must close into cycles")
        if len(w) < len(v):
            bad.append("w_tilde must be at least as long as v")
        if len(set(v)) != len(v):
            bad.append("v must be self-avoiding")
        if v[-1] in set(w):
            bad.append("the last symbol of v must not occur in w_tilde")
        return bad

    def word(self, m: int) -> tuple:
        return self.w_tilde * m

    def to_json(self, n: int) -> dict:
        return {"w_tilde": sh.format_word(self.w_tilde, n), "v": sh.format_word(self.v, n),
                "branch": self.branch + 1, "return_word": sh.format_word(self.return_word, n),
                "j1": self.j1 + 1, "j2": self.j2 + 1}


def _shortest_path(shift: TransitionStructure, start: int, accept) -> tuple:
    """Lexicographically smallest among shortest admissible words start..end with accept(end, length)."""
    A = shift.matrix
    queue = deque([(start,)])
    seen_len = {}
    while queue:
        path = queue.popleft()
        if len(path) > 1 and accept(path[-1]):
            return path
        for j in np.flatnonzero(A[path[-1]]):
            j = int(j)
            # BFS in lexicographic order visits each (symbol, depth) first via the smallest path
            if seen_len.get(j, math.inf) <= len(path):
                continue
            seen_len[j] = len(path)
            queue.append(path + (j,))
    raise RuntimeError("no path found in an aperiodic matrix")


def cohomology_witness(shift: TransitionStructure) -> CohomologyWitness:
    i, _ = sh.branching_symbol(shift)
    w_bar = _shortest_path(shift, i, lambda s: s == i)
    j1 = w_bar[-2]
    preds = [int(j) for j in np.flatnonzero(shift.matrix[:, i]) if j != j1]
    j2 = preds[0]
    v = (i,) if j2 == i else _shortest_path(shift, i, lambda s: s == j2)
    block = w_bar[:-1]
    reps = max(1, -(-len(v) // len(block)))
    w_tilde = block * reps
    wit = CohomologyWitness(w_tilde, v, i, w_bar, j1, j2)
    bad = wit.violations(shift)
    if bad:
        raise AssertionError("witness construction failed: " + "; ".join(bad))
    return wit


def cohomology_defect(phi: Potential, shift: TransitionStructure, m: int, tol: float = 1e-10,
                      witness: CohomologyWitness | None = None) -> complex:
    """S phi((wwv)*) - S phi(w*) - S phi((wv)*) with w = w_tilde repeated m times."""
    wit = witness or cohomology_witness(shift)
    w = wit.word(m)
    v = wit.v
    lhs = birkhoff_sums(phi, np.array([w + w + v]), tol / 3)[0]
    r1 = birkhoff_sums(phi, np.array([w]), tol / 3)[0]
    r2 = birkhoff_sums(phi, np.array([w + v]), tol / 3)[0]
    return complex(lhs - r1 - r2)


def perturbation(shift: TransitionStructure, m: int, n: float, witness: CohomologyWitness | None = None):
    """(1/n) times the indicator of [w w v], the perturbation that breaks the identity."""
    wit = witness or cohomology_witness(shift)
    w = wit.word(m)
    return CylinderIndicator(w + w + wit.v) * (1.0 / n)
