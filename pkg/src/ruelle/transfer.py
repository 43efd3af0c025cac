"""Transfer operators acting on locally constant functions.

For a potential of depth m the operator maps depth-d tables to depth-d
tables whenever ``d >= m - 1``, so it is an honest finite matrix on that
space. Rows are indexed by the target cylinder, columns by the source.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import shift as sh
from .errors import DepthTooLarge, EigensolveFailure, HypothesisViolated
from .potential import (ConstantSet, Potential, TabulatedFunction, ThetaProfile,
                        max_real_upper, project_Em, sup_upper, var_estimate, var_upper)
from .report import BoundReport
from .shift import MarkovMeasure, TransitionStructure

DENSE_CAP = 4096


@dataclass(frozen=True, eq=False)
class TransferMatrix:
    shift: TransitionStructure
    depth: int
    potential_depth: int
    matrix: np.ndarray

    @cached_property
    def basis(self) -> np.ndarray:
        return sh.enumerate_words(self.shift, self.depth)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def power_trace(self, q: int) -> complex:
        return complex(np.trace(np.linalg.matrix_power(self.matrix, q)))


def _preimage_rows(shift: TransitionStructure, words: np.ndarray):
    """All one-symbol left extensions i·w with A(i, w_0) = 1.

    Returns ``(target, ext)`` where ``ext[k]`` is the extended word and
    ``target[k]`` the row of ``words`` it came from.
    """
    A = shift.matrix.astype(bool)
    allowed = A[:, words[:, 0]].T  # (len(words), N)
    target, sym = np.nonzero(allowed)
    ext = np.concatenate([sym[:, None], words[target]], axis=1)
    return target, ext


def basis_depth_for(m: int) -> int:
    return max(m - 1, 1)


def build_matrix(f_tab: TabulatedFunction, shift: TransitionStructure | None = None,
                 depth: int | None = None, cap: int = DENSE_CAP) -> TransferMatrix:
    """Matrix of the transfer operator of a tabulated potential on depth-d tables."""
    shift = shift or f_tab.shift
    m = f_tab.depth
    d = basis_depth_for(m) if depth is None else depth
    if d < max(m - 1, 1):
        raise ValueError(f"basis depth {d} is too shallow for a depth-{m} potential")
    size = sh.word_count(shift, d)
    if size > cap:
        raise DepthTooLarge(f"basis of {size} words exceeds the dense cap {cap}")
    words = sh.enumerate_words(shift, d)
    codes = sh.word_codes(words, shift.n)
    target, ext = _preimage_rows(shift, words)
    source = np.searchsorted(codes, sh.word_codes(ext[:, :d], shift.n))
    weight = np.exp(f_tab.values(ext))
    real = f_tab.is_real
    M = np.zeros((size, size), dtype=float if real else complex)
    np.add.at(M, (target, source), weight.real if real else weight)
    return TransferMatrix(shift, d, m, M)


def apply(f_tab: TabulatedFunction, phi: TabulatedFunction) -> TabulatedFunction:
    """The transfer operator applied to a table, returned as a table of depth max(m, M) - 1 (at least 1)."""
    shift = f_tab.shift
    d = max(max(f_tab.depth, phi.depth) - 1, 1)
    words = sh.enumerate_words(shift, d)
    target, ext = _preimage_rows(shift, words)
    contrib = np.exp(f_tab.values(ext)) * phi.values(ext)
    out = np.zeros(words.shape[0], dtype=complex)
    np.add.at(out, target, contrib)
    return TabulatedFunction(shift, d, out)


@dataclass(eq=False)
class TransferImage(Potential):
    """The transfer operator applied to an arbitrary potential, evaluated pointwise."""

    shift: TransitionStructure
    f: Potential
    phi: Potential
    family = "transfer-image"

    def horizon(self, tol):
        return max(self.f.horizon(tol), self.phi.horizon(tol), 1)

    def values(self, seqs):
        seqs = np.atleast_2d(np.asarray(seqs))
        A = self.shift.matrix.astype(bool)
        out = np.zeros(seqs.shape[0], dtype=complex)
        for i in range(self.shift.n):
            ok = A[i, seqs[:, 0]]
            if not ok.any():
                continue
            ext = np.concatenate([np.full((int(ok.sum()), 1), i), seqs[ok]], axis=1)
            out[ok] += np.exp(self.f.values(ext)) * self.phi.values(ext)
        return out


def transfer_image(f: Potential, phi: Potential, shift: TransitionStructure) -> Potential:
    if isinstance(f, TabulatedFunction) and isinstance(phi, TabulatedFunction):
        return apply(f, phi)
    return TransferImage(shift, f, phi)


@dataclass(frozen=True)
class SpectralData:
    """Non-zero eigenvalue clusters of a finite matrix.

    ``multiplicities`` are algebraic, obtained by merging eigenvalues closer
    than ``cluster_tol`` (relative). ``zero_count`` eigenvalues were resolved
    as exactly zero, so ``sum(multiplicities) + zero_count == dim``.
    """

    eigenvalues: np.ndarray
    multiplicities: np.ndarray
    zero_count: int
    cluster_tol: float
    basis_depth: int | None = None

    @property
    def dim(self) -> int:
        return int(self.multiplicities.sum()) + self.zero_count

    def expanded(self) -> np.ndarray:
        """Eigenvalues repeated by multiplicity, sorted by non-increasing modulus."""
        return np.repeat(self.eigenvalues, self.multiplicities)

    @property
    def leading(self) -> complex:
        return complex(self.eigenvalues[0]) if self.eigenvalues.size else 0j

    def power_sum(self, q: int) -> complex:
        return complex((self.eigenvalues ** q * self.multiplicities).sum())

    def to_json(self) -> dict:
        return {
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
            "multiplicities": [int(k) for k in self.multiplicities],
            "zero_count": int(self.zero_count),
            "cluster_tol": self.cluster_tol,
            "basis_depth": self.basis_depth,
        }


def core_eigenvalues(M: np.ndarray, rtol: float = 1e-12):
    """Eigenvalues of M with its nilpotent part removed.

    Dense eigensolvers scatter a large zero eigenvalue of a defective matrix
    into a ring of radius ~eps**(1/k); transfer matrices of locally constant
    potentials are full of such blocks. Iterating ``Q <- orth(M Q)`` from
    ``orth(M)`` until the rank stops dropping yields the core subspace on
    which M is invertible; its compression carries every nonzero eigenvalue
    and the rest are reported as exact zeros.
    """
    M = np.asarray(M)
    n = M.shape[0]
    if n == 0:
        return np.zeros(0, complex), 0
    scale = np.linalg.norm(M, 2)
    if scale == 0:
        return np.zeros(0, complex), n
    try:
        U, s, _ = np.linalg.svd(M)
        Q = U[:, : int((s > rtol * scale).sum())]
        while Q.shape[1]:
            U, s, _ = np.linalg.svd(M @ Q, full_matrices=False)
            r = int((s > rtol * scale).sum())
            if r == Q.shape[1]:
                break
            Q = U[:, :r]
        core = Q.conj().T @ M @ Q
        ev = np.linalg.eigvals(core) if core.size else np.zeros(0, complex)
    except np.linalg.LinAlgError as exc:
        raise EigensolveFailure(str(exc)) from exc
    ev = ev.astype(complex)
    keep = np.abs(ev) > rtol * scale
    return ev[keep], n - int(keep.sum())


def cluster_eigenvalues(ev: np.ndarray, tol: float = 1e-8):
    """Merge eigenvalues within relative distance ``tol``; returns (centers, counts), sorted."""
    ev = np.asarray(ev, dtype=complex)
    order = np.argsort(-np.abs(ev), kind="stable")
    centers: list[list[complex]] = []
    for z in ev[order]:
        for c in centers:
            ref = c[0]
            if abs(z - ref) <= tol * max(abs(z), abs(ref)):
                c.append(z)
                break
        else:
            centers.append([z])
    vals = np.array([np.mean(c) for c in centers], dtype=complex)
    counts = np.array([len(c) for c in centers], dtype=np.int64)
    mod = np.round(np.abs(vals), 12)
    key = np.lexsort((np.angle(vals), -mod))
    return vals[key], counts[key]


def spectrum_of_array(M: np.ndarray, cluster_tol: float = 1e-8, rtol: float = 1e-12,
                      cap: int = DENSE_CAP, basis_depth: int | None = None) -> SpectralData:
    if M.shape[0] > cap:
        raise DepthTooLarge(f"dimension {M.shape[0]} exceeds the dense cap {cap}")
    ev, zeros = core_eigenvalues(M, rtol)
    vals, counts = cluster_eigenvalues(ev, cluster_tol)
    return SpectralData(vals, counts, zeros, cluster_tol, basis_depth)


def spectrum(tm: TransferMatrix, cluster_tol: float = 1e-8, rtol: float = 1e-12,
             cap: int = DENSE_CAP) -> SpectralData:
    return spectrum_of_array(tm.matrix, cluster_tol, rtol, cap, tm.depth)


@dataclass(frozen=True)
class PressureResult:
    value: float
    lower: float
    upper: float
    m: int
    heuristic: bool = False

    def as_dict(self) -> dict:
        return {"pressure": self.value, "lower": self.lower, "upper": self.upper,
                "m": self.m, "heuristic_bracket": self.heuristic}


def pressure(f: Potential, shift: TransitionStructure, m: int, mu: MarkovMeasure | None = None,
             M: int | None = None) -> PressureResult:
    """Topological pressure of a real potential via its depth-m projection."""
    if not f.is_real:
        raise ValueError("pressure needs a real-valued potential")
    fm = project_Em(f, shift, m, mu, M)
    spec = spectrum(build_matrix(fm.real, shift))
    lead = spec.leading
    value = math.log(lead.real)
    heuristic = False
    if isinstance(f, TabulatedFunction) and f.depth <= m:
        err = 0.0
    else:
        err = f.var_bound(m)
        if err is None:
            err, _ = var_estimate(f, shift, m)
            heuristic = True
    return PressureResult(value, value - err, value + err, m, heuristic)


def lasota_yorke_check(f: Potential, phi: Potential, k: int, shift: TransitionStructure,
                       sample_budget: int = 1 << 14) -> BoundReport:
    """Variation of the transfer image at depth k against the one-step smoothing bound."""
    if k < 1:
        raise ValueError("k must be at least 1")
    image = transfer_image(f, phi, shift)
    if isinstance(image, TabulatedFunction):
        lhs = image.var(k)
    else:
        lhs, _ = var_estimate(image, shift, k, sample_budget)
    var_f = f.var(k + 1) if isinstance(f, TabulatedFunction) else var_upper(f, k + 1)
    var_phi = phi.var(k + 1) if isinstance(phi, TabulatedFunction) else var_upper(phi, k + 1)
    expmax = math.exp(max_real_upper(f, shift))
    rhs = shift.n * expmax * (3 * var_f * sup_upper(phi, shift) + var_phi)
    return BoundReport("lasota_yorke", float(lhs), float(rhs), {"k": k, "N": shift.n}, kind="inequality")


def operator_bounds(c: ConstantSet, theta: ThetaProfile, m: int, q: int,
                    shift: TransitionStructure) -> dict:
    """Closed-form operator-norm bounds at truncation depth m and power q."""
    if theta(m + 1) > 1:
        raise HypothesisViolated(f"theta_{m + 1} = {theta(m + 1)} exceeds 1")
    out = {
        "transfer_norm": c.C2,
        "finite_rank_remainder": c.C2 ** q * theta(m + 1) ** q,
        "rank": q * sh.word_count(shift, m),
    }
    out["projection_difference"] = c.C3 * theta(m) if theta(m) <= 1 else None
    return out
