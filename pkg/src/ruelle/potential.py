"""Complex potentials on the shift, their variations, and the norms built on them.

Every potential answers two questions:

``horizon(tol)``
    how many leading symbols of a sequence are needed to evaluate it to
    within ``tol``;
``values(seqs)``
    its values on a batch of sequences, given as an ``(n, L)`` integer array
    of leading symbols with ``L >= horizon(tol)``.

Points are completed to finite arrays with the canonical periodic tails from
:mod:`ruelle.shift`, so a cylinder is always represented by one fixed point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import shift as sh
from .errors import (InadmissibleJunction, NoAnalyticBound, NotInSpace,
                     ProfileViolation)
from .shift import MarkovMeasure, TransitionStructure


class Potential:
    """Base class. Subclasses set ``family`` and implement the three hooks."""

    family = "abstract"

    def horizon(self, tol: float) -> int:
        raise NotImplementedError

    def values(self, seqs: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def var_bound(self, m: int):
        """Upper bound on var_m, or None when no analytic bound is known."""
        return None

    def log_var_bound(self, m: int) -> float:
        v = self.var_bound(m)
        if v is None:
            raise NoAnalyticBound(f"{type(self).__name__} has no variation bound")
        return math.log(v) if v > 0 else -math.inf

    @property
    def is_real(self) -> bool:
        return False

    def __add__(self, other):
        return LinearCombination([(1.0, self), (1.0, as_potential(other))])

    __radd__ = __add__

    def __mul__(self, c):
        return LinearCombination([(complex(c), self)])

    __rmul__ = __mul__

    def __sub__(self, other):
        return LinearCombination([(1.0, self), (-1.0, as_potential(other))])


def as_potential(x) -> Potential:
    if isinstance(x, Potential):
        return x
    return ConstantPotential(complex(x))


@dataclass(eq=False)
class ConstantPotential(Potential):
    value: complex = 0.0
    family = "constant"

    def horizon(self, tol):
        return 0

    def values(self, seqs):
        return np.full(np.asarray(seqs).shape[0], complex(self.value))

    def var_bound(self, m):
        return 0.0

    @property
    def is_real(self):
        return complex(self.value).imag == 0


@dataclass(eq=False)
class TabulatedFunction(Potential):
    """A locally constant function of depth m, one value per admissible m-word.

    ``values_`` follows the order of ``enumerate_words(shift, depth)``.
    """

    shift: TransitionStructure
    depth: int
    table: np.ndarray
    family = "table"

    def __post_init__(self):
        table = np.asarray(self.table, dtype=complex).copy()
        expected = sh.word_count(self.shift, self.depth)
        if table.shape != (expected,):
            raise ValueError(f"depth-{self.depth} table needs {expected} values, got {table.shape}")
        table.setflags(write=False)
        self.table = table

    @classmethod
    def from_function(cls, shift, depth, fn):
        words = sh.enumerate_words(shift, depth)
        return cls(shift, depth, [fn(tuple(int(s) for s in w)) for w in words])

    @classmethod
    def constant(cls, shift, value, depth=0):
        return cls(shift, depth, np.full(sh.word_count(shift, depth), complex(value)))

    @classmethod
    def indicator(cls, shift, word, depth=None):
        word = tuple(int(s) for s in word)
        depth = len(word) if depth is None else depth
        if depth < len(word):
            raise ValueError("depth must be at least the word length")
        words = sh.enumerate_words(shift, depth)
        hit = (words[:, : len(word)] == np.array(word, dtype=np.int64)).all(axis=1)
        return cls(shift, depth, hit.astype(complex))

    @classmethod
    def random(cls, shift, depth, rng: np.random.Generator, real: bool = False, scale: float = 0.5):
        """Values with real (and, unless ``real``, imaginary) parts uniform in [-scale, scale]."""
        n = sh.word_count(shift, depth)
        vals = rng.uniform(-scale, scale, n)
        if not real:
            vals = vals + 1j * rng.uniform(-scale, scale, n)
        return cls(shift, depth, vals)

    @cached_property
    def words(self) -> np.ndarray:
        return sh.enumerate_words(self.shift, self.depth)

    @cached_property
    def codes(self) -> np.ndarray:
        return sh.word_codes(self.words, self.shift.n)

    def horizon(self, tol):
        return self.depth

    def lookup(self, seqs: np.ndarray) -> np.ndarray:
        """Row index in the table for each sequence."""
        seqs = np.atleast_2d(np.asarray(seqs))
        if seqs.shape[1] < self.depth:
            raise ValueError(f"need {self.depth} leading symbols, got {seqs.shape[1]}")
        codes = sh.word_codes(seqs[:, : self.depth], self.shift.n)
        idx = np.searchsorted(self.codes, codes)
        idx = np.minimum(idx, self.codes.size - 1)
        if not np.array_equal(self.codes[idx], codes):
            raise InadmissibleJunction("sequence prefix is not an admissible word")
        return idx

    def values(self, seqs):
        return self.table[self.lookup(seqs)]

    @property
    def is_real(self):
        return bool(np.all(self.table.imag == 0))

    def var(self, k: int) -> float:
        """Exact var_k."""
        if k >= self.depth:
            return 0.0
        return float(_block_diameters(self.table, _prefix_blocks(self.words, k)).max())

    def var_profile(self) -> np.ndarray:
        """var_k for k = 0..depth (the last entry is always 0)."""
        return np.array([self.var(k) for k in range(self.depth + 1)])

    def var_bound(self, m):
        return self.var(m)

    def sup_norm(self) -> float:
        return float(np.abs(self.table).max())

    def lift(self, depth: int) -> "TabulatedFunction":
        """The same function tabulated on a finer partition."""
        if depth < self.depth:
            raise ValueError("cannot lift to a coarser depth")
        if depth == self.depth:
            return self
        fine = sh.enumerate_words(self.shift, depth)
        return TabulatedFunction(self.shift, depth, self.values(fine))

    def _binary(self, other, op):
        if isinstance(other, TabulatedFunction):
            if other.shift is not self.shift and not np.array_equal(other.shift.matrix, self.shift.matrix):
                raise ValueError("tables live on different shifts")
            d = max(self.depth, other.depth)
            return TabulatedFunction(self.shift, d, op(self.lift(d).table, other.lift(d).table))
        if np.isscalar(other):
            return TabulatedFunction(self.shift, self.depth, op(self.table, complex(other)))
        return NotImplemented

    def __add__(self, other):
        out = self._binary(other, np.add)
        return Potential.__add__(self, other) if out is NotImplemented else out

    __radd__ = __add__

    def __sub__(self, other):
        out = self._binary(other, np.subtract)
        return Potential.__sub__(self, other) if out is NotImplemented else out

    def __mul__(self, c):
        if np.isscalar(c):
            return TabulatedFunction(self.shift, self.depth, self.table * complex(c))
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    @property
    def real(self):
        return TabulatedFunction(self.shift, self.depth, self.table.real)

    def to_json(self) -> dict:
        return {
            "depth": self.depth,
            "values": {sh.format_word(w, self.shift.n): [float(v.real), float(v.imag)]
                       for w, v in zip(self.words, self.table)},
        }

    @classmethod
    def from_json(cls, shift, doc) -> "TabulatedFunction":
        depth = int(doc["depth"])
        words = sh.enumerate_words(shift, depth)
        given = {sh.parse_word(k, shift.n): v for k, v in doc["values"].items()}
        expected = [tuple(int(s) for s in w) for w in words]
        if set(given) != set(expected):
            missing = sorted(set(expected) - set(given))[:3]
            extra = sorted(set(given) - set(expected))[:3]
            raise ValueError(f"table must cover exactly the admissible words (missing {missing}, extra {extra})")
        vals = [complex(*given[w]) if isinstance(given[w], (list, tuple)) else complex(given[w])
                for w in expected]
        return cls(shift, depth, vals)


@dataclass(eq=False)
class GeometricPotential(Potential):
    """``f(w) = sum_{j>=1} (s[w_j] * r**j) ** j``, a super-continuous, non-locally-constant example.

    ``scales[s]`` is the factor for symbol s; symbols past the end of the list
    reuse the last factor. The default ``(1, 1/2)`` gives var_m(f)**(1/m) of
    order r**m.
    """

    r: float
    scales: tuple = (1.0, 0.5)
    family = "geometric"

    def __post_init__(self):
        if not 0 < self.r < 1:
            raise ValueError("r must lie in (0, 1)")
        self.scales = tuple(float(s) for s in self.scales)
        if min(self.scales) <= 0 or max(self.scales) > 1:
            raise ValueError("scales must lie in (0, 1]")

    @property
    def is_real(self):
        return True

    def _scale_array(self, nsym):
        s = list(self.scales) + [self.scales[-1]] * max(0, nsym - len(self.scales))
        return np.array(s[:max(nsym, 1)])

    def _tail(self, K: int) -> float:
        """Bound on sum_{j>K} of the largest term."""
        smax = max(self.scales)
        lr = math.log(self.r)
        first = (K + 1) ** 2 * lr + (K + 1) * math.log(smax)
        ratio = self.r ** (2 * K + 3) * smax
        return math.exp(first) / (1 - ratio)

    def horizon(self, tol):
        K = 1
        while self._tail(K) > tol:
            K += 1
        return K + 1

    def values(self, seqs):
        seqs = np.atleast_2d(np.asarray(seqs))
        L = seqs.shape[1]
        nsym = int(seqs.max()) + 1 if seqs.size else 1
        s = self._scale_array(nsym)
        j = np.arange(L)
        with np.errstate(divide="ignore", under="ignore"):
            logc = (j[None, :] ** 2) * math.log(self.r) + j[None, :] * np.log(s)[:, None]
            coef = np.exp(logc)
        coef[:, 0] = 0.0
        out = coef[seqs, j[None, :]].sum(axis=1)
        return out.astype(complex)

    def log_var_bound(self, m):
        smax, smin = max(self.scales), min(self.scales)
        if smax == smin:
            return -math.inf
        rho = smin / smax
        j = np.arange(max(m, 1), max(m, 1) + 60, dtype=float)
        logs = j ** 2 * math.log(self.r) + j * math.log(smax) + np.log1p(-rho ** j)
        top = logs.max()
        return float(top + math.log(np.exp(logs - top).sum()))

    def var_bound(self, m):
        """Exact on the full shift; an upper bound for every other transition matrix."""
        return math.exp(self.log_var_bound(m))

    def max_value(self) -> float:
        smax = max(self.scales)
        j = np.arange(1, 60)
        return float(np.exp(j ** 2 * math.log(self.r) + j * math.log(smax)).sum())


@dataclass(eq=False)
class CylinderIndicator(Potential):
    """1 on the cylinder [word], 0 elsewhere."""

    word: tuple
    family = "table"

    def __post_init__(self):
        self.word = tuple(int(s) for s in self.word)

    def horizon(self, tol):
        return len(self.word)

    def values(self, seqs):
        seqs = np.atleast_2d(np.asarray(seqs))
        w = np.array(self.word, dtype=np.int64)
        return (seqs[:, : w.size] == w).all(axis=1).astype(complex)

    def var_bound(self, m):
        return 1.0 if m < len(self.word) else 0.0

    @property
    def is_real(self):
        return True


@dataclass(eq=False)
class LinearCombination(Potential):
    terms: list = field(default_factory=list)
    family = "linear-combination"

    def __post_init__(self):
        flat = []
        for c, p in self.terms:
            if isinstance(p, LinearCombination):
                flat.extend((c * c2, p2) for c2, p2 in p.terms)
            else:
                flat.append((complex(c), p))
        self.terms = flat

    def horizon(self, tol):
        total = sum(abs(c) for c, _ in self.terms) or 1.0
        return max((p.horizon(tol / total) for _, p in self.terms), default=0)

    def values(self, seqs):
        seqs = np.atleast_2d(np.asarray(seqs))
        out = np.zeros(seqs.shape[0], dtype=complex)
        for c, p in self.terms:
            out += c * p.values(seqs)
        return out

    def var_bound(self, m):
        total = 0.0
        for c, p in self.terms:
            v = p.var_bound(m)
            if v is None:
                return None
            total += abs(c) * v
        return total

    @property
    def is_real(self):
        return all(c.imag == 0 and p.is_real for c, p in self.terms)


def _prefix_blocks(words: np.ndarray, k: int) -> np.ndarray:
    """Start offsets of runs of lexicographically sorted words sharing k leading symbols."""
    n = words.shape[0]
    if k == 0 or n == 0:
        return np.array([0])
    head = words[:, :k]
    change = np.any(head[1:] != head[:-1], axis=1)
    return np.concatenate([[0], np.flatnonzero(change) + 1])


def _block_diameters(vals: np.ndarray, starts: np.ndarray) -> np.ndarray:
    """max |v_i - v_j| within each contiguous block."""
    vals = np.asarray(vals)
    n = vals.size
    ends = np.append(starts[1:], n)
    sizes = ends - starts
    if np.all(vals.imag == 0):
        re = vals.real
        return np.maximum.reduceat(re, starts) - np.minimum.reduceat(re, starts)
    bmax = int(sizes.max())
    if bmax * bmax * starts.size <= 4_000_000:
        pad = np.full((starts.size, bmax), np.nan + 0j)
        offs = np.arange(n) - np.repeat(starts, sizes)
        pad[np.repeat(np.arange(starts.size), sizes), offs] = vals
        d = np.abs(pad[:, :, None] - pad[:, None, :])
        return np.nanmax(d.reshape(starts.size, -1), axis=1)
    out = np.empty(starts.size)
    for b, (s, e) in enumerate(zip(starts, ends)):
        block = vals[s:e]
        best = 0.0
        for c in range(0, block.size, 1024):
            best = max(best, float(np.abs(block[c:c + 1024, None] - block[None, :]).max()))
        out[b] = best
    return out


def evaluate(f: Potential, shift: TransitionStructure, prefix, tail, tol: float = 1e-12) -> complex:
    """f at the sequence ``prefix tail tail ...``."""
    point = sh.Point(tuple(prefix), tail if isinstance(tail, sh.PeriodicPoint) else sh.PeriodicPoint(tail))
    point.check(shift)
    L = max(f.horizon(tol), 1)
    return complex(f.values(point.symbols(L)[None, :])[0])


def _orbit_windows(cycles: np.ndarray, L: int) -> np.ndarray:
    """For each cycle (row) and each shift k, the first L symbols of sigma^k (cycle)*."""
    cycles = np.atleast_2d(np.asarray(cycles, dtype=np.int64))
    n, q = cycles.shape
    reps = -(-(q + L) // q) + 1
    long = np.tile(cycles, (1, reps))
    idx = np.arange(q)[:, None] + np.arange(L)[None, :]
    return long[:, idx]  # shape (n, q, L)


def birkhoff_sums(f: Potential, cycles: np.ndarray, tol: float = 1e-10, chunk: int = 1 << 16) -> np.ndarray:
    """S_q f along each cycle of a (count, q) array of periodic words."""
    cycles = np.atleast_2d(np.asarray(cycles))
    n, q = cycles.shape
    L = max(f.horizon(tol / max(q, 1)), 1)
    out = np.empty(n, dtype=complex)
    for s in range(0, n, chunk):
        win = _orbit_windows(cycles[s:s + chunk], L)
        vals = f.values(win.reshape(-1, L)).reshape(win.shape[0], q)
        out[s:s + chunk] = vals.sum(axis=1)
    return out


def birkhoff_sum(f: Potential, shift: TransitionStructure, p: sh.PeriodicPoint, tol: float = 1e-10) -> complex:
    if not p.is_admissible(shift):
        raise InadmissibleJunction(f"cycle {p.cycle} is not admissible")
    return complex(birkhoff_sums(f, np.array([p.cycle]), tol)[0])


def var_estimate(f: Potential, shift: TransitionStructure, m: int, sample_budget: int = 1 << 16,
                 lookahead: int | None = None, tol: float = 1e-13):
    """Lower bound on var_m(f) from cylinder representatives.

    Words of length ``m + lookahead`` sharing their first m symbols are
    completed with canonical tails and compared. Without an explicit
    lookahead it grows while the word count stays within ``sample_budget``.
    Returns ``(estimate, lookahead_used)``.
    """
    if isinstance(f, (TabulatedFunction,)) and lookahead is None:
        return f.var(m), max(f.depth - m, 0)
    if lookahead is None:
        lookahead = 1
        while sh.word_count(shift, m + lookahead + 1) <= sample_budget and lookahead < 40:
            lookahead += 1
    words = sh.enumerate_words(shift, m + lookahead, cap=max(sample_budget, sh.word_count(shift, m + lookahead)))
    L = max(f.horizon(tol), m + lookahead)
    vals = f.values(sh.complete_words(shift, words, L))
    return float(_block_diameters(vals, _prefix_blocks(words, m)).max()), lookahead


def var_upper(f: Potential, m: int) -> float:
    """var_bound(f, m), refusing potentials without an analytic bound."""
    v = f.var_bound(m)
    if v is None:
        raise NoAnalyticBound(f"{type(f).__name__} carries no variation bound")
    return v


@dataclass(frozen=True, eq=False)
class ThetaProfile:
    """A non-increasing weight sequence theta_1 >= theta_2 >= ... -> 0.

    ``values[m-1]`` holds theta_m for m up to ``len(values)``. Past the end,
    a geometric profile continues as ``D * r**m``; any other profile must end
    in zeros to be extended.
    """

    values: np.ndarray
    geometric: tuple | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("profile needs at least theta_1")
        if (v < 0).any():
            raise ValueError("profile entries must be non-negative")
        if (np.diff(v) > 1e-15 * max(v.max(), 1.0)).any():
            raise ValueError("profile must be non-increasing")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_geometric(cls, D: float, r: float, m_max: int = 64) -> "ThetaProfile":
        m = np.arange(1, m_max + 1)
        return cls(D * r ** m, geometric=(float(D), float(r)))

    @property
    def m_max(self) -> int:
        return self.values.size

    @property
    def C(self) -> float:
        """sup_m theta_m, which is theta_1 for a monotone profile."""
        return float(self.values[0])

    def __call__(self, m: int) -> float:
        if m < 1:
            raise ValueError("theta is indexed from m = 1")
        if m <= self.m_max:
            return float(self.values[m - 1])
        if self.geometric is not None:
            D, r = self.geometric
            return D * r ** m
        if self.values[-1] == 0:
            return 0.0
        raise NoAnalyticBound(f"profile known only up to m = {self.m_max}")

    def log_power(self, m: int, k: int) -> float:
        """log(theta_m ** k) with the convention theta**0 = 1."""
        if k == 0:
            return 0.0
        t = self(m)
        if self.geometric is not None and m > self.m_max:
            D, r = self.geometric
            return k * (math.log(D) + m * math.log(r))
        return k * math.log(t) if t > 0 else -math.inf

    def power(self, m: int, k: int) -> float:
        return math.exp(self.log_power(m, k))

    def dominating_geometric(self, r: float) -> tuple:
        """(D_lo, D_hi) with D_lo * r**m <= theta_m <= D_hi * r**m over the stored range."""
        m = np.arange(1, self.m_max + 1)
        with np.errstate(divide="ignore"):
            ratio = np.exp(np.log(self.values) - m * math.log(r))
        return float(ratio.min()), float(ratio.max())


def theta_of(f: Potential, m_max: int, shift: TransitionStructure | None = None,
             extra: int = 64, sample_budget: int = 1 << 14) -> ThetaProfile:
    """theta_m(f) = sup_{k >= m} var_k(f)**(1/k) for m = 1..m_max."""
    if isinstance(f, TabulatedFunction):
        K = max(f.depth, m_max)
        roots = np.array([f.var(k) ** (1.0 / k) for k in range(1, K + 1)])
    elif f.var_bound(1) is not None:
        K = m_max + extra
        logs = np.array([f.log_var_bound(k) for k in range(1, K + 1)])
        with np.errstate(invalid="ignore"):
            roots = np.exp(logs / np.arange(1, K + 1))
        roots = np.nan_to_num(roots, nan=0.0)
        tail = roots[-extra // 2:]
        if (np.diff(tail) > 0).any():
            raise NoAnalyticBound("variation bound is not monotone at the horizon")
    else:
        if shift is None:
            raise NoAnalyticBound("empirical profile needs the transition structure")
        K = 1
        while sh.word_count(shift, K + 2) <= sample_budget:
            K += 1
        if m_max > K:
            raise NoAnalyticBound(f"empirical variation only reaches depth {K}, asked for {m_max}")
        roots = np.array([var_estimate(f, shift, k, sample_budget)[0] ** (1.0 / k) for k in range(1, K + 1)])
    sup = np.maximum.accumulate(roots[::-1])[::-1]
    return ThetaProfile(sup[:m_max])


def project_Em(f: Potential, shift: TransitionStructure, m: int, mu: MarkovMeasure | None = None,
               M: int | None = None, tol: float = 1e-13) -> TabulatedFunction:
    """Conditional expectation of f on depth-m cylinders.

    The integral over [w] is replaced by a sum over depth-M sub-cylinders
    with exact Markov masses, each weighted by f at its canonical point; the
    error is at most var_M(f) and vanishes for tables of depth <= M.
    """
    if mu is None:
        mu = sh.parry_measure(shift)
    if M is None:
        M = m + 4
    if M < m:
        raise ValueError("integration depth M must be at least m")
    if isinstance(f, TabulatedFunction):
        if f.depth <= m:
            return f.lift(m)
        M = max(M, f.depth)
    words = sh.enumerate_words(shift, M)
    mass = mu.cylinder_mass(words)
    L = max(f.horizon(tol), M, 1)
    vals = f.values(sh.complete_words(shift, words, L))
    starts = _prefix_blocks(words, m)
    num = np.add.reduceat(mass * vals, starts)
    den = np.add.reduceat(mass, starts)
    return TabulatedFunction(shift, m, num / den)


def max_real_upper(f: Potential, shift: TransitionStructure, M: int = 8, tol: float = 1e-13) -> float:
    """Certified upper bound on max Re f: max over depth-M representatives plus var_M slack."""
    if isinstance(f, ConstantPotential):
        return complex(f.value).real
    if isinstance(f, TabulatedFunction):
        return float(f.table.real.max())
    M = min(M, _affordable_depth(shift, M))
    words = sh.enumerate_words(shift, M)
    vals = f.values(sh.complete_words(shift, words, max(f.horizon(tol), M, 1)))
    return float(vals.real.max()) + var_upper(f, M) + tol


def sup_upper(phi: Potential, shift: TransitionStructure, M: int = 8, tol: float = 1e-13) -> float:
    """Certified upper bound on the sup norm."""
    if isinstance(phi, ConstantPotential):
        return abs(complex(phi.value))
    if isinstance(phi, TabulatedFunction):
        return phi.sup_norm()
    M = min(M, _affordable_depth(shift, M))
    words = sh.enumerate_words(shift, M)
    vals = phi.values(sh.complete_words(shift, words, max(phi.horizon(tol), M, 1)))
    return float(np.abs(vals).max()) + var_upper(phi, M) + tol


def _affordable_depth(shift, M, budget=1 << 18):
    while M > 1 and sh.word_count(shift, M) > budget:
        M -= 1
    return M


def lipschitz_seminorm(phi: TabulatedFunction, theta: float):
    """([phi]_theta, V) where V[m] = sup_{k >= m} var_k(phi) / theta**k, m = 0..depth."""
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    v = phi.var_profile()
    scaled = v / theta ** np.arange(v.size)
    V = np.maximum.accumulate(scaled[::-1])[::-1]
    return float(V[0]), V


def lipschitz_norm(phi: TabulatedFunction, theta: float) -> float:
    return phi.sup_norm() + lipschitz_seminorm(phi, theta)[0]


def banach_norm(phi: TabulatedFunction, theta: ThetaProfile, atol: float = 0.0) -> float:
    """sup norm plus the least C with var_k(phi) <= C * theta_{k+1}**k for every k."""
    best = 0.0
    for k in range(phi.depth):
        v = phi.var(k)
        if v <= atol:
            continue
        lp = theta.log_power(k + 1, k)
        if lp == -math.inf:
            raise NotInSpace(f"var_{k} = {v:.3g} > 0 but theta_{k + 1} = 0")
        best = max(best, math.exp(math.log(v) - lp))
    return phi.sup_norm() + best


@dataclass(frozen=True)
class ConstantSet:
    """Numerical constants of the operator estimates for one potential and profile."""

    N: int
    C: float
    b1: float
    b2: float
    C1: float
    C2: float
    C3: float
    C4: float | None = None
    D: float | None = None
    r: float | None = None

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def closed_form_constants(N, C, b1, b2, D=None, r=None) -> ConstantSet:
    C1 = max(2 * N * b1, N * b1 * (3 * C * b2 + C))
    C2 = max(N * b1 + C1, 3 * N * b1 * (C * b2 + 1))
    C3 = 3 * N * b1 * b2 * (C + 3)
    C4 = None
    if D is not None and r is not None:
        C4 = D * D * N * b1 * r * r + D * N * b1 * (3 * D * D * r ** 3 * b2 + max(1.0, 2 * D * r * r))
    return ConstantSet(N=N, C=C, b1=b1, b2=b2, C1=C1, C2=C2, C3=C3, C4=C4, D=D, r=r)


def constants_for(f: Potential, theta: ThetaProfile, shift: TransitionStructure,
                  horizon: int | None = None, M: int = 8) -> ConstantSet:
    """b1, b2 certified for (f, theta) and the constants C, C1..C4 derived from them."""
    b1 = math.exp(max_real_upper(f, shift, M))
    K = horizon or theta.m_max
    if isinstance(f, TabulatedFunction):
        K = min(K, f.depth)
    log_ratios = []
    for k in range(0, K + 1):
        lv = f.log_var_bound(k) if k > 0 or f.var_bound(0) is not None else -math.inf
        if lv == -math.inf:
            log_ratios.append(-math.inf)
            continue
        lt = theta.log_power(k, k) if k > 0 else 0.0
        if lt == -math.inf:
            raise ProfileViolation(f"var_{k}(f) > 0 while theta_{k} = 0")
        log_ratios.append(lv - lt)
    log_ratios = np.array(log_ratios)
    if not isinstance(f, TabulatedFunction) and K >= 8:
        tail = log_ratios[-max(K // 4, 2):]
        finite = tail[np.isfinite(tail)]
        if finite.size > 1 and (np.diff(finite) > 1e-12).any():
            raise ProfileViolation("var_k / theta_k**k is still growing at the horizon")
    top = log_ratios.max()
    b2 = math.exp(top) if top > -math.inf else 1.0
    D, r = theta.geometric if theta.geometric is not None else (None, None)
    return closed_form_constants(shift.n, theta.C, b1, b2, D, r)
