"""Combinatorics of a one-sided topological Markov shift.

Symbols are 0-based inside the library. Anything serialized (words in JSON,
CSV, CLI output) uses the 1-based digits of the mathematical convention; see
:func:`format_word` and :func:`parse_word`.

Words of a fixed length are stored as 2-D integer arrays, one word per row,
always in lexicographic order. That order fixes the basis order of every
matrix built downstream, so it is part of the contract.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import DepthTooLarge, InadmissibleJunction, NotAperiodic

DEFAULT_WORD_CAP = 10**7


def check_aperiodic(A) -> int:
    """Return the smallest k with ``A**k`` entrywise positive.

    The search stops at Wielandt's bound ``(N-1)**2 + 1``; a primitive matrix
    always reaches positivity by then.
    """
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NotAperiodic(f"transition matrix must be square, got shape {A.shape}")
    n = A.shape[0]
    if n < 2:
        raise NotAperiodic("need at least two symbols")
    if not np.isin(A, (0, 1)).all():
        raise NotAperiodic("transition matrix entries must be 0 or 1")
    zero_rows = np.flatnonzero(A.sum(axis=1) == 0)
    zero_cols = np.flatnonzero(A.sum(axis=0) == 0)
    if zero_rows.size or zero_cols.size:
        row = int(zero_rows[0]) if zero_rows.size else None
        col = int(zero_cols[0]) if zero_cols.size else None
        raise NotAperiodic("transition matrix has an all-zero row or column",
                           zero_row=row, zero_col=col)
    B = (A != 0)
    P = B.copy()
    for k in range(1, (n - 1) ** 2 + 2):
        if P.all():
            return k
        # boolean product keeps the entries bounded
        P = (P.astype(np.int64) @ B.astype(np.int64)) > 0
    raise NotAperiodic(f"no power up to {(n - 1) ** 2 + 1} is positive")


@dataclass(frozen=True, eq=False)
class TransitionStructure:
    """A zero-one aperiodic matrix together with derived data.

    Build it with ``TransitionStructure.from_rows(rows)``; the constructor
    validates aperiodicity and stores the exponent.
    """

    matrix: np.ndarray
    aperiodicity_exponent: int

    @classmethod
    def from_rows(cls, rows) -> "TransitionStructure":
        A = np.array(rows, dtype=np.int64)
        k = check_aperiodic(A)
        A = A.astype(np.int8)
        A.setflags(write=False)
        return cls(A, k)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def symbol_dtype(self):
        return np.int8 if self.n <= 127 else np.int32

    def __repr__(self):
        rows = self.matrix.tolist()
        return f"TransitionStructure(rows={rows}, k={self.aperiodicity_exponent})"

    @cached_property
    def perron(self):
        """(lambda, right vector, left vector) of the Perron root, by power iteration."""
        return _perron_power(self.matrix.astype(float))

    @cached_property
    def canonical_cycles(self) -> tuple:
        return tuple(_shortest_cycle(self, j) for j in range(self.n))

    def continuation(self, length: int) -> np.ndarray:
        """Row j holds the first `length` symbols following j along its canonical cycle."""
        out = np.empty((self.n, length), dtype=self.symbol_dtype)
        for j, cyc in enumerate(self.canonical_cycles):
            q = len(cyc)
            out[j] = [cyc[(t + 1) % q] for t in range(length)]
        return out


def _perron_power(A: np.ndarray, rtol: float = 1e-12, maxiter: int = 100_000):
    n = A.shape[0]
    # A + I is primitive with the same Perron vectors and no peripheral eigenvalues
    B = A + np.eye(n)
    v = np.ones(n) / n
    u = np.ones(n) / n
    lam = 0.0
    for _ in range(maxiter):
        v_new = B @ v
        u_new = B.T @ u
        lam_new = v_new.sum() / v.sum()
        v_new /= v_new.sum()
        u_new /= u_new.sum()
        done = abs(lam_new - lam) <= rtol * lam_new and np.abs(v_new - v).max() <= rtol
        v, u, lam = v_new, u_new, lam_new
        if done:
            break
    lam = lam - 1.0
    # polish with a Rayleigh quotient on A itself
    lam = float(u @ A @ v / (u @ v))
    return lam, v, u


def word_count(shift: TransitionStructure, m: int) -> int:
    """Exact number of admissible words of length m (Python integers, no overflow)."""
    if m < 0:
        raise ValueError("word length must be non-negative")
    if m == 0:
        return 1
    if m == 1:
        return shift.n
    A = [[int(x) for x in row] for row in shift.matrix]
    vec = [1] * shift.n
    for _ in range(m - 1):
        vec = [sum(A[i][j] * vec[j] for j in range(shift.n)) for i in range(shift.n)]
    return sum(vec)


def periodic_count(shift: TransitionStructure, q: int) -> int:
    """trace(A**q) in exact integer arithmetic."""
    A = [[int(x) for x in row] for row in shift.matrix]
    n = shift.n
    P = [[int(i == j) for j in range(n)] for i in range(n)]
    for _ in range(q):
        P = [[sum(P[i][k] * A[k][j] for k in range(n)) for j in range(n)] for i in range(n)]
    return sum(P[i][i] for i in range(n))


def _extend(shift: TransitionStructure, words: np.ndarray) -> np.ndarray:
    rows, cols = np.nonzero(shift.matrix[words[:, -1]])
    # np.nonzero is row-major, so the result stays lexicographic
    out = np.empty((rows.size, words.shape[1] + 1), dtype=words.dtype)
    out[:, :-1] = words[rows]
    out[:, -1] = cols
    return out


def enumerate_words(shift: TransitionStructure, m: int, cap: int = DEFAULT_WORD_CAP) -> np.ndarray:
    """All admissible words of length m, lexicographically, as an (count, m) array."""
    if m < 0:
        raise ValueError("word length must be non-negative")
    count = word_count(shift, m)
    if count > cap:
        raise DepthTooLarge(f"{count} words of length {m} exceed the cap {cap}")
    if m == 0:
        return np.zeros((1, 0), dtype=shift.symbol_dtype)
    words = np.arange(shift.n, dtype=shift.symbol_dtype).reshape(-1, 1)
    for _ in range(m - 1):
        words = _extend(shift, words)
    return words


def words_from(shift: TransitionStructure, start: int, m: int) -> np.ndarray:
    """Admissible words of length m beginning with `start`, lexicographically."""
    words = np.array([[start]], dtype=shift.symbol_dtype)
    for _ in range(m - 1):
        words = _extend(shift, words)
    return words


def word_codes(words: np.ndarray, n: int) -> np.ndarray:
    """Base-n integer codes; monotone in lexicographic order for fixed length."""
    words = np.asarray(words)
    codes = np.zeros(words.shape[0], dtype=np.int64)
    for col in range(words.shape[1]):
        codes = codes * n + words[:, col].astype(np.int64)
    return codes


def is_admissible(shift: TransitionStructure, word) -> bool:
    w = np.asarray(word, dtype=np.int64)
    if w.size < 2:
        return True
    return bool(shift.matrix[w[:-1], w[1:]].all())


def topological_entropy(shift: TransitionStructure) -> float:
    return math.log(shift.perron[0])


@dataclass(frozen=True, eq=False)
class MarkovMeasure:
    """Markov measure given by an initial vector p and a stochastic matrix P."""

    p: np.ndarray
    P: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        P = np.asarray(self.P, dtype=float)
        if p.ndim != 1 or P.shape != (p.size, p.size):
            raise ValueError("shape mismatch between p and P")
        if (p <= 0).any() or abs(p.sum() - 1) > 1e-10:
            raise ValueError("p must be a positive probability vector")
        if (P < 0).any() or np.abs(P.sum(axis=1) - 1).max() > 1e-10:
            raise ValueError("P must be row stochastic")
        if np.abs(p @ P - p).max() > 1e-10:
            raise ValueError("p is not stationary for P")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "P", P)

    def check_support(self, shift: TransitionStructure) -> None:
        if not np.array_equal(self.P > 0, shift.matrix > 0):
            raise ValueError("P must be positive exactly where A is one")

    def cylinder_mass(self, words: np.ndarray) -> np.ndarray:
        words = np.atleast_2d(np.asarray(words))
        n = words.shape[0]
        if words.shape[1] == 0:
            return np.ones(n)
        mass = self.p[words[:, 0]].copy()
        for col in range(words.shape[1] - 1):
            mass *= self.P[words[:, col], words[:, col + 1]]
        return mass


def parry_measure(shift: TransitionStructure) -> MarkovMeasure:
    """The measure of maximal entropy built from the Perron data of A."""
    lam, v, u = shift.perron
    A = shift.matrix.astype(float)
    P = A * v[None, :] / (lam * v[:, None])
    P /= P.sum(axis=1, keepdims=True)
    p = u * v
    p /= p.sum()
    return MarkovMeasure(p, P)


@dataclass(frozen=True)
class PeriodicPoint:
    """The sequence ``cycle cycle cycle ...``; q is the representation length."""

    cycle: tuple

    def __post_init__(self):
        object.__setattr__(self, "cycle", tuple(int(s) for s in self.cycle))
        if not self.cycle:
            raise ValueError("a periodic point needs a non-empty cycle")

    @property
    def q(self) -> int:
        return len(self.cycle)

    def symbols(self, length: int) -> np.ndarray:
        reps = -(-length // self.q)
        return np.tile(np.array(self.cycle, dtype=np.int64), max(reps, 1))[:length]

    def is_admissible(self, shift: TransitionStructure) -> bool:
        c = self.cycle
        return is_admissible(shift, c) and bool(shift.matrix[c[-1], c[0]])


@dataclass(frozen=True)
class Point:
    """An eventually periodic sequence: a finite prefix followed by ``tail``."""

    prefix: tuple
    tail: PeriodicPoint

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(int(s) for s in self.prefix))

    def symbols(self, length: int) -> np.ndarray:
        pre = np.array(self.prefix, dtype=np.int64)
        if length <= pre.size:
            return pre[:length]
        return np.concatenate([pre, self.tail.symbols(length - pre.size)])

    def check(self, shift: TransitionStructure) -> None:
        if not self.tail.is_admissible(shift):
            raise InadmissibleJunction(f"tail {self.tail.cycle} is not an admissible cycle")
        seq = self.prefix + self.tail.cycle[:1]
        if not is_admissible(shift, seq):
            raise InadmissibleJunction(f"prefix {self.prefix} does not glue onto tail {self.tail.cycle}")


def as_point(x) -> Point:
    if isinstance(x, Point):
        return x
    if isinstance(x, PeriodicPoint):
        return Point((), x)
    raise TypeError(f"expected Point or PeriodicPoint, got {type(x).__name__}")


def periodic_words(shift: TransitionStructure, q: int, cap: int = DEFAULT_WORD_CAP) -> np.ndarray:
    """Cycles of length q whose wrap transition is admissible, as a (trace(A^q), q) array."""
    if q < 1:
        raise ValueError("period must be positive")
    count = word_count(shift, q)
    if count > cap:
        raise DepthTooLarge(f"{count} candidate words of length {q} exceed the cap {cap}")
    words = enumerate_words(shift, q, cap)
    keep = shift.matrix[words[:, -1], words[:, 0]] == 1
    return words[keep]


def periodic_points(shift: TransitionStructure, q: int, cap: int = DEFAULT_WORD_CAP) -> list:
    return [PeriodicPoint(tuple(row)) for row in periodic_words(shift, q, cap).tolist()]


def _shortest_cycle(shift: TransitionStructure, j: int) -> tuple:
    for length in range(1, shift.n + 1):
        words = words_from(shift, j, length)
        ok = np.flatnonzero(shift.matrix[words[:, -1], j] == 1)
        if ok.size:
            return tuple(int(s) for s in words[ok[0]])
    raise AssertionError("aperiodic matrices always have a return path")  # pragma: no cover


def canonical_tail(shift: TransitionStructure, j: int) -> PeriodicPoint:
    """Shortest admissible cycle starting at j, lexicographically smallest among ties."""
    return PeriodicPoint(shift.canonical_cycles[j])


def complete_words(shift: TransitionStructure, words: np.ndarray, length: int) -> np.ndarray:
    """Extend each word by the canonical tail of its last symbol to `length` symbols."""
    words = np.atleast_2d(np.asarray(words))
    n, m = words.shape
    if m >= length:
        return words.astype(np.int64)
    out = np.empty((n, length), dtype=np.int64)
    if m == 0:
        out[:] = PeriodicPoint(shift.canonical_cycles[0]).symbols(length)
        return out
    out[:, :m] = words
    out[:, m:] = shift.continuation(length - m)[words[:, -1]]
    return out


def branching_symbol(shift: TransitionStructure):
    """A symbol i reached from at least two symbols, and two of those predecessors.

    Returns ``(i, (j1, j2))`` with ``j1 < j2`` and ``A[j1, i] == A[j2, i] == 1``.
    """
    A = shift.matrix
    for i in range(shift.n):
        preds = np.flatnonzero(A[:, i] == 1)
        if preds.size >= 2:
            return i, (int(preds[0]), int(preds[1]))
    raise AssertionError("aperiodic matrices have a column with two ones")  # pragma: no cover


def metric_distance(x, y, theta: float) -> float:
    """``theta ** m0`` with m0 the first index where the two sequences differ."""
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    x, y = as_point(x), as_point(y)
    # eventually periodic sequences that agree this far agree forever
    horizon = max(len(x.prefix), len(y.prefix)) + math.lcm(x.tail.q, y.tail.q)
    diff = np.flatnonzero(x.symbols(horizon) != y.symbols(horizon))
    if diff.size == 0:
        return 0.0
    return float(theta ** int(diff[0]))


def format_word(word, n: int) -> str:
    digits = [str(int(s) + 1) for s in word]
    return "".join(digits) if n <= 9 else ".".join(digits)


def parse_word(text: str, n: int | None = None) -> tuple:
    if text == "":
        return ()
    parts = text.split(".") if (n is not None and n > 9) or "." in text else list(text)
    return tuple(int(p) - 1 for p in parts)


def load_matrix(source) -> TransitionStructure:
    """Read ``{"n": N, "rows": [[...], ...]}`` from a dict, a JSON string path, or a Path."""
    if isinstance(source, (str, Path)):
        source = json.loads(Path(source).read_text())
    rows = source["rows"]
    if "n" in source and int(source["n"]) != len(rows):
        raise ValueError(f"declared n={source['n']} but {len(rows)} rows given")
    return TransitionStructure.from_rows(rows)


def dump_matrix(shift: TransitionStructure) -> dict:
    return {"n": shift.n, "rows": shift.matrix.astype(int).tolist()}


# a few named structures used throughout tests and examples
def full_shift(n: int) -> TransitionStructure:
    return TransitionStructure.from_rows(np.ones((n, n), dtype=int))


def golden_mean() -> TransitionStructure:
    return TransitionStructure.from_rows([[1, 1], [1, 0]])
