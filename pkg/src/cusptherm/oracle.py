"""Brute-force group-side checks: reduced-word enumeration, orbit counting,
critical exponents and marked length spectra.  No symbolic coding is used."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import brentq

from .fuchsian import FuchsianRep, label_name, partner, word_map
from .hypgeom import translation_length

BIN_WIDTH = 0.01


class OracleError(ValueError):
    pass


def _generators(rep: FuchsianRep) -> np.ndarray:
    return np.array([m.matrix() for m in rep.maps])


@dataclass
class WordEnumeration:
    """Orbit statistics of all reduced words of length ``<= N``.

    Nothing is stored per word.  For every requested direction ``(a, b)`` a
    histogram of ``d^{a,b}`` is kept per word length, with bins of width
    ``BIN_WIDTH``; shell counts and extreme distances are kept as well.
    """

    N: int
    n_labels: int
    directions: tuple[tuple[float, float], ...]
    shell_counts: np.ndarray
    hist: dict  # direction -> array (N + 1, n_bins)
    min_distance: dict  # direction -> array (N + 1,) of the smallest d^{a,b} at each length
    bin_width: float = BIN_WIDTH
    names: tuple[str, str] = ("", "")

    def counts_up_to(self, direction, T, max_length: int | None = None) -> np.ndarray:
        """``#{gamma : |gamma| <= max_length, d^{a,b} <= T}`` for an array of ``T``."""
        h = self.hist[tuple(direction)]
        n = self.N if max_length is None else max_length
        cum = np.cumsum(h[: n + 1].sum(axis=0))
        idx = np.clip(np.floor(np.asarray(T) / self.bin_width).astype(int), 0, len(cum) - 1)
        return cum[idx]

    def complete_radius(self, direction) -> float:
        """Every word of length ``N`` lies outside this radius (up to one bin)."""
        return float(self.min_distance[tuple(direction)][self.N])


def _cosh_dist(m) -> np.ndarray:
    a, b, c, d = m
    return np.maximum((a * a + b * b + c * c + d * d) / 2, 1.0)


def enumerate_words(
    rep1: FuchsianRep,
    rep2: FuchsianRep | None = None,
    N: int = 16,
    directions=((1.0, 0.0),),
    prefix_length: int = 6,
    threads: int = 1,
) -> WordEnumeration:
    """Stream every reduced word of length ``1 .. N`` through both representations.

    Work is split into subtrees below the reduced prefixes of length
    ``prefix_length``; each returns integer partial sums, and these are
    added in prefix order, so the result does not depend on ``threads``.
    """
    if N < 1:
        raise OracleError("N must be >= 1")
    rep2 = rep2 or rep1
    if rep1.k != rep2.k:
        raise OracleError("representations must share the generating set")
    directions = tuple((float(a), float(b)) for a, b in directions)
    for a, b in directions:
        if a < 0 or b < 0 or a + b == 0:
            raise OracleError("directions need a, b >= 0 and a + b > 0")
    n = 2 * rep1.k
    G1, G2 = _generators(rep1), _generators(rep2)
    two = rep2 is not rep1
    disp = max(math.acosh(max(1.0, float((g * g).sum()) / 2)) for g in np.concatenate([G1, G2]))
    dmax = max(a + b for a, b in directions) * N * disp + 1
    n_bins = int(dmax / BIN_WIDTH) + 2

    def fresh():
        return (np.zeros(N + 1, dtype=np.int64),
                {d: np.zeros((N + 1, n_bins), dtype=np.int64) for d in directions},
                {d: np.full(N + 1, np.inf) for d in directions})

    def record(acc, level, m1, m2):
        shell, hist, mind = acc
        shell[level] += m1[0].size
        d1 = np.arccosh(_cosh_dist(m1))
        d2 = np.arccosh(_cosh_dist(m2)) if two else d1
        for (a, b) in directions:
            v = a * d1 + b * d2
            idx = np.minimum((v / BIN_WIDTH).astype(np.int64), n_bins - 1)
            hist[(a, b)][level] += np.bincount(idx, minlength=n_bins)
            mind[(a, b)][level] = min(mind[(a, b)][level], float(v.min()))

    def subtree(w):
        acc = fresh()
        m1 = _as_arrays(word_map(rep1.maps, w))
        m2 = _as_arrays(word_map(rep2.maps, w)) if two else m1
        last, level = np.array([w[-1]], dtype=np.int8), len(w)
        # breadth-first below the prefix
        while level < N:
            nm1, nm2, nl = [], [], []
            for s in range(n):
                keep = last != partner(s)
                nm1.append(_mul(m1, keep, G1[s]))
                nm2.append(_mul(m2, keep, G2[s]) if two else None)
                nl.append(np.full(int(keep.sum()), s, dtype=np.int8))
            m1 = tuple(np.concatenate([x[j] for x in nm1]) for j in range(4))
            m2 = tuple(np.concatenate([x[j] for x in nm2]) for j in range(4)) if two else m1
            last = np.concatenate(nl)
            level += 1
            record(acc, level, m1, m2)
        return acc

    total = fresh()
    shell, hist, mind = total
    shell[0] = 1
    for d in directions:
        hist[d][0, 0] = 1
        mind[d][0] = 0.0
    p = min(prefix_length, N)
    for plen in range(1, p + 1):
        for w in _reduced_words(n, plen):
            m1 = _as_arrays(word_map(rep1.maps, w))
            record(total, plen, m1, _as_arrays(word_map(rep2.maps, w)) if two else m1)
    prefixes = list(_reduced_words(n, p)) if p < N else []

    def merge(part):
        sh, hi, mi = part
        shell[:] += sh
        for d in directions:
            hist[d] += hi[d]
            np.minimum(mind[d], mi[d], out=mind[d])

    if threads > 1 and prefixes:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            for part in pool.map(subtree, prefixes):
                merge(part)
    else:
        for w in prefixes:
            merge(subtree(w))
    return WordEnumeration(N, n, directions, shell, hist, mind, BIN_WIDTH, (rep1.name, rep2.name))


def _as_arrays(m):
    return (np.array([m.a]), np.array([m.b]), np.array([m.c]), np.array([m.d]))


def _mul(m, keep, g):
    a, b, c, d = (x[keep] for x in m)
    return (a * g[0, 0] + b * g[1, 0], a * g[0, 1] + b * g[1, 1], c * g[0, 0] + d * g[1, 0], c * g[0, 1] + d * g[1, 1])


def _reduced_words(n: int, length: int):
    if length == 0:
        yield ()
        return
    for w in _reduced_words(n, length - 1):
        for s in range(n):
            if not w or s != partner(w[-1]):
                yield w + (s,)


def manhattan_distance(d1: float, d2: float, a: float, b: float) -> float:
    """``a d(o, rho1(g) o) + b d(o, rho2(g) o)``."""
    if a < 0 or b < 0 or a + b == 0:
        raise OracleError("weights need a, b >= 0 and a + b > 0")
    return a * d1 + b * d2


def word_distances(rep1: FuchsianRep, rep2: FuchsianRep, word) -> tuple[float, float]:
    m1, m2 = word_map(rep1.maps, word), word_map(rep2.maps, word)
    f = lambda m: math.acosh(max(1.0, (m.a**2 + m.b**2 + m.c**2 + m.d**2) / 2))
    return f(m1), f(m2)


# ---------------------------------------------------------------------------
# critical exponents
# ---------------------------------------------------------------------------


class InsufficientDataError(OracleError):
    pass


@dataclass
class ExponentEstimate:
    """Critical exponent of one direction from complete word-length shells.

    ``raw`` is the first zero of ``s -> log(Z_N(s) / Z_{N-step}(s))`` where
    ``Z_n(s)`` sums ``exp(-s d^{a,b})`` over reduced words of length ``n``.
    Its bias decays like ``1/N``; ``value`` removes the leading term using the
    same root at ``N - step``.  ``error`` is ``|value - raw|``.  ``slope`` is
    the least-squares slope of ``log N(T)`` on the last ``slope_window`` of the
    complete ball, kept as a diagnostic.
    """

    direction: tuple[float, float]
    value: float
    raw: float
    previous: float
    error: float
    slope: float
    complete_radius: float
    N: int
    step: int

    def as_row(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(self).items()}


def _shell_sum(hist_row: np.ndarray, centres: np.ndarray, s: float) -> float:
    return float((hist_row * np.exp(-s * centres)).sum())


def _first_zero(f, lo: float, hi: float, n_grid: int = 400) -> float:
    grid = np.linspace(lo, hi, n_grid)
    vals = np.array([f(s) for s in grid])
    j = np.flatnonzero((vals[:-1] > 0) & (vals[1:] <= 0))
    if not len(j):
        raise InsufficientDataError("shell ratio never changes sign on the search interval")
    return float(brentq(f, grid[j[0]], grid[j[0] + 1], xtol=1e-12))


def shell_root(enum: WordEnumeration, direction, n: int, step: int = 4, s_max: float = 4.0) -> float:
    h = enum.hist[tuple(direction)]
    centres = (np.arange(h.shape[1]) + 0.5) * enum.bin_width
    if n - step < 1 or n > enum.N:
        raise InsufficientDataError(f"shells {n - step} and {n} are not both available")
    f = lambda s: math.log(_shell_sum(h[n], centres, s) / _shell_sum(h[n - step], centres, s)) / step
    return _first_zero(f, 1e-3, s_max)


def counting_slope(enum: WordEnumeration, direction, window: float = 2.0) -> float:
    tc = enum.complete_radius(direction)
    if tc <= window:
        raise InsufficientDataError(f"complete radius {tc:.3f} is below the fitting window {window}")
    T = np.linspace(tc - window, tc, 200)
    return float(np.polyfit(T, np.log(enum.counts_up_to(direction, T)), 1)[0])


def estimate_critical_exponent(
    enum: WordEnumeration, a: float = 1.0, b: float = 0.0, step: int = 4, slope_window: float = 2.0
) -> ExponentEstimate:
    d = (float(a), float(b))
    if d not in enum.hist:
        raise OracleError(f"direction {d} was not enumerated")
    N = enum.N
    if N - 2 * step < 1:
        raise InsufficientDataError(f"need N > {2 * step} for a step of {step}, got N = {N}")
    s_max = 4.0 / (a + b)
    raw = shell_root(enum, d, N, step, s_max)
    prev = shell_root(enum, d, N - step, step, s_max)
    # leading 1/n bias removed from two shell depths
    value = (N * raw - (N - step) * prev) / step
    try:
        slope = counting_slope(enum, d, slope_window)
    except InsufficientDataError:
        slope = float("nan")
    return ExponentEstimate(d, value, raw, prev, abs(value - raw), slope, enum.complete_radius(d), N, step)


@dataclass
class CrossCheck:
    direction: tuple[float, float]
    oracle: float
    oracle_error: float
    bowen: float
    difference: float
    tolerance: float

    @property
    def agrees(self) -> bool:
        return abs(self.difference) <= self.tolerance


def cross_check_bowen(
    enum: WordEnumeration,
    graph,
    tau,
    kappa=None,
    tolerance: float = 0.05,
    tol=None,
) -> list[CrossCheck]:
    """Compare group-side exponents with Bowen roots of the coded potentials."""
    from .pressure import DEFAULT_TOL, bowen_root

    tol = tol or DEFAULT_TOL
    rows = []
    for a, b in enum.directions:
        est = estimate_critical_exponent(enum, a, b)
        root = bowen_root(graph, tau, kappa if b else None, a, b, tol).root
        rows.append(CrossCheck((a, b), est.value, est.error, root, est.value - root, tolerance))
    return rows


# ---------------------------------------------------------------------------
# marked length spectrum
# ---------------------------------------------------------------------------


def _canonical_class(w: tuple[int, ...]) -> tuple[int, ...]:
    inv = tuple(partner(s) for s in reversed(w))
    rots = [w[j:] + w[:j] for j in range(len(w))] + [inv[j:] + inv[:j] for j in range(len(w))]
    return min(rots)


def _is_primitive(w) -> bool:
    n = len(w)
    return all(w != w[d:] + w[:d] for d in range(1, n) if n % d == 0)


def cyclically_reduced_classes(n_labels: int, max_length: int, primitive: bool = True):
    """One representative per conjugacy class of cyclically reduced words."""
    seen = set()
    for length in range(1, max_length + 1):
        for w in _reduced_words(n_labels, length):
            if length > 1 and w[0] == partner(w[-1]):
                continue
            if primitive and not _is_primitive(w):
                continue
            c = _canonical_class(w)
            if c not in seen:
                seen.add(c)
                yield c


def marked_length_spectrum(rep: FuchsianRep, cutoff: float, max_length: int = 10) -> list[tuple[tuple[int, ...], float]]:
    """Primitive hyperbolic classes with translation length ``<= cutoff``, shortest first."""
    if cutoff <= 0:
        raise OracleError("cutoff must be positive")
    out = []
    for w in cyclically_reduced_classes(2 * rep.k, max_length):
        m = word_map(rep.maps, w)
        if abs(abs(m.trace) - 2) <= 1e-9:
            continue
        length, _ = translation_length(m)
        if length <= cutoff:
            out.append((w, length))
    out.sort(key=lambda t: (t[1], len(t[0]), t[0]))
    return out


def export_spectrum_csv(spectrum, path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["word", "length"])
        for w, l in spectrum:
            wr.writerow([" ".join(label_name(s) for s in w), repr(float(l))])
