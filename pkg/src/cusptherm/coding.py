"""Classical and induced symbolic codings of the geodesic flow.

Index conventions
-----------------
A classical sequence ``x`` lies in the good set ``A`` at time ``i`` when its
window ``x[i - N# .. i + N*/2]`` (length ``N*``) is not a cusp pattern, i.e.
not a factor of a periodic repetition of a vertex cycle.  The induced map
jumps from one visit of ``A`` to the next; the jump length is the return
time ``r``.  A Type I letter has ``r = 1`` and word ``x[-N# .. N*/2 + 1]``;
a Type II letter has ``r >= 2`` and word ``x[-N# .. r + N*/2]``, which is
``a``, then a cusp run of length ``r + N* - 2``, then ``c``.  We write
``r - 1 = l N* + k`` with level ``l`` and offset ``k``.

Reduced alphabet
----------------
The potentials only see the future ``x[1 ..]`` of a letter.  Letters that
share their future and their run-length bookkeeping are merged into one
*edge* of a finite graph whose nodes are ``(lookahead, run)``:

* ``lookahead`` is ``x[i + 1 .. i + N*/2]``;
* ``run`` is the length of the longest cusp-pattern suffix of
  ``x[.. i + N*/2]`` (always ``< N*`` at a visit of ``A``).

Each edge carries one future word, so any future-only potential is constant
on it.  Paths in this graph correspond one to one with induced-letter paths
up to the finite choice of past at the first node, so the spectral radius
(and every periodic-orbit sum) is unchanged by the merge.  ``past_count``
gives the number of genuine letters behind each node.
"""

from __future__ import annotations

import cmath
import csv
import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .fuchsian import FuchsianRep, cusp_words, label_name, partner, vertex_cycles, word_map
from .hypgeom import TWO_PI, BoundaryInterval, MobiusMap, angle

TYPE_I = 1
TYPE_II = 2
DEFAULT_STATE_BUDGET = 200_000


class CodingError(ValueError):
    """Inadmissible sequences or invalid coding parameters."""


def is_admissible(word) -> bool:
    return all(word[j + 1] != partner(word[j]) for j in range(len(word) - 1))


def _check_admissible(word) -> None:
    for j in range(len(word) - 1):
        if word[j + 1] == partner(word[j]):
            raise CodingError(
                f"inadmissible transition {label_name(word[j])} -> {label_name(word[j + 1])} at position {j}"
            )


def admissible_words(n_labels: int, length: int):
    """All words of the given length with no ``s`` followed by ``s'``."""
    if length == 0:
        yield ()
        return
    for w in admissible_words(n_labels, length - 1):
        for s in range(n_labels):
            if not w or s != partner(w[-1]):
                yield w + (s,)


# ---------------------------------------------------------------------------
# classical shift
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClassicalShift:
    n_labels: int

    @cached_property
    def matrix(self) -> np.ndarray:
        m = np.ones((self.n_labels, self.n_labels), dtype=np.int64)
        for s in range(self.n_labels):
            m[s, partner(s)] = 0
        return m

    def successors(self, s: int) -> list[int]:
        return [t for t in range(self.n_labels) if t != partner(s)]

    def is_primitive(self, max_power: int | None = None) -> bool:
        n = self.n_labels
        max_power = max_power or (n - 1) ** 2 + 1
        p = np.eye(n, dtype=bool)
        a = self.matrix.astype(bool)
        for _ in range(max_power):
            p = (p.astype(np.int64) @ a.astype(np.int64)) > 0
            if p.all():
                return True
        return False

    @property
    def spectral_radius(self) -> float:
        return float(max(abs(np.linalg.eigvals(self.matrix))))


def build_classical(rep: FuchsianRep) -> ClassicalShift:
    shift = ClassicalShift(2 * rep.k)
    if rep.k >= 2 and not shift.is_primitive():
        raise CodingError("classical transition matrix is not primitive")
    return shift


# ---------------------------------------------------------------------------
# cusp patterns
# ---------------------------------------------------------------------------


class CuspPatterns:
    """Factors of the periodic repetitions of all vertex-cycle words."""

    def __init__(self, words, max_len: int):
        self.words = sorted(set(words))
        self.period = math.lcm(*(len(w) for w in self.words))
        phases = set()
        for w in self.words:
            rep = w * (self.period // len(w))
            for o in range(self.period):
                phases.add(rep[o:] + rep[:o])
        self.phases = sorted(phases)
        self.max_len = max_len
        self.factors: list[set] = [set() for _ in range(max_len + 1)]
        for q in self.phases:
            ext = q * (max_len // self.period + 2)
            for m in range(1, max_len + 1):
                self.factors[m].add(ext[:m])

    def is_pattern(self, word) -> bool:
        word = tuple(word)
        if len(word) <= self.max_len:
            return word in self.factors[len(word)]
        return any(self._matches(q, word) for q in self.phases)

    def _matches(self, q, word) -> bool:
        p = len(q)
        return all(word[j] == q[j % p] for j in range(len(word)))

    def lps(self, word) -> int:
        """Length of the longest suffix of ``word`` that is a pattern."""
        word = tuple(word)
        for m in range(min(len(word), self.max_len), 0, -1):
            if word[-m:] in self.factors[m]:
                return m
        return 0

    def phase_of(self, word) -> tuple[int, ...]:
        """The unique periodic sequence (as a phase tuple) ending with ``word``."""
        word = tuple(word)
        hits = []
        for q in self.phases:
            p = len(q)
            # q read periodically; find offset o with q[(o + j) % p] == word[j]
            for o in range(p):
                if all(q[(o + j) % p] == word[j] for j in range(len(word))):
                    hits.append(q[(o + len(word)) % p:] + q[:(o + len(word)) % p])
        hits = sorted(set(hits))
        if len(hits) != 1:
            raise CodingError(f"cusp continuation of {word} is not unique ({len(hits)} candidates)")
        return hits[0]

    def continuation(self, word, n: int) -> tuple[int, ...]:
        q = self.phase_of(word)
        p = len(q)
        return tuple(q[j % p] for j in range(n))


# ---------------------------------------------------------------------------
# induced shift
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CodingParams:
    n_star: int
    n_cusp: int  # N(c), the lcm of cycle lengths
    L_max: int

    @property
    def N_star(self) -> int:
        return 4 * self.n_star * self.n_cusp

    @property
    def N_hash(self) -> int:
        return self.N_star // 2 - 1

    @property
    def half(self) -> int:
        return self.N_star // 2

    @property
    def r_max(self) -> int:
        return (self.L_max + 1) * self.N_star


@dataclass(frozen=True)
class InducedLetter:
    """One letter of the induced alphabet, written from ``x[-N#]``."""

    word: tuple[int, ...]
    kind: int
    return_time: int
    shape: tuple = ()
    level: int = 0
    offset: int = 0

    def __str__(self) -> str:
        return " ".join(label_name(s) for s in self.word)


@dataclass
class InducedShift:
    params: CodingParams
    n_labels: int
    patterns: CuspPatterns
    states: list[tuple[tuple[int, ...], int]]
    src: np.ndarray
    dst: np.ndarray
    kind: np.ndarray
    rtime: np.ndarray
    last: np.ndarray  # appended symbol (Type I) or terminal c (Type II)
    continuations: dict = field(default_factory=dict)  # state -> forced cusp continuation

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_edges(self) -> int:
        return len(self.src)

    @cached_property
    def state_index(self) -> dict:
        return {s: j for j, s in enumerate(self.states)}

    def level_offset(self, e: int) -> tuple[int, int]:
        r = int(self.rtime[e])
        return (r - 1) // self.params.N_star, (r - 1) % self.params.N_star

    def future_word(self, e: int) -> tuple[int, ...]:
        """``x[1 .. r + N*/2]`` for edge ``e``."""
        L, _ = self.states[self.src[e]]
        r = int(self.rtime[e])
        if self.kind[e] == TYPE_I:
            return L + (int(self.last[e]),)
        cont = self.continuations[int(self.src[e])]
        return L + cont[: r - 1] + (int(self.last[e]),)

    def group_word(self, e: int) -> tuple[int, ...]:
        """Labels ``x[1 .. r]`` whose product moves the base point."""
        return self.future_word(e)[: int(self.rtime[e])]

    def past_count(self, state: int) -> int:
        """Number of pasts ``x[-N# .. 0]`` compatible with a node."""
        L, rho = self.states[state]
        h = self.params.half
        b = self.n_labels - 1
        if rho < h:
            return b ** h
        j = rho - h
        return (b - 1) * b ** (h - j - 1)

    # -- counts and checks ---------------------------------------------------

    def type1_letter_count(self) -> int:
        counts = [self.past_count(u) for u in range(self.n_states)]
        return int(sum(counts[u] for u, k in zip(self.src, self.kind) if k == TYPE_I))

    def type2_letter_count(self) -> int:
        return int(np.sum(self.kind == TYPE_II)) * (self.n_labels - 2)

    def shapes(self) -> list[tuple]:
        """Type II shapes ``(k, a, w, c)``; ``w`` is the cusp phase after ``a``."""
        out = set()
        N = self.params.N_star
        for e in np.flatnonzero(self.kind == TYPE_II):
            u = int(self.src[e])
            L, _ = self.states[u]
            fw = self.future_word(e)
            # the cusp run starts at x[-N# + 1]; recover it backwards from L
            run_start = self.patterns.continuation(tuple(reversed(L)), self.params.N_hash)
            back = tuple(reversed(run_start))
            w = (back + L)[:N]
            k = (int(self.rtime[e]) - 1) % N
            for a in range(self.n_labels):
                if a != partner(w[0]) and not self.patterns.is_pattern((a,) + w[: N - 1]):
                    out.add((k, a, w, int(self.last[e])))
        return sorted(out)

    def type2_letters(self, max_level: int | None = None):
        """Expand Type II edges into genuine letters (one per choice of ``a``)."""
        N = self.params.N_star
        for e in np.flatnonzero(self.kind == TYPE_II):
            l, k = self.level_offset(e)
            if max_level is not None and l > max_level:
                continue
            L, _ = self.states[self.src[e]]
            back = tuple(reversed(self.patterns.continuation(tuple(reversed(L)), self.params.N_hash)))
            fw = self.future_word(e)
            for a in range(self.n_labels):
                word = (a,) + back + fw
                if a == partner(back[0]) or self.patterns.is_pattern(word[:N]):
                    continue
                w = (back + L)[:N]
                yield InducedLetter(word, TYPE_II, int(self.rtime[e]), (k, a, w, int(self.last[e])), l, k)

    def adjacency(self, weights=None):
        """Sparse node matrix ``M[u, v] = sum of weights`` over edges ``u -> v``."""
        from scipy.sparse import csr_matrix

        w = np.ones(self.n_edges) if weights is None else np.asarray(weights, dtype=float)
        return csr_matrix((w, (self.src, self.dst)), shape=(self.n_states, self.n_states))

    def bip_witness(self) -> bool:
        """Every edge has a Type I edge before it and a Type I edge after it."""
        t1 = self.kind == TYPE_I
        has_in = np.zeros(self.n_states, dtype=bool)
        has_out = np.zeros(self.n_states, dtype=bool)
        has_in[self.dst[t1]] = True
        has_out[self.src[t1]] = True
        return bool(np.all(has_in[self.src]) and np.all(has_out[self.dst]))

    def edges_out(self) -> list[np.ndarray]:
        order = np.argsort(self.src, kind="stable")
        bounds = np.searchsorted(self.src[order], np.arange(self.n_states + 1))
        return [order[bounds[u] : bounds[u + 1]] for u in range(self.n_states)]

    def export_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["edge", "kind", "src", "dst", "return_time", "level", "offset", "letters", "future_word"])
            for e in range(self.n_edges):
                l, k = self.level_offset(e) if self.kind[e] == TYPE_II else (0, 0)
                mult = self.past_count(int(self.src[e])) if self.kind[e] == TYPE_I else self.n_labels - 2
                fw = " ".join(label_name(s) for s in self.future_word(e))
                wr.writerow([e, "I" if self.kind[e] == TYPE_I else "II", int(self.src[e]), int(self.dst[e]),
                             int(self.rtime[e]), l, k, mult, fw])


def build_induced(
    rep: FuchsianRep,
    n_star: int = 1,
    L_max: int = 200,
    state_budget: int = DEFAULT_STATE_BUDGET,
) -> InducedShift:
    """Induced shift on the good set with Type II levels ``l <= L_max``."""
    if n_star < 1 or L_max < 1:
        raise CodingError("n_star and L_max must be >= 1")
    _, n_cusp = vertex_cycles(rep)
    params = CodingParams(n_star, n_cusp, L_max)
    n_labels = 2 * rep.k
    h, N = params.half, params.N_star
    approx = n_labels * (n_labels - 1) ** (h - 1)
    if approx > state_budget:
        raise CodingError(
            f"n_star = {n_star} needs about {approx} lookahead nodes (budget {state_budget}); lower n_star"
        )
    pats = CuspPatterns(cusp_words(rep), N + 1)
    if 2 * pats.period - 1 > h - 1:
        raise CodingError("lookahead too short to determine cusp phases")

    states: list[tuple[tuple[int, ...], int]] = []
    for L in admissible_words(n_labels, h):
        rho = pats.lps(L)
        if rho < h:
            states.append((L, rho))
        else:
            states.extend((L, rho) for rho in range(h, N))
    index = {s: j for j, s in enumerate(states)}

    src, dst, kind, rtime, last = [], [], [], [], []
    continuations = {}
    for u, (L, rho) in enumerate(states):
        for y in range(n_labels):
            if y == partner(L[-1]):
                continue
            L2 = L[1:] + (y,)
            if rho >= h and (L + (y,)) in pats.factors[h + 1]:
                rho2 = rho + 1
            else:
                rho2 = pats.lps(L2)
            if rho2 >= N:
                continue
            src.append(u), dst.append(index[(L2, rho2)]), kind.append(TYPE_I), rtime.append(1), last.append(y)
        if rho != N - 1:
            continue
        cont = pats.continuation(L, params.r_max)
        continuations[u] = cont
        seq = L + cont
        for r in range(2, params.r_max + 1):
            nxt = seq[h + r - 1]  # the symbol continuing the pattern at x[r + N*/2]
            prev = seq[h + r - 2]
            for c in range(n_labels):
                if c == nxt or c == partner(prev):
                    continue
                L2 = seq[r : h + r - 1] + (c,)
                rho2 = pats.lps(L2)
                src.append(u), dst.append(index[(L2, rho2)]), kind.append(TYPE_II), rtime.append(r), last.append(c)
    if not src:
        raise CodingError("empty alphabet")
    return InducedShift(
        params,
        n_labels,
        pats,
        states,
        np.asarray(src, dtype=np.int64),
        np.asarray(dst, dtype=np.int64),
        np.asarray(kind, dtype=np.int8),
        np.asarray(rtime, dtype=np.int64),
        np.asarray(last, dtype=np.int64),
        continuations,
    )


# ---------------------------------------------------------------------------
# decomposition of periodic classical words
# ---------------------------------------------------------------------------


def good_times(patterns: CuspPatterns, params: CodingParams, cyclic_word) -> list[int]:
    """Times ``i`` in ``[0, m)`` at which the periodic sequence visits ``A``."""
    w = tuple(cyclic_word)
    m = len(w)
    N, nh = params.N_star, params.N_hash
    out = []
    for i in range(m):
        window = tuple(w[(i - nh + j) % m] for j in range(N))
        if not patterns.is_pattern(window):
            out.append(i)
    return out


def induced_decomposition(shift: InducedShift, cyclic_word) -> list[tuple[int, int]]:
    """Split a periodic classical word into induced letters ``(start, return_time)``.

    ``start`` is the time of the visit to ``A``; the letter's group word is
    ``x[start + 1 .. start + r]``.  Raises when the orbit never visits ``A``
    (a cusp word) or a return time exceeds the truncation.
    """
    w = tuple(cyclic_word)
    _check_admissible(w + w[:1])
    times = good_times(shift.patterns, shift.params, w)
    if not times:
        raise CodingError("periodic word never visits the good set (parabolic class)")
    m = len(w)
    out = []
    for j, t in enumerate(times):
        nxt = times[(j + 1) % len(times)] + (m if j + 1 == len(times) else 0)
        r = nxt - t
        if r > shift.params.r_max:
            raise CodingError(f"return time {r} exceeds the truncation {shift.params.r_max}")
        out.append((t, r))
    return out


def edge_of_window(shift: InducedShift, cyclic_word, start: int, r: int) -> int:
    """Edge id carrying the letter that starts at ``start`` in a periodic word."""
    w = tuple(cyclic_word)
    m = len(w)
    h = shift.params.half
    seq = tuple(w[(start + 1 + j) % m] for j in range(r + h))
    rho = _run_length(shift, w, start)
    u = shift.state_index[(seq[:h], rho)]
    for e in shift.edges_out()[u]:
        if int(shift.rtime[e]) == r and shift.future_word(e) == seq:
            return int(e)
    raise CodingError("letter not present in the truncated alphabet")


def _run_length(shift: InducedShift, w, start: int) -> int:
    m = len(w)
    h, N = shift.params.half, shift.params.N_star
    seg = tuple(w[(start + h - N + 1 + j) % m] for j in range(N))
    return shift.patterns.lps(seg)


# ---------------------------------------------------------------------------
# boundary expansion
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CylinderPoint:
    xi: complex
    diameter: float
    depth: int


def _pull_back(rep: FuchsianRep, word) -> tuple[complex, float]:
    """Start point and angular length of ``I+_{s1..sn}``, one generator at a time.

    Composing the maps first loses the determinant after a few hundred
    letters; pulling the arc back keeps full relative precision, switching to
    the derivative once the arc is too short to resolve from its endpoints.
    """
    arc = rep.pairing.intervals[partner(word[-1])]
    z, ell = arc.start, arc.length
    for s in reversed(word[:-1]):
        a, b = rep.maps[s].su11()
        g = lambda w: (a * w + b) / (b.conjugate() * w + a.conjugate())
        zs = g(z)
        if ell > 1e-6:
            ell = (angle(g(z * cmath.exp(1j * ell))) - angle(zs)) % TWO_PI
        else:
            zm = z * cmath.exp(0.5j * ell)
            ell = ell / abs(b.conjugate() * zm + a.conjugate()) ** 2
        z = zs / abs(zs)
    return z, ell


def cylinder_interval(rep: FuchsianRep, word) -> BoundaryInterval:
    """``I+_{s1..sn} = g_{s1} ... g_{s(n-1)} (I_{sn'})``."""
    z, ell = _pull_back(rep, tuple(word))
    return BoundaryInterval(z, z * cmath.exp(1j * ell))


def resolve_xi(rep: FuchsianRep, word, continuation=(), depth: int = 200) -> CylinderPoint:
    """Attracting endpoint of the geodesic coded by ``word`` followed by repeats of ``continuation``."""
    word, continuation = tuple(word), tuple(continuation)
    if depth < 1:
        raise CodingError("depth must be >= 1")
    if len(word) < depth and not continuation:
        raise CodingError("sequence shorter than depth and no continuation given")
    seq = list(word[:depth])
    j = 0
    while len(seq) < depth:
        seq.append(continuation[j % len(continuation)])
        j += 1
    _check_admissible(seq)
    if continuation and len(word) < depth:
        _check_admissible(continuation + continuation[:1])
    z, ell = _pull_back(rep, tuple(seq))
    return CylinderPoint(z * cmath.exp(0.5j * ell), 2 * math.sin(ell / 2) if ell < math.pi else 2.0, depth)


# ---------------------------------------------------------------------------
# periodic points of the reduced alphabet
# ---------------------------------------------------------------------------


def periodic_points(shift: InducedShift, m: int, max_return_time: int | None = None) -> list[tuple[int, ...]]:
    """Closed edge walks of length ``m``; every rotation is listed separately.

    Each walk is a period-``m`` point of the induced shift (the past is forced
    by periodicity), so ``len(periodic_points(shift, m))`` equals the trace of
    the ``m``-th power of the edge-count matrix.
    """
    if m < 1:
        raise CodingError("m must be >= 1")
    out_edges = shift.edges_out()
    if max_return_time is not None:
        out_edges = [es[shift.rtime[es] <= max_return_time] for es in out_edges]
    # reverse reachability within d steps
    preds: list[set] = [set() for _ in range(shift.n_states)]
    for es in out_edges:
        for e in es:
            preds[int(shift.dst[e])].add(int(shift.src[e]))
    result = []
    for u in range(shift.n_states):
        reach = [{u}]
        for _ in range(m - 1):
            reach.append(set().union(*(preds[v] for v in reach[-1])) if reach[-1] else set())
        stack = [(u, ())]
        while stack:
            v, path = stack.pop()
            left = m - len(path)
            for e in out_edges[v]:
                w = int(shift.dst[e])
                if left == 1:
                    if w == u:
                        result.append(path + (int(e),))
                elif w in reach[left - 1]:
                    stack.append((w, path + (int(e),)))
    return sorted(result)
