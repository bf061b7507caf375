"""Geometric potential on the reduced induced alphabet.

For an edge with group word ``x[1..r]`` and future word ``x[1..r + N*/2]``
the potential is ``B_xi(o, G o)`` with ``G = g_{x1} ... g_{xr}`` and ``xi``
in the cylinder ``G(J)``, where ``J`` is the cylinder of the destination
lookahead.  Writing ``xi = G eta`` the value is ``2 log|alpha eta + beta|``
for the disk form ``(alpha, beta)`` of ``G``, which stays accurate deep in
a cusp.  The canonical point is the angular midpoint of ``G(J)``; the
per-edge error bound is the spread of the value over ``J``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .coding import TYPE_I, TYPE_II, CodingError, InducedShift, induced_decomposition
from .fuchsian import FuchsianRep, cusp_words, partner, word_map
from .hypgeom import busemann_origin, fixed_points, translation_length


class TypePreservingError(ValueError):
    """The second representation does not share the coding's labels and cusps."""


@dataclass
class PotentialTable:
    values: np.ndarray
    errors: np.ndarray
    letter_length: np.ndarray  # |x0| = r + N*
    rep: FuchsianRep = field(repr=False)
    shift: InducedShift = field(repr=False)
    label: str = "tau"

    def __len__(self) -> int:
        return len(self.values)

    @property
    def max_error(self) -> float:
        return float(self.errors.max())

    def type1_bound(self) -> float:
        return float(np.abs(self.values[self.shift.kind == TYPE_I]).max())

    def band(self) -> tuple[float, float]:
        """``min`` and ``max`` of ``value - 2 log|x0|`` over Type II edges."""
        m = self.shift.kind == TYPE_II
        d = self.values[m] - 2 * np.log(self.letter_length[m])
        return float(d.min()), float(d.max())

    @property
    def C1(self) -> float:
        lo, hi = self.band()
        return max(abs(lo), abs(hi))

    def log_slope(self, min_level: int = 1) -> float:
        """Least-squares slope of Type II values against ``log|x0|``."""
        m = self.shift.kind == TYPE_II
        m &= (self.shift.rtime - 1) // self.shift.params.N_star >= min_level
        x = np.log(self.letter_length[m])
        return float(np.polyfit(x, self.values[m], 1)[0])

    def export_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["letter", "length", "value", "error_bound"])
            for e in range(len(self.values)):
                wr.writerow([e, int(self.letter_length[e]), repr(float(self.values[e])), repr(float(self.errors[e]))])


def _su11_arrays(rep: FuchsianRep):
    al = np.empty(len(rep.maps), dtype=complex)
    be = np.empty(len(rep.maps), dtype=complex)
    for s, m in enumerate(rep.maps):
        al[s], be[s] = m.su11()
    return al, be


def _compose(a1, b1, a2, b2):
    # (a1, b1) o (a2, b2) in SU(1, 1)
    return a1 * a2 + b1 * np.conj(b2), a1 * b2 + b1 * np.conj(a2)


def _apply(a, b, z):
    return (a * z + b) / (np.conj(b) * z + np.conj(a))


def _apply_inv(a, b, z):
    return (np.conj(a) * z - b) / (-np.conj(b) * z + a)


def _lookahead_arcs(rep: FuchsianRep, shift: InducedShift):
    starts = np.empty(shift.n_states, dtype=complex)
    ends = np.empty(shift.n_states, dtype=complex)
    cache: dict = {}
    for u, (L, _) in enumerate(shift.states):
        if L not in cache:
            g = word_map(rep.maps, L[:-1])
            arc = rep.pairing.intervals[partner(L[-1])].image(g)
            cache[L] = (arc.start, arc.end)
        starts[u], ends[u] = cache[L]
    return starts, ends


def _check_compatible(rep: FuchsianRep, shift: InducedShift) -> None:
    if 2 * rep.k != shift.n_labels:
        raise TypePreservingError(f"label sets differ: {2 * rep.k} vs {shift.n_labels}")
    if sorted(set(cusp_words(rep))) != shift.patterns.words:
        raise TypePreservingError("vertex cycles differ; the pair is not type-preserving for this coding")


def group_elements(rep: FuchsianRep, shift: InducedShift) -> tuple[np.ndarray, np.ndarray]:
    """Disk forms ``(alpha, beta)`` of ``g_{x1} ... g_{xr}`` for every edge."""
    al, be = _su11_arrays(rep)
    ga = np.empty(shift.n_edges, dtype=complex)
    gb = np.empty(shift.n_edges, dtype=complex)
    t1 = np.flatnonzero(shift.kind == TYPE_I)
    first = np.array([shift.states[u][0][0] for u in shift.src[t1]], dtype=np.int64)
    ga[t1], gb[t1] = al[first], be[first]
    for u, cont in shift.continuations.items():
        es = np.flatnonzero((shift.src == u) & (shift.kind == TYPE_II))
        if len(es) == 0:
            continue
        seq = np.asarray(shift.states[u][0] + cont, dtype=np.int64)
        rmax = int(shift.rtime[es].max())
        ca = np.empty(rmax + 1, dtype=complex)
        cb = np.empty(rmax + 1, dtype=complex)
        a, b = 1.0 + 0j, 0j
        ca[0], cb[0] = a, b
        for j in range(rmax):
            a, b = _compose(a, b, al[seq[j]], be[seq[j]])
            ca[j + 1], cb[j + 1] = a, b
        ga[es], gb[es] = ca[shift.rtime[es]], cb[shift.rtime[es]]
    return ga, gb


def evaluate(rep: FuchsianRep, shift: InducedShift, label: str = "tau") -> PotentialTable:
    """Locally constant potential of ``rep`` on the edges of ``shift``."""
    _check_compatible(rep, shift)
    ga, gb = group_elements(rep, shift)
    js, je = _lookahead_arcs(rep, shift)
    z0, z1 = js[shift.dst], je[shift.dst]
    w0, w1 = _apply(ga, gb, z0), _apply(ga, gb, z1)
    t0 = np.angle(w0)
    arc = np.mod(np.angle(w1) - t0, 2 * np.pi)
    mid = np.exp(1j * (t0 + arc / 2))
    eta = _apply_inv(ga, gb, mid)
    val = 2 * np.log(np.abs(ga * eta + gb))
    v0 = 2 * np.log(np.abs(ga * z0 + gb))
    v1 = 2 * np.log(np.abs(ga * z1 + gb))
    err = np.maximum(np.abs(v0 - val), np.abs(v1 - val))
    length = shift.rtime + shift.params.N_star
    return PotentialTable(val, err, length, rep, shift, label)


def evaluate_tau(rep: FuchsianRep, shift: InducedShift) -> PotentialTable:
    return evaluate(rep, shift, "tau")


def evaluate_kappa(rep2: FuchsianRep, shift: InducedShift) -> PotentialTable:
    """The potential of a type-preserving partner on the same letters."""
    return evaluate(rep2, shift, "kappa")


# ---------------------------------------------------------------------------
# periodic orbits
# ---------------------------------------------------------------------------


def letter_value_at_periodic_point(rep: FuchsianRep, cyclic_word, start: int, r: int) -> float:
    """Exact potential of the letter starting at ``start`` on the periodic orbit."""
    w = tuple(cyclic_word)
    m = len(w)
    rot = tuple(w[(start + 1 + j) % m] for j in range(m))
    (xi, _), _ = fixed_points(word_map(rep.maps, rot))
    G = word_map(rep.maps, tuple(w[(start + 1 + j) % m] for j in range(r)))
    return busemann_origin(xi, G)


def birkhoff_sum(table: PotentialTable, cyclic_word) -> float:
    """Sum of the potential over one period of the orbit coded by ``cyclic_word``.

    The orbit is cut into induced letters and each letter is evaluated at the
    exact periodic boundary point, so the result is the translation length of
    the word's group element.
    """
    pieces = induced_decomposition(table.shift, cyclic_word)
    return math.fsum(letter_value_at_periodic_point(table.rep, cyclic_word, t, r) for t, r in pieces)


def birkhoff_sum_edges(table: PotentialTable, edges) -> float:
    """Sum of the locally constant values along a closed edge walk."""
    return math.fsum(float(table.values[e]) for e in edges)


def closed_geodesic_length(rep: FuchsianRep, cyclic_word) -> float:
    return translation_length(word_map(rep.maps, tuple(cyclic_word)))[0]
