"""Finite-area Fuchsian representations with ideal-polygon fundamental domains.

Labels are integers ``0 .. 2k-1``; the partner of ``s`` is ``s ^ 1`` and
``g[s ^ 1] == g[s]^-1``.  Label ``2j`` prints as ``"j+1"`` and ``2j+1`` as
``"j+1'"``.  ``g[s]`` maps the boundary interval ``I[s]`` onto the closure
of the complement of ``I[s ^ 1]``.
"""

from __future__ import annotations

import cmath
import itertools
import json
import math
from dataclasses import dataclass, field
from functools import reduce
from pathlib import Path

import numpy as np

from .hypgeom import (
    BoundaryInterval,
    GeometryError,
    Kind,
    MobiusMap,
    angle,
    cayley,
    classify,
    fixed_points,
    inverse_cayley,
)

VERTEX_TOL = 1e-9


class RepresentationError(ValueError):
    """Invalid parameters or a side pairing that fails validation."""


def partner(s: int) -> int:
    return s ^ 1


def label_name(s: int) -> str:
    return f"{s // 2 + 1}" + ("'" if s % 2 else "")


def parse_label(name) -> int:
    if isinstance(name, int):
        return name
    name = str(name).strip()
    primed = name.endswith("'")
    j = int(name.rstrip("'")) - 1
    return 2 * j + int(primed)


def word_map(maps, word) -> MobiusMap:
    """``g[w0] g[w1] ... g[wn]``."""
    return reduce(lambda acc, s: acc @ maps[s], word, MobiusMap.identity())


@dataclass(frozen=True)
class SidePairing:
    maps: tuple[MobiusMap, ...]
    intervals: tuple[BoundaryInterval, ...]
    vertices: tuple[complex, ...]
    side_labels: tuple[int, ...]  # label of side j = arc (v_j, v_{j+1})

    @property
    def k(self) -> int:
        return len(self.maps) // 2


@dataclass(frozen=True)
class VertexCycle:
    vertex: complex
    word: tuple[int, ...]

    @property
    def length(self) -> int:
        return len(self.word)


@dataclass(frozen=True)
class FuchsianRep:
    genus: int
    punctures: int
    pairing: SidePairing
    params: dict = field(default_factory=dict, compare=False)
    name: str = ""

    @property
    def k(self) -> int:
        return self.pairing.k

    @property
    def maps(self) -> tuple[MobiusMap, ...]:
        return self.pairing.maps

    @property
    def generators(self) -> tuple[MobiusMap, ...]:
        return self.pairing.maps[0::2]

    def word(self, word) -> MobiusMap:
        return word_map(self.pairing.maps, word)

    def cycles(self) -> list[VertexCycle]:
        return vertex_cycles(self)[0]


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def _close(p: complex, q: complex, tol: float = VERTEX_TOL) -> bool:
    return abs(p - q) <= tol


def _check_partition(vertices) -> None:
    angles = [angle(v) for v in vertices]
    n = len(angles)
    total = sum((angles[(j + 1) % n] - angles[j]) % (2 * math.pi) for j in range(n))
    if abs(total - 2 * math.pi) > 1e-9:
        raise RepresentationError("intervals overlap: vertices are not in counterclockwise order")
    for j in range(n):
        if _close(vertices[j], vertices[(j + 1) % n]):
            raise RepresentationError(f"vertices {j} and {(j + 1) % n} coincide")


def _origin_inside(vertices) -> bool:
    # the origin lies on the polygon side of each edge iff the edge arc is < pi
    n = len(vertices)
    return all((angle(vertices[(j + 1) % n]) - angle(vertices[j])) % (2 * math.pi) < math.pi for j in range(n))


def _check_mapping(maps, intervals) -> None:
    for s in range(len(maps)):
        t = partner(s)
        g = maps[s]
        src, dst = intervals[s], intervals[t]
        ok = _close(g.act_disk(src.start), dst.end) and _close(g.act_disk(src.end), dst.start)
        inner = g.act_disk(src.midpoint())
        if not ok or dst.contains(inner):
            raise RepresentationError(
                f"side pairing {label_name(s)} -> {label_name(t)} does not map I_{label_name(s)} "
                f"onto the complement of I_{label_name(t)}"
            )


def _check_discrete_sanity(maps, max_len: int = 6) -> None:
    n = len(maps)
    for length in range(1, max_len + 1):
        for w in itertools.product(range(n), repeat=length):
            if any(w[i + 1] == partner(w[i]) for i in range(length - 1)):
                continue
            m = word_map(maps, w)
            if abs(abs(m.trace) - 2) > 1e-9 and abs(m.trace) < 2:
                raise RepresentationError(f"elliptic element for word {[label_name(s) for s in w]}")


def from_side_pairing(
    vertices,
    side_labels,
    generators: dict,
    genus: int,
    punctures: int,
    params: dict | None = None,
    name: str = "custom",
    require_origin: bool = True,
    sanity_words: int = 6,
) -> FuchsianRep:
    """Validate and assemble a representation from an ideal polygon.

    ``vertices`` are disk points in counterclockwise order, ``side_labels[j]``
    labels the arc from vertex ``j`` to vertex ``j + 1`` and ``generators``
    maps each unprimed label to its Mobius map.
    """
    vertices = tuple(complex(v) / abs(complex(v)) for v in vertices)
    side_labels = tuple(parse_label(s) for s in side_labels)
    nsides = len(vertices)
    if nsides % 2 or nsides < 4:
        raise RepresentationError("need an even number (>= 4) of ideal vertices")
    if sorted(side_labels) != list(range(nsides)):
        raise RepresentationError("side labels must use each of 1, 1', ..., k, k' exactly once")
    k = nsides // 2
    if k != 2 * genus + punctures - 1 or punctures < 1:
        raise RepresentationError(f"k = {k} does not equal 2g + n - 1 = {2 * genus + punctures - 1}")
    _check_partition(vertices)
    if require_origin and not _origin_inside(vertices):
        raise RepresentationError("the origin is not inside the fundamental polygon")
    maps: list[MobiusMap | None] = [None] * nsides
    for key, g in generators.items():
        s = parse_label(key)
        g = g if isinstance(g, MobiusMap) else MobiusMap.from_matrix(g)
        maps[s] = g
        maps[partner(s)] = g.inverse()
    if any(m is None for m in maps):
        raise RepresentationError("every label pair needs a generator")
    intervals: list[BoundaryInterval | None] = [None] * nsides
    for j, s in enumerate(side_labels):
        intervals[s] = BoundaryInterval(vertices[j], vertices[(j + 1) % nsides])
    _check_mapping(maps, intervals)
    pairing = SidePairing(tuple(maps), tuple(intervals), vertices, side_labels)
    rep = FuchsianRep(genus, punctures, pairing, dict(params or {}), name)
    cycles, _ = vertex_cycles(rep)
    for cyc in cycles:
        m = rep.word(cyc.word)
        if classify(m) is not Kind.PARABOLIC:
            raise RepresentationError(
                f"vertex cycle {[label_name(s) for s in cyc.word]} is not parabolic "
                f"(trace {m.trace:.12g}); the pairing is not finite-area type-preserving"
            )
    if sanity_words:
        _check_discrete_sanity(maps, sanity_words)
    return rep


# ---------------------------------------------------------------------------
# vertex cycles
# ---------------------------------------------------------------------------


def _walk(pairing: SidePairing, vertex: int, exit_side: int) -> tuple[int, ...]:
    n = len(pairing.vertices)
    side_of = {s: j for j, s in enumerate(pairing.side_labels)}
    start = (vertex, exit_side)
    word = []
    u, e = vertex, exit_side
    for _ in range(4 * n + 1):
        t = pairing.side_labels[e]
        x = partner(t)
        word.append(x)
        image = pairing.maps[t].act_disk(pairing.vertices[u])
        entry = side_of[x]
        ends = (entry, (entry + 1) % n)
        u = min(ends, key=lambda j: abs(pairing.vertices[j] - image))
        if abs(pairing.vertices[u] - image) > 1e-7:
            raise RepresentationError("malformed domain: vertex walk left the vertex set")
        # the other side at u
        e = (u - 1) % n if entry == u else u
        if (u, e) == start:
            return tuple(word)
    raise RepresentationError("malformed domain: vertex walk did not close within 4k steps")


def cusp_words(rep: FuchsianRep) -> list[tuple[int, ...]]:
    """Every cyclic label word whose repetition codes a ray into a cusp.

    One word per (vertex, rotation direction); these are all rotations and
    reversals of the vertex cycles.
    """
    n = len(rep.pairing.vertices)
    words = []
    for u in range(n):
        for e in (u, (u - 1) % n):
            words.append(_walk(rep.pairing, u, e))
    return words


def vertex_cycles(rep: FuchsianRep) -> tuple[list[VertexCycle], int]:
    """One cycle per cusp (vertex orbit) and the lcm of the cycle lengths."""
    n = len(rep.pairing.vertices)
    seen: set[int] = set()
    cycles = []
    side_of = {s: j for j, s in enumerate(rep.pairing.side_labels)}
    for u in range(n):
        if u in seen:
            continue
        w = _walk(rep.pairing, u, u)
        cycles.append(VertexCycle(rep.pairing.vertices[u], w))
        # collect the orbit: vertices visited along the walk
        v = u
        seen.add(v)
        for x in w:
            image = rep.maps[partner(x)].act_disk(rep.pairing.vertices[v])
            v = min(range(n), key=lambda j: abs(rep.pairing.vertices[j] - image))
            seen.add(v)
    lengths = [c.length for c in cycles]
    return cycles, reduce(math.lcm, lengths, 1)


# ---------------------------------------------------------------------------
# built-in families
# ---------------------------------------------------------------------------


def _geodesic_crossing(u1: complex, w1: complex, u2: complex, w2: complex) -> complex:
    """Intersection of the geodesics (u1, w1) and (u2, w2) in the disk."""
    rot = u1.conjugate()
    to_h = lambda z: inverse_cayley(z * rot)  # u1 -> infinity
    x1, x2, x3 = to_h(w1), to_h(u2), to_h(w2)
    c, r = (x2 + x3) / 2, abs(x3 - x2) / 2
    h2 = r * r - (x1 - c) ** 2
    if h2 <= 0:
        raise RepresentationError("diagonals of the fundamental polygon do not cross")
    return cayley(complex(x1, math.sqrt(h2))) / rot


def recentring_map(p: complex) -> MobiusMap:
    """Disk automorphism sending ``p`` to the origin."""
    s = math.sqrt(1 - abs(p) ** 2)
    return MobiusMap.from_su11(complex(1 / s), -p / s)


def markov_completion(x: float, y: float, branch: str = "upper") -> float:
    """Solve ``x^2 + y^2 + z^2 = xyz`` for ``z``; ``branch`` picks the larger or smaller root."""
    if branch not in ("upper", "lower"):
        raise RepresentationError(f"unknown branch {branch!r}")
    disc = (x * y) ** 2 - 4 * (x * x + y * y)
    if disc < 0:
        raise RepresentationError(f"no real Markov completion for ({x}, {y})")
    r = math.sqrt(disc)
    return (x * y - r) / 2 if branch == "lower" else (x * y + r) / 2


def fricke_generators(x: float, y: float, z: float) -> tuple[MobiusMap, MobiusMap]:
    """Matrices with traces ``x, y`` and ``tr AB = z``; ``A`` is diagonal."""
    lam = (x + math.sqrt(x * x - 4)) / 2
    p = (z - y / lam) / (lam - 1 / lam)
    s = y - p
    qr = p * s - 1
    q = math.sqrt(abs(qr)) if qr != 0 else 1.0
    r = qr / q
    return MobiusMap(lam, 0.0, 0.0, 1 / lam), MobiusMap(p, q, r, s)


def punctured_torus_from_markov(x: float, y: float, z: float, sanity_words: int = 6) -> FuchsianRep:
    """Once-punctured torus with trace coordinates ``(tr A, tr B, tr AB) = (x, y, z)``."""
    for v in (x, y, z):
        if not v > 2:
            raise RepresentationError(f"trace coordinates must exceed 2, got {(x, y, z)}")
    if abs(x * x + y * y + z * z - x * y * z) > 1e-9 * max(1.0, x * y * z):
        raise RepresentationError(f"{(x, y, z)} does not satisfy x^2 + y^2 + z^2 = xyz")
    A, B = fricke_generators(x, y, z)
    K = B.inverse() @ A.inverse() @ B @ A
    (v0,), kind = fixed_points(K)
    # counterclockwise order for this lift is v0, A^-1 B A v0, B A v0, A v0
    v = [v0, (A.inverse() @ B @ A).act_disk(v0), (B @ A).act_disk(v0), A.act_disk(v0)]
    arcs = [(angle(v[(j + 1) % 4]) - angle(v[j])) % (2 * math.pi) for j in range(4)]
    if abs(sum(arcs) - 2 * math.pi) > 1e-9:
        raise RepresentationError("degenerate interval configuration (orientation)")
    centre = _geodesic_crossing(v[0], v[2], v[1], v[3])
    phi = recentring_map(centre)
    A, B = A.conjugate_by(phi), B.conjugate_by(phi)
    v = [phi.act_disk(p) for p in v]
    # A maps the side (v0, v1) onto the complement of (v2, v3); B maps (v3, v0) onto that of (v1, v2)
    return from_side_pairing(
        v,
        side_labels=[0, 3, 1, 2],
        generators={0: A, 2: B},
        genus=1,
        punctures=1,
        params={"family": "punctured_torus", "markov": [x, y, z]},
        name=f"S11({x:g},{y:g},{z:g})",
        sanity_words=sanity_words,
    )


def thrice_punctured_sphere() -> FuchsianRep:
    """The level-2 principal congruence group with the square domain (-1, 0, 1, inf)."""
    T2 = MobiusMap(1.0, 2.0, 0.0, 1.0)
    U = MobiusMap(1.0, 0.0, 2.0, 1.0)
    v = [cayley(-1.0), cayley(0.0), cayley(1.0), cayley(math.inf)]
    return from_side_pairing(
        v,
        side_labels=[2, 3, 1, 0],
        generators={0: T2, 2: U},
        genus=0,
        punctures=3,
        params={"family": "s03"},
        name="S03",
    )


def conjugate(rep: FuchsianRep, g: MobiusMap) -> FuchsianRep:
    """``g rep g^-1`` with vertices and intervals carried along by ``g``."""
    maps = {s: m.conjugate_by(g) for s, m in enumerate(rep.maps) if s % 2 == 0}
    vertices = [g.act_disk(v) for v in rep.pairing.vertices]
    return from_side_pairing(
        vertices,
        rep.pairing.side_labels,
        maps,
        rep.genus,
        rep.punctures,
        params={**rep.params, "conjugated_by": [g.a, g.b, g.c, g.d]},
        name=rep.name + "^g",
        require_origin=False,
        sanity_words=0,
    )


# ---------------------------------------------------------------------------
# config ingestion
# ---------------------------------------------------------------------------


def _boundary_from_json(v, model: str) -> complex:
    if model == "disk":
        if isinstance(v, (list, tuple)):
            return complex(v[0], v[1])
        return cmath.exp(1j * float(v))
    if v in ("inf", "Infinity", math.inf):
        return cayley(math.inf)
    return cayley(float(v))


def rep_from_config(cfg: dict) -> FuchsianRep:
    """Build a representation from a parsed JSON document (see README for the schema)."""
    family = cfg.get("family")
    if family == "punctured_torus":
        m = list(cfg["markov"])
        if len(m) == 2:
            m.append("upper")
        if len(m) != 3:
            raise RepresentationError("markov needs x, y and optionally z or a branch name")
        x, y = float(m[0]), float(m[1])
        z = markov_completion(x, y, m[2]) if isinstance(m[2], str) else float(m[2])
        return punctured_torus_from_markov(x, y, z)
    if family == "s03":
        return thrice_punctured_sphere()
    if family == "custom":
        model = cfg.get("model", "half-plane")
        vertices = [_boundary_from_json(v, model) for v in cfg["vertices"]]
        gens = {}
        for key, m in cfg["matrices"].items():
            g = MobiusMap.from_matrix(m)
            gens[key] = g
        side_labels = cfg["pairing"]
        return from_side_pairing(
            vertices,
            side_labels,
            gens,
            int(cfg["genus"]),
            int(cfg["punctures"]),
            params=cfg,
            name=cfg.get("name", "custom"),
            require_origin=cfg.get("require_origin", True),
        )
    raise RepresentationError(f"unknown family {family!r}")


def load_rep(path) -> FuchsianRep:
    return rep_from_config(json.loads(Path(path).read_text()))


def rep_to_config(rep: FuchsianRep) -> dict:
    """Serialise as a ``custom`` document in the disk model (angles)."""
    return {
        "family": "custom",
        "model": "disk",
        "genus": rep.genus,
        "punctures": rep.punctures,
        "vertices": [angle(v) for v in rep.pairing.vertices],
        "pairing": [label_name(s) for s in rep.pairing.side_labels],
        "matrices": {label_name(s): rep.maps[s].matrix().tolist() for s in range(0, 2 * rep.k, 2)},
        "require_origin": False,
    }


def torus_matrices_array(rep: FuchsianRep) -> np.ndarray:
    return np.array([m.matrix() for m in rep.maps])
