"""Hyperbolic plane kernel: Mobius maps, distances, Busemann functions.

Group elements are stored as real SL(2, R) matrices acting on the upper
half-plane.  Every geometric computation is carried out in the Poincare
disk after the Cayley transform ``z -> (z - i) / (z + i)``, where an element
acts through its SU(1, 1) form ``[[alpha, beta], [conj(beta), conj(alpha)]]``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

PARABOLIC_TOL = 1e-9
BOUNDARY_TOL = 1e-12


class GeometryError(ValueError):
    """Raised when an input lies outside the domain of an operation."""


class Kind(str, Enum):
    HYPERBOLIC = "hyperbolic"
    PARABOLIC = "parabolic"
    ELLIPTIC = "elliptic"


@dataclass(frozen=True)
class MobiusMap:
    """An element of PSL(2, R); ``m`` and ``-m`` compare equal."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        det = self.a * self.d - self.b * self.c
        if det <= 0:
            raise GeometryError(f"determinant must be positive, got {det}")
        if abs(det - 1.0) > 1e-12:
            s = math.sqrt(det)
            object.__setattr__(self, "a", self.a / s)
            object.__setattr__(self, "b", self.b / s)
            object.__setattr__(self, "c", self.c / s)
            object.__setattr__(self, "d", self.d / s)

    @classmethod
    def from_matrix(cls, m) -> "MobiusMap":
        m = np.asarray(m, dtype=float)
        return cls(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    @classmethod
    def identity(cls) -> "MobiusMap":
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def from_su11(cls, alpha: complex, beta: complex) -> "MobiusMap":
        a = alpha.real + beta.real
        d = alpha.real - beta.real
        b = alpha.imag - beta.imag
        c = -alpha.imag - beta.imag
        return cls(a, b, c, d)

    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])

    def su11(self) -> tuple[complex, complex]:
        """Return ``(alpha, beta)`` of the disk-model form."""
        alpha = complex(self.a + self.d, self.b - self.c) / 2
        beta = complex(self.a - self.d, -(self.b + self.c)) / 2
        return alpha, beta

    @property
    def trace(self) -> float:
        return self.a + self.d

    def __matmul__(self, other: "MobiusMap") -> "MobiusMap":
        return MobiusMap(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def inverse(self) -> "MobiusMap":
        return MobiusMap(self.d, -self.b, -self.c, self.a)

    def __eq__(self, other):
        if not isinstance(other, MobiusMap):
            return NotImplemented
        p = np.array([self.a, self.b, self.c, self.d])
        q = np.array([other.a, other.b, other.c, other.d])
        return bool(np.allclose(p, q, atol=1e-12) or np.allclose(p, -q, atol=1e-12))

    def __hash__(self):
        return hash(("MobiusMap",))

    def is_identity(self, tol: float = 1e-12) -> bool:
        return self == MobiusMap.identity() or (
            abs(abs(self.a) - 1) < tol and abs(self.b) < tol and abs(self.c) < tol and abs(abs(self.d) - 1) < tol
        )

    def act_disk(self, z: complex) -> complex:
        alpha, beta = self.su11()
        return (alpha * z + beta) / (beta.conjugate() * z + alpha.conjugate())

    def act_half(self, z):
        if z == math.inf:
            return math.inf if self.c == 0 else self.a / self.c
        den = self.c * z + self.d
        if den == 0:
            return math.inf
        return (self.a * z + self.b) / den

    def conjugate_by(self, g: "MobiusMap") -> "MobiusMap":
        """Return ``g self g^-1``."""
        return g @ self @ g.inverse()


def cayley(z):
    """Half-plane to disk; ``inf`` goes to 1."""
    if z == math.inf:
        return 1.0 + 0j
    z = complex(z)
    return (z - 1j) / (z + 1j)


def inverse_cayley(w: complex):
    if abs(w - 1) < 1e-15:
        return math.inf
    z = 1j * (1 + w) / (1 - w)
    if abs(abs(w) - 1) <= 1e-12:
        return z.real
    return z


def _disk_point(x, model: str) -> complex:
    if model == "disk":
        return complex(x)
    if model in ("half-plane", "half_plane", "H"):
        x = complex(x)
        if x.imag <= 0:
            raise GeometryError(f"{x} is not in the upper half-plane")
        return cayley(x)
    raise GeometryError(f"unknown model {model!r}")


def _boundary_point(xi, model: str) -> complex:
    if model == "disk":
        xi = complex(xi)
        if abs(abs(xi) - 1) > BOUNDARY_TOL:
            raise GeometryError(f"{xi} is not on the unit circle")
        return xi / abs(xi)
    if xi == math.inf:
        return 1.0 + 0j
    if isinstance(xi, complex) and xi.imag != 0:
        raise GeometryError(f"{xi} is not on the real line")
    return cayley(float(np.real(xi)))


def _interior(z: complex) -> complex:
    if not abs(z) < 1:
        raise GeometryError(f"{z} is not an interior point of the disk")
    return z


def distance(x, y, model: str = "disk") -> float:
    """Hyperbolic distance between two interior points."""
    x = _interior(_disk_point(x, model))
    y = _interior(_disk_point(y, model))
    num = 2 * abs(x - y) ** 2
    den = (1 - abs(x) ** 2) * (1 - abs(y) ** 2)
    return math.acosh(1 + num / den)


def busemann(xi, x, y, model: str = "disk") -> float:
    """Busemann function ``B_xi(x, y) = lim d(x, z) - d(y, z)`` as ``z -> xi``."""
    xi = _boundary_point(xi, model)
    x = _interior(_disk_point(x, model))
    y = _interior(_disk_point(y, model))
    return math.log((1 - abs(y) ** 2) / abs(xi - y) ** 2 * abs(xi - x) ** 2 / (1 - abs(x) ** 2))


def busemann_origin(xi: complex, m: MobiusMap) -> float:
    """``B_xi(o, m o)`` for the disk origin ``o``; stable when ``m o`` is near the boundary."""
    alpha, beta = m.su11()
    return -2.0 * math.log(abs(alpha.conjugate() * xi - beta))


def classify(m: MobiusMap) -> Kind:
    if m.is_identity():
        raise GeometryError("identity has no type")
    t = abs(m.trace)
    if abs(t - 2) <= PARABOLIC_TOL:
        return Kind.PARABOLIC
    return Kind.HYPERBOLIC if t > 2 else Kind.ELLIPTIC


def translation_length(m: MobiusMap) -> tuple[float, Kind]:
    """Minimal displacement ``min d(x, m x)`` together with the type of ``m``."""
    kind = classify(m)
    if kind is Kind.HYPERBOLIC:
        return 2.0 * math.acosh(abs(m.trace) / 2.0), kind
    return 0.0, kind


def fixed_points(m: MobiusMap) -> tuple[tuple[complex, ...], Kind]:
    """Boundary fixed points in the disk model.

    Hyperbolic maps return ``(attracting, repelling)``; parabolic maps return
    a single point.  Elliptic maps have no boundary fixed points and are
    rejected.
    """
    kind = classify(m)
    if kind is Kind.ELLIPTIC:
        raise GeometryError("elliptic element: invalid for a torsion-free Fuchsian group")
    alpha, beta = m.su11()
    # fixed points of w -> (alpha w + beta) / (conj(beta) w + conj(alpha))
    bc = beta.conjugate()
    if abs(bc) < 1e-300:
        raise GeometryError("map fixes the origin; not hyperbolic or parabolic")
    p = alpha.conjugate() - alpha
    disc = cmath.sqrt(p * p + 4 * bc * beta)
    roots = [(-p + disc) / (2 * bc), (-p - disc) / (2 * bc)]
    roots = [r / abs(r) for r in roots]
    if kind is Kind.PARABOLIC:
        r = -p / (2 * bc)
        return (r / abs(r),), kind
    # derivative at a fixed point is 1 / (conj(beta) w + conj(alpha))^2
    mult = [abs(bc * r + alpha.conjugate()) for r in roots]
    if mult[0] < mult[1]:
        roots.reverse()
    return (roots[0], roots[1]), kind


# ---------------------------------------------------------------------------
# boundary arcs
# ---------------------------------------------------------------------------

TWO_PI = 2 * math.pi


def angle(z: complex) -> float:
    return math.atan2(z.imag, z.real) % TWO_PI


@dataclass(frozen=True)
class BoundaryInterval:
    """Counterclockwise arc from ``start`` to ``end`` on the unit circle."""

    start: complex
    end: complex

    def __post_init__(self):
        for p in (self.start, self.end):
            if abs(abs(p) - 1) > 1e-9:
                raise GeometryError(f"{p} is not on the unit circle")
        if abs(self.start - self.end) < 1e-15:
            raise GeometryError("degenerate interval")

    @property
    def length(self) -> float:
        return (angle(self.end) - angle(self.start)) % TWO_PI

    @property
    def diameter(self) -> float:
        """Euclidean chord between the endpoints (short arcs) or 2."""
        return abs(self.end - self.start) if self.length < math.pi else 2.0

    def midpoint(self) -> complex:
        return cmath.exp(1j * (angle(self.start) + self.length / 2))

    def contains(self, z: complex, tol: float = 0.0) -> bool:
        t = (angle(z) - angle(self.start)) % TWO_PI
        return t <= self.length + tol or t >= TWO_PI - tol

    def complement(self) -> "BoundaryInterval":
        return BoundaryInterval(self.end, self.start)

    def image(self, m: MobiusMap) -> "BoundaryInterval":
        return BoundaryInterval(m.act_disk(self.start), m.act_disk(self.end))
