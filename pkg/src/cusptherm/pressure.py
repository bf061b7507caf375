"""Pressure of locally constant potentials on finite transfer graphs.

A potential lives on the edges of a directed multigraph; the pressure is
``log`` of the spectral radius of ``M[u, v] = sum exp(phi(e))`` over the
edges ``e: u -> v``.  Truncated induced shifts come with level data, which
feeds the tail bound and the phase-transition guard.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.sparse import csr_matrix

from .coding import TYPE_II, InducedShift


class PressureError(RuntimeError):
    pass


class DivergenceError(PressureError):
    """The requested potential lies beyond the phase transition."""


class ConvergenceError(PressureError):
    pass


class BracketError(PressureError):
    pass


@dataclass(frozen=True)
class Tolerances:
    drift: float = 1e-12  # largest Rayleigh step allowed over `window` iterations
    window: int = 10
    max_iter: int = 50_000
    guard: float = 0.02  # margin beyond s(a + b) = 1/2
    root: float = 1e-11
    increment: float = 1e-3
    tail: float = 1e-3
    fd_step: float = 1e-3
    bracket_doublings: int = 30


DEFAULT_TOL = Tolerances()


@dataclass
class TransferGraph:
    n_nodes: int
    src: np.ndarray
    dst: np.ndarray
    level: np.ndarray | None = None  # Type II level per edge, -1 otherwise
    N_star: int = 0
    L_max: int = 0
    n_shapes: int = 0

    @property
    def n_edges(self) -> int:
        return len(self.src)

    @classmethod
    def from_shift(cls, shift: InducedShift) -> "TransferGraph":
        level = np.where(shift.kind == TYPE_II, (shift.rtime - 1) // shift.params.N_star, -1)
        t2 = shift.kind == TYPE_II
        shapes = {(int(u), (int(r) - 1) % shift.params.N_star, int(c))
                  for u, r, c in zip(shift.src[t2], shift.rtime[t2], shift.last[t2])}
        return cls(shift.n_states, shift.src, shift.dst, level, shift.params.N_star, shift.params.L_max, len(shapes))

    @classmethod
    def from_letter_matrix(cls, A) -> "TransferGraph":
        """Letters as nodes, allowed transitions ``A[e, f] = 1`` as edges."""
        A = np.asarray(A)
        src, dst = np.nonzero(A)
        return cls(A.shape[0], src.astype(np.int64), dst.astype(np.int64))

    def letter_potential(self, phi) -> np.ndarray:
        """Edge potential for a letter function: the value of the source letter."""
        return np.asarray(phi, dtype=float)[self.src]

    def restrict(self, max_level: int) -> "TransferGraph":
        keep = self.level <= max_level
        return TransferGraph(self.n_nodes, self.src[keep], self.dst[keep], self.level[keep], self.N_star, max_level, self.n_shapes)

    def matrix(self, phi) -> csr_matrix:
        phi = np.asarray(phi, dtype=float)
        top = phi.max()
        return csr_matrix((np.exp(phi - top), (self.src, self.dst)), shape=(self.n_nodes, self.n_nodes)), top


@dataclass
class PressureResult:
    value: float
    L_max: int
    tail_bound: float
    tail_estimate: float
    increment: float
    gap_ratio: float
    iterations: int
    converged: bool
    sigma: float | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# spectral radius
# ---------------------------------------------------------------------------


def perron(M: csr_matrix, tol: Tolerances = DEFAULT_TOL, transpose: bool = False):
    """Log spectral radius and Perron vector of a nonnegative sparse matrix.

    Power iteration from the all-ones vector with renormalization each step.
    A lazy shift ``M + mu I`` is applied when plain iteration oscillates
    (periodic graphs); the shift is removed from the returned value.
    """
    A = M.T.tocsr() if transpose else M
    n = A.shape[0]
    for mu in (0.0, None):
        v = np.full(n, 1.0 / n)
        history = []
        diffs = []
        lam = 0.0
        for it in range(1, tol.max_iter + 1):
            w = A @ v
            if mu:
                w = w + mu * v
            s = w.sum()
            if not s > 0:
                raise ConvergenceError("transfer matrix annihilates the positive cone")
            w /= s
            diffs.append(np.abs(w - v).sum())
            v = w
            lam = s - (mu or 0.0)
            history.append(lam)
            # every step in the window must be quiet; a single lag can alias a complex subdominant mode
            if len(history) > tol.window and max(
                abs(history[-j] - history[-j - 1]) for j in range(1, tol.window + 1)
            ) <= tol.drift * abs(lam):
                tail = [d for d in diffs[-tol.window:] if d > 0]
                gap = float(np.exp(np.mean(np.diff(np.log(tail))))) if len(tail) > 2 else 0.0
                return math.log(lam), v, it, min(gap, 1.0)
        if mu is None:
            break
        mu = lam if lam > 0 else 1.0
    raise ConvergenceError(f"power iteration did not converge in {tol.max_iter} steps (last {lam})")


def log_spectral_radius(graph: TransferGraph, phi, tol: Tolerances = DEFAULT_TOL) -> float:
    M, top = graph.matrix(phi)
    return perron(M, tol)[0] + top


def edge_measure(graph: TransferGraph, phi, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Equilibrium distribution on edges from the left and right Perron vectors."""
    M, top = graph.matrix(phi)
    _, r, _, _ = perron(M, tol)
    _, l, _, _ = perron(M, tol, transpose=True)
    w = np.exp(np.asarray(phi) - top) * l[graph.src] * r[graph.dst]
    return w / w.sum()


# ---------------------------------------------------------------------------
# potentials of the form -s(a tau + b kappa) + extra
# ---------------------------------------------------------------------------


@dataclass
class WeightedPotential:
    tau: np.ndarray
    kappa: np.ndarray | None = None
    a: float = 1.0
    b: float = 0.0
    s: float = 1.0
    extra: np.ndarray | float = 0.0
    C1: float = 0.0  # band constant: value >= 2 log|x0| - C1 on Type II letters

    def __post_init__(self):
        if self.a < 0 or self.b < 0 or self.a + self.b == 0:
            raise ValueError("weights must satisfy a, b >= 0 and a + b > 0")
        if self.b and self.kappa is None:
            raise ValueError("b > 0 needs a kappa table")

    @property
    def sigma(self) -> float:
        return self.s * (self.a + self.b)

    def values(self) -> np.ndarray:
        v = self.a * self.tau
        if self.b:
            v = v + self.b * self.kappa
        return -self.s * v + self.extra


def check_guard(sigma: float, tol: Tolerances = DEFAULT_TOL) -> None:
    if sigma < 0.5 + tol.guard:
        raise DivergenceError(
            f"s(a+b) = {sigma:.6g} is below 1/2 + {tol.guard}; the pressure of the full induced shift "
            "is infinite for s(a+b) < 1/2 and the guard margin keeps requests away from the transition"
        )


def tail_bound(graph: TransferGraph, sigma: float, C1: float) -> float:
    """Band bound on the Type II weight beyond the truncation level."""
    if graph.level is None or graph.L_max == 0:
        return 0.0
    if sigma <= 0.5:
        return math.inf
    x = 2 * sigma
    return graph.n_shapes * math.exp(sigma * C1) * graph.N_star ** (-x) * graph.L_max ** (1 - x) / (x - 1)


def _tail_estimate(increment: float, sigma: float) -> float:
    # Type II weights decay like l^(-2 sigma); the halving increment extrapolates the missing pressure
    if sigma <= 0.5:
        return math.inf
    return increment / (2 ** (2 * sigma - 1) - 1)


def pressure(
    graph: TransferGraph,
    potential,
    tol: Tolerances = DEFAULT_TOL,
    sigma: float | None = None,
    C1: float = 0.0,
    diagnostics: bool = True,
) -> PressureResult:
    """Pressure with truncation diagnostics.

    ``potential`` is an edge array or a :class:`WeightedPotential`; in the
    latter case ``sigma`` and ``C1`` are taken from it and the guard applies.
    """
    if isinstance(potential, WeightedPotential):
        sigma, C1 = potential.sigma, potential.C1
        phi = potential.values()
    else:
        phi = np.asarray(potential, dtype=float)
    if sigma is not None and graph.level is not None:
        check_guard(sigma, tol)
    M, top = graph.matrix(phi)
    value, _, iters, gap = perron(M, tol)
    value += top
    increment, tb, te = 0.0, 0.0, 0.0
    if graph.level is not None and diagnostics:
        half = graph.restrict(graph.L_max // 2)
        keep = graph.level <= graph.L_max // 2
        increment = value - log_spectral_radius(half, phi[keep], tol)
        sig = sigma if sigma is not None else 1.0
        tb = tail_bound(graph, sig, C1)
        te = _tail_estimate(increment, sig)
    converged = increment <= tol.increment and te <= tol.tail
    return PressureResult(float(value), graph.L_max, tb, te, float(increment), gap, iters, bool(converged), sigma)


def pressure_value(graph: TransferGraph, phi, tol: Tolerances = DEFAULT_TOL) -> float:
    return log_spectral_radius(graph, phi, tol)


# ---------------------------------------------------------------------------
# Bowen equation
# ---------------------------------------------------------------------------


@dataclass
class RootResult:
    root: float
    pressure_residual: float
    bracket: tuple[float, float]
    evaluations: int


def solve_decreasing(f, lo: float, tol: Tolerances = DEFAULT_TOL, hi: float | None = None) -> RootResult:
    """Zero of a decreasing function with ``f(lo) > 0``; the right end doubles."""
    f_lo = f(lo)
    if not f_lo > 0:
        raise BracketError(f"pressure at the left bracket {lo:.6g} is {f_lo:.6g}, not positive")
    hi = hi if hi is not None else 2 * max(lo, 1e-3)
    f_hi = f(hi)
    n = 2
    while f_hi > 0:
        if n > tol.bracket_doublings:
            raise BracketError(f"no sign change up to {hi:.6g} (pressure {f_hi:.6g})")
        lo, f_lo = hi, f_hi
        hi *= 2
        f_hi = f(hi)
        n += 1
    calls = [0]

    def g(x):
        calls[0] += 1
        return f(x)

    root = brentq(g, lo, hi, xtol=tol.root, rtol=4 * np.finfo(float).eps)
    return RootResult(root, f(root), (lo, hi), n + calls[0] + 1)


def bowen_root(
    graph: TransferGraph,
    tau,
    kappa=None,
    a: float = 1.0,
    b: float = 0.0,
    tol: Tolerances = DEFAULT_TOL,
) -> RootResult:
    """Unique ``s`` with ``P(-s(a tau + b kappa)) = 0``."""
    if a < 0 or b < 0 or a + b == 0:
        raise ValueError("weights must satisfy a, b >= 0 and a + b > 0")
    v = a * np.asarray(tau, dtype=float)
    if b:
        if kappa is None:
            raise ValueError("b > 0 needs kappa")
        v = v + b * np.asarray(kappa, dtype=float)
    lo = (0.5 + tol.guard) / (a + b) if graph.level is not None else 1e-6
    return solve_decreasing(lambda s: log_spectral_radius(graph, -s * v, tol), lo, tol)


# ---------------------------------------------------------------------------
# derivatives
# ---------------------------------------------------------------------------


def _richardson(d, h: float) -> float:
    return (4 * d(h / 2) - d(h)) / 3


def gibbs_average(graph: TransferGraph, base, f, tol: Tolerances = DEFAULT_TOL, h: float | None = None) -> float:
    """``d/dt P(base + t f)`` at 0: the integral of ``f`` against the equilibrium state."""
    base = np.asarray(base, dtype=float)
    f = np.broadcast_to(np.asarray(f, dtype=float), base.shape)
    h = h or tol.fd_step
    P = lambda t: log_spectral_radius(graph, base + t * f, tol)
    return _richardson(lambda k: (P(k) - P(-k)) / (2 * k), h)


def variance(
    graph: TransferGraph,
    base,
    f,
    tol: Tolerances = DEFAULT_TOL,
    h: float | None = None,
    mean: float | None = None,
    noise: float = 1e-7,
) -> float:
    """Second derivative of ``t -> P(base + t (f - mean))`` at 0, clamped at 0 within ``noise``."""
    base = np.asarray(base, dtype=float)
    f = np.broadcast_to(np.asarray(f, dtype=float), base.shape)
    h = h or tol.fd_step
    if mean is None:
        mean = gibbs_average(graph, base, f, tol, h)
    fc = f - mean
    P0 = log_spectral_radius(graph, base, tol)
    P = lambda t: log_spectral_radius(graph, base + t * fc, tol)
    v = _richardson(lambda k: (P(k) - 2 * P0 + P(-k)) / (k * k), h)
    if v < 0 and v > -noise:
        return 0.0
    return v
