"""Pressure metric along analytic paths of representations.

Three routes are computed on one induced shift built from the base point:

1. Gibbs variance of the path derivative of the potential, over its mean;
2. second derivative of the intersection number ``I(rho_0, rho_t)``;
3. second derivative of the Manhattan curve ``chi_t(s)`` over ``s(s - 1)``.

Every potential along the path is rescaled by its own Bowen root so that
``P(-tau_t) = 0`` holds exactly in the truncated system; the three routes
then agree up to finite-difference error.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .fuchsian import FuchsianRep, conjugate, markov_completion, punctured_torus_from_markov
from .hypgeom import MobiusMap
from .manhattan import PairSystem, build_pair, renormalization
from .potential import evaluate_kappa
from .pressure import DEFAULT_TOL, Tolerances, gibbs_average, log_spectral_radius, solve_decreasing, variance

DEFAULT_H = 1e-2


class PathError(ValueError):
    pass


class TeichPath:
    """A one-parameter family ``t -> rep(t)`` with ``rep(0)`` the base point."""

    name = "path"

    def __call__(self, t: float) -> FuchsianRep:
        raise NotImplementedError

    def describe(self) -> dict:
        return {"kind": self.name}


class ConstantPath(TeichPath):
    name = "constant"

    def __init__(self, rep: FuchsianRep):
        self.rep = rep

    def __call__(self, t: float) -> FuchsianRep:
        return self.rep


@dataclass
class MarkovPath(TeichPath):
    """``(x0 + t dx, y0 + t dy, z(t))`` on the Markov surface, ``z`` continued from ``z0``."""

    base: tuple[float, float, float] = (3.0, 3.0, 3.0)
    direction: tuple[float, float] = (1.0, 0.0)
    name = "markov"

    def triple(self, t: float) -> tuple[float, float, float]:
        x0, y0, z0 = self.base
        x, y = x0 + t * self.direction[0], y0 + t * self.direction[1]
        roots = [markov_completion(x, y, b) for b in ("lower", "upper")]
        z = min(roots, key=lambda r: abs(r - z0))
        return x, y, z

    def __call__(self, t: float) -> FuchsianRep:
        return punctured_torus_from_markov(*self.triple(t))

    def scaled(self, c: float) -> "MarkovPath":
        return MarkovPath(self.base, (c * self.direction[0], c * self.direction[1]))

    def describe(self) -> dict:
        return {"kind": self.name, "base": list(self.base), "direction": list(self.direction)}


class ConjugationPath(TeichPath):
    """``t -> g_t rep g_t^-1`` with ``g_t`` the translation ``z -> e^t z`` (half-plane)."""

    name = "conjugation"

    def __init__(self, rep: FuchsianRep, speed: float = 1.0):
        self.rep, self.speed = rep, speed

    def __call__(self, t: float) -> FuchsianRep:
        if t == 0:
            return self.rep
        e = math.exp(self.speed * t / 2)
        return conjugate(self.rep, MobiusMap(e, 0.0, 0.0, 1 / e))

    def describe(self) -> dict:
        return {"kind": self.name, "speed": self.speed}


# ---------------------------------------------------------------------------
# sampled path
# ---------------------------------------------------------------------------


@dataclass
class PathSamples:
    """Renormalized potentials of ``rep(t)`` for ``t`` in ``{0, +-h, +-h/2}``."""

    base: PairSystem
    h: float
    kappas: dict  # t -> renormalized potential array
    scales: dict

    def tau(self, t: float) -> np.ndarray:
        return self.kappas[t]


def sample_path(
    path: TeichPath,
    h: float = DEFAULT_H,
    n_star: int = 1,
    L_max: int = 200,
    tol: Tolerances = DEFAULT_TOL,
    base: PairSystem | None = None,
) -> PathSamples:
    if h <= 0:
        raise PathError("step h must be positive")
    base = base or build_pair(path(0.0), None, n_star, L_max, tol)
    kappas = {0.0: base.tau}
    scales = {0.0: base.scale_tau}
    for t in (-h, -h / 2, h / 2, h):
        table = evaluate_kappa(path(t), base.shift)
        c = renormalization(base.graph, table, tol)
        kappas[t], scales[t] = c * table.values, c
    return PathSamples(base, h, kappas, scales)


def _first(samples: PathSamples) -> np.ndarray:
    h, k = samples.h, samples.kappas
    d1 = (k[h] - k[-h]) / (2 * h)
    d2 = (k[h / 2] - k[-h / 2]) / h
    return (4 * d2 - d1) / 3


def _second(samples: PathSamples) -> np.ndarray:
    h, k = samples.h, samples.kappas
    s1 = (k[h] - 2 * k[0.0] + k[-h]) / h**2
    s2 = (k[h / 2] - 2 * k[0.0] + k[-h / 2]) / (h / 2) ** 2
    return (4 * s2 - s1) / 3


@dataclass
class TauDot:
    values: np.ndarray
    gibbs_average: float


def tau_dot(samples: PathSamples, tol: Tolerances = DEFAULT_TOL) -> TauDot:
    f = _first(samples)
    base = -samples.base.tau
    return TauDot(f, gibbs_average(samples.base.graph, base, f, tol))


def metric_via_variance(samples: PathSamples, tol: Tolerances = DEFAULT_TOL) -> float:
    g = samples.base.graph
    base = -samples.base.tau
    td = tau_dot(samples, tol)
    if not np.any(td.values):
        return 0.0
    var = variance(g, base, td.values, tol, mean=td.gibbs_average)
    return var / gibbs_average(g, base, samples.base.tau, tol)


def intersection_along(samples: PathSamples, t: float, tol: Tolerances = DEFAULT_TOL) -> float:
    g = samples.base.graph
    base = -samples.base.tau
    return gibbs_average(g, base, samples.kappas[t], tol) / gibbs_average(g, base, samples.base.tau, tol)


def metric_via_hessian(samples: PathSamples, tol: Tolerances = DEFAULT_TOL) -> float:
    # I(t) is linear in kappa_t under the fixed base measure, so the second
    # difference of I is the Gibbs average of the second difference of kappa_t
    g = samples.base.graph
    base = -samples.base.tau
    acc = _second(samples)
    if not np.any(acc):
        return 0.0
    return gibbs_average(g, base, acc, tol) / gibbs_average(g, base, samples.base.tau, tol)


def chi_along(samples: PathSamples, t: float, s: float, tol: Tolerances = DEFAULT_TOL) -> float:
    g = samples.base.graph
    tau, kap = samples.base.tau, samples.kappas[t]
    f = lambda c: log_spectral_radius(g, -(s * tau + c * kap), tol)
    lo = max(1e-9, 0.5 + tol.guard - s)
    return solve_decreasing(f, lo, tol, hi=1.5).root


def metric_via_manhattan(samples: PathSamples, s: float = 0.5, tol: Tolerances = DEFAULT_TOL) -> float:
    if not 0.0 < s < 1.0:
        raise PathError("s must lie strictly between 0 and 1 (the factor s(s - 1) vanishes at the ends)")
    h = samples.h
    c = {t: chi_along(samples, t, s, tol) for t in (-h, -h / 2, 0.0, h / 2, h)}
    s1 = (c[h] - 2 * c[0.0] + c[-h]) / h**2
    s2 = (c[h / 2] - 2 * c[0.0] + c[-h / 2]) / (h / 2) ** 2
    return ((4 * s2 - s1) / 3) / (s * (s - 1))


def chi_first_difference(samples: PathSamples, s: float = 0.5, tol: Tolerances = DEFAULT_TOL) -> float:
    h = samples.h
    return (chi_along(samples, h, s, tol) - chi_along(samples, -h, s, tol)) / (2 * h)


@dataclass
class MetricResult:
    value: float
    route_values: dict
    spread: float
    h: float
    L_max: int
    n_star: int
    path: dict = field(default_factory=dict)
    tau_dot_average: float = 0.0

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def relative_spread(values) -> float:
    v = np.asarray(list(values), dtype=float)
    scale = np.max(np.abs(v))
    return float((v.max() - v.min()) / scale) if scale > 0 else 0.0


def pressure_metric(
    path: TeichPath,
    h: float = DEFAULT_H,
    n_star: int = 1,
    L_max: int = 200,
    routes=("variance", "hessian", "manhattan"),
    s: float = 0.5,
    tol: Tolerances = DEFAULT_TOL,
    samples: PathSamples | None = None,
) -> MetricResult:
    samples = samples or sample_path(path, h, n_star, L_max, tol)
    vals = {}
    for r in routes:
        if r == "variance":
            vals[r] = metric_via_variance(samples, tol)
        elif r == "hessian":
            vals[r] = metric_via_hessian(samples, tol)
        elif r == "manhattan":
            vals[f"manhattan(s={s:g})"] = metric_via_manhattan(samples, s, tol)
        else:
            raise PathError(f"unknown route {r!r}")
    main = vals.get("variance", next(iter(vals.values())))
    return MetricResult(main, vals, relative_spread(vals.values()), h, samples.base.graph.L_max, n_star,
                        path.describe(), tau_dot(samples, tol).gibbs_average)


def gram_matrix(base=(3.0, 3.0, 3.0), h: float = DEFAULT_H, L_max: int = 200, tol: Tolerances = DEFAULT_TOL,
                route: str = "variance") -> np.ndarray:
    """2x2 metric in the ``x`` and ``y`` Markov directions, off-diagonal by polarization."""
    pair = build_pair(MarkovPath(base)(0.0), None, 1, L_max, tol)

    def norm(d):
        samples = sample_path(MarkovPath(base, d), h, 1, L_max, tol, base=pair)
        return pressure_metric(MarkovPath(base, d), routes=(route,), tol=tol, samples=samples).value

    a, b = norm((1.0, 0.0)), norm((0.0, 1.0))
    off = (norm((1.0, 1.0)) - norm((1.0, -1.0))) / 4
    return np.array([[a, off], [off, b]])
