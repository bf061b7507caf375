"""Manhattan curves, Bishop-Steiger entropy, intersection numbers and rigidity verdicts."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .coding import InducedShift, build_induced
from .fuchsian import FuchsianRep
from .potential import PotentialTable, evaluate_kappa, evaluate_tau
from .pressure import (
    DEFAULT_TOL,
    ConvergenceError,
    Tolerances,
    TransferGraph,
    bowen_root,
    gibbs_average,
    log_spectral_radius,
    solve_decreasing,
    tail_bound,
)

RENORMALIZATION_LIMIT = 0.02
DEFAULT_GRID = np.round(np.linspace(0.0, 1.0, 21), 12)


@dataclass
class PairSystem:
    """A type-preserving pair coded on one induced shift, with both potentials
    rescaled by their own Bowen roots so that ``P(-tau) = P(-kappa) = 0``."""

    rep1: FuchsianRep
    rep2: FuchsianRep
    shift: InducedShift
    graph: TransferGraph
    tau_table: PotentialTable
    kappa_table: PotentialTable
    scale_tau: float
    scale_kappa: float

    @property
    def tau(self) -> np.ndarray:
        return self.scale_tau * self.tau_table.values

    @property
    def kappa(self) -> np.ndarray:
        return self.scale_kappa * self.kappa_table.values

    @property
    def C1(self) -> float:
        return max(self.tau_table.C1, self.kappa_table.C1)

    @property
    def discretization_error(self) -> float:
        return abs(self.scale_tau - 1) + abs(self.scale_kappa - 1)

    def swapped(self) -> "PairSystem":
        return PairSystem(self.rep2, self.rep1, self.shift, self.graph, self.kappa_table, self.tau_table,
                          self.scale_kappa, self.scale_tau)


def renormalization(graph: TransferGraph, table: PotentialTable, tol: Tolerances = DEFAULT_TOL) -> float:
    root = bowen_root(graph, table.values, tol=tol).root
    if abs(root - 1) > RENORMALIZATION_LIMIT:
        raise ConvergenceError(
            f"Bowen root {root:.6f} of the discretized potential is off by more than {RENORMALIZATION_LIMIT}; "
            "raise L_max"
        )
    return root


def build_pair(
    rep1: FuchsianRep,
    rep2: FuchsianRep | None = None,
    n_star: int = 1,
    L_max: int = 200,
    tol: Tolerances = DEFAULT_TOL,
    shift: InducedShift | None = None,
) -> PairSystem:
    rep2 = rep1 if rep2 is None else rep2
    shift = shift or build_induced(rep1, n_star, L_max)
    graph = TransferGraph.from_shift(shift)
    t1 = evaluate_tau(rep1, shift)
    t2 = evaluate_kappa(rep2, shift) if rep2 is not rep1 else t1
    a = renormalization(graph, t1, tol)
    b = a if t2 is t1 else renormalization(graph, t2, tol)
    return PairSystem(rep1, rep2, shift, graph, t1, t2, a, b)


# ---------------------------------------------------------------------------
# Manhattan curve
# ---------------------------------------------------------------------------


@dataclass
class ManhattanCurve:
    s: np.ndarray
    chi: np.ndarray
    residual: np.ndarray
    tail_bound: np.ndarray
    L_max: int
    error: np.ndarray
    pair: tuple[str, str] = ("", "")
    line_tol: float = 0.02

    @property
    def line_deviation(self) -> float:
        return float(np.max(np.abs(self.chi - (1 - self.s))))

    @property
    def second_differences(self) -> np.ndarray:
        return self.chi[2:] - 2 * self.chi[1:-1] + self.chi[:-2]

    def chi_at(self, s: float) -> float:
        j = int(np.argmin(np.abs(self.s - s)))
        if abs(self.s[j] - s) > 1e-9:
            raise KeyError(f"s = {s} is not on the grid")
        return float(self.chi[j])

    @property
    def verdict(self) -> str:
        if self.line_deviation <= self.line_tol:
            return "line"
        if np.all(self.second_differences >= -1e-4):
            return "strictly convex"
        return "undetermined"

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["s", "chi", "residual", "tail_bound", "L_max"])
            for row in zip(self.s, self.chi, self.residual, self.tail_bound):
                wr.writerow([repr(float(v)) for v in row] + [self.L_max])


def solve_chi(system: PairSystem, s: float, tol: Tolerances = DEFAULT_TOL, graph: TransferGraph | None = None):
    """``chi`` with ``P(-s tau - chi kappa) = 0`` and the pressure residual there."""
    graph = graph or system.graph
    tau, kappa = system.tau, system.kappa
    if graph is not system.graph:
        keep = system.graph.level <= graph.L_max
        tau, kappa = tau[keep], kappa[keep]
    f = lambda c: log_spectral_radius(graph, -(s * tau + c * kappa), tol)
    lo = max(0.0, 0.5 + tol.guard - s)
    if s >= 1.0:
        # P(-s tau) <= 0 already; the curve meets the axis at s = 1
        return 0.0, f(0.0)
    res = solve_decreasing(f, lo, tol, hi=max(2 * lo, 1.5))
    return res.root, res.pressure_residual


def trace_curve(
    system: PairSystem,
    grid=DEFAULT_GRID,
    tol: Tolerances = DEFAULT_TOL,
    line_tol: float = 0.02,
    error_estimate: bool = True,
) -> ManhattanCurve:
    grid = np.asarray(grid, dtype=float)
    half = system.graph.restrict(system.graph.L_max // 2) if error_estimate else None
    chi, resid, tails, errs = [], [], [], []
    for s in grid:
        if s == 0.0:
            c, r = 1.0, log_spectral_radius(system.graph, -system.kappa, tol)
        else:
            c, r = solve_chi(system, s, tol)
        chi.append(c)
        resid.append(r)
        tails.append(tail_bound(system.graph, s + c, system.C1))
        e = system.discretization_error
        if error_estimate and 0.0 < s < 1.0:
            e += abs(c - solve_chi(system, s, tol, half)[0])
        errs.append(e)
    return ManhattanCurve(grid, np.array(chi), np.array(resid), np.array(tails), system.graph.L_max,
                          np.array(errs), (system.rep1.name, system.rep2.name), line_tol)


def bishop_steiger_entropy(system: PairSystem, tol: Tolerances = DEFAULT_TOL) -> float:
    """The critical exponent of the (1, 1) direction, reported as ``h_BS``."""
    return bowen_root(system.graph, system.tau, system.kappa, 1.0, 1.0, tol).root


def intersection_number(system: PairSystem, tol: Tolerances = DEFAULT_TOL) -> float:
    base = -system.tau
    return gibbs_average(system.graph, base, system.kappa, tol) / gibbs_average(system.graph, base, system.tau, tol)


# ---------------------------------------------------------------------------
# verdict
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RigidityThresholds:
    line: float = 0.02
    intersection: float = 0.01
    entropy: float = 0.01


@dataclass
class Verdict:
    verdict: str
    line_deviation: float
    intersection_deviation: float
    entropy_deviation: float
    tests: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def _grade(dev: float, thr: float) -> str:
    # pass inside the threshold, fail beyond twice it, undecided in between
    if thr <= 0 or not math.isfinite(dev):
        return "undecided"
    if abs(dev) <= thr:
        return "pass"
    if abs(dev) > 2 * thr:
        return "fail"
    return "undecided"


def rigidity_classifier(
    curve: ManhattanCurve, I: float, h_BS: float, thresholds: RigidityThresholds = RigidityThresholds()
) -> Verdict:
    """Combine the straight-line, intersection and entropy rigidity tests."""
    line_dev = curve.line_deviation
    i_dev = I - 1.0
    h_dev = h_BS - 0.5
    tests = {
        "line": _grade(line_dev, thresholds.line),
        "intersection": _grade(i_dev, thresholds.intersection),
        "entropy": _grade(h_dev, thresholds.entropy),
    }
    notes = []
    # failures must point the way the inequalities allow
    if tests["intersection"] == "fail" and i_dev < 0:
        tests["intersection"] = "undecided"
        notes.append("intersection number below 1: numerical inconsistency")
    if tests["entropy"] == "fail" and h_dev > 0:
        tests["entropy"] = "undecided"
        notes.append("Bishop-Steiger entropy above 1/2: numerical inconsistency")
    mid = np.argmin(np.abs(curve.s - 0.5))
    if tests["line"] == "fail" and curve.chi[mid] > 0.5:
        tests["line"] = "undecided"
        notes.append("curve lies above the chord: numerical inconsistency")
    grades = set(tests.values())
    if grades == {"pass"}:
        verdict = "CONJUGATE"
    elif "fail" in grades:
        verdict = "NON_CONJUGATE"
    else:
        verdict = "INCONCLUSIVE"
    return Verdict(verdict, line_dev, i_dev, h_dev, tests, notes)
