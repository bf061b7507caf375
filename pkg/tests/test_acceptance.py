"""One test per acceptance criterion; each prints a PASS/FAIL line in the summary."""

import cmath
import math
import random
import time

import numpy as np
import pytest

from conftest import record
from cusptherm.coding import build_induced
from cusptherm.fuchsian import word_map
from cusptherm.hypgeom import busemann, distance
from cusptherm.manhattan import bishop_steiger_entropy, intersection_number
from cusptherm.metric import MarkovPath, metric_via_manhattan, pressure_metric, relative_spread
from cusptherm.oracle import cross_check_bowen, enumerate_words, marked_length_spectrum
from cusptherm.potential import birkhoff_sum, evaluate_tau
from cusptherm.pressure import (
    DivergenceError,
    TransferGraph,
    WeightedPotential,
    bowen_root,
    log_spectral_radius,
    pressure,
    variance,
)

BUILTINS = ["torus", "s03"]
_C1: list = []


@pytest.mark.parametrize("name", BUILTINS)
def test_criterion_1_bowen_root(name, request):
    rep = request.getfixturevalue(name)
    start = time.perf_counter()
    shift = build_induced(rep, n_star=1, L_max=200)
    graph = TransferGraph.from_shift(shift)
    tau = evaluate_tau(rep, shift)
    root = bowen_root(graph, tau.values).root
    elapsed = time.perf_counter() - start
    ok = 0.98 <= root <= 1.02 and elapsed <= 300
    prev = _C1
    prev.append((ok, f"{name} root {root:.5f} in {elapsed:.1f}s"))
    record(1, all(o for o, _ in prev), "; ".join(d for _, d in prev))
    assert ok


def test_criterion_2_conjugate_pair(conj_curve, conj_pair):
    h = bishop_steiger_entropy(conj_pair)
    I = intersection_number(conj_pair)
    dev = conj_curve.line_deviation
    ok = len(conj_curve.s) == 21 and dev <= 0.02 and abs(h - 0.5) <= 0.01 and abs(I - 1) <= 0.01
    record(2, ok, f"max|chi-(1-s)| {dev:.2e}, h_BS {h:.5f}, I {I:.5f}")
    assert ok


def test_criterion_3_non_conjugate_pair(far_curve, far_pair):
    j = int(np.argmin(np.abs(far_curve.s - 0.5)))
    chi_half, err = float(far_curve.chi[j]), float(far_curve.error[j])
    margin = 0.5 - chi_half
    h = bishop_steiger_entropy(far_pair)
    I = intersection_number(far_pair)
    d2 = float(far_curve.second_differences.min())
    ok = margin > 0 and margin >= 3 * err and h < 0.5 and I > 1 and d2 >= -1e-4
    record(3, ok, f"chi(1/2) {chi_half:.5f} (margin {margin:.4f}, error {err:.1e}), h_BS {h:.5f}, "
                  f"I {I:.5f}, min second difference {d2:.2e}")
    assert ok


def test_criterion_4_phase_transition(torus_graph, torus_tau, s03_graph, s03_tau):
    refused, finite = [], []
    for g, t in ((torus_graph, torus_tau), (s03_graph, s03_tau)):
        for a, b in ((1.0, 0.0), (0.5, 0.5), (1.0, 1.0)):
            s = 0.49 / (a + b)
            try:
                pressure(g, WeightedPotential(t.values, t.values, a, b, s))
                refused.append(False)
            except DivergenceError:
                refused.append(True)
            res = pressure(g, WeightedPotential(t.values, t.values, a, b, 0.55 / (a + b), C1=t.C1))
            finite.append(math.isfinite(res.value) and math.isfinite(res.tail_bound))
    ok = all(refused) and all(finite)
    record(4, ok, f"refused {sum(refused)}/{len(refused)} below 1/2, finite {sum(finite)}/{len(finite)} at 0.55")
    assert ok


def test_criterion_5_metric(markov_samples):
    res = pressure_metric(MarkovPath(), samples=markov_samples)
    quarter = metric_via_manhattan(markov_samples, 0.25)
    half = res.route_values["manhattan(s=0.5)"]
    s_spread = relative_spread([quarter, half])
    ok = res.spread <= 0.05 and s_spread <= 0.05
    vals = ", ".join(f"{k} {v:.6f}" for k, v in res.route_values.items())
    record(5, ok, f"{vals}; spread {res.spread:.1e}; s=1/4 vs 1/2 spread {s_spread:.1e}")
    assert ok


def test_criterion_6_length_spectrum(torus, torus_tau, s03, s03_tau):
    worst = 0.0
    for rep, table in ((torus, torus_tau), (s03, s03_tau)):
        lengths = marked_length_spectrum(rep, 7.5, 10)[:50]
        assert len(lengths) == 50
        for word, _ in lengths:
            oracle = 2 * math.acosh(abs(word_map(rep.maps, word).trace) / 2)
            worst = max(worst, abs(birkhoff_sum(table, word) - oracle))
    ok = worst <= 1e-6
    record(6, ok, f"max |S_m tau - 2 arccosh(|tr|/2)| = {worst:.1e} over 50 classes on each surface")
    assert ok


def test_criterion_7_poincare_series(torus, torus_far, far_pair, s03, s03_graph, s03_tau):
    enum = enumerate_words(torus, torus_far, N=16, directions=((1.0, 0.0), (0.0, 1.0), (1.0, 1.0)))
    # compare against the raw coded potentials, not the ones rescaled to root 1
    tau, kappa = far_pair.tau_table.values, far_pair.kappa_table.values
    rows = cross_check_bowen(enum, far_pair.graph, tau, kappa)
    enum3 = enumerate_words(s03, N=16)
    rows += cross_check_bowen(enum3, s03_graph, s03_tau.values)
    labels = ["torus pair (1,0)", "torus pair (0,1)", "torus pair (1,1)", "S03 (1,0)"]
    ok = all(r.agrees for r in rows)
    record(7, ok, ", ".join(f"{l} {r.oracle:.4f} vs {r.bowen:.4f}" for l, r in zip(labels, rows)))
    assert ok


def test_criterion_8_property_suites(torus, s03, torus_graph, torus_tau, s03_graph, s03_tau):
    rng = np.random.default_rng(8)
    failures = []
    for name, g, t in (("torus", torus_graph, torus_tau), ("S03", s03_graph, s03_tau)):
        phi = -t.values
        base = log_spectral_radius(g, phi)
        for c in (-1.0, 0.5, 2.0):
            if abs(log_spectral_radius(g, phi + c) - (base + c)) > 1e-10:
                failures.append(f"{name} affinity")
        f = np.sin(np.arange(g.n_edges))
        P = [log_spectral_radius(g, phi + x * f) for x in np.linspace(-0.3, 0.3, 7)]
        if np.min(np.diff(P, 2)) < -1e-8:
            failures.append(f"{name} convexity")
        node = rng.normal(size=g.n_nodes)
        if abs(variance(g, phi, node[g.src] - node[g.dst])) > 1e-5 or variance(g, phi, f) < 0:
            failures.append(f"{name} variance")
    for name, rep in (("torus", torus), ("S03", s03)):
        for _ in range(100):
            xi = cmath.exp(1j * rng.uniform(0, 2 * math.pi))
            x, y, z = (cmath.rect(rng.uniform(0, 0.9), rng.uniform(0, 2 * math.pi)) for _ in range(3))
            if abs(busemann(xi, x, z) - busemann(xi, x, y) - busemann(xi, y, z)) > 1e-10:
                failures.append(f"{name} cocycle")
            m = rep.maps[int(rng.integers(len(rep.maps)))]
            if abs(distance(m.act_disk(x), m.act_disk(y)) - distance(x, y)) > 1e-10:
                failures.append(f"{name} isometry")
    ok = not failures
    record(8, ok, "affinity, convexity, variance, cocycle, isometry on both surfaces"
                  + ("" if ok else f"; failed: {sorted(set(failures))}"))
    assert ok
