import csv
import math
import random

import numpy as np
import pytest

from cusptherm.fuchsian import conjugate, cusp_words, partner, punctured_torus_from_markov
from cusptherm.hypgeom import distance
from cusptherm.oracle import (
    InsufficientDataError,
    OracleError,
    cross_check_bowen,
    enumerate_words,
    estimate_critical_exponent,
    export_spectrum_csv,
    manhattan_distance,
    marked_length_spectrum,
    word_distances,
)

from conftest import CONJ

DIRS = ((1.0, 0.0), (1.0, 1.0), (2.0, 0.0))


@pytest.fixture(scope="module")
def markov():
    return punctured_torus_from_markov(3.0, 3.0, 3.0)


@pytest.fixture(scope="module")
def self_enum(markov):
    return enumerate_words(markov, markov, N=12, directions=DIRS)


def _reduced(rng, length):
    w = [rng.randrange(4)]
    while len(w) < length:
        s = rng.randrange(4)
        if s != partner(w[-1]):
            w.append(s)
    return tuple(w)


def test_shell_sizes(self_enum):
    n = np.arange(1, self_enum.N + 1)
    assert self_enum.shell_counts[0] == 1
    assert np.array_equal(self_enum.shell_counts[1:], 4 * 3 ** (n - 1))
    for d in DIRS:
        assert self_enum.hist[d].sum(axis=1).tolist() == self_enum.shell_counts.tolist()


def test_manhattan_distance_reductions():
    assert manhattan_distance(2.0, 5.0, 1, 0) == 2.0
    assert manhattan_distance(2.0, 5.0, 0, 1) == 5.0
    lhs = manhattan_distance(2.0, 5.0, 1.5, 0.5)
    assert lhs == pytest.approx(manhattan_distance(2.0, 5.0, 1.0, 0.5) + manhattan_distance(2.0, 5.0, 0.5, 0))
    with pytest.raises(OracleError):
        manhattan_distance(1.0, 1.0, 0, 0)
    with pytest.raises(OracleError):
        manhattan_distance(1.0, 1.0, -1, 2)


def test_word_distance_matches_disk_formula(markov):
    rng = random.Random(0)
    for _ in range(20):
        w = _reduced(rng, rng.randrange(1, 7))
        d, _ = word_distances(markov, markov, w)
        assert d == pytest.approx(distance(0, markov.word(w).act_disk(0)), rel=1e-9)


def test_triangle_inequality(markov):
    rng = random.Random(4)
    for _ in range(100):
        u, v = _reduced(rng, rng.randrange(1, 6)), _reduced(rng, rng.randrange(1, 6))
        d = lambda w: word_distances(markov, markov, w)[0]
        assert d(u + v) <= d(u) + d(v) + 1e-9


def test_exponents_of_a_self_pair(self_enum):
    one = estimate_critical_exponent(self_enum, 1, 0)
    diag = estimate_critical_exponent(self_enum, 1, 1)
    double = estimate_critical_exponent(self_enum, 2, 0)
    assert one.value == pytest.approx(1.0, abs=0.05)
    assert diag.value == pytest.approx(0.5, abs=0.05)
    # the histogram bins do not rescale with the weights, so halving is up to binning
    assert double.value == pytest.approx(one.value / 2, abs=2e-3)
    assert one.error < 0.05 and one.N == 12
    assert set(one.as_row()) >= {"value", "raw", "error", "slope"}


def test_estimator_preconditions(markov, self_enum):
    small = enumerate_words(markov, N=8)
    with pytest.raises(InsufficientDataError):
        estimate_critical_exponent(small, 1, 0)
    with pytest.raises(OracleError):
        estimate_critical_exponent(self_enum, 0, 1)


def test_threads_are_deterministic(markov):
    one = enumerate_words(markov, N=9, prefix_length=3)
    many = enumerate_words(markov, N=9, prefix_length=3, threads=3)
    assert np.array_equal(one.hist[(1.0, 0.0)], many.hist[(1.0, 0.0)])
    assert np.array_equal(one.min_distance[(1.0, 0.0)], many.min_distance[(1.0, 0.0)])


def test_cross_check_on_builtin_torus(torus, torus_graph, torus_tau):
    enum = enumerate_words(torus, N=12)
    (row,) = cross_check_bowen(enum, torus_graph, torus_tau.values)
    assert row.agrees and abs(row.difference) <= 0.05


def test_spectrum_shortest_class(markov):
    lengths = marked_length_spectrum(markov, 4.0, 6)
    assert lengths[0][1] == pytest.approx(2 * math.acosh(1.5), abs=1e-12)
    assert all(l > 0 for _, l in lengths)
    cusp = {tuple(w) for w in cusp_words(markov)}
    assert not any(w in cusp for w, _ in lengths)


def test_spectrum_conjugation_invariant(markov):
    a = marked_length_spectrum(markov, 5.0, 6)
    b = marked_length_spectrum(conjugate(markov, CONJ), 5.0, 6)
    da, db = dict(a), dict(b)
    assert set(da) == set(db)
    assert max(abs(da[w] - db[w]) for w in da) <= 1e-9
    with pytest.raises(OracleError):
        marked_length_spectrum(markov, 0.0)


def test_spectrum_csv(markov, tmp_path):
    lengths = marked_length_spectrum(markov, 3.0, 4)
    p = tmp_path / "lengths.csv"
    export_spectrum_csv(lengths, p)
    rows = list(csv.reader(open(p)))
    assert rows[0] == ["word", "length"] and len(rows) == len(lengths) + 1
