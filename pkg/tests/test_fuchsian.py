import itertools
import random

import numpy as np
import pytest

from cusptherm.fuchsian import (
    RepresentationError,
    conjugate,
    cusp_words,
    from_side_pairing,
    label_name,
    markov_completion,
    parse_label,
    partner,
    punctured_torus_from_markov,
    rep_from_config,
    rep_to_config,
    vertex_cycles,
)
from cusptherm.hypgeom import MobiusMap, translation_length


def _mat(rep, word):
    m = np.eye(2)
    for s in word:
        m = m @ rep.maps[s].matrix()
    return m


def _random_reduced(rng, n_labels, length):
    w = [rng.randrange(n_labels)]
    while len(w) < length:
        s = rng.randrange(n_labels)
        if s != partner(w[-1]):
            w.append(s)
    return tuple(w)


def test_labels_round_trip():
    for s in range(6):
        assert parse_label(label_name(s)) == s
        assert partner(partner(s)) == s
    assert label_name(0) == "1" and label_name(1) == "1'"


def test_markov_traces_and_commutator(torus):
    A, B = (m.matrix() for m in torus.generators)
    assert np.trace(A) == pytest.approx(3, abs=1e-9)
    assert np.trace(B) == pytest.approx(3, abs=1e-9)
    assert abs(np.trace(A @ B)) == pytest.approx(3, abs=1e-9)
    K = A @ B @ np.linalg.inv(A) @ np.linalg.inv(B)
    assert np.trace(K) == pytest.approx(-2, abs=1e-9)
    assert torus.k == 2 == 2 * torus.genus + torus.punctures - 1


@pytest.mark.parametrize("branch", ["upper", "lower"])
def test_perturbed_triple_cycles_parabolic(branch):
    z = markov_completion(3.2, 3.0, branch)
    assert 3.2**2 + 9 + z * z == pytest.approx(3.2 * 3 * z, rel=1e-12)
    rep = punctured_torus_from_markov(3.2, 3.0, z)
    cycles, lcm = vertex_cycles(rep)
    assert len(cycles) == 1 and lcm == 4  # one cusp, four vertices
    words = cusp_words(rep)
    assert len(set(words)) == 8  # four vertices, two directions
    for w in words:
        assert abs(np.trace(_mat(rep, w))) == pytest.approx(2, abs=1e-9)


def test_markov_completion_roots():
    assert markov_completion(3.2, 3.0, "lower") == pytest.approx(2.8506, abs=1e-4)
    assert markov_completion(3.2, 3.0, "upper") == pytest.approx(6.7494, abs=1e-4)
    with pytest.raises(RepresentationError):
        markov_completion(2.1, 2.1)


def test_markov_relation_enforced():
    with pytest.raises(RepresentationError):
        punctured_torus_from_markov(3.0, 3.0, 3.1)
    with pytest.raises(RepresentationError):
        punctured_torus_from_markov(2.0, 2.0, 2.0)


def test_cycle_products_fix_their_vertex(torus, s03):
    for rep in (torus, s03):
        for c in rep.cycles():
            m = rep.word(tuple(reversed(c.word)))
            fixed = [m.act_disk(c.vertex), rep.word(c.word).act_disk(c.vertex)]
            assert min(abs(f - c.vertex) for f in fixed) < 1e-9


def test_cycle_structure(torus, s03):
    assert [len(c.word) for c in torus.cycles()] == [4]
    lengths = sorted(len(c.word) for c in s03.cycles())
    assert lengths == [1, 1, 2]
    assert vertex_cycles(s03)[1] == 2
    # both directions of every cycle are recorded
    for rep in (torus, s03):
        words = set(cusp_words(rep))
        for w in words:
            inv = tuple(partner(s) for s in reversed(w))
            assert any(inv == v[j:] + v[:j] for v in words for j in range(len(v)))


@pytest.mark.parametrize("name", ["torus", "s03"])
def test_no_short_elliptic_words(name, request):
    rep = request.getfixturevalue(name)
    for length in range(1, 6):
        for w in itertools.product(range(4), repeat=length):
            if any(w[j + 1] == partner(w[j]) for j in range(length - 1)):
                continue
            assert abs(np.trace(_mat(rep, w))) >= 2 - 1e-9


def test_config_round_trip(torus, s03):
    for rep in (torus, s03):
        again = rep_from_config(rep_to_config(rep))
        assert sorted(cusp_words(again)) == sorted(cusp_words(rep))
        for a, b in zip(again.maps, rep.maps):
            assert a == b


def test_builtin_config_families():
    rep = rep_from_config({"family": "punctured_torus", "markov": [3.2, 3.0]})
    assert rep.params["markov"][2] == pytest.approx(markov_completion(3.2, 3.0))
    assert rep_from_config({"family": "s03"}).punctures == 3
    with pytest.raises(RepresentationError):
        rep_from_config({"family": "genus-two"})


def test_rejects_overlapping_intervals(torus):
    v = list(torus.pairing.vertices)
    v[1], v[2] = v[2], v[1]
    with pytest.raises(RepresentationError):
        from_side_pairing(v, torus.pairing.side_labels, {0: torus.maps[0], 2: torus.maps[2]}, 1, 1)


def test_rejects_hyperbolic_cycle(s03):
    # a generator that still maps the sides correctly cannot be found by
    # perturbing entries, so any failure along the way must be a rejection
    bad = MobiusMap(1.0, 2.1, 0.0, 1.0)
    with pytest.raises(RepresentationError):
        from_side_pairing(s03.pairing.vertices, s03.pairing.side_labels, {0: bad, 2: s03.maps[2]}, 0, 3)


def test_rejects_wrong_euler_count(s03):
    with pytest.raises(RepresentationError):
        from_side_pairing(s03.pairing.vertices, s03.pairing.side_labels, {0: s03.maps[0], 2: s03.maps[2]}, 1, 3)


def test_origin_must_be_inside(torus):
    g = MobiusMap(8.0, 0.0, 0.0, 1 / 8.0)
    moved = conjugate(torus, g)
    with pytest.raises(RepresentationError):
        from_side_pairing(moved.pairing.vertices, moved.pairing.side_labels,
                          {0: moved.maps[0], 2: moved.maps[2]}, 1, 1)


def test_conjugate_identity_is_equal(torus):
    same = conjugate(torus, MobiusMap.identity())
    assert all(a == b for a, b in zip(same.maps, torus.maps))
    assert same.pairing.side_labels == torus.pairing.side_labels


@pytest.mark.parametrize("name", ["torus", "s03"])
def test_conjugation_preserves_marked_lengths(name, request, torus_conj):
    rep = request.getfixturevalue(name)
    other = torus_conj if name == "torus" else conjugate(rep, MobiusMap(1.3, 0.4, 0.2, (1 + 0.08) / 1.3))
    rng = random.Random(7)
    checked = 0
    while checked < 100:
        w = _random_reduced(rng, 4, rng.randrange(1, 9))
        m1 = rep.word(w)
        if m1.is_identity() or abs(abs(m1.trace) - 2) < 1e-9:
            continue
        l1, l2 = translation_length(m1)[0], translation_length(other.word(w))[0]
        assert l2 == pytest.approx(l1, abs=1e-10 * max(1.0, l1))
        checked += 1


def test_s03_is_level_two():
    from cusptherm.fuchsian import thrice_punctured_sphere

    rep = thrice_punctured_sphere()
    A, B = (m.matrix() for m in rep.generators)
    assert np.allclose(A, [[1, 2], [0, 1]]) and np.allclose(B, [[1, 0], [2, 1]])
    assert np.trace(A @ B) == pytest.approx(6)
