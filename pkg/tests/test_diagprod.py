import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gwlab import diagprod as D
from gwlab.diagprod import ALPHA, BETA, TAU
from gwlab.errors import InvalidParameter

from conftest import three_factor_spec, two_factor_spec

SPEC2 = two_factor_spec()
SPEC3 = three_factor_spec()


def random_element(spec, rng, length=30):
    return D.word_to_element(spec, D.random_word(spec, length, rng))


def words(spec, max_len=64):
    gens = spec.generators()
    return st.lists(st.sampled_from(gens), max_size=max_len)


def test_spec_validation():
    with pytest.raises(InvalidParameter):
        D.DiagGroupSpec([0, 2, 4], ["Z2xZ2", {"dihedral": 4}, {"dihedral": 4}])
    with pytest.raises(InvalidParameter):
        D.DiagGroupSpec([1, 4], ["Z2xZ2", {"dihedral": 4}])
    with pytest.raises(InvalidParameter):
        D.DiagGroupSpec([0, 3], ["Z2xZ2", {"dihedral": 4}])
    # an infinite k ends the family
    s = D.DiagGroupSpec([0, 2, "inf"], ["Z2xZ2", {"dihedral": 4}, {"dihedral": 8}])
    assert s.n_factors == 2


def test_spec_json_roundtrip():
    for spec in (SPEC2, SPEC3, D.DiagGroupSpec.dihedral([0, 4, 16], [2, 4, 16])):
        again = D.DiagGroupSpec.from_json(spec.to_json())
        assert again.ks == spec.ks
        assert [G.order for G in again.groups] == [G.order for G in spec.groups]


def test_identity():
    e = D.identity(SPEC2)
    assert e.cursor == 0 and all(len(f) == 0 for f in e.lamps)
    assert D.range_(SPEC2, e) == 0 and D.s0(SPEC2, e) == 0
    assert D.check_consistency(SPEC2, e)
    rng = np.random.default_rng(0)
    for _ in range(100):
        g = random_element(SPEC2, rng)
        assert D.multiply(SPEC2, e, g) == g == D.multiply(SPEC2, g, e)


def test_involution_square():
    a = D.generator_element(SPEC2, (ALPHA, 1))
    assert D.multiply(SPEC2, a, a) == D.identity(SPEC2)


def test_tau_then_alpha():
    g = D.word_to_element(SPEC3, [(TAU, 1), (ALPHA, 1)])
    assert g.cursor == 1
    for s in range(SPEC3.n_factors):
        assert dict(g.lamps[s]) == {1: SPEC3.a_letter(s, 1)}


def test_associativity_and_inverse():
    rng = np.random.default_rng(1)
    for _ in range(100):
        g, h, k = (random_element(SPEC3, rng) for _ in range(3))
        m = lambda x, y: D.multiply(SPEC3, x, y)
        assert m(m(g, h), k) == m(g, m(h, k))
    for _ in range(3):
        g = random_element(SPEC3, rng)
        assert D.multiply(SPEC3, g, D.invert(SPEC3, g)) == D.identity(SPEC3)
    assert D.invert(SPEC3, D.identity(SPEC3)) == D.identity(SPEC3)
    assert D.invert(SPEC3, D.tau_power(SPEC3, 5)) == D.tau_power(SPEC3, -5)


def test_apply_generator_examples():
    g = random_element(SPEC2, np.random.default_rng(2))
    assert D.apply_generator(SPEC2, g, (ALPHA, 0)) == g
    h = D.apply_generator(SPEC2, D.identity(SPEC2), (BETA, 1))
    assert dict(h.lamps[1]) == {2: SPEC2.b_letter(1, 1)}
    assert dict(h.lamps[0]) == {0: SPEC2.b_letter(0, 1)}


def test_alternating_word_at_fixed_cursor():
    # alpha beta alpha beta ... with k = 0 in factor 0 and k_1 = 2: put the cursor at
    # -2 for beta so that both letters hit site 0 of factor 1
    word, expect = [], 0
    G = SPEC2.group(1)
    for i in range(7):
        if i % 2 == 0:
            word.append((ALPHA, 1))
            expect = G.mul(expect, G.gens_A[1])
        else:
            word += [(TAU, -1), (TAU, -1), (BETA, 1), (TAU, 1), (TAU, 1)]
            expect = G.mul(expect, G.gens_B[1])
    g = D.word_to_element(SPEC2, word)
    assert dict(g.lamps[1]).get(0, 0) == expect


def test_word_range_and_inverse():
    assert D.word_to_element(SPEC2, []) == D.identity(SPEC2)
    g, (lo, hi) = D.word_to_element(SPEC2, [(TAU, 1), (TAU, 1), (TAU, -1)], with_range=True)
    assert g == D.tau_power(SPEC2, 1) and hi - lo == 2
    w = D.random_word(SPEC3, 40, np.random.default_rng(3))
    assert D.word_to_element(SPEC3, w + D.inverse_word(SPEC3, w)) == D.identity(SPEC3)


def test_range_examples():
    assert D.range_(SPEC2, D.tau_power(SPEC2, 7)) == 7
    # a length-2 value of D_8 at site k_1 = 2 in factor 1: hull {0, 0, 2} of diameter 2
    G = SPEC2.group(1)
    ab = G.mul(G.gens_A[1], G.gens_B[1])
    th = SPEC2.theta(1)
    f0 = {2: SPEC2.group(0).gens_A[1], 0: SPEC2.group(0).gens_B[1]}
    g = D.make_element(SPEC2, 0, [f0, {2: ab}])
    assert D.check_consistency(SPEC2, g)
    assert D.range_(SPEC2, g) == 2
    # a word realizing it stays inside [0, 2]
    word = [(TAU, 1), (TAU, 1), (ALPHA, 1), (TAU, -1), (TAU, -1), (BETA, 1)]
    h, (lo, hi) = D.word_to_element(SPEC2, word, with_range=True)
    assert h == g and (lo, hi) == (0, 2)


def test_check_consistency_detects_flip():
    g = random_element(SPEC2, np.random.default_rng(4), 20)
    assert D.check_consistency(SPEC2, g)
    maps = [dict(f) for f in g.lamps]
    maps[1][99] = SPEC2.group(1).gens_A[1]
    assert not D.check_consistency(SPEC2, D.make_element(SPEC2, g.cursor, maps))


def test_element_json_roundtrip():
    g = random_element(SPEC3, np.random.default_rng(5))
    assert D.element_from_json(SPEC3, g.dumps()) == g


@settings(max_examples=200, deadline=None)
@given(words(SPEC3))
def test_consistency_closed(word):
    g = D.word_to_element(SPEC3, word)
    assert D.check_consistency(SPEC3, g)


@settings(max_examples=100, deadline=None)
@given(words(SPEC3, 30), words(SPEC3, 30))
def test_cursor_homomorphism(w1, w2):
    g, h = D.word_to_element(SPEC3, w1), D.word_to_element(SPEC3, w2)
    assert D.multiply(SPEC3, g, h).cursor == g.cursor + h.cursor
    assert D.multiply(SPEC3, g, h) == D.word_to_element(SPEC3, w1 + w2)


@settings(max_examples=100, deadline=None)
@given(words(SPEC3, 40))
def test_factor_projection(word):
    # each factor of the diagonal product evaluates the word on its own
    g = D.word_to_element(SPEC3, word)
    for s in range(SPEC3.n_factors):
        G, k = SPEC3.group(s), SPEC3.ks[s]
        f, c = {}, 0
        for kind, v in word:
            if kind == TAU:
                c += v
            elif kind == ALPHA:
                f[c] = G.mul(f.get(c, 0), G.gens_A[v])
            else:
                f[c + k] = G.mul(f.get(c + k, 0), G.gens_B[v])
        assert dict(g.lamps[s]) == {x: v for x, v in f.items() if v}
        assert g.cursor == c


def test_range_below_word_range_exhaustive():
    # every word of length <= 7 over the non-identity generators
    gens = [(TAU, 1), (TAU, -1), (ALPHA, 1), (BETA, 1)]
    best = {}
    for L in range(8):
        for word in itertools.product(gens, repeat=L):
            g, (lo, hi) = D.word_to_element(SPEC2, word, with_range=True)
            best[g] = min(best.get(g, 99), hi - lo)
            assert D.range_(SPEC2, g) <= L
    for g, r in best.items():
        assert D.range_(SPEC2, g) <= r
