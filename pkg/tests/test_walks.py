import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gwlab import diagprod as D
from gwlab import rng as R
from gwlab.diagprod import ALPHA, BETA, TAU
from gwlab.walks import excursions as X
from gwlab.walks import predict as P
from gwlab.walks import sim, stable

from conftest import dihedral_spec, lamplighter_spec, three_factor_spec, two_factor_spec

SPEC2 = two_factor_spec()


def scan_traverse(path, k, x):
    """Excursions from x that reach x - k: walk the path once, tracking whether
    the current excursion (opened at the last visit to x) has touched x - k."""
    count, open_, touched = 0, False, False
    for p in path:
        if p == x:
            if open_ and touched:
                count += 1
            open_, touched = True, False
        elif p == x - k and open_:
            touched = True
    return count


def all_paths(n):
    for signs in itertools.product((-1, 1), repeat=n):
        yield np.r_[0, np.cumsum(signs)].astype(np.int64)


# runs and letters

def test_run_n0_identity():
    run = sim.run_sws(SPEC2, 0, seed=1)
    assert run.element() == D.identity(SPEC2)
    assert run.traverse(2) == {}
    assert D.word_to_element(SPEC2, sim.sow_word(SPEC2, 0, 1, 0)) == D.identity(SPEC2)


def test_run_reproducible():
    a, b = sim.run_sws(SPEC2, 300, seed=9, sample=4), sim.run_sws(SPEC2, 300, seed=9, sample=4)
    assert np.array_equal(a.base_path, b.base_path)
    assert np.array_equal(a.ia, b.ia) and np.array_equal(a.ib, b.ib)
    assert a.element() == b.element()
    c = sim.run_sws(SPEC2, 200, seed=9, sample=4)
    assert np.array_equal(c.base_path, a.base_path[:201])


def test_base_path_is_srw():
    n, N = 16, 100_000
    ends = np.array([sim.sws_letters(SPEC2, n, 3, i)[0][-1] for i in range(N)])
    assert abs(ends.mean()) < 3 * math.sqrt(n / N)
    # the sample variance of S_n has standard error about n sqrt(2 / N)
    assert abs(ends.var() - n) < 3 * n * math.sqrt(2 / N)


def test_run_invariants():
    for i in range(20):
        run = sim.run_sws(SPEC2, 200, seed=5, sample=i)
        S = run.base_path
        assert S[0] == 0 and np.all(np.abs(np.diff(S)) == 1)
        assert sum(run.local_time().values()) == run.n
        g = run.element()
        assert g == D.word_to_element(SPEC2, run.word())
        assert D.check_consistency(SPEC2, g)
        assert D.range_(SPEC2, g) <= run.range_size + max(SPEC2.ks)
        for k in (1, 2, 4):
            assert run.traverse(k) == X.traverse_all(S, k)


def test_sws_bounds_match_element_bounds():
    from gwlab import metric as M
    spec = three_factor_spec()
    for i in range(10):
        run = sim.run_sws(spec, 150, seed=2, sample=i)
        lamps = {s: run.lamps(s) for s in range(spec.n_factors)}
        b, _ = sim.bounds_from_lamps(spec, int(run.base_path[-1]), lamps)
        assert b == M.delta_length_bounds(spec, run.element())


def test_dihedral_fast_path_matches_table():
    spec = dihedral_spec()
    for i in range(5):
        S, ia, ib = sim.sws_letters(spec, 300, 11, i)
        for s in (1, 2):
            fast = sim._dihedral_lamps(S, ia, ib, spec.ks[s], spec.dihedral_ls[s])
            slow = sim._table_lamps(spec.group(s), S, ia, ib, spec.ks[s])
            assert np.array_equal(fast.sites, slow.sites)
            assert np.array_equal(fast.lengths, slow.lengths)
            assert np.array_equal(fast.kinds, slow.kinds)


def test_lamp_is_alternating_word():
    # one factor D_8 with k = 2; for every base path of length <= 4 and every site,
    # the law of the lamp given the path is that of a uniform alternating word
    spec = D.DiagGroupSpec([0, 2], ["Z2xZ2", {"dihedral": 4}])
    G = spec.group(1)
    k = 2
    for n in range(5):
        for path in all_paths(n):
            laws = {}
            for bits in itertools.product((0, 1), repeat=2 * (n + 1)):
                ia, ib = np.array(bits[: n + 1]), np.array(bits[n + 1:])
                g = D.word_to_element(spec, sim.sws_word(path, ia, ib))
                for y in set(path.tolist()) | set((path + k).tolist()):
                    v = dict(g.lamps[1]).get(y, 0)
                    laws.setdefault(y, {})
                    laws[y][v] = laws[y].get(v, 0) + 1
            T = X.traverse_all(path, k)
            for y, law in laws.items():
                # run structure of the letters landing at y, in time order
                seq = []
                for j in range(n + 1):
                    if path[j] == y:
                        seq.append("A")
                    if path[j] + k == y:
                        seq.append("B")
                runs = [c for c, _ in itertools.groupby(seq)]
                alt = {}
                for letters in itertools.product((0, 1), repeat=len(runs)):
                    v = 0
                    for c, b in zip(runs, letters):
                        v = G.mul(v, (G.gens_A if c == "A" else G.gens_B)[b])
                    alt[v] = alt.get(v, 0) + 1
                total, talt = sum(law.values()), sum(alt.values())
                assert {v: Fraction(c, total) for v, c in law.items()} == \
                    {v: Fraction(c, talt) for v, c in alt.items()}
                t = T.get(y, 0)
                r = len(runs)
                assert r in (2 * t + 1, 2 * t + 2, 2 * t + 3) or (t == 0 and r <= 1)


def test_sow_frequencies():
    spec = lamplighter_spec()
    N = 40_000
    word = sim.sow_word(spec, N, 7, 0)
    counts = {}
    for g in word:
        counts[g] = counts.get(g, 0) + 1
    each = 1 / (2 * (spec.size_A + spec.size_B))
    expect = {(TAU, 1): 0.25, (TAU, -1): 0.25}
    expect.update({(ALPHA, i): each for i in range(spec.size_A)})
    expect.update({(BETA, j): each for j in range(spec.size_B)})
    assert set(counts) <= set(expect)
    for g, p in expect.items():
        assert abs(counts.get(g, 0) - N * p) <= 3 * math.sqrt(N * p * (1 - p))


# traverse and local times

def test_traverse_never_visiting():
    assert X.traverse_time(np.array([0, 1, 2, 3]), 1, -5) == 0


@pytest.mark.parametrize("n", [6, 9, 10])
def test_traverse_matches_scan(n):
    for path in all_paths(n):
        tab = {k: X.traverse_all(path, k) for k in (1, 2, 3)}
        for k in (1, 2, 3):
            for x in range(-n, n + 1):
                ref = scan_traverse(path, k, x)
                assert X.traverse_time(path, k, x) == ref
                assert tab[k].get(x, 0) == ref


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from([-1, 1]), min_size=1, max_size=300),
       st.sampled_from([2, 4, 8]), st.integers(-20, 20))
def test_traverse_half_inequality(steps, k, x):
    path = np.r_[0, np.cumsum(steps)]
    j = x // (k // 2)
    assert X.traverse_time(path, k, x) <= X.traverse_time(path, k // 2, j * k // 2)


def test_local_time_pmf_small():
    assert X.local_time_pmf(0, 2, 1) == Fraction(1, 2)
    for n in range(9):
        for x in range(-n - 1, n + 2):
            assert sum(X.local_time_pmf(x, n, m) for m in range(n + 1)) == 1


def test_traverse_dp_vs_enumeration_small():
    for n in range(9):
        paths = list(all_paths(n))
        for k in (1, 2):
            for x in range(-n, n + 1):
                law = X.traverse_pmf_dp(k, x, n)
                emp = {}
                for p in paths:
                    t = scan_traverse(p, k, x)
                    emp[t] = emp.get(t, 0) + Fraction(1, len(paths))
                assert law == dict(sorted(emp.items()))
    assert X.traverse_mean_dp(1, 30, 12) == 0


def test_traverse_moment_report():
    rep = X.traverse_moment_checks([2, 4], [0, 3], [256, 1024], samples=100, seed=0)
    assert len(rep["rows"]) == 2 and all(r["C"] > 0 for r in rep["rows"])


# speed, entropy, predictors

def test_speed_table_sandwich():
    tab = sim.speed_experiment(dihedral_spec(), [64, 128, 256], samples=30, seed=3)
    for r in tab.rows:
        assert r["lower"] <= r["upper"]
    assert list(tab.column("n")) == [64, 128, 256]


def test_speed_threads_identical():
    a = sim.speed_experiment(SPEC2, [32, 64], samples=20, seed=4, threads=1)
    b = sim.speed_experiment(SPEC2, [32, 64], samples=20, seed=4, threads=3)
    assert a.rows == b.rows


def test_fit_exponent_exact_power():
    xs = 2.0 ** np.arange(5, 15)
    f = sim.fit_exponent(xs, 3 * xs ** 0.4)
    assert f["slope"] == pytest.approx(0.4, abs=1e-12)


def dihedral_alt_entropy_brute(l, start, r):
    from gwlab import groups as G_
    G = G_.dihedral_new(l)
    law = {}
    for letters in itertools.product((0, 1), repeat=r):
        v = 0
        for i, b in enumerate(letters):
            useA = (i % 2 == 0) != bool(start)
            v = G.mul(v, (G.gens_A if useA else G.gens_B)[b])
        law[v] = law.get(v, 0) + 1
    p = np.array(list(law.values()), float) / 2**r
    return float(-(p * np.log(p)).sum())


def test_alternating_entropy():
    spec = D.DiagGroupSpec.dihedral([0, 4, 16], [2, 4, 8])
    tab = D.DiagGroupSpec([0, 4, 16], ["Z2xZ2", {"dihedral": 4}, {"dihedral": 8}])
    for s, l in ((1, 4), (2, 8)):
        ent, ent_t = sim.AlternatingEntropy(spec, s), sim.AlternatingEntropy(tab, s)
        assert ent.get(0, 0) == 0
        assert ent.get(0, 1) == pytest.approx(math.log(2))
        assert ent.get(0, 2) == pytest.approx(math.log(4))
        for start in (0, 1):
            for r in range(10):
                ref = dihedral_alt_entropy_brute(l, start, r)
                assert ent.get(start, r) == pytest.approx(ref, abs=1e-12)
                assert ent_t.get(start, r) == pytest.approx(ref, abs=1e-12)


def test_entropy_monotone():
    spec = dihedral_spec()
    vals = [sim.entropy_lower_estimate(spec, n, 200, seed=1) for n in (16, 32, 64, 128)]
    for a, b in zip(vals, vals[1:]):
        assert b["value"] >= a["value"] - 2 * math.hypot(a["se"], b["se"])


def test_srw_entropy():
    assert sim.srw_endpoint_entropy(1) == pytest.approx(math.log(2))


def test_joint_reduces():
    spec = dihedral_spec()
    j = sim.joint_speed_entropy(spec, None, [32, 64], 10, 2, entropy=False)
    t = sim.speed_experiment(spec, [32, 64], 10, 2)
    for r, q in zip(j["rows"], t.rows):
        assert (r["lower"], r["upper"]) == (q["lower"], q["upper"])
    j2 = sim.joint_speed_entropy(spec, SPEC2, [32, 64], 10, 2, entropy=False)
    for r, q in zip(j2["rows"], t.rows):
        assert r["lower"] >= q["lower"]


def test_predictor_knot_and_monotone():
    p = P.SeqParams(tuple([0] + [4.0**s for s in range(1, 8)]),
                    tuple([1] + [4.0**s for s in range(1, 8)]))
    knot = (p.ks[1] * p.ls[1]) ** 2
    left, right = P.predict_speed_linear(p, knot * (1 - 1e-9)), P.predict_speed_linear(p, knot)
    assert right == pytest.approx(left, rel=1e-3) or right >= left
    ns = np.geomspace(4, 1e12, 400)
    vals = [P.predict_speed_linear(p, n) for n in ns]
    assert all(b >= a * (1 - 1e-12) for a, b in zip(vals, vals[1:]))
    vd = [P.predict_speed_dihedral(p, n) for n in ns]
    assert all(b >= a * (1 - 1e-12) for a, b in zip(vd, vd[1:]))


def test_predictor_expander_exponent():
    # k_s = 4^s, l_s = 2^s (l = sqrt(k)): slope of the linear-speed predictor tends to 2/3
    p = P.SeqParams(tuple([0] + [4.0**s for s in range(1, 40)]),
                    tuple([1] + [2.0**s for s in range(1, 40)]))
    ns = np.geomspace(1e20, 1e40, 200)
    slope = np.polyfit(np.log(ns), np.log([P.predict_speed_linear(p, n) for n in ns]), 1)[0]
    assert slope == pytest.approx(2 / 3, abs=0.02)


@pytest.mark.parametrize("beta,iota", [(2, 1), (2, 2), (1, 1)])
def test_predictor_linear_general_exponent(beta, iota):
    # k_s = 2^{beta s}, l_s = 2^{iota s}: exponent (beta + 2 iota) / (2 beta + 2 iota)
    p = P.SeqParams(tuple([0] + [2.0 ** (beta * s) for s in range(1, 60)]),
                    tuple([1] + [2.0 ** (iota * s) for s in range(1, 60)]))
    ns = np.geomspace(1e25, 1e50, 300)
    slope = np.polyfit(np.log(ns), np.log([P.predict_speed_linear(p, n) for n in ns]), 1)[0]
    assert slope == pytest.approx((beta + 2 * iota) / (2 * beta + 2 * iota), abs=0.02)


# stable chain

def test_stable_kernel():
    st_ = stable.stable_chain_new(12)
    assert np.allclose(st_.kernel.sum(axis=1), 1)
    c = st_.conductance
    assert np.array_equal(c, c.T)
    rep = stable.stationary_bounds_check(300)
    assert rep["ok"]


def test_dw_examples():
    f = np.zeros(6, bool)
    assert stable.dw_distance((f, 2), (f, 2), (1.0, 3.0)) == 0
    g = f.copy()
    g[2] = True
    assert stable.dw_distance((f, 2), (g, 2), (1.0, 3.0)) == 3.0


@pytest.mark.parametrize("m", [2, 3, 4, 5])
def test_dw_vs_shortest_path(m):
    w = (1.0, 2.5)
    Dm = stable.dw_bruteforce(m, w)
    for x in range(m):
        for f in range(1 << m):
            for y in range(m):
                for g in range(1 << m):
                    fa = np.array([(f >> i) & 1 for i in range(m)], bool)
                    ga = np.array([(g >> i) & 1 for i in range(m)], bool)
                    assert stable.dw_distance((fa, x), (ga, y), w) == pytest.approx(
                        Dm[x * (1 << m) + f, y * (1 << m) + g])


def test_stable_one_step_mean():
    m, w = 4, (1.0, 1.0)
    exact = stable.exact_one_step_mean(m, w)
    N = 20_000
    est = stable.stable_displacement(m, [0, 1], N, seed=3, w=w)
    assert est[0] == 0
    # d_w after one step is bounded by 2m + 2, so the standard error is below 10 / sqrt(N)
    assert abs(est[1] - exact) < 4 * 10 / math.sqrt(N)


def test_stable_reproducible():
    a = stable.stable_displacement(16, [1, 5, 20], 50, seed=2)
    b = stable.stable_displacement(16, [1, 5, 20], 50, seed=2)
    assert a == b
