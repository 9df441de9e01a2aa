"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import itertools
import json
import math
from fractions import Fraction

import numpy as np
import pytest

from gwlab import cli
from gwlab import compression as C
from gwlab import diagprod as D
from gwlab import groups as G_
from gwlab import metric as M
from gwlab import planner as PL
from gwlab import profiles as P
from gwlab.walks import excursions as X
from gwlab.walks import sim, stable

from conftest import lamplighter_spec, three_factor_spec, two_factor_spec


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} {detail}")
        return ok
    return emit


# 1. metric sandwich on the exact ball

def test_criterion_01_metric_sandwich(report):
    spec = two_factor_spec()
    bad, total = 0, 0
    for g, d in M.exact_length_bfs(spec, 12).items():
        total += 1
        bad += not M.delta_length_bounds(spec, g).contains(d)
    fbad, ftotal = 0, 0
    for s in (0, 1):
        for g, d in M.exact_length_bfs(spec, 12, factor=s).items():
            ftotal += 1
            fbad += not M.factor_length_bounds(spec, s, g.lamps[s], g.cursor).contains(d)
    ok = bad == 0 and fbad == 0
    report(1, ok, f"global {total - bad}/{total}, factor {ftotal - fbad}/{ftotal} inside bounds")
    assert ok


# 2. word synthesis for kernel-valued configurations

def test_criterion_02_word_synthesis(report):
    specs = [two_factor_spec(), three_factor_spec(),
             D.DiagGroupSpec([0, 4], ["Z2xZ2", {"dihedral": 8}])]
    rng = np.random.default_rng(2024)
    fails, cases = 0, 0
    for i in range(500):
        spec = specs[i % 3]
        s = int(rng.integers(1, spec.n_factors))
        G = spec.group(s)
        K = G_.kernel_subgroup(G)
        f = {int(x): int(rng.choice(K.carrier)) for x in rng.integers(-15, 15, size=rng.integers(1, 6))}
        f = {x: v for x, v in f.items() if v}
        cursor = int(rng.integers(-12, 12))
        res = M.synthesize_word(spec, s, f, cursor)
        g = D.word_to_element(spec, res.word)
        E = M.essential_contribution(f, spec.ks[s], G.word_length)
        R = D.factor_range(spec, s, tuple(sorted(f.items())), cursor)
        good = (dict(g.lamps[s]) == f and g.cursor == cursor
                and all(g.lamps[t] == () for t in range(spec.n_factors) if t != s)
                and len(res.word) <= 9 * (E + R))
        cases += 1
        fails += not good
    ok = fails == 0
    report(2, ok, f"{cases - fails}/{cases} configs synthesized within 9(E_s + Range)")
    assert ok


# 3. local-time and traverse laws against path enumeration

def _all_paths(n):
    steps = np.array(list(itertools.product((-1, 1), repeat=n)), dtype=np.int64).reshape(2**n, n)
    return np.hstack([np.zeros((len(steps), 1), np.int64), np.cumsum(steps, axis=1)])


def _scan_traverse_all(paths, k, x):
    """Excursions from x touching x - k, scanned along every path at once."""
    count = np.zeros(len(paths), np.int64)
    open_ = np.zeros(len(paths), bool)
    touched = np.zeros(len(paths), bool)
    for t in range(paths.shape[1]):
        p = paths[:, t]
        at = p == x
        count += at & open_ & touched
        touched = np.where(at, False, touched | ((p == x - k) & open_))
        open_ |= at
    return count


def _law(values, n):
    vals, cnt = np.unique(values, return_counts=True)
    return {int(v): Fraction(int(c), 2**n) for v, c in zip(vals, cnt)}


def test_criterion_03_excursion_laws(report):
    bad, checked = 0, 0
    for n in range(0, 13):
        paths = _all_paths(n)
        for x in range(-n - 1, n + 2):
            L = (paths[:, 1:] == x).sum(axis=1)
            emp = _law(L, n)
            for m in range(n + 1):
                checked += 1
                bad += X.local_time_pmf(x, n, m) != emp.get(m, 0)
    for n in range(0, 15):
        paths = _all_paths(n)
        for k in range(1, n + 2):
            for x in range(-n, n + 1):
                checked += 1
                bad += X.traverse_pmf_dp(k, x, n) != _law(_scan_traverse_all(paths, k, x), n)
    ok = bad == 0
    report(3, ok, f"{checked - bad}/{checked} (x, k, m, n) laws agree")
    assert ok


# 4. speed exponents

def test_criterion_04a_lamplighter_speed(report):
    ns = [2**j for j in range(10, 19)]
    tab = sim.speed_experiment(lamplighter_spec(), ns, samples=200, seed=1)
    lo, hi = sim.fit_speed(tab, "lower")["slope"], sim.fit_speed(tab, "upper")["slope"]
    ok = 0.45 <= lo <= 0.55 and 0.45 <= hi <= 0.55
    report("4a", ok, f"slopes lower {lo:.4f} upper {hi:.4f}, band [0.45, 0.55]")
    assert ok


def test_criterion_04b_dihedral_speed(report):
    spec = D.DiagGroupSpec.dihedral([0] + [4**s for s in range(1, 10)],
                                    [2] + [4**s for s in range(1, 10)])
    ns = [2**j for j in range(10, 19)]
    tab = sim.speed_experiment(spec, ns, samples=100, seed=1)
    lo, hi = tab.column("lower"), tab.column("upper")
    mid = sim.fit_exponent(ns, np.sqrt(lo * hi))["slope"]
    slo, shi = sim.fit_exponent(ns, lo)["slope"], sim.fit_exponent(ns, hi)["slope"]
    ok = 0.60 <= mid <= 0.75
    report("4b", ok, f"midpoint slope {mid:.4f} (lower {slo:.4f}, upper {shi:.4f}), "
                     f"band [0.60, 0.75], theory 2/3")
    assert ok


# 5. entropy scaling

def test_criterion_05_entropy_band(report):
    spec = D.DiagGroupSpec.dihedral([0] + [4**s for s in range(1, 8)],
                                    [2] + [4**s for s in range(1, 8)])
    ns = [2**j for j in range(6, 14)]
    ratios = [sim.entropy_lower_estimate(spec, n, 100, seed=1)["value"] / math.sqrt(n) for n in ns]
    spread = max(ratios) / min(ratios)
    ok = spread <= 3
    report(5, ok, f"H/sqrt(n) in [{min(ratios):.3f}, {max(ratios):.3f}] for n = 2^6..2^13, "
                  f"max/min {spread:.3f} <= 3")
    assert ok


# 6. planner guarantees

def test_criterion_06_planner(report):
    grid = PL.log_grid(1.0, PL.X_MAX, 10_000)
    m0, C1 = 2.0, 2.0
    targets = [("x^0.6", lambda x: x**0.6, True), ("x^0.7", lambda x: x**0.7, True),
               ("sqrt(x)log(1+x)", lambda x: math.sqrt(x) * math.log1p(x), False)]
    lines, ok = [], True
    for name, fn, check in targets:
        f = PL.TargetFunction(fn=fn, name=name)
        q = PL.approximate(f, m0, check=check)
        r = PL.max_grid_ratio(q, f, grid)
        _, qq = PL.quantize(f, m0, PL.AdmissibleSet("integers"), PL.AdmissibleSet("even"), C1,
                            check=check)
        rq = PL.max_grid_ratio(qq, f, grid)
        ints = all(float(v).is_integer() for v in qq.ks if math.isfinite(v))
        evens = all(v % 2 == 0 for v in qq.ls if math.isfinite(v))
        good = r <= m0 * (1 + 1e-9) and rq <= m0 * C1**5 * (1 + 1e-9) and ints and evens
        ok &= good
        lines.append(f"{name}: {r:.3f}/{rq:.3f}")
    report(6, ok, "ratio raw/quantized " + ", ".join(lines) + f" (bounds {m0}, {m0 * C1**5})")
    assert ok


# 7. w-solver

def test_criterion_07_w_solver(report):
    err = 0.0
    for n in (0.5, 3, 100, 1e6, 1e10):
        err = max(err, abs(P.w_solver(lambda s: s, n) / (n + 1) - 1),
                  abs(P.w_solver(math.sqrt, n) / math.sqrt(2 * n + 1) - 1))
    dev = []
    for th in (0.5, 1.0, 2.0):
        e = th / (1 + th)
        f = lambda s: s**e
        n, h = 1e12, 1.01
        slope = (math.log(P.w_solver(f, n * h)) - math.log(P.w_solver(f, n / h))) / (2 * math.log(h))
        dev.append(abs(slope - (1 + th) / (3 + th)))
    ok = err <= 1e-9 and max(dev) <= 1e-2
    report(7, ok, f"closed-form rel err {err:.2e}, slope deviations "
                  + ", ".join(f"{d:.2e}" for d in dev))
    assert ok


# 8. isoperimetry oracles

def test_criterion_08_isoperimetry(report):
    cases = [(lamplighter_spec(), (1, 2, 3), (1, 2)),
             (D.DiagGroupSpec([0, 4], ["Z2xZ2", {"dihedral": 4}]), (1, 2, 3), (2,)),
             (three_factor_spec(), (1, 2), (1, 2))]
    bad, checked = 0, 0
    for spec, rs, ps in cases:
        for r in rs:
            E = P.UrEnumeration(spec, r)
            checked += 1
            bad += E.count_cursor0() != P.count_Ur0(spec, r)
            for p in ps:
                checked += 1
                bad += P.phi_r_rayleigh(spec, r, p).rayleigh != P.rayleigh_bruteforce(spec, r, p, enum=E)
    d = D.DiagGroupSpec.dihedral([0, 4, 16, 64, 256], [2, 64, 1024, 16384, 262144])
    r2 = [P.psi_dihedral_rayleigh(d, r, exact=False)["r2_quotient"] for r in (8, 16, 32, 64, 128, 256)]
    ret_bad = 0
    for spec in (lamplighter_spec(), two_factor_spec()):
        q = P.exact_return_prob(spec, 5)
        ret_bad += any(q[n] != P.return_prob_paths(spec, n) for n in range(4))
        ret_bad += any(b > a for a, b in zip(q, q[1:]))
    ok = bad == 0 and max(r2) <= 2.0 and ret_bad == 0
    report(8, ok, f"{checked - bad}/{checked} count/Rayleigh oracles agree; psi r^2 in "
                  f"[{min(r2):.4f}, {max(r2):.4f}] for r = 8..256; return probabilities "
                  f"{'match paths for n <= 3 and decrease' if not ret_bad else 'MISMATCH'}")
    assert ok


# 9. compression checks and exponent formulas

def _table_cells_ok():
    for th in (Fraction(1, 4), Fraction(1, 2), Fraction(1), Fraction(3, 2), Fraction(3)):
        for p in (Fraction(1), Fraction(3, 2), Fraction(2)):
            ex = C.figure_table("expanders", th, p)
            if ex != {"speed": (1 + th) / (2 + th), "entropy": (1 + th) / (2 + th),
                      "return": (1 + th) / (3 + th), "profile": -p / (1 + th),
                      "compression": 1 / (1 + th)}:
                return False
            di = C.figure_table("dihedral", th, p)
            if di != {"speed": (1 + 3 * th) / (2 + 4 * th), "entropy": Fraction(1, 2),
                      "return": Fraction(1, 3), "profile": -p,
                      "compression": max(1 / (1 + th), Fraction(2, 3))}:
                return False
    return True


def _spot_values_ok():
    good = C.alpha_wreath(2, 1) == Fraction(2, 3)
    good &= C.alpha_wreath(Fraction(3, 2), 1) == Fraction(3, 4)
    good &= all(C.alpha_wreath(1, a) == a for a in (Fraction(1, 3), Fraction(1, 2), 1))
    good &= C.alpha_dihedral(2, Fraction(1, 2)) == Fraction(2, 3)
    good &= all(C.alpha_dihedral(p, 0) == 1 for p in (1, 2, 3))
    good &= all(C.alpha_dihedral(q, Fraction(1, 2))[0] == Fraction(3 * q - 4, 4 * q - 5)
                for q in (3, 4, 6))
    return good


def test_criterion_09_compression(report):
    spec = D.DiagGroupSpec.dihedral([0, 4, 16, 64], [2, 2, 4, 8])
    lip = C.lipschitz_check(spec, samples=10**4, seed=0)
    inc = C.increment_lower_check(spec, pairs=10**4, seed=0)
    literal = C.increment_lower_check(spec, pairs=10**4, seed=0, aligned=False)
    half = D.DiagGroupSpec.dihedral([0] + [4**s for s in range(1, 10)],
                                    [2] + [2**s for s in range(1, 10)])
    expo = C.compression_probe(half, samples=20, seed=0)["exponent"]
    cells, spots = _table_cells_ok(), _spot_values_ok()
    ok = lip["ok"] and inc["violations"] == 0 and expo >= 0.60 and cells and spots
    report(9, ok, f"lipschitz violations {lip['violations']['total']}/{lip['cases']}, increment "
                  f"violations {inc['violations']}/{inc['cases']} (unaligned b-polygon: "
                  f"{literal['violations']}/{literal['cases']}), probe exponent {expo:.3f} >= 0.60, "
                  f"table cells {'exact' if cells else 'WRONG'}, spot values "
                  f"{'exact' if spots else 'WRONG'}")
    assert ok


# 10. the Cauchy-kernel lamplighter chain

def test_criterion_10_stable_chain(report):
    stat = stable.stationary_bounds_check(10**4)
    dw_bad, pairs = 0, 0
    for m in range(1, 9):
        for w in ((1.0, 1.0), (1.0, 2.5)):
            ref = stable.dw_bruteforce(m, w)
            N = 1 << m
            idx = np.arange(m * N)
            pos, f = idx // N, idx % N
            lamps = ((f[:, None] >> np.arange(m)) & 1).astype(bool)
            for a in range(m * N):
                got = stable.dw_batch(np.repeat(lamps[a:a + 1], m * N, 0), np.full(m * N, pos[a]),
                                      lamps, pos, w)
                dw_bad += int(np.count_nonzero(np.abs(got - ref[a]) > 1e-9))
                pairs += m * N
    sp = stable.stable_speed_check([64, 256, 1024], samples=200, seed=1)
    cs = [r["c"] for r in sp["rows"]]
    ok = stat["ok"] and dw_bad == 0 and sp["stable"]
    report(10, ok, f"m C_m in [{stat['min_mC']:.3f}, {stat['max_mC']:.3f}] for m <= 10^4; "
                   f"d_w {pairs - dw_bad}/{pairs} pairs match Dijkstra; c = "
                   + ", ".join(f"{c:.3f}" for c in cs) + f", spread {sp['c_spread']:.3f} <= 0.25")
    assert ok


# 11. determinism

DSPEC = {"family": "dihedral", "k": [0, 4, 16], "l": [2, 4, 16]}
LSPEC = {"k": [0], "groups": ["Z2xZ2"]}
RUNS = [
    ("simulate", "speed", {"spec": DSPEC, "n": [16, 64], "samples": 8, "seed": 3}, []),
    ("simulate", "entropy", {"spec": DSPEC, "n": [16, 64], "samples": 8, "seed": 3}, []),
    ("simulate", "traverse", {"spec": DSPEC, "n": [16, 64], "samples": 8, "seed": 3},
     ["--k", "2", "--x", "0"]),
    ("simulate", "stable", {"m": [8, 16], "samples": 8, "seed": 3}, []),
    ("simulate", "joint", {"spec": DSPEC, "n": [16, 64], "samples": 8, "seed": 3},
     ["--spec-b", json.dumps(LSPEC)]),
    ("compress", "probe", {"spec": DSPEC, "n": [16, 32], "samples": 3, "seed": 3}, []),
    ("compress", "check", {"spec": DSPEC, "pairs": 20, "samples": 20, "seed": 3}, []),
]


def test_criterion_11_determinism(report, tmp_path, capsys):
    assert {(a, b) for a, b, _, _ in RUNS} == cli.STOCHASTIC
    diffs = []
    for cmd, sub, cfg, extra in RUNS:
        path = tmp_path / f"{cmd}-{sub}.json"
        path.write_text(json.dumps(cfg))
        outs = []
        for rep in range(2):
            out = tmp_path / f"{cmd}-{sub}-{rep}.csv"
            code = cli.main([cmd, sub, "--config", str(path), "--out", str(out)] + extra)
            assert code == 0, capsys.readouterr().err
            outs.append(out.read_bytes())
        if outs[0] != outs[1] or not outs[0]:
            diffs.append(f"{cmd} {sub}")
    ok = not diffs
    report(11, ok, f"{len(RUNS) - len(diffs)}/{len(RUNS)} stochastic commands byte-identical on rerun")
    assert ok
