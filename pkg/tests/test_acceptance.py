"""The ten acceptance criteria at their stated tolerances.

Each test prints one ``criterion N: PASS|FAIL`` line (visible even under
output capture) and then asserts. Run alone with
``pytest tests/test_acceptance.py -q``.
"""

import math

import numpy as np
import pytest

from xishift.generate import (
    random_dissipative,
    random_doubled_flow_instance,
    random_flow_instance,
    random_invertible_hermitian,
    random_pair,
    random_projection,
    random_psd,
)
from xishift.matcore import DEFAULT_TOL, Interval, spectral_projection
from xishift.oplog import log_dissipative, xi_operator
from xishift.pairindex import gtr, index_pair, trindex
from xishift.spectralflow import (
    FlowInstance,
    arctan_log_identity,
    arctan_trend,
    birman_krein,
    cauchy_average,
    crossing_count_formula,
    crossing_profile,
    log_trace_formula,
    verify_ttr8,
)
from xishift.ssf import (
    KREIN_POINTS,
    PerturbationPair,
    gap_formulas,
    krein_residual,
    poisson_check,
    ssf_averaged_rep,
    ssf_exact,
    ssf_trindex_rep,
)

BASE_SEED = 20_000


@pytest.fixture
def say(capsys):
    def emit(k, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
    return emit


@pytest.fixture(scope="module")
def flow_instances():
    return [random_flow_instance(2 + i % 11, BASE_SEED + i) for i in range(200)]


@pytest.fixture(scope="module")
def pairs():
    # every third pair has a sign-definite V so the Sobolev formula applies
    signs = [None, 1, -1]
    return [random_pair(1 + i % 10, BASE_SEED + i, sign=signs[i % 3]) for i in range(50)]


def scalar(s, b):
    return FlowInstance.build(np.array([[s]]), None, np.array([[b]]))


def test_criterion_1_trindex_equals_cauchy_average(flow_instances, say):
    worst = max(verify_ttr8(inst).residual for inst in flow_instances)
    closed = [
        (scalar(-1.0, 1.0), -0.25),
        (FlowInstance.build(np.diag([1.0, -1.0]), None, np.eye(2)), 0.0),
    ]
    closed_err = 0.0
    for inst, v in closed:
        c = verify_ttr8(inst)
        closed_err = max(closed_err, abs(c.value - v), abs(cauchy_average(crossing_profile(inst)) - v))
    ok = worst <= 1e-8 and closed_err <= 1e-12
    say(1, ok, f"200 instances max residual {worst:.2e} (<= 1e-8); closed forms {closed_err:.2e} (<= 1e-12)")
    assert ok


def test_criterion_2_birman_krein(flow_instances, say):
    unit = det = 0.0
    for inst in flow_instances:
        r = birman_krein(inst)
        unit = max(unit, r.unitarity_defect / inst.n)
        det = max(det, r.residual)
    s = birman_krein(scalar(1.0, 1.0))
    s_err = abs(s.smatrix[0, 0] + 1j)
    ok = unit <= 1e-10 and det <= 1e-8 and s_err <= 1e-12
    say(2, ok, f"unitarity/n {unit:.2e} (<= 1e-10); det residual {det:.2e} (<= 1e-8); S(1,1) = -i to {s_err:.1e}")
    assert ok


def test_criterion_3_log_trace(say):
    worst = 0.0
    for i in range(100):
        rng = np.random.default_rng(BASE_SEED + i)
        n = 1 + i % 10
        S, B = random_invertible_hermitian(n, rng), random_psd(n, rng)
        for z in (1j, 2j, 0.5 + 1j):
            lhs, rhs = log_trace_formula(S, B, z)
            worst = max(worst, abs(lhs - rhs))
    ok = worst <= 1e-8
    say(3, ok, f"100 instances x 3 z max residual {worst:.2e} (<= 1e-8)")
    assert ok


def test_criterion_4_arctan_trace(say):
    worst = 0.0
    for i in range(100):
        rng = np.random.default_rng(BASE_SEED + i)
        n = 1 + i % 10
        lhs, rhs = arctan_log_identity(random_invertible_hermitian(n, rng), random_psd(n, rng))
        worst = max(worst, abs(lhs - rhs))
    trends_ok = True
    for i in range(30):
        rng = np.random.default_rng(BASE_SEED + 500 + i)
        n = 2 + i % 7
        k = 1 + i % min(3, n - 1)
        w, U = np.linalg.eigh(random_invertible_hermitian(n, rng))
        w[:k] = 0.0
        S = (U * w) @ U.conj().T
        B = 0.5 * np.eye(n) + random_psd(n, rng)
        tr = arctan_trend(S, B, (1e-2, 1e-3, 1e-4))
        trends_ok &= tr.decreasing and tr.within_bound(10.0)
    ok = worst <= 1e-9 and trends_ok
    say(4, ok, f"invertible S max residual {worst:.2e} (<= 1e-9); 30 singular-S trends decreasing and <= 10 eps C: {trends_ok}")
    assert ok


def test_criterion_5_crossing_counts(say):
    mismatches = 0
    doubled_with_pair = 0
    for i in range(100):
        seed = BASE_SEED + i
        if i < 15:
            inst = random_doubled_flow_instance(1 + i % 5, seed)
        else:
            inst = random_flow_instance(2 + i % 9, seed)
        S, B = inst.M, inst.B
        prof = crossing_profile(FlowInstance.build(S, None, B))
        if any(m == 2 for _, m in prof.crossings):
            doubled_with_pair += i < 15
        far = 1.0 + max((abs(t) for t in prof.times), default=0.0)
        for t in (1.0, -1.0, far, -far):
            by_proj, by_cross = crossing_count_formula(S, B, t)
            # brute force: strict negative counts with numpy alone
            brute = int(np.sum(np.linalg.eigvalsh(S + t * B) < 0) - np.sum(np.linalg.eigvalsh(S) < 0))
            mismatches += not (by_proj == by_cross == brute)
    ok = mismatches == 0 and doubled_with_pair >= 10
    say(5, ok, f"100 instances x 4 t: {mismatches} mismatches (== 0); {doubled_with_pair} with multiplicity-2 crossings (>= 10)")
    assert ok


def _gap_grid(p, k=20, margin=1e-3):
    spec = np.concatenate([p.eig_H0, p.eig_H])
    grid = np.linspace(spec.min() - 1, spec.max() + 1, k)
    return [lam for lam in grid if np.min(np.abs(spec - lam)) > margin]


def test_criterion_6_gap_points(pairs, say):
    points = mismatches = sobolev = 0
    for p in pairs:
        for lam in _gap_grid(p):
            points += 1
            exact = ssf_exact(p, lam)
            tr = ssf_trindex_rep(p, lam, 0.0)
            vals = [round(tr), ssf_averaged_rep(p, lam, 0.0)]
            g = gap_formulas(p, lam)
            vals.append(g["birman_schwinger"])
            if "sobolev" in g:
                vals.append(g["sobolev"])
                sobolev += 1
            # rounding guard: the real-valued trindex must already sit on the integer
            mismatches += any(v != exact for v in vals) or abs(tr - exact) > 1e-6
    ok = mismatches == 0 and sobolev > 0
    say(6, ok, f"50 pairs, {points} gap points ({sobolev} with Sobolev formula): {mismatches} mismatches (== 0)")
    assert ok


def test_criterion_7_poisson(pairs, say):
    worst = 0.0
    for p in pairs:
        spec = np.concatenate([p.eig_H0, p.eig_H])
        grid = np.linspace(spec.min() - 1, spec.max() + 1, 50)
        for eps in (0.1, 0.01):
            for lam in grid:
                worst = max(worst, poisson_check(p, float(lam), eps)[2])
    sc = PerturbationPair.build(np.zeros((1, 1)), np.ones((1, 1)))
    sc_err = 0.0
    for lam in np.linspace(-2, 3, 11):
        for eps in (0.1, 0.01, 1.0):
            expected = (math.atan((1 - lam) / eps) + math.atan(lam / eps)) / math.pi
            sc_err = max(sc_err, abs(ssf_trindex_rep(sc, float(lam), eps) - expected))
    ok = worst <= 1e-6 and sc_err <= 1e-10
    say(7, ok, f"50 pairs x 50 lambda x 2 eps max residual {worst:.2e} (<= 1e-6); scalar closed form {sc_err:.2e} (<= 1e-10)")
    assert ok


def test_criterion_8_krein(pairs, say):
    assert len(KREIN_POINTS) == 3
    worst = max(krein_residual(p, KREIN_POINTS) for p in pairs)
    ok = worst <= 1e-9
    say(8, ok, f"50 pairs x 3 z max residual {worst:.2e} (<= 1e-9)")
    assert ok


def test_criterion_9_well_definedness(say):
    tol = DEFAULT_TOL
    p_spread = q_spread = 0.0
    algebra_bad = 0
    for i in range(60):
        rng = np.random.default_rng(BASE_SEED + i)
        n = 1 + i % 10
        A = xi_operator(random_dissipative(n, rng))
        Bx = xi_operator(random_dissipative(n, rng))
        Q = random_projection(n, seed=rng)
        vals = [trindex(A, Q, P=random_projection(n, seed=rng)) for _ in range(5)]
        p_spread = max(p_spread, (max(vals) - min(vals)) / (n * tol.tol_proj))
        g = [gtr(A, Bx, Q=random_projection(n, seed=rng)) for _ in range(5)]
        q_spread = max(q_spread, (max(g) - min(g)) / (n * tol.tol_proj))
        P1, P2, P3 = (random_projection(n, seed=rng) for _ in range(3))
        algebra_bad += index_pair(P1, P2) != -index_pair(P2, P1)
        algebra_bad += index_pair(P1, P3) != index_pair(P1, P2) + index_pair(P2, P3)
    ok = p_spread <= 1 and q_spread <= 1 and algebra_bad == 0
    say(9, ok, f"P-spread {p_spread:.2e} and Q-spread {q_spread:.2e} in units of n tol_proj (<= 1); "
               f"antisymmetry/chain-rule failures {algebra_bad} (== 0)")
    assert ok


def test_criterion_10_log_methods(say):
    worst = 0.0
    for i in range(100):
        T = random_dissipative(1 + i % 10, BASE_SEED + i)
        Ls = log_dissipative(T, method="schur")
        Li = log_dissipative(T, method="integral")
        worst = max(worst, np.linalg.norm(Ls - Li, 2))
    ok = worst <= 1e-6
    say(10, ok, f"100 matrices max |L_schur - L_integral| {worst:.2e} (<= 1e-6)")
    assert ok


def test_projection_counts_underlie_profiles(flow_instances):
    # plateau values equal negative-subspace rank differences at their sample points
    for inst in flow_instances[:20]:
        prof = crossing_profile(inst)
        ref = spectral_projection(inst.S, Interval.negative(), on_collision="exclude").rank
        for t, v in zip(prof.sample_points(), prof.plateaus):
            assert spectral_projection(inst.M + t * inst.B, Interval.negative()).rank - ref == v
