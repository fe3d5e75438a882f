import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, strategies as st

from conftest import hermitian
from xishift.errors import ProjectionError
from xishift.generate import random_dissipative, random_projection, random_unitary
from xishift.matcore import DEFAULT_TOL, OrthoProjection, Tolerances
from xishift.oplog import xi_operator
from xishift.pairindex import gtr, index_pair, trindex

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(1, 9)

HALF = 0.5 * np.array([[1.0, -1.0], [-1.0, 1.0]])


@pytest.mark.parametrize(
    "P, Q, k",
    [
        (np.diag([1.0, 0.0]), np.diag([0.0, 1.0]), 0),
        (np.eye(2), np.diag([1.0, 0.0]), 1),
        (HALF, np.diag([1.0, 0.0]), 0),
    ],
)
def test_index_examples(P, Q, k):
    assert index_pair(P, Q) == k


def test_trindex_examples():
    A = np.diag([0.3, 0.9])
    Q = np.diag([1.0, 0.0])
    assert trindex(A, Q) == pytest.approx(0.2, abs=1e-15)
    assert trindex(A, Q, P=np.diag([0.0, 1.0])) == pytest.approx(0.2, abs=1e-15)


def test_trindex_of_projection_is_index():
    rng = np.random.default_rng(3)
    P = random_projection(5, 3, rng)
    Q = random_projection(5, 1, rng)
    assert trindex(P, Q) == pytest.approx(index_pair(P, Q), abs=1e-12)
    assert trindex(Q, Q) == pytest.approx(0.0, abs=1e-12)


def test_gtr_examples():
    assert gtr(np.diag([1.0, 2.0]), np.diag([0.0, 2.0])) == pytest.approx(1.0)
    A = np.diag([0.5, -0.5])
    assert gtr(A, A) == 0.0
    for Q in (np.diag([1.0, 0.0]), np.diag([0.0, 1.0])):
        assert gtr(A, np.zeros((2, 2)), Q=Q) == pytest.approx(0.0, abs=1e-15)


def test_non_projection_rejected():
    with pytest.raises(ProjectionError):
        index_pair(np.diag([0.5, 0.5]), np.eye(2))


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        index_pair(np.eye(2), np.eye(3))


def test_invalid_auxiliary_projection_is_rejected():
    # a non-projection slipped past the certificate via a huge tolerance
    loose = Tolerances(tol_proj=0.6)
    P = OrthoProjection(np.diag([0.7, 0.0]), 1)
    with pytest.raises(ProjectionError):
        trindex(np.diag([0.3, 0.9]), np.diag([1.0, 0.0]), P=P, tol=loose)


@given(seeds, dims)
def test_antisymmetry(seed, n):
    rng = np.random.default_rng(seed)
    P, Q = random_projection(n, seed=rng), random_projection(n, seed=rng)
    assert index_pair(P, Q) == -index_pair(Q, P)


@given(seeds, dims)
def test_chain_rule(seed, n):
    rng = np.random.default_rng(seed)
    P, Q, R = (random_projection(n, seed=rng) for _ in range(3))
    assert index_pair(P, R) == index_pair(P, Q) + index_pair(Q, R)


@given(seeds, dims)
def test_trace_identity(seed, n):
    rng = np.random.default_rng(seed)
    P, Q = random_projection(n, seed=rng), random_projection(n, seed=rng)
    tr = np.trace(P - Q).real
    assert abs(tr - index_pair(P, Q)) < 1e-8


@given(seeds, st.integers(2, 9))
def test_close_projections_have_zero_index(seed, n):
    rng = np.random.default_rng(seed)
    r = int(rng.integers(0, n + 1))
    P = random_projection(n, r, rng)
    U = scipy.linalg.expm(1j * 0.05 * hermitian(rng, n) / n)
    Q = U @ P @ U.conj().T
    assert np.linalg.norm(P - Q, 2) < 1
    assert index_pair(P, Q) == 0


@given(seeds, st.integers(1, 8))
def test_trindex_independent_of_p(seed, n):
    rng = np.random.default_rng(seed)
    A = xi_operator(random_dissipative(n, rng))
    Q = random_projection(n, seed=rng)
    vals = [trindex(A, Q, P=random_projection(n, seed=rng)) for _ in range(5)]
    assert max(vals) - min(vals) <= n * DEFAULT_TOL.tol_proj


@given(seeds, st.integers(2, 8))
def test_trindex_stable_under_small_rotation_of_q(seed, n):
    rng = np.random.default_rng(seed)
    A = xi_operator(random_dissipative(n, rng))
    Q = random_projection(n, seed=rng)
    U = scipy.linalg.expm(1j * 0.05 * hermitian(rng, n) / n)
    Q1 = U @ Q @ U.conj().T
    assert trindex(A, Q) == pytest.approx(trindex(A, Q1), abs=1e-9)


@given(seeds, st.integers(1, 8))
def test_gtr_independent_of_q(seed, n):
    rng = np.random.default_rng(seed)
    A = xi_operator(random_dissipative(n, rng))
    B = xi_operator(random_dissipative(n, rng))
    vals = [gtr(A, B, Q=random_projection(n, seed=rng)) for _ in range(5)]
    assert max(vals) - min(vals) <= n * DEFAULT_TOL.tol_proj
    assert vals[0] == pytest.approx(np.trace(A - B).real, abs=1e-10)


def test_unitary_conjugation_preserves_index():
    rng = np.random.default_rng(11)
    P, Q = random_projection(6, 4, rng), random_projection(6, 2, rng)
    U = random_unitary(6, rng)
    assert index_pair(U @ P @ U.conj().T, U @ Q @ U.conj().T) == index_pair(P, Q) == 2
