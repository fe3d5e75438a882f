"""Seeded random instances for tests, demos and the ``--random`` CLI flag."""

from __future__ import annotations

import numpy as np

from .matcore import DEFAULT_TOL, Tolerances
from .spectralflow import FlowInstance
from .ssf import PerturbationPair

__all__ = [
    "random_hermitian",
    "random_invertible_hermitian",
    "random_psd",
    "random_projection",
    "random_unitary",
    "random_dissipative",
    "random_flow_instance",
    "random_doubled_flow_instance",
    "random_pair",
]


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _gauss(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_hermitian(n, seed=None, scale=1.0):
    rng = _rng(seed)
    X = _gauss(rng, n, n)
    return scale * (X + X.conj().T) / (2 * np.sqrt(n))


def random_unitary(n, seed=None):
    rng = _rng(seed)
    Q, R = np.linalg.qr(_gauss(rng, n, n))
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_invertible_hermitian(n, seed=None, gap=0.2):
    """Hermitian with every eigenvalue at distance >= ``gap`` from 0."""
    rng = _rng(seed)
    w, U = np.linalg.eigh(random_hermitian(n, rng))
    w = np.where(w >= 0, w + gap, w - gap)
    return (U * w) @ U.conj().T


def random_psd(n, seed=None, rank=None):
    """``G G*`` normalised to unit norm; ``rank`` defaults to a random value in ``1..n``."""
    rng = _rng(seed)
    r = int(rng.integers(1, n + 1)) if rank is None else rank
    G = _gauss(rng, n, r)
    B = G @ G.conj().T
    nb = np.linalg.norm(B, 2)
    return B / nb if nb > 0 else B


def random_projection(n, rank=None, seed=None):
    rng = _rng(seed)
    r = int(rng.integers(0, n + 1)) if rank is None else rank
    U = random_unitary(n, rng)[:, :r]
    return U @ U.conj().T


def random_dissipative(n, seed=None, gap=0.1):
    """``H + iB`` with ``B`` PSD; resampled until the smallest singular value exceeds ``gap``."""
    rng = _rng(seed)
    while True:
        T = random_hermitian(n, rng, scale=2.0) + 1j * random_psd(n, rng)
        if np.linalg.svd(T, compute_uv=False)[-1] > gap:
            return T


def _min_abs_eig(H):
    return np.min(np.abs(np.linalg.eigvalsh(H))) if H.size else np.inf


def random_flow_instance(n, seed=None, tol: Tolerances = DEFAULT_TOL) -> FlowInstance:
    """``S`` invertible, ``A`` random with ``S + A`` invertible, ``B = G G*`` normalised.

    When ``B`` is rank deficient, ``S + A`` compressed to ``ker B`` is also kept
    invertible; otherwise a crossing escapes towards infinity and the far plateau
    is numerically undecidable.
    """
    rng = _rng(seed)
    S = random_invertible_hermitian(n, rng)
    B = random_psd(n, rng)
    w, U = np.linalg.eigh(B)
    Z = U[:, w < 1e-8]
    while True:
        A = random_hermitian(n, rng, scale=0.5)
        M = S + A
        if _min_abs_eig(M) > 0.05 and _min_abs_eig(Z.conj().T @ M @ Z) > 0.05:
            break
    return FlowInstance.build(S, A, B, tol)


def random_doubled_flow_instance(m, seed=None, tol: Tolerances = DEFAULT_TOL) -> FlowInstance:
    """Dimension ``2m`` instance whose every crossing has multiplicity 2.

    Built as ``U diag(X, X) U*`` for each of ``S, A, B`` with a random unitary ``U``.
    """
    rng = _rng(seed)
    base = random_flow_instance(m, rng, tol)
    U = random_unitary(2 * m, rng)

    def dbl(X):
        Z = np.zeros((2 * m, 2 * m), dtype=complex)
        Z[:m, :m] = X
        Z[m:, m:] = X
        return U @ Z @ U.conj().T

    return FlowInstance.build(dbl(base.S), dbl(base.A), dbl(base.B), tol)


def random_pair(n, seed=None, sign=None, tol: Tolerances = DEFAULT_TOL) -> PerturbationPair:
    """Random ``(H0, V)``; ``sign`` of ``+1``/``-1`` makes ``V`` PSD/NSD."""
    rng = _rng(seed)
    H0 = random_hermitian(n, rng, scale=2.0)
    if sign is None:
        V = random_hermitian(n, rng)
    else:
        V = sign * random_psd(n, rng)
    return PerturbationPair.build(H0, V, tol)
