"""Logarithm of invertible dissipative matrices and the Xi operator.

The branch is fixed by the integral

    log T = -i * int_0^inf ((T + i s)^{-1} - (1 + i s)^{-1} I) ds,

which gives every eigenvalue an argument in [0, pi]; negative real
eigenvalues get +pi, the limit from the upper half-plane.

Two independent evaluations are provided. ``method="schur"`` rotates ``T`` by
``-i`` (moving the spectrum into the closed right half-plane, away from the
principal cut), triangularises, and runs inverse scaling and squaring with a
Gauss-Legendre Pade approximant on the triangular factor. ``method="integral"``
evaluates the integral above with composite Gauss-Legendre quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NotDissipativeError, QuadratureConfigError, SingularMatrixError
from .matcore import (
    DEFAULT_TOL,
    Interval,
    Tolerances,
    as_hermitian,
    as_matrix,
    hermiticity_defect,
    opnorm,
    spectral_projection,
)

__all__ = [
    "DissipativeMatrix",
    "QuadratureConfig",
    "LogInfo",
    "log_dissipative",
    "xi_operator",
    "im_part",
]


def im_part(M):
    """Hermitian imaginary part ``(M - M*) / 2i``."""
    return (M - M.conj().T) / 2j


@dataclass(frozen=True)
class DissipativeMatrix:
    matrix: np.ndarray
    im_min: float
    inv_norm: float

    @classmethod
    def from_array(cls, T, tol: Tolerances = DEFAULT_TOL):
        if isinstance(T, cls):
            return T
        T = as_matrix(T)
        n = T.shape[0]
        im = im_part(T)
        im_min = float(np.linalg.eigvalsh((im + im.conj().T) / 2)[0])
        norm = opnorm(T)
        if im_min < -tol.tol_herm * max(1.0, norm):
            raise NotDissipativeError(f"Im(T) has negative eigenvalue {im_min:.6g}")
        s = np.linalg.svd(T, compute_uv=False)
        if s[-1] <= tol.tol_rank_rel * n * max(s[0], np.finfo(float).tiny):
            raise SingularMatrixError(
                f"dissipative matrix is not invertible: smallest singular value {s[-1]:.3e}"
            )
        return cls(T, im_min, float(1.0 / s[-1]))

    @property
    def n(self):
        return self.matrix.shape[0]


@dataclass(frozen=True)
class QuadratureConfig:
    """Composite Gauss-Legendre setup for the log integral.

    ``[0, cutoff]`` is covered by one panel next to the origin followed by
    geometrically graded panels; ``[cutoff, inf)`` is mapped onto ``(0, 1]``
    by ``s = cutoff / u`` and integrated as well, so nothing is truncated.
    ``tail_tol`` bounds the quadrature error estimate (configured rule vs
    one with two extra nodes per panel).
    """

    panels: int = 64
    nodes_per_panel: int = 8
    cutoff_factor: float = 10.0
    tail_tol: float = 1e-9

    def __post_init__(self):
        if self.panels < 2 or self.nodes_per_panel < 1:
            raise ValueError("panels must be >= 2 and nodes_per_panel >= 1")
        if not self.cutoff_factor > 1:
            raise ValueError("cutoff_factor must exceed 1")
        if not self.tail_tol > 0:
            raise ValueError("tail_tol must be positive")


@dataclass(frozen=True)
class LogInfo:
    method: str
    square_roots: int = 0
    cutoff: float = float("nan")
    tail_bound: float = float("nan")
    error_estimate: float = float("nan")


# --------------------------------------------------------------------------
# Schur route
# --------------------------------------------------------------------------

_PADE_NODES, _PADE_WEIGHTS = np.polynomial.legendre.leggauss(10)
_PADE_NODES = (_PADE_NODES + 1) / 2
_PADE_WEIGHTS = _PADE_WEIGHTS / 2


def _sqrtm_triu(R):
    n = R.shape[0]
    X = np.zeros_like(R)
    d = np.sqrt(np.diag(R))
    X[np.diag_indices(n)] = d
    for j in range(1, n):
        for i in range(j - 1, -1, -1):
            s = X[i, i + 1:j] @ X[i + 1:j, j]
            X[i, j] = (R[i, j] - s) / (d[i] + d[j])
    return X


def _logm_triu_near_identity(R):
    # log(I + X) = int_0^1 X (I + t X)^{-1} dt, evaluated as an m-point
    # Gauss-Legendre sum (the diagonal Pade approximant of the same degree).
    n = R.shape[0]
    I = np.eye(n)
    X = R - I
    L = np.zeros_like(R)
    for t, w in zip(_PADE_NODES, _PADE_WEIGHTS):
        L += w * scipy.linalg.solve_triangular(I + t * X, X)
    return L


def _log_schur(T):
    n = T.shape[0]
    R, Z = scipy.linalg.schur(-1j * T, output="complex")
    I = np.eye(n)
    k = 0
    while np.linalg.norm(R - I, 1) > 0.25:
        if k >= 60:
            raise SingularMatrixError("inverse scaling and squaring failed to reach the identity")
        R = _sqrtm_triu(R)
        k += 1
    L = (2.0 ** k) * _logm_triu_near_identity(R)
    L = L + 0.5j * math.pi * I
    return Z @ L @ Z.conj().T, k


# --------------------------------------------------------------------------
# Integral route
# --------------------------------------------------------------------------


def _gl_panels(edges, m):
    x, w = np.polynomial.legendre.leggauss(m)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = (a + b) / 2 + (b - a) / 2 * x
    weights = (b - a) / 2 * w
    return nodes.ravel(), weights.ravel()


def _integrand_nodes(T, cutoff, smin, q: QuadratureConfig, m):
    first = min(cutoff, smin) / 4
    graded = np.geomspace(first, cutoff, q.panels)
    edges = np.concatenate([[0.0], graded])
    s, ws = _gl_panels(edges, m)
    u, wu = _gl_panels(np.linspace(0.0, 1.0, 5), 2 * m)
    return s, ws, u, wu


def _log_integral_once(T, cutoff, smin, q, m):
    n = T.shape[0]
    I = np.eye(n)
    D = I - T
    s, ws, u, wu = _integrand_nodes(T, cutoff, smin, q, m)
    acc = np.zeros((n, n), dtype=complex)
    # (T + is)^{-1} - (1 + is)^{-1} = (T + is)^{-1} (I - T) / (1 + is): no cancellation.
    for si, wi in zip(s, ws):
        acc += (wi / (1 + 1j * si)) * np.linalg.solve(T + 1j * si * I, D)
    # s = cutoff / u maps [cutoff, inf) onto (0, 1].
    for ui, wi in zip(u, wu):
        acc += (wi * cutoff / (ui + 1j * cutoff)) * np.linalg.solve(ui * T + 1j * cutoff * I, D)
    return -1j * acc


def _log_integral(T, q: QuadratureConfig):
    norm = opnorm(T)
    cutoff = q.cutoff_factor * max(1.0, norm)
    smin = float(np.linalg.svd(T, compute_uv=False)[-1])
    # error of the configured rule, estimated against a rule with two more
    # nodes per panel; the richer result is the one returned
    base = _log_integral_once(T, cutoff, smin, q, q.nodes_per_panel)
    fine = _log_integral_once(T, cutoff, smin, q, q.nodes_per_panel + 2)
    err = opnorm(fine - base)
    tail_bound = opnorm(np.eye(T.shape[0]) - T) / (cutoff - norm)
    if err > q.tail_tol * max(1.0, opnorm(fine)):
        raise QuadratureConfigError(
            f"log quadrature error estimate {err:.3e} exceeds tail_tol={q.tail_tol:g}; "
            "increase panels, nodes_per_panel or cutoff_factor"
        )
    return fine, LogInfo("integral", cutoff=cutoff, tail_bound=tail_bound, error_estimate=err)


def log_dissipative(
    T,
    method: str = "schur",
    q: QuadratureConfig | None = None,
    tol: Tolerances = DEFAULT_TOL,
    full_output: bool = False,
):
    """Logarithm of an invertible dissipative matrix (``Im T >= 0``).

    Parameters
    ----------
    T : array_like or DissipativeMatrix
    method : {"schur", "integral"}
    q : QuadratureConfig, optional
        Only used by ``method="integral"``.
    full_output : bool
        Also return a ``LogInfo`` record.
    """
    D = DissipativeMatrix.from_array(T, tol)
    if method == "schur":
        L, k = _log_schur(D.matrix)
        info = LogInfo("schur", square_roots=k)
    elif method == "integral":
        L, info = _log_integral(D.matrix, q or QuadratureConfig())
    else:
        raise ValueError(f"unknown method {method!r}")
    return (L, info) if full_output else L


def xi_operator(T, tol: Tolerances = DEFAULT_TOL, method: str = "schur") -> np.ndarray:
    """``Xi(T) = Im(log T) / pi``; the negative spectral projection for Hermitian ``T``.

    Hermitian input (defect within ``tol_herm``) goes through
    ``spectral_projection`` and raises ``EndpointCollisionError`` when 0 is an
    eigenvalue. The result is a Hermitian matrix with spectrum in ``[0, 1]``.
    """
    if isinstance(T, DissipativeMatrix):
        T = T.matrix
    T = as_matrix(T)
    if hermiticity_defect(T) <= tol.tol_herm * max(1.0, opnorm(T)):
        H = as_hermitian(T, tol)
        return spectral_projection(H, Interval.negative(), tol).matrix
    L = log_dissipative(T, method=method, tol=tol)
    X = im_part(L) / math.pi
    return (X + X.conj().T) / 2
