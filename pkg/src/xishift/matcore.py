"""Dense complex matrix foundation.

Hermitian eigendecomposition with tolerance-based multiplicities, spectral
projections onto intervals with explicit open/closed endpoints, functional
calculus, numerical rank, determinants and Schatten norms.

Matrices are plain ``numpy`` arrays throughout; the helpers here validate and
normalise them (``as_matrix``, ``as_hermitian``) instead of wrapping them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np
import scipy.linalg

from .errors import (
    DomainError,
    EigenConvergenceError,
    EndpointCollisionError,
    HermiticityError,
    NotPSDError,
    ProjectionError,
)

__all__ = [
    "Tolerances",
    "DEFAULT_TOL",
    "Interval",
    "SpectralDecomposition",
    "OrthoProjection",
    "as_matrix",
    "as_hermitian",
    "hermiticity_defect",
    "opnorm",
    "eig_hermitian",
    "spectral_projection",
    "func_calc_hermitian",
    "rank_eps",
    "kernel_dim",
    "determinant",
    "schatten_norm",
    "psd_part",
    "zero_projection",
]


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds used across the package.

    ``tol_eig`` scales with the operator norm of the matrix at hand,
    ``tol_rank_rel`` with ``n * sigma_max`` and ``cluster_gap`` with the
    norm when grouping eigenvalues into multiplicities.
    """

    tol_eig: float = 1e-10
    tol_proj: float = 1e-9
    tol_herm: float = 1e-9
    tol_rank_rel: float = 1e-10
    cluster_gap: float = 1e-8

    def __post_init__(self):
        for name in ("tol_eig", "tol_proj", "tol_herm", "tol_rank_rel", "cluster_gap"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True)
class Interval:
    """Real interval; endpoints may be infinite, each flagged open or closed."""

    lo: float
    hi: float
    lo_closed: bool = False
    hi_closed: bool = False

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty interval: lo={self.lo} > hi={self.hi}")

    @classmethod
    def negative(cls):
        """The open half-line (-inf, 0)."""
        return cls(-math.inf, 0.0)

    @classmethod
    def positive(cls):
        return cls(0.0, math.inf)

    @classmethod
    def point(cls, x):
        return cls(x, x, True, True)

    def __str__(self):
        left = "[" if self.lo_closed and math.isfinite(self.lo) else "("
        right = "]" if self.hi_closed and math.isfinite(self.hi) else ")"
        return f"{left}{self.lo:g}, {self.hi:g}{right}"


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    multiplicities: Tuple[int, ...]
    norm: float

    @property
    def n(self):
        return self.eigenvalues.shape[0]

    def cluster_values(self):
        """Mean eigenvalue of each multiplicity cluster, ascending."""
        out = []
        start = 0
        for m in self.multiplicities:
            out.append(float(np.mean(self.eigenvalues[start:start + m])))
            start += m
        return np.array(out)

    def reconstruct(self, f: Callable[[np.ndarray], np.ndarray] | None = None):
        U = self.eigenvectors
        vals = self.eigenvalues if f is None else f(self.eigenvalues)
        return (U * vals) @ U.conj().T


@dataclass(frozen=True)
class OrthoProjection:
    matrix: np.ndarray
    rank: int

    @property
    def n(self):
        return self.matrix.shape[0]

    @classmethod
    def from_matrix(cls, P, tol: Tolerances = DEFAULT_TOL):
        """Certify ``P`` as an orthogonal projection and attach its rank."""
        P = as_matrix(P)
        n = P.shape[0]
        idem = opnorm(P @ P - P)
        herm = opnorm(P - P.conj().T)
        if idem > tol.tol_proj or herm > tol.tol_proj:
            raise ProjectionError(
                f"not an orthogonal projection: |P^2-P|={idem:.3e}, |P-P*|={herm:.3e} "
                f"(tol_proj={tol.tol_proj:g})"
            )
        tr = float(np.trace(P).real)
        rank = int(round(tr))
        if abs(tr - rank) > tol.tol_proj * n:
            raise ProjectionError(f"trace {tr!r} of projection is not an integer within tolerance")
        return cls(P, rank)

    @property
    def kernel_dim(self):
        return self.n - self.rank


def zero_projection(n):
    return OrthoProjection(np.zeros((n, n), dtype=complex), 0)


def as_matrix(M) -> np.ndarray:
    """Return ``M`` as a finite square complex array."""
    A = np.array(M, dtype=complex)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise ValueError(f"expected a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def opnorm(M) -> float:
    """Operator (spectral) norm."""
    M = np.asarray(M)
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def hermiticity_defect(M) -> float:
    M = np.asarray(M)
    return opnorm(M - M.conj().T)


def as_hermitian(M, tol: Tolerances = DEFAULT_TOL, name: str = "matrix") -> np.ndarray:
    """Symmetrise ``M`` to ``(M + M*)/2`` after checking its hermiticity defect.

    The defect is measured relative to ``max(1, |M|)``.
    """
    A = as_matrix(M)
    defect = hermiticity_defect(A)
    if defect > tol.tol_herm * max(1.0, opnorm(A)):
        raise HermiticityError(f"{name} is not Hermitian: |M - M*| = {defect:.3e}")
    return (A + A.conj().T) / 2


def _clusters(vals: np.ndarray, gap: float) -> Tuple[int, ...]:
    if vals.size == 0:
        return ()
    sizes = [1]
    for a, b in zip(vals[:-1], vals[1:]):
        if b - a <= gap:
            sizes[-1] += 1
        else:
            sizes.append(1)
    return tuple(sizes)


def eig_hermitian(H, tol: Tolerances = DEFAULT_TOL) -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian matrix.

    Eigenvalues come back ascending. Consecutive eigenvalues closer than
    ``cluster_gap * |H|`` are grouped into one multiplicity cluster.
    """
    H = as_matrix(H)
    H = (H + H.conj().T) / 2
    try:
        w, U = scipy.linalg.eigh(H, driver="evd")
    except np.linalg.LinAlgError as exc:
        # LAPACK reports the number of off-diagonal elements that failed to converge.
        raise EigenConvergenceError(f"Hermitian eigensolver did not converge: {exc}") from exc
    norm = float(np.max(np.abs(w))) if w.size else 0.0
    return SpectralDecomposition(w, U, _clusters(w, tol.cluster_gap * norm), norm)


def _in_interval(w, norm, iv: Interval, tol: Tolerances, on_collision: str):
    slack = tol.tol_eig * norm
    mask = np.ones(w.shape, dtype=bool)
    for endpoint, closed, side in ((iv.lo, iv.lo_closed, "lo"), (iv.hi, iv.hi_closed, "hi")):
        if not math.isfinite(endpoint):
            continue
        near = np.abs(w - endpoint) <= slack
        if closed:
            inside = (w >= endpoint) if side == "lo" else (w <= endpoint)
            mask &= inside | near
        else:
            if np.any(near) and on_collision == "raise":
                ev = float(w[np.argmax(near)])
                raise EndpointCollisionError(
                    f"eigenvalue {ev:.6g} lies within {slack:.3e} of the open endpoint "
                    f"{endpoint:g} of {iv}; perturb the endpoint or close it deliberately",
                    eigenvalue=ev,
                    endpoint=endpoint,
                )
            inside = (w > endpoint) if side == "lo" else (w < endpoint)
            mask &= inside & ~near
    return mask


def spectral_projection(
    H,
    interval: Interval,
    tol: Tolerances = DEFAULT_TOL,
    on_collision: str = "raise",
) -> OrthoProjection:
    """Spectral projection ``E_H(interval)``.

    An eigenvalue within ``tol_eig * |H|`` of a finite *open* endpoint raises
    ``EndpointCollisionError``; pass ``on_collision="exclude"`` to treat such
    eigenvalues as outside the interval instead. Eigenvalues that close to a
    *closed* endpoint are counted as inside.
    """
    if on_collision not in ("raise", "exclude"):
        raise ValueError("on_collision must be 'raise' or 'exclude'")
    dec = H if isinstance(H, SpectralDecomposition) else eig_hermitian(H, tol)
    mask = _in_interval(dec.eigenvalues, dec.norm, interval, tol, on_collision)
    U = dec.eigenvectors[:, mask]
    P = U @ U.conj().T
    return OrthoProjection(P, int(mask.sum()))


def _sign_with_kernel(w, thresh):
    return np.where(w < -thresh, -1.0, 1.0)


def func_calc_hermitian(H, f: str, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Apply ``f`` in {"arctan", "sqrt", "abs", "sign"} through the eigendecomposition.

    ``sign`` maps the (numerical) kernel to +1, so ``sign(H)**2 = I`` always.
    ``sqrt`` clips eigenvalues in ``[-tol_eig*|H|, 0)`` to zero and raises
    ``DomainError`` below that.
    """
    dec = H if isinstance(H, SpectralDecomposition) else eig_hermitian(H, tol)
    w = dec.eigenvalues
    thresh = tol.tol_eig * dec.norm
    if f == "arctan":
        vals = np.arctan(w)
    elif f == "abs":
        vals = np.abs(w)
    elif f == "sign":
        vals = _sign_with_kernel(w, thresh)
    elif f == "sqrt":
        if w.size and w[0] < -thresh:
            raise DomainError(f"sqrt of a matrix with negative eigenvalue {w[0]:.6g}")
        vals = np.sqrt(np.clip(w, 0.0, None))
    else:
        raise ValueError(f"unsupported function {f!r}")
    out = (dec.eigenvectors * vals) @ dec.eigenvectors.conj().T
    return (out + out.conj().T) / 2


def psd_part(B, tol: Tolerances = DEFAULT_TOL, scale: float | None = None, name="B"):
    """Return ``B`` with negligible eigenvalues zeroed, raising if it is not PSD.

    Eigenvalues below ``-tol_herm * scale`` are rejected; eigenvalues with
    absolute value under ``tol_eig * scale`` are set to zero. ``scale``
    defaults to ``max(1, |B|)``.
    """
    dec = eig_hermitian(B, tol)
    if scale is None:
        scale = max(1.0, dec.norm)
    w = dec.eigenvalues
    if w.size and w[0] < -tol.tol_herm * scale:
        raise NotPSDError(f"{name} is not positive semidefinite: eigenvalue {w[0]:.6g}", eigenvalue=float(w[0]))
    w = np.where(w <= tol.tol_eig * scale, 0.0, w)
    out = (dec.eigenvectors * w) @ dec.eigenvectors.conj().T
    return (out + out.conj().T) / 2


def rank_eps(M, tol: Tolerances = DEFAULT_TOL, scale: float = 0.0) -> int:
    """Numerical rank: singular values above ``tol_rank_rel * n * max(sigma_max, scale)``.

    ``scale`` sets a floor for matrices whose natural size is known, so that
    a matrix of pure round-off is not counted as full rank.
    """
    M = as_matrix(M)
    s = np.linalg.svd(M, compute_uv=False)
    ref = max(float(s[0]), scale)
    if ref == 0.0:
        return 0
    return int(np.sum(s > tol.tol_rank_rel * M.shape[0] * ref))


def kernel_dim(M, tol: Tolerances = DEFAULT_TOL, scale: float = 0.0) -> int:
    M = as_matrix(M)
    return M.shape[0] - rank_eps(M, tol, scale)


def determinant(M) -> complex:
    return complex(np.linalg.det(as_matrix(M)))


def schatten_norm(M, p=1) -> float:
    """Schatten p-norm; ``p=1`` is the trace norm, ``p=np.inf`` the operator norm."""
    s = np.linalg.svd(np.asarray(M), compute_uv=False)
    if p == np.inf:
        return float(s.max(initial=0.0))
    return float(np.sum(s ** p) ** (1.0 / p))
