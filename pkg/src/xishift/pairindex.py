"""Index of a pair of projections, trindex and generalized trace.

At finite dimension every pair of projections is Fredholm and every
difference is trace class, so each quantity has two formulas that must
agree. Both are evaluated on every call and a disagreement raises
``ConsistencyError``.
"""

from __future__ import annotations

import numpy as np

from .errors import ConsistencyError, ProjectionError
from .matcore import DEFAULT_TOL, OrthoProjection, Tolerances, as_matrix, kernel_dim, zero_projection

__all__ = ["index_pair", "trindex", "gtr", "as_projection"]

# A trace farther than this from an integer means the inputs were not projections.
_ROUNDING_REJECT = 0.1


def as_projection(P, tol: Tolerances = DEFAULT_TOL) -> OrthoProjection:
    if isinstance(P, OrthoProjection):
        return P
    return OrthoProjection.from_matrix(P, tol)


def index_pair(P, Q, tol: Tolerances = DEFAULT_TOL) -> int:
    """``index(P, Q)``, computed as ``trace(P - Q)`` and cross-checked with
    ``dim ker(P - Q - I) - dim ker(P - Q + I)``.
    """
    P = as_projection(P, tol)
    Q = as_projection(Q, tol)
    if P.n != Q.n:
        raise ValueError(f"dimension mismatch: {P.n} vs {Q.n}")
    n = P.n
    D = P.matrix - Q.matrix
    tr = float(np.trace(D).real)
    k = int(round(tr))
    defect = abs(tr - k)
    if defect > _ROUNDING_REJECT:
        raise ProjectionError(f"trace(P - Q) = {tr!r} is not near an integer")
    if defect > n * tol.tol_proj:
        raise ConsistencyError(f"trace(P - Q) = {tr!r} misses integer {k} by {defect:.3e}")
    I = np.eye(n)
    # P - Q has norm <= 1, so D -+ I are measured on the unit scale
    by_kernels = kernel_dim(D - I, tol, scale=1.0) - kernel_dim(D + I, tol, scale=1.0)
    if by_kernels != k:
        raise ConsistencyError(f"index by trace is {k} but kernel count gives {by_kernels}")
    return k


def _real_trace(M, tol, what):
    tr = complex(np.trace(M))
    if abs(tr.imag) > tol.tol_proj * M.shape[0] * max(1.0, abs(tr.real)):
        raise ValueError(f"{what} has non-real trace {tr!r}")
    return tr.real


def trindex(A, Q, P=None, tol: Tolerances = DEFAULT_TOL) -> float:
    """``trace(A - P) + index(P, Q)`` for an admissible projection ``P`` (default ``Q``).

    The value does not depend on ``P``; it is recomputed with ``P = Q`` and
    the two are compared to within ``n * tol_proj``.
    """
    A = as_matrix(A)
    Q = as_projection(Q, tol)
    n = A.shape[0]
    if Q.n != n:
        raise ValueError(f"dimension mismatch: A is {n}x{n}, Q is {Q.n}x{Q.n}")
    base = _real_trace(A - Q.matrix, tol, "A - Q")
    if P is None:
        return base
    P = as_projection(P, tol)
    value = _real_trace(A - P.matrix, tol, "A - P") + index_pair(P, Q, tol)
    if abs(value - base) > n * tol.tol_proj:
        raise ConsistencyError(f"trindex depends on P: {value!r} vs {base!r}")
    return value


def gtr(A, B, Q=None, tol: Tolerances = DEFAULT_TOL) -> float:
    """Generalized trace ``trindex(A, Q) - trindex(B, Q)``; ``Q`` defaults to 0.

    Checked against ``trace(A - B)``.
    """
    A = as_matrix(A)
    B = as_matrix(B)
    if A.shape != B.shape:
        raise ValueError(f"shape mismatch: {A.shape} vs {B.shape}")
    n = A.shape[0]
    Q = zero_projection(n) if Q is None else as_projection(Q, tol)
    value = trindex(A, Q, tol=tol) - trindex(B, Q, tol=tol)
    direct = _real_trace(A - B, tol, "A - B")
    if abs(value - direct) > n * tol.tol_proj * max(1.0, abs(direct)):
        raise ConsistencyError(f"gtr {value!r} differs from trace(A - B) = {direct!r}")
    return value
