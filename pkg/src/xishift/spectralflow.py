"""Crossing profiles of S + A + tB and the identities built on them.

For Hermitian ``S``, ``A`` and PSD ``B`` the integer step function

    n(t) = index(Xi(S + A + tB), Xi(S))

jumps by ``-m`` whenever ``m`` eigenvalues of ``S + A + tB`` cross zero
upwards. The crossing points are found algebraically: with an invertible
reference ``R = S + A + tau*B`` they are ``t = tau - 1/lam`` for the nonzero
eigenvalues ``lam`` of ``B^{1/2} R^{-1} B^{1/2}``. Plateau values are
counted independently from spectral projections at interval midpoints.

The Cauchy average ``(1/pi) int n(t) dt / (1 + t^2)`` of such a step function
is a finite sum of arctangent differences and is evaluated exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence, Tuple

import numpy as np

from .errors import AdmissibilityError, ConsistencyError, HypothesisViolation, SingularMatrixError
from .matcore import (
    DEFAULT_TOL,
    Interval,
    Tolerances,
    as_hermitian,
    determinant,
    eig_hermitian,
    func_calc_hermitian,
    kernel_dim,
    opnorm,
    psd_part,
    rank_eps,
    schatten_norm,
    spectral_projection,
)
from .oplog import im_part, log_dissipative, xi_operator
from .pairindex import gtr, index_pair, trindex
from .report import Check

__all__ = [
    "FlowInstance",
    "CrossingProfile",
    "crossing_profile",
    "cauchy_average",
    "cauchy_sum",
    "trindex_xi_pair",
    "verify_ttr8",
    "log_trace_formula",
    "arctan_trace",
    "arctan_trend",
    "ArctanTrend",
    "arctan_log_identity",
    "birman_krein",
    "BirmanKreinResult",
    "crossing_count_formula",
    "signature_special_case",
    "gtr_cauchy_average",
    "commutator_diagnostic",
    "ANCHORS",
]

ANCHORS = {
    "ttr8": "trindex(Xi(S+A+iB), Xi(S)) = Cauchy average of index(Xi(S+A+tB), Xi(S))",
    "bk_det": "det(I - 2i B^1/2 (S+A+iB)^-1 B^1/2) = exp(-2 pi i trindex)",
    "bk_unitary": "scattering matrix I - 2i B^1/2 (S+A+iB)^-1 B^1/2 is unitary",
    "logtrace": "trace(log(S+zB) - log S) = sum m_k Log(1 + z lam_k)",
    "arctan_log": "trace(Im log(S+iB) - Im log S) = trace arctan(B^1/2 S^-1 B^1/2)",
    "arctan_limit": "lim trace arctan(B^1/2 (S+eps B)^-1 B^1/2) = sum arctan lam_k + (pi/2) dim ker S",
    "crossing_count": "trace(Xi(S+tB) - Xi(S)) = -(number of zero crossings in (0, t])",
}


# --------------------------------------------------------------------------
# instances and profiles
# --------------------------------------------------------------------------


def _min_abs_eig(M):
    return float(np.min(np.abs(np.linalg.eigvalsh(M))))


def _is_invertible(M, tol):
    return rank_eps(M, tol) == M.shape[0]


def _find_reference(M, B, tol: Tolerances):
    """Return 0 if ``M`` is invertible, else the best-conditioned scanned offset."""
    if _is_invertible(M, tol):
        return 0.0
    nb = opnorm(B)
    if nb == 0.0:
        raise HypothesisViolation("S + A is singular and B = 0: no invertible S + A + tau B")
    base = max(1.0, opnorm(M)) / nb
    best, best_gap = None, 0.0
    for j in range(0, 24):
        for sgn in (1.0, -1.0):
            tau = sgn * base * 2.0 ** (-j)
            R = M + tau * B
            if not _is_invertible(R, tol):
                continue
            gap = _min_abs_eig(R) / max(1.0, opnorm(R))
            if gap > best_gap:
                best, best_gap = tau, gap
    if best is None:
        raise HypothesisViolation("no tau on the scan grid makes S + A + tau B invertible")
    return best


@dataclass(frozen=True)
class FlowInstance:
    """Hermitian ``S``, ``A`` and PSD ``B`` with a reference ``tau0`` such
    that ``S + A + tau0*B`` is invertible (``tau0 = 0`` whenever possible).
    """

    S: np.ndarray
    A: np.ndarray
    B: np.ndarray
    tau0: float

    @classmethod
    def build(cls, S, A=None, B=None, tol: Tolerances = DEFAULT_TOL):
        S = as_hermitian(S, tol, "S")
        n = S.shape[0]
        A = np.zeros((n, n), dtype=complex) if A is None else as_hermitian(A, tol, "A")
        B = np.zeros((n, n), dtype=complex) if B is None else as_hermitian(B, tol, "B")
        if A.shape != S.shape or B.shape != S.shape:
            raise ValueError("S, A, B must have equal dimensions")
        scale = max(1.0, opnorm(S), opnorm(A), opnorm(B))
        B = psd_part(B, tol, scale=scale)
        tau0 = _find_reference(S + A, B, tol)
        return cls(S, A, B, tau0)

    @property
    def n(self):
        return self.S.shape[0]

    @property
    def M(self):
        return self.S + self.A


@dataclass(frozen=True)
class CrossingProfile:
    """Step function n(t) with crossings ``(t_k, m_k)`` and plateau values.

    ``plateaus[i]`` is the value on the i-th open interval of
    ``(-inf, t_1, ..., t_m, inf)``. ``reference`` is the invertible point
    used to locate crossings.
    """

    crossings: Tuple[Tuple[float, int], ...]
    plateaus: Tuple[int, ...]
    base_index: int
    reference: float = 0.0

    @property
    def times(self):
        return np.array([t for t, _ in self.crossings], dtype=float)

    def edges(self):
        return np.concatenate([[-math.inf], self.times, [math.inf]])

    def sample_points(self):
        return _sample_points(self.times, self.reference)

    def value(self, t):
        """n(t); at a crossing the right-hand plateau is returned."""
        idx = int(np.searchsorted(self.times, t, side="right"))
        return self.plateaus[idx]

    def with_plateaus(self, values):
        return replace(self, plateaus=tuple(int(v) for v in values))


def _sample_points(times, reference=0.0):
    if len(times) == 0:
        return np.array([reference], dtype=float)
    mids = (times[:-1] + times[1:]) / 2
    # tails step out by max(1, |t|): far crossings come from weak directions of B
    lo = times[0] - max(1.0, abs(times[0]))
    hi = times[-1] + max(1.0, abs(times[-1]))
    return np.concatenate([[lo], mids, [hi]])


def _merge_times(ts, tol: Tolerances):
    ts = np.sort(np.asarray(ts, dtype=float))
    groups = []
    for t in ts:
        if groups and abs(t - groups[-1][-1]) <= tol.cluster_gap * max(1.0, abs(t)):
            groups[-1].append(t)
        else:
            groups.append([t])
    return [(float(np.mean(g)), len(g)) for g in groups]


def _neg_rank(H, tol, on_collision="raise"):
    return spectral_projection(H, Interval.negative(), tol, on_collision=on_collision).rank


def crossing_profile(inst: FlowInstance, tol: Tolerances = DEFAULT_TOL) -> CrossingProfile:
    """Crossing profile of ``n(t) = index(Xi(S + A + tB), Xi(S))``.

    ``Xi(S)`` is ``E_S((-inf, 0))`` with zero eigenvalues of ``S`` excluded.
    When ``S + A`` is singular, crossings are located from the shifted
    reference ``inst.tau0`` and ``t = 0`` shows up as a crossing.
    """
    S, B, M = inst.S, inst.B, inst.M
    n = inst.n
    tau = inst.tau0
    R = M + tau * B
    Bh = func_calc_hermitian(B, "sqrt", tol)
    K = Bh @ np.linalg.solve(R, Bh)
    dec = eig_hermitian((K + K.conj().T) / 2, tol)
    lam = dec.eigenvalues
    cut = tol.tol_rank_rel * n * dec.norm
    nz = lam[np.abs(lam) > cut]
    crossings = _merge_times(tau - 1.0 / nz, tol) if nz.size else []

    singular_M = kernel_dim(M, tol)
    if singular_M:
        k = int(np.argmin([abs(t) for t, _ in crossings]))
        crossings[k] = (0.0, crossings[k][1])

    for t, m in crossings:
        kd = kernel_dim(M + t * B, tol, scale=opnorm(M) + abs(t) * opnorm(B))
        if kd != m:
            raise ConsistencyError(
                f"crossing at t={t:.12g} has multiplicity {m} but dim ker(S+A+tB) = {kd}"
            )

    times = np.array([t for t, _ in crossings], dtype=float)
    ref_rank = _neg_rank(S, tol, on_collision="exclude")
    plateaus = [_neg_rank(M + t * B, tol) - ref_rank for t in _sample_points(times, tau)]
    for (t, m), left, right in zip(crossings, plateaus[:-1], plateaus[1:]):
        if right - left != -m:
            raise ConsistencyError(
                f"plateau jump {right - left} at t={t:.12g} does not match multiplicity {m}"
            )
    base = _neg_rank(M, tol, on_collision="exclude") - ref_rank
    return CrossingProfile(tuple(crossings), tuple(plateaus), base, tau)


def cauchy_sum(edges: Sequence[float], values: Sequence[float]) -> float:
    """``(1/pi) * sum_i values[i] * (atan(edges[i+1]) - atan(edges[i]))``."""
    atans = [math.atan(e) for e in edges]
    total = 0.0
    for v, a, b in zip(values, atans[:-1], atans[1:]):
        total += v * (b - a)
    return total / math.pi


def cauchy_average(profile: CrossingProfile) -> float:
    """Exact Cauchy average of the step function described by ``profile``."""
    return cauchy_sum(profile.edges(), profile.plateaus)


# --------------------------------------------------------------------------
# trindex identity and scattering determinant
# --------------------------------------------------------------------------


def trindex_xi_pair(inst: FlowInstance, tol: Tolerances = DEFAULT_TOL) -> float:
    """``trindex(Xi(S + A + iB), Xi(S))``; requires ``S`` invertible."""
    X = xi_operator(inst.M + 1j * inst.B, tol)
    P0 = spectral_projection(inst.S, Interval.negative(), tol)
    return trindex(X, P0, tol=tol)


def verify_ttr8(inst: FlowInstance, tol: Tolerances = DEFAULT_TOL, profile=None) -> Check:
    """Compare the trindex of the Xi pair with the Cauchy average of n(t).

    Raises ``HypothesisViolation`` when ``S + A`` itself is singular (a
    crossing at ``t = 0``).
    """
    if not _is_invertible(inst.M, tol):
        raise HypothesisViolation("S + A is singular: crossing at t = 0")
    lhs = trindex_xi_pair(inst, tol)
    if profile is None:
        profile = crossing_profile(inst, tol)
    rhs = cauchy_average(profile)
    return Check("ttr8", "trindex vs Cauchy average", ANCHORS["ttr8"], abs(lhs - rhs), 1e-8 * (1 + inst.n), lhs)


@dataclass(frozen=True)
class BirmanKreinResult:
    smatrix: np.ndarray
    det: complex
    trindex: float
    residual: float
    unitarity_defect: float


def birman_krein(inst: FlowInstance, tol: Tolerances = DEFAULT_TOL) -> BirmanKreinResult:
    """Scattering matrix ``I - 2i B^{1/2} (S + A + iB)^{-1} B^{1/2}`` and its determinant."""
    n = inst.n
    Bh = func_calc_hermitian(inst.B, "sqrt", tol)
    T = inst.M + 1j * inst.B
    try:
        smat = np.eye(n) - 2j * Bh @ np.linalg.solve(T, Bh)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError("S + A + iB is singular") from exc
    det = determinant(smat)
    ti = trindex_xi_pair(inst, tol)
    residual = abs(det - np.exp(-2j * math.pi * ti))
    unitarity = opnorm(smat.conj().T @ smat - np.eye(n))
    return BirmanKreinResult(smat, det, ti, float(residual), unitarity)


# --------------------------------------------------------------------------
# trace formulas for S + zB
# --------------------------------------------------------------------------


def _s_b(S, B, tol):
    S = as_hermitian(S, tol, "S")
    B = as_hermitian(B, tol, "B")
    B = psd_part(B, tol, scale=max(1.0, opnorm(S), opnorm(B)))
    return S, B


def log_trace_formula(S, B, z, tol: Tolerances = DEFAULT_TOL):
    """Both sides of ``trace(log(S+zB) - log S) = sum_k m_k Log(1 + z lam_k)``.

    ``lam_k`` are the eigenvalues of ``B^{1/2} S^{-1} B^{1/2}``. For real
    ``z`` the segment ``S + tau z B``, ``tau in [0, 1]``, must stay invertible;
    otherwise ``AdmissibilityError`` names the blocking ``tau``.

    Returns ``(lhs, rhs)`` as complex numbers.
    """
    S, B = _s_b(S, B, tol)
    z = complex(z)
    if z.imag < 0:
        raise AdmissibilityError(f"z = {z} is not in the closed upper half-plane")
    if not _is_invertible(S, tol):
        raise SingularMatrixError("S must be invertible")
    if z.imag == 0 and z.real != 0:
        prof = crossing_profile(FlowInstance(S, np.zeros_like(S), B, 0.0), tol)
        lo, hi = sorted((0.0, z.real))
        for t, _ in prof.crossings:
            if lo <= t <= hi:
                raise AdmissibilityError(
                    f"S + tau z B is singular at tau = {t / z.real:.12g}", blocking=t / z.real
                )
    if z == 0:
        return 0j, 0j
    lhs = complex(np.trace(log_dissipative(S + z * B, tol=tol) - log_dissipative(S, tol=tol)))
    Bh = func_calc_hermitian(B, "sqrt", tol)
    K = Bh @ np.linalg.solve(S, Bh)
    lam = np.linalg.eigvalsh((K + K.conj().T) / 2)
    rhs = complex(np.sum(np.log(1 + z * lam.astype(complex))))
    return lhs, rhs


def arctan_log_identity(S, B, tol: Tolerances = DEFAULT_TOL):
    """``(trace(Im log(S+iB) - Im log S), trace arctan(B^{1/2} S^{-1} B^{1/2}))`` for invertible ``S``."""
    S, B = _s_b(S, B, tol)
    if not _is_invertible(S, tol):
        raise SingularMatrixError("S must be invertible")
    L1 = log_dissipative(S + 1j * B, tol=tol)
    L0 = log_dissipative(S, tol=tol)
    lhs = float(np.trace(im_part(L1) - im_part(L0)).real)
    Bh = func_calc_hermitian(B, "sqrt", tol)
    rhs = float(np.trace(func_calc_hermitian(Bh @ np.linalg.solve(S, Bh), "arctan", tol)).real)
    return lhs, rhs


def _limit_spectrum(S, B, tol):
    """Limit eigenvalues of ``B^{1/2} (S + eps B)^{-1} B^{1/2}`` as eps -> 0, and dim ker S.

    Computed from one invertible reference ``S + d*B`` by the Moebius map
    ``lam = mu / (1 - mu d)``; the ``dim ker S`` eigenvalues equal to ``1/d``
    drop out.
    """
    n = S.shape[0]
    kdim = kernel_dim(S, tol)
    d = _find_reference(S, B, tol) if kdim else 0.0
    if d == 0.0 and kdim == 0:
        Bh = func_calc_hermitian(B, "sqrt", tol)
        K = Bh @ np.linalg.solve(S, Bh)
        return np.linalg.eigvalsh((K + K.conj().T) / 2), 0
    Bh = func_calc_hermitian(B, "sqrt", tol)
    K = Bh @ np.linalg.solve(S + d * B, Bh)
    mu = np.linalg.eigvalsh((K + K.conj().T) / 2)
    order = np.argsort(np.abs(mu - 1.0 / d))
    pinned, rest = mu[order[:kdim]], mu[order[kdim:]]
    if np.any(np.abs(pinned - 1.0 / d) > 1e-6 * abs(1.0 / d)):
        raise ConsistencyError(f"expected {kdim} eigenvalues at 1/d = {1 / d:.6g}, got {pinned}")
    assert rest.size == n - kdim
    return rest / (1.0 - rest * d), kdim


def arctan_trace(S, B, eps: float, tol: Tolerances = DEFAULT_TOL):
    """``(trace arctan(B^{1/2} (S + eps B)^{-1} B^{1/2}), sum_k arctan lam_k + (pi/2) dim ker S)``.

    ``S`` may be singular; the second value is the ``eps -> 0+`` limit.
    """
    S, B = _s_b(S, B, tol)
    R = S + eps * B
    if not _is_invertible(R, tol):
        raise AdmissibilityError(f"S + eps B is singular at eps = {eps!r}")
    Bh = func_calc_hermitian(B, "sqrt", tol)
    lhs = float(np.trace(func_calc_hermitian(Bh @ np.linalg.solve(R, Bh), "arctan", tol)).real)
    lam, kdim = _limit_spectrum(S, B, tol)
    rhs = float(np.sum(np.arctan(lam)) + 0.5 * math.pi * kdim)
    return lhs, rhs


@dataclass(frozen=True)
class ArctanTrend:
    eps: Tuple[float, ...]
    residuals: Tuple[float, ...]
    c_instance: float

    @property
    def decreasing(self):
        r = self.residuals
        return all(b < a for a, b in zip(r[:-1], r[1:]))

    def within_bound(self, factor=10.0):
        return all(r <= factor * e * self.c_instance for e, r in zip(self.eps, self.residuals))


def arctan_trend(S, B, eps_seq=(1e-2, 1e-3, 1e-4), tol: Tolerances = DEFAULT_TOL) -> ArctanTrend:
    """Residual of ``arctan_trace`` along a decreasing eps sequence.

    ``c_instance = dim ker S + sum_k lam_k^2`` sets the scale of the O(eps) error.
    """
    S, B = _s_b(S, B, tol)
    lam, kdim = _limit_spectrum(S, B, tol)
    res = []
    for eps in eps_seq:
        lhs, rhs = arctan_trace(S, B, eps, tol)
        res.append(abs(lhs - rhs))
    return ArctanTrend(tuple(eps_seq), tuple(res), float(kdim + np.sum(lam ** 2)))


def crossing_count_formula(S, B, t: float, tol: Tolerances = DEFAULT_TOL):
    """Two evaluations of ``trace(Xi(S + tB) - Xi(S))``.

    Returns ``(by_projections, by_crossings)``. The first counts negative
    eigenvalues directly. The second is ``-(sum of crossing multiplicities in (0, t])``
    for ``t > 0`` and ``+(sum over (t, 0])`` for ``t < 0``.
    """
    inst = FlowInstance.build(S, None, B, tol)
    by_proj = _neg_rank(inst.S + t * inst.B, tol) - _neg_rank(inst.S, tol, on_collision="exclude")
    prof = crossing_profile(inst, tol)
    if t > 0:
        by_cross = -sum(m for s, m in prof.crossings if 0 < s <= t)
    elif t < 0:
        by_cross = sum(m for s, m in prof.crossings if t < s <= 0)
    else:
        by_cross = 0
    return by_proj, by_cross


def signature_special_case(A, B, sign: int = 1, tol: Tolerances = DEFAULT_TOL):
    """``S = +I`` or ``S = -I``: trace of the Xi operator against eigenvalue counts of ``A + tB``.

    For ``sign=+1`` returns ``(trace Xi(I + A + iB), avg of rank E_{A+tB}((-inf, -1)))``.
    For ``sign=-1`` returns ``(trace(Xi(-I + A + iB) - I), -avg of rank E_{A+tB}([1, inf)))``.
    Breakpoints come from the crossing machinery; the counts are taken directly.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    A = as_hermitian(A, tol, "A")
    n = A.shape[0]
    I = np.eye(n)
    inst = FlowInstance.build(sign * I, A, B, tol)
    X = xi_operator(inst.M + 1j * inst.B, tol)
    prof = crossing_profile(inst, tol)
    if sign == 1:
        lhs = float(np.trace(X).real)
        iv = Interval(-math.inf, -1.0)
        counts = [spectral_projection(inst.A + t * inst.B, iv, tol).rank for t in prof.sample_points()]
        rhs = cauchy_sum(prof.edges(), counts)
    else:
        lhs = float(np.trace(X - I).real)
        iv = Interval(1.0, math.inf, lo_closed=True)
        counts = [spectral_projection(inst.A + t * inst.B, iv, tol).rank for t in prof.sample_points()]
        rhs = -cauchy_sum(prof.edges(), counts)
    return lhs, rhs


def gtr_cauchy_average(S, A1, B1, A2, B2, tol: Tolerances = DEFAULT_TOL):
    """``gtr(Xi(S+A1+iB1), Xi(S+A2+iB2))`` and the Cauchy average of
    ``index(Xi(S+A1+tB1), Xi(S+A2+tB2))``, evaluated on the union of both
    crossing sets.
    """
    i1 = FlowInstance.build(S, A1, B1, tol)
    i2 = FlowInstance.build(S, A2, B2, tol)
    lhs = gtr(xi_operator(i1.M + 1j * i1.B, tol), xi_operator(i2.M + 1j * i2.B, tol), tol=tol)
    p1, p2 = crossing_profile(i1, tol), crossing_profile(i2, tol)
    times = np.array(sorted(set(p1.times.tolist()) | set(p2.times.tolist())), dtype=float)
    edges = np.concatenate([[-math.inf], times, [math.inf]])
    values = []
    for t in _sample_points(times):
        P1 = spectral_projection(i1.M + t * i1.B, Interval.negative(), tol)
        P2 = spectral_projection(i2.M + t * i2.B, Interval.negative(), tol)
        values.append(index_pair(P1, P2, tol))
    return lhs, cauchy_sum(edges, values)


def commutator_diagnostic(S, A, tol: Tolerances = DEFAULT_TOL):
    """First-order term of ``Xi(S + A) - Xi(S)`` for a signature matrix ``S``.

    Returns ``(first_order, remainder)`` where ``first_order = -S[S, A]/4``
    and ``remainder`` is the trace norm of what is left over, which is
    ``O(|A|^2)``.
    """
    S = as_hermitian(S, tol, "S")
    A = as_hermitian(A, tol, "A")
    n = S.shape[0]
    if opnorm(S @ S - np.eye(n)) > tol.tol_proj:
        raise ValueError("S is not a signature matrix (S^2 != I)")
    first = -0.25 * S @ (S @ A - A @ S)
    diff = xi_operator(S + A, tol) - xi_operator(S, tol)
    return first, schatten_norm(diff - first, 1)
