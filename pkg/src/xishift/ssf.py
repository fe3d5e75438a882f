"""Spectral shift function of a Hermitian pair and its Xi-operator representations.

Convention: ``xi(lam) = N_{H0}(lam) - N_H(lam)`` with ``N_X(lam)`` the number
of eigenvalues of ``X`` strictly below ``lam`` and ``H = H0 + V``. Then
``trace(f(H) - f(H0)) = int xi(lam) f'(lam) dlam``.

With ``V = K J K`` (``K = |V|^{1/2}``, ``J = sgn V``) and
``R = (H0 - lam - i eps)^{-1}``, the matrix ``Phi = J + K R K`` is dissipative
and ``trindex(Xi(Phi), E_J((-inf, 0)))`` equals the Poisson smoothing of
``xi`` at ``(lam, eps)``; at ``eps = 0`` it equals ``xi(lam)`` itself.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from .errors import ConsistencyError, EndpointCollisionError, HypothesisViolation
from .matcore import (
    DEFAULT_TOL,
    Interval,
    Tolerances,
    as_hermitian,
    eig_hermitian,
    opnorm,
    spectral_projection,
)
from .oplog import xi_operator
from .pairindex import trindex
from .spectralflow import FlowInstance, _sample_points, cauchy_average, cauchy_sum, crossing_profile

log = logging.getLogger(__name__)

__all__ = [
    "PerturbationPair",
    "StepFunction",
    "ssf_exact",
    "factor_sign",
    "phi_boundary",
    "ssf_trindex_rep",
    "ssf_averaged_rep",
    "poisson_check",
    "gap_formulas",
    "generalized_ssf_pair",
    "generalized_ssf_zero_minus",
    "generalized_bs",
    "krein_residual",
    "ssf_table",
    "ssf_row",
    "nudge_off_spectrum",
    "SsfReport",
    "ANCHORS",
]

# relative half-width of the window around an eigenvalue that a grid point is moved out of
NUDGE_TOL = 5e-8

KREIN_POINTS = (1j, 1 + 2j, -0.5 + 0.3j)

ANCHORS = {
    "krein": "trace((H-z)^-1 - (H0-z)^-1) = int xi(lam) d/dlam (lam-z)^-1",
    "poisson": "trindex(Xi(J + K R(lam+i eps) K), E_J) = Poisson smoothing of xi",
    "gap": "xi(lam) = Birman-Schwinger count in a spectral gap",
    "sobolev": "xi(lam) = +-rank E((1, inf)) of the sandwiched resolvent for sign-definite V",
    "gbs": "trindex(Xi(Phi), E_J) = Cauchy average of the generalized SSF at 0-",
    "averaged": "trindex(Xi(Phi), E_J) = Cauchy average of index(Xi(J + A + tB), E_J)",
}


@dataclass(frozen=True)
class StepFunction:
    """Piecewise constant function, zero outside ``[breaks[0], breaks[-1]]``.

    ``values[i]`` holds on ``(breaks[i-1], breaks[i])``; ``values[0]`` and
    ``values[-1]`` are the outer (zero) pieces.
    """

    breaks: np.ndarray
    values: np.ndarray

    def __call__(self, lam: float) -> int:
        # strict counting: at a break the left value applies
        return int(self.values[np.searchsorted(self.breaks, lam, side="left")])

    def pieces(self):
        for i in range(1, len(self.breaks)):
            yield self.breaks[i - 1], self.breaks[i], int(self.values[i])

    def poisson(self, lam: float, eps: float) -> float:
        """``(1/pi) int xi(x) eps / ((x - lam)^2 + eps^2) dx``."""
        if eps <= 0:
            raise ValueError("eps must be positive")
        total = 0.0
        for a, b, c in self.pieces():
            if c:
                total += c * (math.atan((b - lam) / eps) - math.atan((a - lam) / eps))
        return total / math.pi

    def krein_integral(self, z: complex) -> complex:
        """``int xi(lam) d/dlam (lam - z)^{-1} dlam``."""
        total = 0j
        for a, b, c in self.pieces():
            if c:
                total += c * (1.0 / (b - z) - 1.0 / (a - z))
        return total


def _merge_points(x, gap):
    out = []
    for v in np.sort(x):
        if not out or v - out[-1] > gap:
            out.append(float(v))
    return np.array(out)


@dataclass(frozen=True)
class PerturbationPair:
    """``H0`` and ``V`` Hermitian; ``H = H0 + V``. Built through ``build``,
    which also checks the resolvent trace formula once."""

    H0: np.ndarray
    V: np.ndarray
    eig_H0: np.ndarray
    eig_H: np.ndarray
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def build(cls, H0, V, tol: Tolerances = DEFAULT_TOL, check_krein: bool = True):
        H0 = as_hermitian(H0, tol, "H0")
        V = as_hermitian(V, tol, "V")
        if H0.shape != V.shape:
            raise ValueError(f"shape mismatch: {H0.shape} vs {V.shape}")
        pair = cls(H0, V, np.linalg.eigvalsh(H0), np.linalg.eigvalsh(H0 + V))
        if check_krein:
            res = krein_residual(pair)
            if res > 1e-9:
                raise ConsistencyError(f"resolvent trace formula fails: residual {res:.3e}")
        return pair

    @property
    def H(self):
        return self.H0 + self.V

    @property
    def n(self):
        return self.H0.shape[0]

    @property
    def scale(self):
        return max(1.0, opnorm(self.H0), opnorm(self.V))

    def xi(self) -> StepFunction:
        if "xi" not in self._cache:
            self._cache["xi"] = ssf_exact(self)
        return self._cache["xi"]

    def factors(self, tol: Tolerances = DEFAULT_TOL):
        if "factors" not in self._cache:
            self._cache["factors"] = factor_sign(self.V, tol)
        return self._cache["factors"]


def ssf_exact(pair: PerturbationPair, lam: float | None = None, tol: Tolerances = DEFAULT_TOL):
    """Exact step function from the two eigenvalue lists, or its value at ``lam``.

    A scalar ``lam`` within ``tol_eig * scale`` of an eigenvalue of ``H0`` or
    ``H`` raises ``EndpointCollisionError``; offset ``lam`` to one side.
    """
    if lam is not None:
        spec = np.concatenate([pair.eig_H0, pair.eig_H])
        k = int(np.argmin(np.abs(spec - lam)))
        if abs(spec[k] - lam) <= tol.tol_eig * pair.scale:
            raise EndpointCollisionError(
                f"lam = {lam!r} is a jump of xi (eigenvalue {spec[k]:.12g}); offset lam to either side",
                eigenvalue=float(spec[k]),
                endpoint=float(lam),
            )
        return int(np.count_nonzero(pair.eig_H0 < lam) - np.count_nonzero(pair.eig_H < lam))
    pts = np.concatenate([pair.eig_H0, pair.eig_H])
    breaks = _merge_points(pts, tol.cluster_gap * pair.scale)
    if breaks.size == 0:
        return StepFunction(breaks, np.zeros(1, dtype=int))
    probes = np.concatenate([[breaks[0] - 1], (breaks[:-1] + breaks[1:]) / 2, [breaks[-1] + 1]])
    vals = np.array(
        [np.count_nonzero(pair.eig_H0 < p) - np.count_nonzero(pair.eig_H < p) for p in probes]
    )
    return StepFunction(breaks, vals)


def krein_residual(pair: PerturbationPair, zs: Sequence[complex] | None = None) -> float:
    """Largest relative residual of the resolvent trace formula over ``zs``."""
    xi = ssf_exact(pair)
    if zs is None:
        zs = KREIN_POINTS
    I = np.eye(pair.n)
    worst = 0.0
    for z in zs:
        lhs = np.trace(np.linalg.inv(pair.H - z * I) - np.linalg.inv(pair.H0 - z * I))
        rhs = xi.krein_integral(z)
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs)))
    return float(worst)


def factor_sign(V, tol: Tolerances = DEFAULT_TOL):
    """``V = K J K`` with ``K = |V|^{1/2}``, ``J = sgn V`` (``+1`` on ker V).

    Returns ``(K, J, n_neg)`` with ``n_neg`` the number of negative eigenvalues.
    """
    dec = eig_hermitian(as_hermitian(V, tol, "V"), tol)
    d, U = dec.eigenvalues, dec.eigenvectors
    thresh = tol.tol_eig * max(1.0, dec.norm)
    d = np.where(np.abs(d) <= thresh, 0.0, d)
    sgn = np.where(d < 0, -1.0, 1.0)
    K = (U * np.sqrt(np.abs(d))) @ U.conj().T
    J = (U * sgn) @ U.conj().T
    return (K + K.conj().T) / 2, (J + J.conj().T) / 2, int(np.count_nonzero(d < 0))


def phi_boundary(pair: PerturbationPair, lam: float, eps: float, tol: Tolerances = DEFAULT_TOL):
    """``(Phi, A, B)`` with ``Phi = J + K (H0 - lam - i eps)^{-1} K = J + A + iB``.

    At ``eps = 0``, ``B`` is exactly zero and ``lam`` must avoid the spectrum of ``H0``.
    """
    if eps < 0:
        raise ValueError("eps must be non-negative")
    K, J, _ = pair.factors(tol)
    if eps == 0:
        gap = np.min(np.abs(pair.eig_H0 - lam))
        if gap <= tol.tol_eig * pair.scale:
            raise EndpointCollisionError(
                f"lam = {lam!r} is an eigenvalue of H0", eigenvalue=float(lam), endpoint=float(lam)
            )
    I = np.eye(pair.n)
    KRK = K @ np.linalg.solve(pair.H0 - (lam + 1j * eps) * I, K)
    A = (KRK + KRK.conj().T) / 2
    B = (KRK - KRK.conj().T) / 2j
    B = (B + B.conj().T) / 2
    if eps == 0:
        B = np.zeros_like(B)
        return J + A, A, B
    return J + A + 1j * B, A, B


def ssf_trindex_rep(pair: PerturbationPair, lam: float, eps: float, tol: Tolerances = DEFAULT_TOL) -> float:
    """``trindex(Xi(Phi(lam + i eps)), E_J((-inf, 0)))``."""
    Phi, _, _ = phi_boundary(pair, lam, eps, tol)
    _, J, _ = pair.factors(tol)
    EJ = spectral_projection(J, Interval.negative(), tol)
    return trindex(xi_operator(Phi, tol), EJ, tol=tol)


def ssf_averaged_rep(pair: PerturbationPair, lam: float, eps: float, tol: Tolerances = DEFAULT_TOL) -> float:
    """Cauchy average of ``index(Xi(J + A + tB), E_J)`` with ``A + iB = K R K``."""
    _, A, B = phi_boundary(pair, lam, eps, tol)
    _, J, _ = pair.factors(tol)
    inst = FlowInstance.build(J, A, B, tol)
    return cauchy_average(crossing_profile(inst, tol))


def poisson_check(pair: PerturbationPair, lam: float, eps: float, tol: Tolerances = DEFAULT_TOL):
    """``(lhs, rhs, residual)``: trindex representation against the Poisson smoothing of ``xi``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    lhs = ssf_trindex_rep(pair, lam, eps, tol)
    rhs = pair.xi().poisson(lam, eps)
    return lhs, rhs, abs(lhs - rhs)


def gap_formulas(pair: PerturbationPair, lam: float, tol: Tolerances = DEFAULT_TOL) -> dict:
    """Values of ``xi(lam)`` at a point off both spectra.

    Keys: ``exact``; ``birman_schwinger`` (negative eigenvalue count of
    ``J + K (H0 - lam)^{-1} K`` minus that of ``J``); ``trindex`` (the same
    through the Xi operator); ``sobolev`` (only for sign-definite ``V``:
    ``+rank E_{-A}((1, inf))`` for ``V >= 0``, ``-rank E_A((1, inf))`` for ``V <= 0``).
    """
    if np.min(np.abs(pair.eig_H - lam)) <= tol.tol_eig * pair.scale:
        raise EndpointCollisionError(f"lam = {lam!r} is an eigenvalue of H", eigenvalue=float(lam), endpoint=float(lam))
    Phi, A, _ = phi_boundary(pair, lam, 0.0, tol)
    _, _, n_neg = pair.factors(tol)
    out = {
        "exact": pair.xi()(lam),
        "birman_schwinger": spectral_projection(Phi, Interval.negative(), tol).rank - n_neg,
        "trindex": ssf_trindex_rep(pair, lam, 0.0, tol),
    }
    v = np.linalg.eigvalsh(pair.V)
    thresh = tol.tol_eig * pair.scale
    above = Interval(1.0, math.inf)
    if np.all(v >= -thresh):
        out["sobolev"] = spectral_projection(-A, above, tol).rank
    elif np.all(v <= thresh):
        out["sobolev"] = -spectral_projection(A, above, tol).rank
    return out


def generalized_ssf_pair(S, A, lam: float, tol: Tolerances = DEFAULT_TOL) -> int:
    """``N_{S+A}(lam) - N_S(lam)``: strict eigenvalue counts below ``lam``."""
    S = as_hermitian(S, tol, "S")
    A = as_hermitian(A, tol, "A")
    return int(np.count_nonzero(np.linalg.eigvalsh(S + A) < lam) - np.count_nonzero(np.linalg.eigvalsh(S) < lam))


def generalized_ssf_zero_minus(S, A, tol: Tolerances = DEFAULT_TOL) -> int:
    """``generalized_ssf_pair`` at ``0-``, i.e. at a small negative offset.

    The offset starts at ``1e-6 * (1 + |S + A|)`` and is halved while an
    eigenvalue of ``S`` or ``S + A`` sits in ``[-offset, 0)``. Once the window
    is empty the count below ``-offset`` equals the count below ``0-``. If
    the window cannot be cleared above ``tol_eig * (1 + |S + A|)``,
    ``HypothesisViolation`` is raised.
    """
    S = as_hermitian(S, tol, "S")
    A = as_hermitian(A, tol, "A")
    scale = 1.0 + opnorm(S + A)
    floor = tol.tol_eig * scale
    eigs = np.concatenate([np.linalg.eigvalsh(S), np.linalg.eigvalsh(S + A)])
    off = 1e-6 * scale
    while np.any((eigs >= -off) & (eigs < 0)):
        off /= 2
        if off < floor:
            raise HypothesisViolation("an eigenvalue sits just below 0; 0- cannot be resolved")
    return generalized_ssf_pair(S, A, -off, tol)


def generalized_bs(pair: PerturbationPair, lam: float, eps: float, tol: Tolerances = DEFAULT_TOL):
    """``(lhs, rhs, residual)``: ``trindex(Xi(Phi), E_J)`` against the Cauchy
    average over ``t`` of the generalized SSF of ``(J + A + tB, J)`` at ``0-``."""
    lhs = ssf_trindex_rep(pair, lam, eps, tol)
    _, A, B = phi_boundary(pair, lam, eps, tol)
    _, J, _ = pair.factors(tol)
    inst = FlowInstance.build(J, A, B, tol)
    prof = crossing_profile(inst, tol)
    vals = [generalized_ssf_zero_minus(J, A + t * inst.B, tol) for t in _sample_points(prof.times, prof.reference)]
    rhs = cauchy_sum(prof.edges(), vals)
    return lhs, rhs, abs(lhs - rhs)


def nudge_off_spectrum(pair: PerturbationPair, lam: float, tol: Tolerances = DEFAULT_TOL):
    """Move ``lam`` by ``+2 * NUDGE_TOL * scale`` while it is within
    ``NUDGE_TOL * scale`` of an eigenvalue of ``H0`` or ``H``.

    Returns ``(new_lam, moved)``.
    """
    spec = np.concatenate([pair.eig_H0, pair.eig_H])
    guard = NUDGE_TOL * pair.scale
    step = 2 * guard
    new = float(lam)
    while np.min(np.abs(spec - new)) <= guard:
        new += step
    return new, new != lam


@dataclass
class SsfReport:
    """Wide table: ``lambda``, ``xi_exact`` and, per eps, the target value
    (``xi`` itself at eps = 0, its Poisson smoothing otherwise), both Xi
    representations and the larger of their residuals."""

    eps: Tuple[float, ...]
    rows: List[list]
    nudged: List[Tuple[float, float]]

    @property
    def columns(self):
        cols = ["lambda", "xi_exact"]
        for e in self.eps:
            tag = f"eps={e!r}"
            cols += [f"target[{tag}]", f"trindex[{tag}]", f"averaged[{tag}]", f"residual[{tag}]"]
        return cols

    def as_dicts(self):
        return [dict(zip(self.columns, r)) for r in self.rows]

    @property
    def max_residual(self):
        k = len(self.columns)
        res = [r[i] for r in self.rows for i in range(5, k, 4)]
        return max(res, default=0.0)


def ssf_row(pair: PerturbationPair, lam: float, eps_list: Sequence[float], tol: Tolerances = DEFAULT_TOL):
    xi = pair.xi()
    row = [float(lam), xi(lam)]
    for eps in eps_list:
        target = float(xi(lam)) if eps == 0 else xi.poisson(lam, eps)
        tr = ssf_trindex_rep(pair, lam, eps, tol)
        av = ssf_averaged_rep(pair, lam, eps, tol)
        res = max(abs(tr - target), abs(av - target))
        if eps == 0:
            target, tr, av = int(target), rounded(tr), rounded(av)
        row += [target, tr, av, res]
    return row


def rounded(v: float, guard: float = 1e-6):
    """Nearest integer when ``v`` is within ``guard`` of it, else ``v`` unchanged."""
    k = round(v)
    return int(k) if abs(v - k) <= guard else v


def ssf_table(pair: PerturbationPair, grid: Sequence[float], eps_list: Sequence[float],
              tol: Tolerances = DEFAULT_TOL, mapper=map) -> SsfReport:
    """Evaluate every representation on ``grid``.

    With ``0`` in ``eps_list``, grid points on the spectrum of ``H0`` or ``H``
    are nudged off it (recorded in ``nudged``). ``mapper`` may be a
    concurrent ``map``; row order follows ``grid`` either way.
    """
    eps_list = tuple(float(e) for e in eps_list)
    nudged, pts = [], []
    for lam in grid:
        lam = float(lam)
        if 0.0 in eps_list:
            new, moved = nudge_off_spectrum(pair, lam, tol)
            if moved:
                nudged.append((lam, new))
                log.info("grid point %.17g collides with the spectrum; moved to %.17g", lam, new)
            lam = new
        pts.append(lam)
    pair.xi()
    pair.factors(tol)
    rows = list(mapper(lambda l: ssf_row(pair, l, eps_list, tol), pts))
    return SsfReport(eps_list, rows, nudged)
