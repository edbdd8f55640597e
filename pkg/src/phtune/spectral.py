"""Spectral analysis of the closed-loop saddle matrix.

For a saddle matrix ``N = [[X, Z^T], [-Z, 0]]`` with X symmetric positive
(semi-)definite and Z square full rank, every eigenpair ``(lam, (v, w))``
satisfies the quadratic

    lam^2 - (v* X v / v* v) lam + (v* Z^T Z v / v* v) = 0,

so each eigenvalue is real exactly when the discriminant of that quadratic is
non-negative, real parts of complex eigenvalues live in
``[lam_min(X)/2, lam_max(X)/2]``, and real eigenvalues in
``[min(lam_min(X), lam_min(Z X^-1 Z^T)), lam_max(X)]``.  Expressed through
the closed-loop blocks (R, P, W) this yields three tuning rules:

* no overshoot: ``4 lam_max(P) lam_max(W) <= lam_min(R)^2`` forces a purely
  real spectrum (equality is the critically damped edge);
* damping band: the squared damping ratio of every eigenvalue is bounded by
  ``lam_min(R)^2 / (4 lam_max(W) lam_max(P))`` from below and
  ``lam_max(R)^2 / (4 lam_min(W) lam_min(P))`` from above (clipped to [0, 1]);
* rise time: the slowest decay rate is at least ``re_lambda_u`` given by a
  scenario case split, and all outputs reach 98% of their step within
  ``t_ru = 4 / re_lambda_u``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .saddleform import build_saddle_matrix, cholesky_factors

# Eigenvalues of N below this magnitude are marginal: excluded from
# damping-ratio lists since the ratio is numerically meaningless there.
MARGINAL_EIG_TOL = 1e-12

Matrix = np.ndarray


class Scenario(Enum):
    """Spectrum classes selecting the rise-time case: all real, all complex, mixed."""

    S1 = "S1"
    S2 = "S2"
    S3 = "S3"


class NoOvershootResult(NamedTuple):
    satisfied: bool
    margin: float


@dataclass(frozen=True)
class EigenvalueBounds:
    """Real-part band for complex eigenvalues and range for real ones.

    ``advisory`` is set when X was singular and the lower real bound had to
    use the pseudo-inverse.
    """

    complex_re_lo: float
    complex_re_hi: float
    real_lo: float
    real_hi: float
    advisory: bool = False


@dataclass(frozen=True)
class RiseTimeBound:
    """Decay-rate lower bound and the matching 98% rise-time upper bound."""

    re_lambda_u: float
    t_ru: float
    used_fallback: bool = False


@dataclass(frozen=True)
class SpectralReport:
    """Everything the tuning rules say about one (R, P, W) triple.

    Sign convention: ``eigenvalues`` are those of the saddle matrix N, which
    lie in the closed right half-plane; the closed-loop poles are their
    negatives.  A real, non-negative saddle spectrum therefore means real,
    non-positive poles, i.e. no oscillation.
    """

    eigenvalues: np.ndarray
    damping_ratios: np.ndarray
    scenario: Scenario
    no_overshoot_satisfied: bool
    no_overshoot_margin: float
    zeta_min: float
    zeta_max: float
    re_lambda_u: float
    t_ru: float
    rise_fallback: bool
    im_tol: float


def _sym_eigvals(A: Matrix, name: str) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if not np.allclose(A, A.T, atol=1e-10 * (1.0 + np.abs(A).max())):
        raise ValueError(f"{name} must be symmetric")
    return np.linalg.eigvalsh(A)


def eigen_saddle(N: Matrix, with_vectors: bool = False):
    """Eigenvalues of a saddle matrix, sorted by (real, imag).

    With ``with_vectors=True`` also returns the matching eigenvector columns.
    LAPACK non-convergence propagates as ``LinAlgError``.
    """
    N = np.atleast_2d(np.asarray(N, dtype=float))
    if not np.all(np.isfinite(N)):
        raise ValueError("matrix entries must be finite")
    vals, vecs = scipy.linalg.eig(N)
    order = np.lexsort((vals.imag, vals.real))
    if with_vectors:
        return vals[order], vecs[:, order]
    return vals[order]


def reality_test(X: Matrix, Z: Matrix, v: np.ndarray) -> bool:
    """Eigenvector-wise criterion for a real eigenvalue of the saddle matrix.

    ``v`` is the upper block of an eigenvector of N; the eigenvalue it
    belongs to is real if and only if ``(v*Xv / v*v)^2 >= 4 v*(Z^T Z)v / v*v``
    (equality at critical damping).
    """
    v = np.atleast_1d(np.asarray(v, dtype=complex))
    vv = np.vdot(v, v).real
    if vv == 0.0:
        raise ValueError("eigenvector block must be nonzero")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    x_form = np.vdot(v, X @ v).real / vv
    z_form = np.vdot(v, Z.T @ (Z @ v)).real / vv
    return bool(x_form**2 >= 4.0 * z_form)


def eigenvalue_bounds(X: Matrix, Z: Matrix) -> EigenvalueBounds:
    """Spectrum bands of the saddle matrix from its X and Z blocks alone."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    ew = _sym_eigvals(X, "X")
    lam_min_x, lam_max_x = float(ew[0]), float(ew[-1])
    advisory = lam_min_x <= 1e-12 * max(1.0, abs(lam_max_x))
    if advisory:
        S = Z @ np.linalg.pinv(X) @ Z.T
    else:
        S = Z @ np.linalg.solve(X, Z.T)
    lam_min_s = float(np.linalg.eigvalsh(0.5 * (S + S.T))[0])
    return EigenvalueBounds(
        complex_re_lo=0.5 * lam_min_x,
        complex_re_hi=0.5 * lam_max_x,
        real_lo=min(lam_min_x, lam_min_s),
        real_hi=lam_max_x,
        advisory=advisory,
    )


def no_overshoot_check(R: Matrix, P: Matrix, W: Matrix) -> NoOvershootResult:
    """Sufficient condition for an all-real (oscillation-free) spectrum.

    ``margin = lam_min(R)^2 - 4 lam_max(P) lam_max(W)``; non-negative margin
    guarantees reality, zero margin is the critically damped edge.  The
    converse does not hold: a negative margin proves nothing.
    """
    lam_min_r = _sym_eigvals(R, "R")[0]
    margin = float(lam_min_r**2 - 4.0 * _sym_eigvals(P, "P")[-1] * _sym_eigvals(W, "W")[-1])
    return NoOvershootResult(satisfied=margin >= 0.0, margin=margin)


def damping_ratio(eig: complex) -> float:
    """Standard pole damping ratio ``|Re| / |eig|``, in [0, 1]."""
    eig = complex(eig)
    if eig == 0.0:
        raise ValueError("damping ratio is undefined for a zero eigenvalue")
    return abs(eig.real) / abs(eig)


def zeta_bounds(R: Matrix, P: Matrix, W: Matrix):
    """Bounds on the squared damping ratio of every saddle eigenvalue.

    Returns ``(zeta_min, zeta_max)`` with
    ``zeta_min = max(0, lam_min(R)^2 / (4 lam_max(W) lam_max(P)))`` and
    ``zeta_max = min(1, lam_max(R)^2 / (4 lam_min(W) lam_min(P)))``.
    """
    ew_r = _sym_eigvals(R, "R")
    ew_p = _sym_eigvals(P, "P")
    ew_w = _sym_eigvals(W, "W")
    if ew_p[0] <= 0.0:
        raise ValueError("P must be positive definite")
    if ew_w[0] <= 0.0:
        raise ValueError("W must be positive definite")
    zeta_min = max(0.0, 0.25 * ew_r[0] ** 2 / (ew_w[-1] * ew_p[-1]))
    zeta_max = min(1.0, 0.25 * ew_r[-1] ** 2 / (ew_w[0] * ew_p[0]))
    return float(zeta_min), float(zeta_max)


def classify_scenario(eigs, im_tol: float | None = None) -> Scenario:
    """S1 if every eigenvalue is real, S2 if none is, S3 otherwise.

    ``im_tol`` defaults to ``1e-7 * max|eig|``; "real" means the imaginary
    part does not exceed it.
    """
    eigs = np.atleast_1d(np.asarray(eigs, dtype=complex))
    if eigs.size == 0:
        raise ValueError("need at least one eigenvalue")
    if im_tol is None:
        im_tol = 1e-7 * float(np.max(np.abs(eigs)))
    real_mask = np.abs(eigs.imag) <= im_tol
    if real_mask.all():
        return Scenario.S1
    if not real_mask.any():
        return Scenario.S2
    return Scenario.S3


def rise_time_bound(R: Matrix, P: Matrix, W: Matrix, scenario: Scenario) -> RiseTimeBound:
    """Decay-rate lower bound by scenario, and ``t_ru = 4 / re_lambda_u``.

    Generalized eigenvalues ``lam_min(W^-1 R)`` and ``lam_min(R^-1 P)`` are
    solved from the symmetric-definite pencils (R, W) and (P, R) without
    forming inverses.  If R is singular in a scenario that needs the second
    pencil, the conservative ratio ``lam_min(P) / lam_max(R)`` is substituted
    and flagged via ``used_fallback``.
    """
    R = np.atleast_2d(np.asarray(R, dtype=float))
    P = np.atleast_2d(np.asarray(P, dtype=float))
    W = np.atleast_2d(np.asarray(W, dtype=float))
    scenario = Scenario(scenario)

    lam_wr = float(scipy.linalg.eigh(R, W, eigvals_only=True)[0])
    used_fallback = False
    lam_rp = None
    if scenario in (Scenario.S1, Scenario.S3):
        try:
            lam_rp = float(scipy.linalg.eigh(P, R, eigvals_only=True)[0])
        except (scipy.linalg.LinAlgError, np.linalg.LinAlgError):
            lam_rp = float(np.linalg.eigvalsh(P)[0] / np.linalg.eigvalsh(R)[-1])
            used_fallback = True

    if scenario is Scenario.S1:
        re_lambda_u = min(lam_wr, lam_rp)
    elif scenario is Scenario.S2:
        re_lambda_u = 0.5 * lam_wr
    else:
        re_lambda_u = min(0.5 * lam_wr, lam_rp)

    t_ru = 4.0 / re_lambda_u if re_lambda_u > 0.0 else float("inf")
    return RiseTimeBound(re_lambda_u=float(re_lambda_u), t_ru=float(t_ru), used_fallback=used_fallback)


def spectral_report(R: Matrix, P: Matrix, W: Matrix, im_tol: float | None = None) -> SpectralReport:
    """Run the full spectral pipeline on one (R, P, W) triple."""
    phiP, phiW = cholesky_factors(P, W)
    N = build_saddle_matrix(R, phiP, phiW)
    eigs = eigen_saddle(N)
    if im_tol is None:
        im_tol = 1e-7 * float(np.max(np.abs(eigs)))
    scenario = classify_scenario(eigs, im_tol)
    complex_mask = (np.abs(eigs.imag) > im_tol) & (np.abs(eigs) >= MARGINAL_EIG_TOL)
    ratios = np.array([damping_ratio(lam) for lam in eigs[complex_mask]])
    check = no_overshoot_check(R, P, W)
    zeta_min, zeta_max = zeta_bounds(R, P, W)
    rise = rise_time_bound(R, P, W, scenario)
    return SpectralReport(
        eigenvalues=eigs,
        damping_ratios=ratios,
        scenario=scenario,
        no_overshoot_satisfied=check.satisfied,
        no_overshoot_margin=check.margin,
        zeta_min=zeta_min,
        zeta_max=zeta_max,
        re_lambda_u=rise.re_lambda_u,
        t_ru=rise.t_ru,
        rise_fallback=rise.used_fallback,
        im_tol=float(im_tol),
    )
