"""Closed-loop linearization and its saddle-point normal form.

Feeding back the actuated velocities through a PID law with gains
``(Kp, Ki, Kd)`` and linearizing the loop at the rest target produces a drift
matrix whose spectrum equals minus the spectrum of the saddle matrix

    N = [[ phiW R phiW^T,  phiW phiP^T ],
         [ -phiP phiW^T,   0           ]]

built from three symmetric blocks evaluated at the target:

    R = D* + G Kp G^T          injected plus natural damping
    P = hess V* + G Ki G^T     stiffness of the shaped potential
    W = M* + G Kd G^T          effective inertia

and the Cholesky-derived factors ``phiP^T phiP = P``, ``phiW^T phiW = W^-1``.
All spectral tuning rules read off (R, P, W); this module builds the blocks,
the factors, the saddle matrix, the shaped-energy Hessian, and the linearized
drift, and exposes the similarity transform tying the last two together.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import AssumptionViolation
from .model import Equilibrium, MechanicalModel

Matrix = np.ndarray


def _symmetrize(A: Matrix) -> Matrix:
    return 0.5 * (A + A.T)


def _check_sym(A: Matrix, name: str) -> Matrix:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be square, got {A.shape}")
    if not np.allclose(A, A.T, atol=1e-10 * (1.0 + np.abs(A).max())):
        raise ValueError(f"{name} must be symmetric")
    return _symmetrize(A)


@dataclass(frozen=True)
class Gains:
    """PID gain triple with the admissibility invariants enforced.

    ``Kp`` and ``Ki`` must be symmetric positive definite, ``Kd`` symmetric
    positive semi-definite; all are ``(m, m)``.
    """

    Kp: Matrix
    Ki: Matrix
    Kd: Matrix

    def __post_init__(self):
        Kp = _check_sym(self.Kp, "Kp")
        Ki = _check_sym(self.Ki, "Ki")
        Kd = _check_sym(self.Kd, "Kd")
        if Kp.shape != Ki.shape or Kp.shape != Kd.shape:
            raise ValueError("Kp, Ki, Kd must share one shape")
        if np.linalg.eigvalsh(Kp)[0] <= 0.0:
            raise ValueError("Kp must be positive definite")
        if np.linalg.eigvalsh(Ki)[0] <= 0.0:
            raise ValueError("Ki must be positive definite")
        if np.linalg.eigvalsh(Kd)[0] < -1e-12 * max(1.0, np.abs(Kd).max()):
            raise ValueError("Kd must be positive semi-definite")
        object.__setattr__(self, "Kp", Kp)
        object.__setattr__(self, "Ki", Ki)
        object.__setattr__(self, "Kd", Kd)

    @property
    def m(self) -> int:
        return self.Kp.shape[0]

    @classmethod
    def from_diagonals(cls, kp, ki, kd=None) -> "Gains":
        """Build diagonal gain matrices from scalars or sequences."""
        kp = np.atleast_1d(np.asarray(kp, dtype=float))
        ki = np.broadcast_to(np.asarray(ki, dtype=float), kp.shape)
        kd = np.zeros_like(kp) if kd is None else np.broadcast_to(
            np.asarray(kd, dtype=float), kp.shape
        )
        return cls(np.diag(kp), np.diag(ki), np.diag(kd))


@dataclass(frozen=True)
class SaddleForm:
    """The block triple, its factors, the saddle matrix and the transform."""

    R: Matrix
    P: Matrix
    W: Matrix
    phiP: Matrix
    phiW: Matrix
    N: Matrix
    T: Matrix


def build_rpw(model: MechanicalModel, gains: Gains, eq: Equilibrium):
    """Evaluate the (R, P, W) blocks at the rest target.

    Raises
    ------
    AssumptionViolation
        If P or W is not positive definite, i.e. the shaped energy has no
        isolated minimum at the target and no guarantee downstream applies.
    """
    G = model.input_matrix
    q, zero_p = eq.q_star, np.zeros(model.n)
    R = _symmetrize(np.asarray(model.damping(q, zero_p), dtype=float) + G @ gains.Kp @ G.T)
    P = _symmetrize(np.asarray(model.potential_hess(q), dtype=float) + G @ gains.Ki @ G.T)
    W = _symmetrize(np.asarray(model.mass(q), dtype=float) + G @ gains.Kd @ G.T)
    lam_p = np.linalg.eigvalsh(P)[0]
    if lam_p <= 0.0:
        raise AssumptionViolation("stiffness block P", lam_p)
    lam_w = np.linalg.eigvalsh(W)[0]
    if lam_w <= 0.0:
        raise AssumptionViolation("inertia block W", lam_w)
    return R, P, W


def cholesky_factors(P: Matrix, W: Matrix):
    """Cholesky-derived factors ``phiP^T phiP = P`` and ``phiW^T phiW = W^-1``.

    ``phiP`` is the upper-triangular Cholesky factor of P.  ``phiW`` is the
    inverse of the lower-triangular factor of W, so the inverse inertia is
    factored without ever forming it explicitly.  Non-positive-definite input
    raises ``LinAlgError`` naming the failing leading minor.
    """
    P = np.atleast_2d(np.asarray(P, dtype=float))
    W = np.atleast_2d(np.asarray(W, dtype=float))
    phiP = scipy.linalg.cholesky(P, lower=False)
    lower_w = scipy.linalg.cholesky(W, lower=True)
    phiW = scipy.linalg.solve_triangular(lower_w, np.eye(W.shape[0]), lower=True)
    return phiP, phiW


def build_saddle_matrix(R: Matrix, phiP: Matrix, phiW: Matrix) -> Matrix:
    """Assemble the saddle matrix N from the damping block and the factors."""
    R = np.atleast_2d(np.asarray(R, dtype=float))
    phiP = np.atleast_2d(np.asarray(phiP, dtype=float))
    phiW = np.atleast_2d(np.asarray(phiW, dtype=float))
    n = R.shape[0]
    if R.shape != (n, n) or phiP.shape != (n, n) or phiW.shape != (n, n):
        raise ValueError(
            f"block shapes disagree: R {R.shape}, phiP {phiP.shape}, phiW {phiW.shape}"
        )
    X = _symmetrize(phiW @ R @ phiW.T)
    Z = phiP @ phiW.T
    return np.block([[X, Z.T], [-Z, np.zeros((n, n))]])


def upsilon_star(model: MechanicalModel, gains: Gains, eq: Equilibrium) -> Matrix:
    """Derivative-feedback coordinate-change matrix, evaluated at rest.

    The velocity-Jacobian term in its lower-left block vanishes at zero
    momentum, leaving blockdiag(I, I + G Kd G^T M*^-1); identity when Kd = 0.
    """
    n = model.n
    M = np.asarray(model.mass(eq.q_star), dtype=float)
    Xi = np.eye(n) + model.input_matrix @ gains.Kd @ model.input_matrix.T @ np.linalg.inv(M)
    out = np.eye(2 * n)
    out[n:, n:] = Xi
    return out


def hessian_hd(model: MechanicalModel, gains: Gains, eq: Equilibrium) -> Matrix:
    """Hessian of the shaped energy at the target: blockdiag(P, M*^-1 W M*^-1).

    The cross configuration-momentum blocks vanish at zero momentum, and the
    result is positive definite exactly when P and W are.
    """
    R, P, W = build_rpw(model, gains, eq)
    M = np.asarray(model.mass(eq.q_star), dtype=float)
    Minv = np.linalg.inv(M)
    n = model.n
    out = np.zeros((2 * n, 2 * n))
    out[:n, :n] = P
    out[n:, n:] = _symmetrize(Minv @ W @ Minv)
    return out


def linearize_closed_loop(model: MechanicalModel, gains: Gains, eq: Equilibrium) -> Matrix:
    """Drift matrix of the loop linearized at the rest target.

    Computed as ``Ups^-1 F Ups^-T hess_Hd`` with the damping-and-feedback
    block ``F = [[0, I], [-I, -R]]``; its spectrum has non-positive real
    parts whenever P and W are positive definite.
    """
    R, _, _ = build_rpw(model, gains, eq)
    n = model.n
    F = np.zeros((2 * n, 2 * n))
    F[:n, n:] = np.eye(n)
    F[n:, :n] = -np.eye(n)
    F[n:, n:] = -R
    Ups = upsilon_star(model, gains, eq)
    Hd = hessian_hd(model, gains, eq)
    return np.linalg.solve(Ups, F) @ np.linalg.solve(Ups.T, Hd)


def make_saddle_form(model: MechanicalModel, gains: Gains, eq: Equilibrium) -> SaddleForm:
    """Build the full saddle-point form, including the similarity transform.

    The transform T satisfies ``T A T^-1 = -N`` for the drift matrix A of
    :func:`linearize_closed_loop`, so the two spectra are negatives of each
    other.
    """
    R, P, W = build_rpw(model, gains, eq)
    phiP, phiW = cholesky_factors(P, W)
    N = build_saddle_matrix(R, phiP, phiW)
    n = model.n
    Minv = np.linalg.inv(np.asarray(model.mass(eq.q_star), dtype=float))
    phiW_invT = scipy.linalg.solve_triangular(phiW, np.eye(n), lower=True).T
    T = np.zeros((2 * n, 2 * n))
    T[:n, n:] = phiW_invT @ Minv
    T[n:, :n] = phiP
    return SaddleForm(R=R, P=P, W=W, phiP=phiP, phiW=phiW, N=N, T=T)
