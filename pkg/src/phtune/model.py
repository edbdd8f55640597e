"""Mechanical systems in port-Hamiltonian form.

A :class:`MechanicalModel` packages the mass matrix ``M(q)``, the potential
energy ``V(q)`` with its analytic gradient and Hessian, a damping matrix
``D(q, p)``, and a constant input matrix ``G``.  Everything is a plain NumPy
callable: the tuning rules only evaluate these at the target configuration,
while the simulator evaluates them repeatedly along trajectories, so the
representation is numeric rather than symbolic by design.

Builtin systems: a planar two-link arm (``builtin_manipulator``), a gravity
pendulum (``builtin_pendulum``), and constant-matrix linear mechanical
systems (``linear_model``), the form accepted from CLI configuration files.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.linalg import LinAlgError
from scipy.linalg import null_space

from .errors import UnassignableEquilibrium

# Step for the finite-difference fallback of dM/dq used by the simulator.
MASS_FD_STEP = 1e-6
# Infinity-norm tolerance deciding membership in the assignable-equilibrium set.
DEFAULT_EQ_TOL = 1e-8

Vector = np.ndarray
Matrix = np.ndarray


@dataclass(frozen=True)
class MechanicalModel:
    """Evaluatable mechanical system ``H(q, p) = p^T M(q)^-1 p / 2 + V(q)``.

    Attributes
    ----------
    n, m:
        Configuration and input dimensions, ``m <= n``.
    mass:
        ``q -> (n, n)`` mass-inertia matrix, symmetric positive definite.
    potential, potential_grad, potential_hess:
        ``V(q)`` and its analytic first and second derivatives.
    damping:
        ``(q, p) -> (n, n)`` symmetric positive semi-definite matrix.
    input_matrix:
        Constant ``(n, m)`` matrix ``G`` of full column rank.
    mass_grad:
        Optional ``q -> (n, n, n)`` tensor with ``mass_grad(q)[k] = dM/dq_k``.
        When absent, :meth:`mass_partials` falls back to central differences.
    """

    n: int
    m: int
    mass: Callable[[Vector], Matrix]
    potential: Callable[[Vector], float]
    potential_grad: Callable[[Vector], Vector]
    potential_hess: Callable[[Vector], Matrix]
    damping: Callable[[Vector, Vector], Matrix]
    input_matrix: Matrix
    mass_grad: Callable[[Vector], np.ndarray] | None = None
    name: str = "custom"

    def __post_init__(self):
        if self.n < 1 or self.m < 1 or self.m > self.n:
            raise ValueError(f"need 1 <= m <= n, got n={self.n}, m={self.m}")
        G = np.atleast_2d(np.asarray(self.input_matrix, dtype=float))
        if G.shape != (self.n, self.m):
            raise ValueError(f"input matrix must be {self.n}x{self.m}, got {G.shape}")
        if np.linalg.matrix_rank(G) < self.m:
            raise ValueError("input matrix must have full column rank")
        object.__setattr__(self, "input_matrix", G)

    def mass_partials(self, q: Vector) -> np.ndarray:
        """Return the ``(n, n, n)`` tensor of partial derivatives dM/dq_k."""
        q = np.asarray(q, dtype=float)
        if self.mass_grad is not None:
            return np.asarray(self.mass_grad(q), dtype=float)
        out = np.empty((self.n, self.n, self.n))
        for k in range(self.n):
            step = np.zeros(self.n)
            step[k] = MASS_FD_STEP
            out[k] = (self.mass(q + step) - self.mass(q - step)) / (2.0 * MASS_FD_STEP)
        return out

    def mass_rate(self, q: Vector, qdot: Vector) -> Matrix:
        """Directional derivative of the mass matrix along a velocity."""
        return np.tensordot(np.asarray(qdot, dtype=float), self.mass_partials(q), axes=(0, 0))


@dataclass(frozen=True)
class Equilibrium:
    """Assignable rest target together with its holding input and offset.

    ``kappa`` shifts the integral channel so that the closed loop is at rest
    at ``(q_star, 0)``; ``u_star`` is the constant input holding the plant
    there.  Instances come from :func:`assign_equilibrium`.
    """

    q_star: Vector
    kappa: Vector
    u_star: Vector


def left_annihilator(G: Matrix) -> Matrix:
    """Full-row-rank matrix with ``ann @ G == 0``; empty ``(0, n)`` when square.

    Raises ``LinAlgError`` if ``G`` is column-rank deficient.
    """
    G = np.atleast_2d(np.asarray(G, dtype=float))
    n, m = G.shape
    if np.linalg.matrix_rank(G) < m:
        raise LinAlgError("input matrix is rank deficient; no full-rank annihilator")
    if m == n:
        return np.zeros((0, n))
    return null_space(G.T).T


def assign_equilibrium(
    model: MechanicalModel,
    q_star,
    Ki,
    tol_eq: float = DEFAULT_EQ_TOL,
) -> Equilibrium:
    """Check that ``q_star`` is assignable and derive ``kappa`` and ``u_star``.

    The holding input solves ``G u = grad V(q_star)`` in the least-squares
    sense (exact on the assignable set) and the integral offset is
    ``kappa = -G^T q_star - Ki^-1 u_star``.

    Raises
    ------
    UnassignableEquilibrium
        If the unactuated component of the potential gradient exceeds
        ``tol_eq`` in infinity norm.
    """
    q_star = np.atleast_1d(np.asarray(q_star, dtype=float))
    if q_star.shape != (model.n,):
        raise ValueError(f"q_star must have length {model.n}, got {q_star.shape}")
    Ki = np.atleast_2d(np.asarray(Ki, dtype=float))
    G = model.input_matrix
    grad = np.asarray(model.potential_grad(q_star), dtype=float)

    ann = left_annihilator(G)
    if ann.size:
        residual = float(np.max(np.abs(ann @ grad)))
        if residual > tol_eq:
            raise UnassignableEquilibrium(residual, tol_eq)

    u_star, *_ = np.linalg.lstsq(G, grad, rcond=None)
    kappa = -G.T @ q_star - np.linalg.solve(Ki, u_star)
    return Equilibrium(q_star=q_star, kappa=kappa, u_star=u_star)


def builtin_manipulator() -> MechanicalModel:
    """Planar two-link arm moving in the horizontal plane (no gravity).

    Fully actuated, ``n = m = 2``, with a cosine-coupled mass matrix and
    constant viscous joint damping diag(0.07, 0.03).
    """
    a1, a2, b = 0.1476, 0.0725, 0.0858  # link inertia parameters, kg m^2
    D = np.diag([0.07, 0.03])
    zero2 = np.zeros(2)
    zero22 = np.zeros((2, 2))

    def mass(q):
        c2 = np.cos(q[1])
        m12 = a2 + b * c2
        return np.array([[a1 + a2 + 2.0 * b * c2, m12], [m12, a2]])

    def mass_grad(q):
        s2 = np.sin(q[1])
        d2 = np.array([[-2.0 * b * s2, -b * s2], [-b * s2, 0.0]])
        return np.stack([zero22, d2])

    return MechanicalModel(
        n=2,
        m=2,
        mass=mass,
        potential=lambda q: 0.0,
        potential_grad=lambda q: zero2,
        potential_hess=lambda q: zero22,
        damping=lambda q, p: D,
        input_matrix=np.eye(2),
        mass_grad=mass_grad,
        name="manipulator2dof",
    )


def builtin_pendulum(
    mass_kg: float = 1.0,
    length_m: float = 1.0,
    gravity: float = 9.81,
    viscous_damping: float = 0.0,
) -> MechanicalModel:
    """Single gravity pendulum with the hanging position at ``q = 0``.

    ``M = m l^2``, ``V = m g l (1 - cos q)``, scalar viscous damping.
    """
    if mass_kg <= 0.0 or length_m <= 0.0 or gravity <= 0.0:
        raise ValueError("mass, length and gravity must be positive")
    if viscous_damping < 0.0:
        raise ValueError("viscous damping must be non-negative")

    ml2 = mass_kg * length_m**2
    mgl = mass_kg * gravity * length_m
    M = np.array([[ml2]])
    D = np.array([[viscous_damping]])

    return MechanicalModel(
        n=1,
        m=1,
        mass=lambda q: M,
        potential=lambda q: mgl * (1.0 - np.cos(q[0])),
        potential_grad=lambda q: np.array([mgl * np.sin(q[0])]),
        potential_hess=lambda q: np.array([[mgl * np.cos(q[0])]]),
        damping=lambda q, p: D,
        input_matrix=np.array([[1.0]]),
        mass_grad=lambda q: np.zeros((1, 1, 1)),
        name="pendulum",
    )


def linear_model(mass, stiffness, damping, input_matrix, name: str = "linear") -> MechanicalModel:
    """Constant-matrix mechanical system with quadratic potential.

    ``V(q) = q^T K q / 2`` for the given stiffness ``K``.  The mass matrix
    must be symmetric positive definite and the damping matrix symmetric
    positive semi-definite.
    """
    M = np.atleast_2d(np.asarray(mass, dtype=float))
    K = np.atleast_2d(np.asarray(stiffness, dtype=float))
    D = np.atleast_2d(np.asarray(damping, dtype=float))
    G = np.atleast_2d(np.asarray(input_matrix, dtype=float))
    n = M.shape[0]
    for label, A in (("mass", M), ("stiffness", K), ("damping", D)):
        if A.shape != (n, n):
            raise ValueError(f"{label} matrix must be {n}x{n}, got {A.shape}")
        if not np.allclose(A, A.T, atol=1e-10 * (1.0 + np.abs(A).max())):
            raise ValueError(f"{label} matrix must be symmetric")
    if np.linalg.eigvalsh(M)[0] <= 0.0:
        raise ValueError("mass matrix must be positive definite")
    if np.linalg.eigvalsh(D)[0] < -1e-12 * max(1.0, np.abs(D).max()):
        raise ValueError("damping matrix must be positive semi-definite")

    return MechanicalModel(
        n=n,
        m=G.shape[1],
        mass=lambda q: M,
        potential=lambda q: 0.5 * float(q @ K @ q),
        potential_grad=lambda q: K @ q,
        potential_hess=lambda q: K,
        damping=lambda q, p: D,
        input_matrix=G,
        mass_grad=lambda q: np.zeros((n, n, n)),
        name=name,
    )
