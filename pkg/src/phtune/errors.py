"""Exception types shared across the package.

Argument abuse (wrong shapes, non-symmetric inputs, zero vectors) raises the
usual ``ValueError``/``numpy.linalg.LinAlgError``; the classes below cover
failures that carry domain meaning and that callers are expected to handle.
"""

from __future__ import annotations


class PhtuneError(Exception):
    """Base class for errors raised by this package."""


class AssumptionViolation(PhtuneError):
    """The shaped closed-loop energy has no isolated minimum at the target.

    Raised when the stiffness block P or the inertia block W fails to be
    positive definite, which voids every spectral guarantee downstream.
    """

    def __init__(self, block: str, eigenvalue: float):
        self.block = block
        self.eigenvalue = eigenvalue
        super().__init__(
            f"{block} must be positive definite but has minimum eigenvalue "
            f"{eigenvalue:.6g}; the shaped energy has no isolated minimum "
            "at the target"
        )


class UnassignableEquilibrium(PhtuneError):
    """The requested rest configuration cannot be held by any constant input."""

    def __init__(self, residual: float, tol: float):
        self.residual = residual
        self.tol = tol
        super().__init__(
            "unactuated component of the potential gradient does not vanish: "
            f"|G_perp grad V|_inf = {residual:.6g} > {tol:.6g}"
        )


class InfeasibleTuning(PhtuneError):
    """No admissible gain scaling satisfies the requested response target."""

    def __init__(self, message: str, **details):
        self.details = details
        super().__init__(message)


class SimulationDiverged(PhtuneError):
    """The integrated state stopped being finite."""

    def __init__(self, step: int, time: float):
        self.step = step
        self.time = time
        super().__init__(
            f"state became non-finite at step {step} (t = {time:.6g} s); "
            "reduce the step size or check the gain set"
        )
