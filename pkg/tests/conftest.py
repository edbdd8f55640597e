"""Shared fixtures and random-instance generators for the test suite."""

import numpy as np
import pytest

from phtune import (
    Gains,
    TWO_DOF_TARGET,
    assign_equilibrium,
    builtin_manipulator,
    linear_model,
    two_dof_gain_sets,
)


@pytest.fixture(scope="session")
def arm():
    return builtin_manipulator()


@pytest.fixture(scope="session")
def gain_sets():
    return two_dof_gain_sets()


@pytest.fixture(scope="session")
def arm_eq(arm):
    # kappa is Ki-independent for this arm (zero potential), any PD Ki works
    return assign_equilibrium(arm, TWO_DOF_TARGET, np.eye(2))


def random_spd(rng, n, shift=0.1):
    """Random symmetric positive definite matrix with moderate conditioning."""
    A = rng.normal(size=(n, n))
    return A @ A.T + (shift + rng.uniform()) * np.eye(n)


def random_triple(rng, n, r_scale=1.0):
    """Random (R, P, W) with R PSD-or-PD and P, W PD."""
    R = r_scale * random_spd(rng, n)
    P = random_spd(rng, n)
    W = random_spd(rng, n)
    return R, P, W


def real_spectrum_triple(rng, n, slack=1.05):
    """Random (R, P, W) scaled so the no-overshoot margin is safely positive."""
    R, P, W = random_triple(rng, n)
    lam_r = np.linalg.eigvalsh(R)[0]
    need = 2.0 * np.sqrt(np.linalg.eigvalsh(P)[-1] * np.linalg.eigvalsh(W)[-1])
    R = R * (slack * need / lam_r)
    return R, P, W


def random_linear_system(rng, n, m=None, with_kd=False):
    """Random constant-matrix plant with admissible gains and its equilibrium.

    The stiffness is SPD so q_star = 0 is assignable for any input matrix.
    """
    m = n if m is None else m
    M = random_spd(rng, n)
    K = random_spd(rng, n)
    D = random_spd(rng, n, shift=0.0) * rng.uniform(0.0, 0.5)
    G = rng.normal(size=(n, m))
    while np.linalg.matrix_rank(G) < m:  # pragma: no cover - measure zero
        G = rng.normal(size=(n, m))
    model = linear_model(M, K, D, G)
    kd = random_spd(rng, m) * 0.2 if with_kd else np.zeros((m, m))
    gains = Gains(random_spd(rng, m), random_spd(rng, m), kd)
    eq = assign_equilibrium(model, np.zeros(n), gains.Ki)
    return model, gains, eq
