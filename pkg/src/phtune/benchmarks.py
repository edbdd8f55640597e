"""Preset configurations for the bundled two-link arm."""

from __future__ import annotations

import numpy as np

from .saddleform import Gains

# Rest target used by all presets (rad).
TWO_DOF_TARGET = np.array([0.6, 0.8])


def two_dof_gain_sets() -> dict[str, Gains]:
    """Three presets for the two-link arm.

    ``rt`` is a deliberately rough baseline, ``e1`` sits just inside the
    no-overshoot condition, ``e2`` targets the damping-ratio band
    0.4 <= zeta <= 0.8 with a small derivative gain.
    """
    return {
        "rt": Gains.from_diagonals([1.0, 0.5], [50.0, 30.0]),
        "e1": Gains.from_diagonals([7.3972, 9.2], [35.0, 20.0]),
        "e2": Gains.from_diagonals([3.9136, 4.171], [50.0, 45.0], [0.08, 0.15]),
    }
