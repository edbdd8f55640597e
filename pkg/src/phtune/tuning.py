"""Gain synthesis against transient-response targets.

Searches are one-dimensional on purpose: the proportional gain is scaled as
``Kp = c * base_Kp`` with a user-supplied (default identity) base, which
makes every constraint monotone in the scalar ``c``:

* ``lam_min(D* + c G base G^T)`` is non-decreasing in ``c``, so the
  no-overshoot margin and the lower damping-ratio bound only improve as
  damping is injected;
* ``lam_max`` of the same matrix is non-decreasing too, so the upper
  damping-ratio bound only degrades, and a damping band reduces to an
  interval intersection of two monotone thresholds.

Rise-time tuning composes with either rule: the integral gain is scaled up
(raising the stiffness floor and with it the decay-rate bound) and the
companion rule is re-run after every update until the bound meets the target.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import AssumptionViolation, InfeasibleTuning
from .model import Equilibrium, MechanicalModel, assign_equilibrium
from .saddleform import Gains, build_rpw, _symmetrize
from .spectral import SpectralReport, spectral_report

# Kp returned by a search is floored here: a zero proportional gain would be
# inadmissible even when natural damping alone meets the rule.
KP_SCALE_FLOOR = 1e-9


class Mode(Enum):
    NO_OVERSHOOT = "no_overshoot"
    DAMPING_BAND = "damping_band"
    RISE_TIME = "rise_time"
    COMBINED = "combined"


@dataclass(frozen=True)
class TuningTarget:
    """What to ask of the closed loop, plus optional seed matrices.

    ``base_Kp`` is the direction the proportional gain is scaled along;
    ``base_Ki``/``base_Kd`` are held fixed by the proportional searches
    (rise-time tuning scales ``base_Ki``).
    """

    mode: Mode
    zeta_lo: float | None = None
    zeta_hi: float | None = None
    t_r_max: float | None = None
    base_Kp: np.ndarray | None = None
    base_Ki: np.ndarray | None = None
    base_Kd: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        has_band = self.zeta_lo is not None or self.zeta_hi is not None
        if self.mode is Mode.DAMPING_BAND or (has_band and self.mode is not Mode.NO_OVERSHOOT):
            if self.zeta_lo is None or self.zeta_hi is None:
                raise ValueError("a damping band needs both zeta_lo and zeta_hi")
            if not 0.0 < self.zeta_lo < self.zeta_hi <= 1.0:
                raise ValueError("need 0 < zeta_lo < zeta_hi <= 1")
        if self.mode in (Mode.RISE_TIME, Mode.COMBINED):
            if self.t_r_max is None or self.t_r_max <= 0.0:
                raise ValueError("rise-time targets need t_r_max > 0")


@dataclass(frozen=True)
class TuningResult:
    """Synthesized (or verified) gains with their independent spectral report.

    ``search_trace`` logs every probe of the scalar search as
    ``(candidate, slack)`` pairs; the slack is the signed margin of the
    constraint the probe evaluated (rise-time traces log ``(Ki scale, t_ru)``).
    """

    gains: Gains
    report: SpectralReport
    feasible: bool
    search_trace: list = field(default_factory=list)


def _as_matrix(value, m: int, default: np.ndarray | None = None) -> np.ndarray:
    """Coerce scalars, diagonals or full matrices to a symmetric (m, m) array."""
    if value is None:
        if default is None:
            raise ValueError("a matrix value is required")
        return default
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = float(arr) * np.eye(m)
    elif arr.ndim == 1:
        if arr.shape != (m,):
            raise ValueError(f"diagonal must have length {m}, got {arr.shape}")
        arr = np.diag(arr)
    if arr.shape != (m, m):
        raise ValueError(f"matrix must be {m}x{m}, got {arr.shape}")
    return _symmetrize(arr)


def _stiffness_inertia(model: MechanicalModel, eq: Equilibrium, Ki, Kd):
    """P and W for fixed integral/derivative gains, with the PD check."""
    G = model.input_matrix
    P = _symmetrize(np.asarray(model.potential_hess(eq.q_star), dtype=float) + G @ Ki @ G.T)
    W = _symmetrize(np.asarray(model.mass(eq.q_star), dtype=float) + G @ Kd @ G.T)
    lam_p = np.linalg.eigvalsh(P)[0]
    if lam_p <= 0.0:
        raise AssumptionViolation("stiffness block P", lam_p)
    return P, W


def _bisect_smallest(pred, lo: float, hi: float, rel_tol: float) -> float:
    """Smallest scalar with a monotone predicate true; pred(lo)=False, pred(hi)=True."""
    for _ in range(100):
        if hi - lo <= rel_tol * max(1.0, hi):
            break
        mid = 0.5 * (lo + hi)
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _bisect_largest(pred, lo: float, hi: float, rel_tol: float) -> float:
    """Largest scalar with a monotone predicate true; pred(lo)=True, pred(hi)=False."""
    for _ in range(100):
        if hi - lo <= rel_tol * max(1.0, hi):
            break
        mid = 0.5 * (lo + hi)
        if pred(mid):
            lo = mid
        else:
            hi = mid
    return lo


def _min_real_scale(D, GB, target: float, c_max: float, rel_tol: float, trace=None):
    """Smallest c with ``lam_min(D + c GB) >= target``, or None past the cap."""

    def margin(c):
        value = float(np.linalg.eigvalsh(_symmetrize(D + c * GB))[0] ** 2 - target**2)
        if trace is not None:
            trace.append((float(c), value))
        return value

    if margin(0.0) >= 0.0:
        return 0.0
    hi = 1.0
    while margin(hi) < 0.0:
        hi *= 2.0
        if hi > c_max:
            return None
    lo = hi / 2.0 if hi > 1.0 else 0.0
    return _bisect_smallest(lambda c: margin(c) >= 0.0, lo, hi, rel_tol)


def tune_no_overshoot(
    model: MechanicalModel,
    eq: Equilibrium,
    Ki,
    Kd=None,
    base_Kp=None,
    *,
    c_max: float = 1e6,
    rel_tol: float = 1e-6,
) -> TuningResult:
    """Smallest proportional scale that forces a purely real spectrum.

    Solves for the smallest ``c`` with
    ``lam_min(D* + c G base_Kp G^T)^2 >= 4 lam_max(P) lam_max(W)``.  For the
    fully actuated identity case the closed form
    ``c = 2 sqrt(lam_max(P) lam_max(W)) - lam_min(D*)`` applies; otherwise a
    monotone bisection is used.  The result is inflated by ``rel_tol`` so the
    returned margin is strictly positive rather than sitting on the
    critically damped edge.

    Raises
    ------
    InfeasibleTuning
        For underactuated plants without natural damping (no Kp can lift
        ``lam_min`` of the damping block off zero), or when the required
        scale exceeds ``c_max``.
    """
    m = model.m
    Ki = _as_matrix(Ki, m)
    Kd = _as_matrix(Kd, m, np.zeros((m, m)))
    base = _as_matrix(base_Kp, m, np.eye(m))
    if np.linalg.eigvalsh(base)[0] <= 0.0:
        raise ValueError("base_Kp must be positive definite")

    G = model.input_matrix
    D = _symmetrize(np.asarray(model.damping(eq.q_star, np.zeros(model.n)), dtype=float))
    P, W = _stiffness_inertia(model, eq, Ki, Kd)
    lam_d = np.linalg.eigvalsh(D)
    if model.m < model.n and lam_d[0] <= 1e-12 * max(1.0, abs(lam_d[-1])):
        raise InfeasibleTuning(
            f"plant is underactuated (m={model.m} < n={model.n}) with no natural "
            "damping: G Kp G^T is singular for every Kp, so lam_min of the damping "
            "block stays at zero and the no-overshoot condition cannot be met"
        )

    target = 2.0 * np.sqrt(np.linalg.eigvalsh(P)[-1] * np.linalg.eigvalsh(W)[-1])
    GB = G @ base @ G.T
    trace: list = []

    identity_case = np.array_equal(G, np.eye(model.n)) and np.array_equal(base, np.eye(m))
    if identity_case:
        c = max(0.0, float(target - lam_d[0]))
        trace.append((c, float((lam_d[0] + c) ** 2 - target**2)))
    else:
        c = _min_real_scale(D, GB, float(target), c_max, rel_tol, trace)
        if c is None:
            best = float(np.linalg.eigvalsh(_symmetrize(D + c_max * GB))[0] ** 2 - target**2)
            raise InfeasibleTuning(
                f"no-overshoot condition unreachable within the scale cap {c_max:g} "
                f"(margin {best:.6g} at the cap)",
                best_margin=best,
                at=c_max,
            )

    # stay strictly inside the feasible side; still minimal within rel_tol
    c = max(c * (1.0 + rel_tol), KP_SCALE_FLOOR)

    if np.any(Kd):
        W0 = _symmetrize(np.asarray(model.mass(eq.q_star), dtype=float))
        target0 = 2.0 * np.sqrt(np.linalg.eigvalsh(P)[-1] * np.linalg.eigvalsh(W0)[-1])
        if identity_case:
            c0 = max(0.0, float(target0 - lam_d[0]))
        else:
            c0 = _min_real_scale(D, GB, float(target0), c_max, rel_tol)
        if c0 is not None and c > 1.1 * max(c0, KP_SCALE_FLOOR):
            warnings.warn(
                "the derivative gain inflates the required proportional scale by "
                f"more than 10% ({c:.4g} vs {c0:.4g} without Kd)",
                stacklevel=2,
            )

    gains = Gains(c * base, Ki, Kd)
    R, P, W = build_rpw(model, gains, eq)
    report = spectral_report(R, P, W)
    return TuningResult(gains=gains, report=report, feasible=report.no_overshoot_satisfied, search_trace=trace)


def tune_damping_band(
    model: MechanicalModel,
    eq: Equilibrium,
    zeta_lo: float,
    zeta_hi: float,
    Ki,
    Kd=None,
    base_Kp=None,
    *,
    c_max: float = 1e6,
    rel_tol: float = 1e-6,
) -> TuningResult:
    """Proportional scale placing every damping ratio inside ``[zeta_lo, zeta_hi]``.

    Both squared-ratio bounds grow monotonically with the scale, so the
    feasible scales form an interval: its lower end is where the lower bound
    reaches ``zeta_lo^2``, its upper end where the upper bound hits
    ``zeta_hi^2``.  The midpoint is returned when the upper constraint binds,
    otherwise the interval's lower end.

    Raises
    ------
    InfeasibleTuning
        When the interval is empty (band too narrow for the fixed Ki, Kd) or
        the lower constraint is unreachable below the scale cap; the error
        carries the achievable band at the best scale probed.
    """
    if not 0.0 < zeta_lo < zeta_hi <= 1.0:
        raise ValueError("need 0 < zeta_lo < zeta_hi <= 1")
    m = model.m
    Ki = _as_matrix(Ki, m)
    Kd = _as_matrix(Kd, m, np.zeros((m, m)))
    base = _as_matrix(base_Kp, m, np.eye(m))
    if np.linalg.eigvalsh(base)[0] <= 0.0:
        raise ValueError("base_Kp must be positive definite")

    G = model.input_matrix
    D = _symmetrize(np.asarray(model.damping(eq.q_star, np.zeros(model.n)), dtype=float))
    P, W = _stiffness_inertia(model, eq, Ki, Kd)
    ew_p = np.linalg.eigvalsh(P)
    ew_w = np.linalg.eigvalsh(W)
    GB = G @ base @ G.T
    lo2, hi2 = zeta_lo**2, zeta_hi**2
    trace: list = []

    def bounds_at(c):
        ew_r = np.linalg.eigvalsh(_symmetrize(D + c * GB))
        z_lo = max(0.0, 0.25 * ew_r[0] ** 2 / (ew_w[-1] * ew_p[-1]))
        z_hi = min(1.0, 0.25 * ew_r[-1] ** 2 / (ew_w[0] * ew_p[0]))
        return z_lo, z_hi

    def infeasible(message, at):
        z = bounds_at(at)
        raise InfeasibleTuning(
            f"{message}; achievable damping-ratio band at scale {at:.6g} is "
            f"[{np.sqrt(z[0]):.6g}, {np.sqrt(z[1]):.6g}]",
            achievable=(float(np.sqrt(z[0])), float(np.sqrt(z[1]))),
            at=float(at),
        )

    def lower_ok(c):
        z = bounds_at(c)
        trace.append((float(c), float(z[0] - lo2)))
        return z[0] >= lo2

    def upper_ok(c):
        return bounds_at(c)[1] <= hi2

    if not upper_ok(0.0):
        infeasible("natural damping alone already exceeds the requested band", 0.0)
    if not lower_ok(c_max):
        infeasible(f"lower damping bound unreachable within the scale cap {c_max:g}", c_max)
    c_lo = 0.0 if lower_ok(0.0) else _bisect_smallest(lower_ok, 0.0, c_max, rel_tol)

    if upper_ok(c_max):
        c_star = c_lo
    else:
        c_hi = _bisect_largest(upper_ok, 0.0, c_max, rel_tol)
        if c_hi < c_lo:
            infeasible("band is too narrow for the fixed Ki and Kd", 0.5 * (c_lo + c_hi))
        c_star = 0.5 * (c_lo + c_hi)

    c_star = max(c_star, KP_SCALE_FLOOR)
    gains = Gains(c_star * base, Ki, Kd)
    R, P, W = build_rpw(model, gains, eq)
    report = spectral_report(R, P, W)
    feasible = report.zeta_min >= lo2 and report.zeta_max <= hi2
    return TuningResult(gains=gains, report=report, feasible=feasible, search_trace=trace)


def tune_rise_time(
    model: MechanicalModel,
    eq: Equilibrium,
    t_r_max: float,
    companion=Mode.NO_OVERSHOOT,
    Ki_seed=None,
    Kd=None,
    base_Kp=None,
    *,
    zeta_lo: float | None = None,
    zeta_hi: float | None = None,
    max_scale: float = 1e4,
    max_iter: int = 50,
    c_max: float = 1e6,
    rel_tol: float = 1e-6,
) -> TuningResult:
    """Meet a rise-time ceiling while keeping a companion rule satisfied.

    Each iteration re-runs the companion rule (no-overshoot or damping band)
    at the current integral gain, then scales the integral gain up if the
    resulting bound ``t_ru`` still exceeds ``t_r_max``.  The equilibrium
    offset is re-derived for every integral gain candidate.

    Raises
    ------
    InfeasibleTuning
        When the Ki scale cap or the iteration cap is reached; the error
        carries the best bound achieved and the search trace.
    """
    if t_r_max <= 0.0:
        raise ValueError("t_r_max must be positive")
    companion = Mode(companion)
    if companion not in (Mode.NO_OVERSHOOT, Mode.DAMPING_BAND):
        raise ValueError("companion must be the no-overshoot or damping-band rule")
    if companion is Mode.DAMPING_BAND and (zeta_lo is None or zeta_hi is None):
        raise ValueError("the damping-band companion needs zeta_lo and zeta_hi")
    m = model.m
    Ki_seed = _as_matrix(Ki_seed, m, np.eye(m))

    trace: list = []
    scale = 1.0
    best = float("inf")
    for _ in range(max_iter):
        Ki_c = scale * Ki_seed
        eq_c = assign_equilibrium(model, eq.q_star, Ki_c)
        if companion is Mode.NO_OVERSHOOT:
            res = tune_no_overshoot(
                model, eq_c, Ki_c, Kd, base_Kp, c_max=c_max, rel_tol=rel_tol
            )
        else:
            res = tune_damping_band(
                model, eq_c, zeta_lo, zeta_hi, Ki_c, Kd, base_Kp, c_max=c_max, rel_tol=rel_tol
            )
        t_ru = res.report.t_ru
        trace.append((float(scale), float(t_ru)))
        best = min(best, t_ru)
        if t_ru <= t_r_max:
            return TuningResult(
                gains=res.gains, report=res.report, feasible=True, search_trace=trace
            )
        if scale >= max_scale:
            raise InfeasibleTuning(
                f"rise-time target {t_r_max:g} s unreachable within the Ki scale cap "
                f"{max_scale:g}; best bound achieved {best:.6g} s",
                best_t_ru=best,
                trace=trace,
            )
        factor = min(max((t_ru / t_r_max) ** 2, 1.1), 100.0)
        scale = min(scale * factor, max_scale)
    raise InfeasibleTuning(
        f"iteration cap {max_iter} reached; best rise-time bound {best:.6g} s",
        best_t_ru=best,
        trace=trace,
    )


def verify_gains(
    model: MechanicalModel, eq: Equilibrium, gains: Gains, target: TuningTarget
) -> TuningResult:
    """Evaluate supplied gains against a target without modifying them."""
    R, P, W = build_rpw(model, gains, eq)
    report = spectral_report(R, P, W)

    def band_ok():
        return report.zeta_min >= target.zeta_lo**2 and report.zeta_max <= target.zeta_hi**2

    if target.mode is Mode.NO_OVERSHOOT:
        feasible = report.no_overshoot_satisfied
    elif target.mode is Mode.DAMPING_BAND:
        feasible = band_ok()
    elif target.mode is Mode.RISE_TIME:
        feasible = report.t_ru <= target.t_r_max
    else:
        companion_ok = band_ok() if target.zeta_lo is not None else report.no_overshoot_satisfied
        feasible = companion_ok and report.t_ru <= target.t_r_max
    return TuningResult(gains=gains, report=report, feasible=bool(feasible), search_trace=[])
