"""Discrete 6-DoF movement primitives: a phase-driven second-order attractor
per translation axis plus a quaternion-manifold attractor for orientation,
each modulated by a learned radial-basis forcing term.

Dynamics (time constant tau, phase s in (0, 1]):

* phase          tau * ds/dt = -alpha_s * s, stepped in closed form
* translation    tau * dz/dt = alpha_z * (beta_z * (g - y) - z) + f(s)
                 tau * dy/dt = z
* orientation    the same structure on eta = tau * omega with the attractor
                 error 2 * quat_log(g_q * conj(q)), integrated with
                 q <- quat_exp(omega * dt / 2) * q

The forcing term is a normalized Gaussian mixture; in ``phase-gated`` mode it
is multiplied by s (vanishes at convergence, giving exact goal attraction),
in ``literal`` mode it is used as-is (then a non-vanishing f(0) shifts the
equilibrium by f(0) / (alpha_z * beta_z)).

Weights are fitted by per-basis locally weighted regression on targets
obtained by inverting the transformation system along a demonstration:

    f_target = tau^2 * acc - alpha_z * (beta_z * (goal - y) - tau * vel)
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .se3 import Pose, UnitQuaternion
from .trajectory import Trajectory, finite_difference, resample_trajectory

__all__ = [
    "GATE_MODES",
    "CanonicalSystem",
    "ForcingTerm",
    "TransformParams",
    "DemonstrationData",
    "PoseDmp",
    "DegenerateDemo",
    "RolloutDiverged",
    "ForcingUnderflow",
    "step_canonical",
    "basis_layout",
    "eval_forcing",
    "prepare_demonstration",
    "compute_forcing_targets",
    "fit_lwr",
    "fit_pose_dmp",
    "rollout",
    "save_dmp",
    "load_dmp",
]

GATE_MODES = ("phase-gated", "literal")

_GATE_FLOOR = 1e-8       # phase clamp when dividing targets by the gate
_SUPPORT_FLOOR = 1e-12   # per-basis regression denominator guard
_DENOM_FLOOR = 1e-300    # mixture normalization underflow guard


class DegenerateDemo(ValueError):
    """Demonstration carries no information to fit (start = goal, no motion)."""


class RolloutDiverged(RuntimeError):
    """Integration state left the finite range; carries the first bad step."""

    def __init__(self, step: int, t: float) -> None:
        self.step = step
        self.t = t
        super().__init__(f"non-finite rollout state at step {step} (t = {t:.6g} s)")


class ForcingUnderflow(RuntimeWarning):
    """Every basis underflowed at the queried phase; forcing evaluated as 0."""


def _check_gate_mode(gate_mode: str) -> None:
    if gate_mode not in GATE_MODES:
        raise ValueError(f"gate_mode must be one of {GATE_MODES}, got {gate_mode!r}")


@dataclass(frozen=True)
class CanonicalSystem:
    """Exponential phase variable, stepped in closed form (unconditionally
    stable for any dt)."""

    alpha_s: float
    tau: float
    s: float = 1.0

    def __post_init__(self) -> None:
        if self.alpha_s <= 0 or self.tau <= 0:
            raise ValueError("alpha_s and tau must be positive")
        if not 0.0 < self.s <= 1.0:
            raise ValueError("phase must lie in (0, 1]")

    def phase_at(self, t: float) -> float:
        return math.exp(-self.alpha_s * t / self.tau)


def step_canonical(cs: CanonicalSystem, dt: float) -> CanonicalSystem:
    """Advance the phase: s' = s * exp(-alpha_s * dt / tau)."""
    if dt < 0:
        raise ValueError("dt must be non-negative")
    return replace(cs, s=cs.s * math.exp(-cs.alpha_s * dt / cs.tau))


def basis_layout(n_basis: int, alpha_s: float) -> tuple[np.ndarray, np.ndarray]:
    """Centers equally spaced in time (hence exponentially in phase) and the
    matching widths: c_i = exp(-alpha_s * i/(n-1)), h_i = 1/(2*(c_{i+1}-c_i)^2)
    with the last width repeated."""
    if n_basis < 2:
        raise ValueError("need at least 2 basis functions")
    if alpha_s <= 0:
        raise ValueError("alpha_s must be positive")
    centers = np.exp(-alpha_s * np.arange(n_basis) / (n_basis - 1))
    gaps = np.diff(centers)
    widths = np.empty(n_basis)
    widths[:-1] = 1.0 / (2.0 * gaps**2)
    widths[-1] = widths[-2]
    return centers, widths


@dataclass(frozen=True)
class ForcingTerm:
    """Normalized radial-basis mixture over the phase variable."""

    weights: np.ndarray
    centers: np.ndarray
    widths: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        c = np.asarray(self.centers, dtype=float).reshape(-1)
        h = np.asarray(self.widths, dtype=float).reshape(-1)
        if not (len(w) == len(c) == len(h)):
            raise ValueError("weights, centers, widths must have equal length")
        if np.any(h <= 0):
            raise ValueError("widths must be positive")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "widths", h)


def eval_forcing(ft: ForcingTerm, s: float, gate_mode: str = "phase-gated") -> float:
    """Evaluate the mixture at phase s (times the gate in phase-gated mode)."""
    _check_gate_mode(gate_mode)
    psi = np.exp(-ft.widths * (s - ft.centers) ** 2)
    denom = float(psi.sum())
    if denom < _DENOM_FLOOR:
        warnings.warn(f"all bases underflowed at s = {s:.3g}", ForcingUnderflow, stacklevel=2)
        return 0.0
    value = float(psi @ ft.weights) / denom
    if gate_mode == "phase-gated":
        value *= s
    return value


def _forcing_profile(
    weights: np.ndarray, centers: np.ndarray, widths: np.ndarray, s: np.ndarray, gate_mode: str
) -> np.ndarray:
    """Vectorized eval_forcing for several axes sharing one basis layout.

    weights: (n_axes, N); returns (len(s), n_axes).
    """
    psi = np.exp(-widths[None, :] * (s[:, None] - centers[None, :]) ** 2)
    denom = psi.sum(axis=1)
    mix = psi @ weights.T
    bad = denom < _DENOM_FLOOR
    if np.any(bad):
        warnings.warn(
            f"all bases underflowed at {int(bad.sum())} of {len(s)} phase samples",
            ForcingUnderflow,
            stacklevel=2,
        )
        denom = np.where(bad, 1.0, denom)
        mix[bad] = 0.0
    out = mix / denom[:, None]
    if gate_mode == "phase-gated":
        out *= s[:, None]
    return out


@dataclass(frozen=True)
class TransformParams:
    """Gains of the goal attractor; beta_z defaults to alpha_z/4 (critical
    damping)."""

    alpha_z: float = 25.0
    beta_z: float | None = None

    def __post_init__(self) -> None:
        if self.beta_z is None:
            object.__setattr__(self, "beta_z", self.alpha_z / 4.0)
        if self.alpha_z <= 0 or self.beta_z <= 0:
            raise ValueError("alpha_z and beta_z must be positive")


# ---------------------------------------------------------------------------
# vectorized quaternion-row helpers (fit-time only; rollout inlines its own)

def _mul_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a[:, 0], a[:, 1], a[:, 2], a[:, 3]
    bw, bx, by, bz = b[:, 0], b[:, 1], b[:, 2], b[:, 3]
    return np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by + ay * bw + az * bx - ax * bz,
            aw * bz + az * bw + ax * by - ay * bx,
        ],
        axis=1,
    )


def _conj_rows(q: np.ndarray) -> np.ndarray:
    out = q.copy()
    out[:, 1:] *= -1.0
    return out


def _log_rows_double(q: np.ndarray) -> np.ndarray:
    """2 * log per row (full-angle rotation vectors), canonicalizing first."""
    q = np.where(q[:, :1] < 0, -q, q)
    vn = np.linalg.norm(q[:, 1:], axis=1)
    half = np.arctan2(vn, q[:, 0])
    k = np.where(vn > 1e-12, 2.0 * half / np.maximum(vn, 1e-300), 2.0 / np.maximum(q[:, 0], 1e-300))
    return k[:, None] * q[:, 1:]


def _moving_average(v: np.ndarray, window: int = 5) -> np.ndarray:
    """Centered moving average with a shrinking window at the edges."""
    if len(v) < 2 or window <= 1:
        return v.copy()
    kernel = np.ones(window)
    counts = np.convolve(np.ones(len(v)), kernel, mode="same")
    out = np.empty_like(v)
    for col in range(v.shape[1]):
        out[:, col] = np.convolve(v[:, col], kernel, mode="same") / counts
    return out


@dataclass(frozen=True)
class DemonstrationData:
    """A demonstration regridded to uniform dt with smoothed derivatives."""

    times: np.ndarray
    dt: float
    tau: float
    positions: np.ndarray
    quats: np.ndarray
    velocities: np.ndarray
    accelerations: np.ndarray
    omegas: np.ndarray
    domegas: np.ndarray

    @property
    def start(self) -> Pose:
        return Pose(self.positions[0], UnitQuaternion.from_array(self.quats[0]))

    @property
    def goal(self) -> Pose:
        return Pose(self.positions[-1], UnitQuaternion.from_array(self.quats[-1]))


def prepare_demonstration(traj: Trajectory, dt: float = 1e-3, smooth_window: int = 5) -> DemonstrationData:
    """Regrid to uniform dt (snapped so the span is an integer number of
    steps, endpoints exact) and differentiate.

    Angular velocity comes from relative-quaternion logs (central over 2*dt in
    the interior); all derivative series get a centered moving average, since
    recorded demonstrations are noisy by nature.
    """
    if len(traj) < 2 or traj.duration <= 0:
        raise ValueError("demonstration needs at least 2 samples spanning a positive duration")
    if dt <= 0:
        raise ValueError("dt must be positive")
    steps = max(int(round(traj.duration / dt)), 1)
    grid_dt = traj.duration / steps
    res = resample_trajectory(traj, grid_dt)
    t = res.times - res.times[0]
    pos = res.positions
    quats = res.orientations

    vel = finite_difference(t, pos, 1)
    acc = finite_difference(t, pos, 2)

    n = len(t)
    omega = np.empty((n, 3))
    if n == 2:
        omega[:] = _log_rows_double(_mul_rows(quats[1:], _conj_rows(quats[:-1]))) / grid_dt
    else:
        omega[1:-1] = _log_rows_double(_mul_rows(quats[2:], _conj_rows(quats[:-2]))) / (2.0 * grid_dt)
        omega[0] = _log_rows_double(_mul_rows(quats[1:2], _conj_rows(quats[0:1])))[0] / grid_dt
        omega[-1] = _log_rows_double(_mul_rows(quats[-1:], _conj_rows(quats[-2:-1])))[0] / grid_dt
    domega = finite_difference(t, omega, 1)

    return DemonstrationData(
        times=t,
        dt=grid_dt,
        tau=float(t[-1]),
        positions=pos,
        quats=quats,
        velocities=_moving_average(vel, smooth_window),
        accelerations=_moving_average(acc, smooth_window),
        omegas=_moving_average(omega, smooth_window),
        domegas=_moving_average(domega, smooth_window),
    )


def compute_forcing_targets(
    demo: DemonstrationData,
    params: TransformParams,
    alpha_s: float,
    gate_mode: str = "phase-gated",
) -> tuple[np.ndarray, np.ndarray]:
    """Invert the transformation system along the demonstration.

    Returns (s_k, targets) with targets of shape (n, 6): three translation
    axes then three orientation axes. The stored targets are what the
    normalized mixture must output, so in phase-gated mode the raw inversion
    is divided by the gate (phase clamped below at 1e-8).
    """
    _check_gate_mode(gate_mode)
    span = float(np.max(np.linalg.norm(demo.positions - demo.positions[0], axis=1)))
    q0 = np.broadcast_to(demo.quats[0], demo.quats.shape)
    rot_span = float(np.max(np.linalg.norm(_log_rows_double(_mul_rows(demo.quats, _conj_rows(q0))), axis=1)))
    speed = float(np.max(np.abs(demo.velocities))) + float(np.max(np.abs(demo.omegas)))
    if span < 1e-9 and rot_span < 1e-9 and speed < 1e-9:
        raise DegenerateDemo("no information to fit: start equals goal and the demo never moves")

    az, bz = params.alpha_z, params.beta_z
    tau = demo.tau
    s = np.exp(-alpha_s * demo.times / tau)

    g = demo.positions[-1]
    f_pos = tau**2 * demo.accelerations - az * (bz * (g - demo.positions) - tau * demo.velocities)

    goal_rows = np.broadcast_to(demo.quats[-1], demo.quats.shape)
    err = _log_rows_double(_mul_rows(goal_rows, _conj_rows(demo.quats)))
    f_rot = tau**2 * demo.domegas - az * (bz * err - tau * demo.omegas)

    targets = np.hstack([f_pos, f_rot])
    if gate_mode == "phase-gated":
        targets = targets / np.maximum(s, _GATE_FLOOR)[:, None]
    return s, targets


def fit_lwr(
    s: np.ndarray,
    targets: np.ndarray,
    centers: np.ndarray,
    widths: np.ndarray,
    gate_mode: str = "phase-gated",
) -> tuple[np.ndarray, list[int]]:
    """Per-basis weighted least squares for one axis.

    w_i = sum_k psi_i(s_k) x(s_k) f_k / sum_k psi_i(s_k) x(s_k)^2 with
    x(s) = s in phase-gated mode and x(s) = 1 in literal mode. Bases whose
    denominator underflows the 1e-12 guard get weight 0 and are reported in
    the second return value.
    """
    _check_gate_mode(gate_mode)
    s = np.asarray(s, dtype=float).reshape(-1)
    f = np.asarray(targets, dtype=float).reshape(-1)
    if len(s) != len(f):
        raise ValueError("phase and target sample counts differ")
    if len(s) == 0:
        raise ValueError("cannot fit with zero samples")
    psi = np.exp(-widths[None, :] * (s[:, None] - centers[None, :]) ** 2)
    x = s if gate_mode == "phase-gated" else np.ones_like(s)
    num = psi.T @ (x * f)
    den = psi.T @ (x * x)
    supported = den > _SUPPORT_FLOOR
    weights = np.zeros(len(centers))
    weights[supported] = num[supported] / den[supported]
    return weights, [int(i) for i in np.flatnonzero(~supported)]


@dataclass(frozen=True)
class PoseDmp:
    """A fitted 6-DoF movement primitive plus everything needed to replay it."""

    alpha_s: float
    alpha_z: float
    beta_z: float
    tau: float
    gate_mode: str
    centers: np.ndarray
    widths: np.ndarray
    weights_pos: np.ndarray  # (3, N)
    weights_rot: np.ndarray  # (3, N)
    demo_start: Pose
    demo_goal: Pose

    def __post_init__(self) -> None:
        _check_gate_mode(self.gate_mode)
        for name in ("centers", "widths"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).reshape(-1))
        n = len(self.centers)
        for name in ("weights_pos", "weights_rot"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).reshape(3, n))

    @property
    def n_basis(self) -> int:
        return len(self.centers)

    def forcing_term(self, axis: int) -> ForcingTerm:
        """Axis 0..2 : translation x/y/z; axis 3..5 : orientation."""
        w = self.weights_pos[axis] if axis < 3 else self.weights_rot[axis - 3]
        return ForcingTerm(w, self.centers, self.widths)


def fit_pose_dmp(
    traj: Trajectory,
    n_basis: int = 50,
    alpha_z: float = 25.0,
    beta_z: float | None = None,
    alpha_s: float = 25.0 / 3.0,
    gate_mode: str = "phase-gated",
    dt: float = 1e-3,
) -> PoseDmp:
    """Fit all six axes of a demonstration.

    A degenerate (stay-at-pose) demonstration fits to all-zero weights, which
    replays as staying at the pose; the underlying target computation still
    raises at its own interface.
    """
    _check_gate_mode(gate_mode)
    params = TransformParams(alpha_z, beta_z)
    demo = prepare_demonstration(traj, dt=dt)
    centers, widths = basis_layout(n_basis, alpha_s)
    try:
        s, stored = compute_forcing_targets(demo, params, alpha_s, gate_mode)
        # the estimator consumes raw inversion values (it fits f ~ w * x);
        # stored targets have the gate divided out, so put it back
        if gate_mode == "phase-gated":
            targets = stored * np.maximum(s, _GATE_FLOOR)[:, None]
        else:
            targets = stored
        weights = np.empty((6, n_basis))
        dead: set[int] = set()
        for axis in range(6):
            weights[axis], unsupported = fit_lwr(s, targets[:, axis], centers, widths, gate_mode)
            dead.update(unsupported)
        if dead:
            warnings.warn(f"{len(dead)} basis functions had no sample support", RuntimeWarning, stacklevel=2)
    except DegenerateDemo:
        weights = np.zeros((6, n_basis))
    return PoseDmp(
        alpha_s=alpha_s,
        alpha_z=params.alpha_z,
        beta_z=params.beta_z,
        tau=demo.tau,
        gate_mode=gate_mode,
        centers=centers,
        widths=widths,
        weights_pos=weights[:3],
        weights_rot=weights[3:],
        demo_start=demo.start,
        demo_goal=demo.goal,
    )


def rollout(
    dmp: PoseDmp,
    start: Pose | None = None,
    goal: Pose | None = None,
    tau: float | None = None,
    dt: float = 1e-3,
    horizon: float = 1.5,
) -> Trajectory:
    """Integrate the primitive from rest at ``start`` toward ``goal``.

    Explicit Euler at fixed dt out to ``horizon * tau`` (the extra half tau
    lets the attractor settle); the phase follows its closed form, so the
    forcing profile is precomputed and the per-step work is scalar-only.
    """
    start = dmp.demo_start if start is None else start
    goal = dmp.demo_goal if goal is None else goal
    tau = dmp.tau if tau is None else float(tau)
    if tau <= 0:
        raise ValueError("tau must be positive")
    if dt <= 0 or dt > tau / 100.0:
        raise ValueError(f"dt must lie in (0, tau/100]; got dt = {dt:.6g} for tau = {tau:.6g}")

    n_steps = int(round(horizon * tau / dt))
    times = np.arange(n_steps + 1) * dt
    s_profile = np.exp(-dmp.alpha_s * times / tau)
    f_pos = _forcing_profile(dmp.weights_pos, dmp.centers, dmp.widths, s_profile, dmp.gate_mode)
    f_rot = _forcing_profile(dmp.weights_rot, dmp.centers, dmp.widths, s_profile, dmp.gate_mode)
    fpx, fpy, fpz = (f_pos[:, i].tolist() for i in range(3))
    frx, fry, frz = (f_rot[:, i].tolist() for i in range(3))

    az, bz = dmp.alpha_z, dmp.beta_z
    adt = dt / tau
    half_dt = 0.5 * dt
    yx, yy, yz = (float(v) for v in start.position)
    gx, gy, gz = (float(v) for v in goal.position)
    q = start.orientation
    qw, qx, qy, qz = q.w, q.x, q.y, q.z
    gq = goal.orientation
    gw, gvx, gvy, gvz = gq.w, gq.x, gq.y, gq.z
    zx = zy = zz = 0.0   # scaled translational velocity tau * dy/dt
    ex = ey = ez = 0.0   # scaled angular velocity tau * omega

    sqrt, atan2, sin, cos = math.sqrt, math.atan2, math.sin, math.cos
    out_p: list[tuple[float, float, float]] = []
    out_q: list[tuple[float, float, float, float]] = []

    for k in range(n_steps + 1):
        out_p.append((yx, yy, yz))
        out_q.append((qw, qx, qy, qz))
        if k == n_steps:
            break

        nzx = zx + adt * (az * (bz * (gx - yx) - zx) + fpx[k])
        nzy = zy + adt * (az * (bz * (gy - yy) - zy) + fpy[k])
        nzz = zz + adt * (az * (bz * (gz - yz) - zz) + fpz[k])
        yx += adt * zx
        yy += adt * zy
        yz += adt * zz
        zx, zy, zz = nzx, nzy, nzz

        # attractor error 2*log(g * conj(q)), shortest arc
        dw = gw * qw + gvx * qx + gvy * qy + gvz * qz
        dx = qw * gvx - gw * qx - (gvy * qz - gvz * qy)
        dy = qw * gvy - gw * qy - (gvz * qx - gvx * qz)
        dz = qw * gvz - gw * qz - (gvx * qy - gvy * qx)
        if dw < 0.0:
            dw, dx, dy, dz = -dw, -dx, -dy, -dz
        vn2 = dx * dx + dy * dy + dz * dz
        if vn2 > 1e-24:
            vn = sqrt(vn2)
            kk = 2.0 * atan2(vn, dw) / vn
        else:
            kk = 2.0 / dw
        erx, ery, erz = kk * dx, kk * dy, kk * dz

        omx, omy, omz = ex / tau, ey / tau, ez / tau
        ex += adt * (az * (bz * erx - ex) + frx[k])
        ey += adt * (az * (bz * ery - ey) + fry[k])
        ez += adt * (az * (bz * erz - ez) + frz[k])

        # q <- exp(omega * dt / 2) * q
        ax, ay, avz = omx * half_dt, omy * half_dt, omz * half_dt
        an2 = ax * ax + ay * ay + avz * avz
        an = sqrt(an2)
        sc = 1.0 - an2 / 6.0 if an < 1e-8 else sin(an) / an
        cw = cos(an)
        sx, sy, sz = sc * ax, sc * ay, sc * avz
        nqw = cw * qw - sx * qx - sy * qy - sz * qz
        nqx = cw * qx + sx * qw + (sy * qz - sz * qy)
        nqy = cw * qy + sy * qw + (sz * qx - sx * qz)
        nqz = cw * qz + sz * qw + (sx * qy - sy * qx)
        inv = 1.0 / sqrt(nqw * nqw + nqx * nqx + nqy * nqy + nqz * nqz)
        qw, qx, qy, qz = nqw * inv, nqx * inv, nqy * inv, nqz * inv

        if not (abs(zx) + abs(zy) + abs(zz) + abs(ex) + abs(ey) + abs(ez) + abs(yx) + abs(yy) + abs(yz) < 1e15):
            raise RolloutDiverged(k + 1, (k + 1) * dt)

    return Trajectory(times, np.array(out_p), np.array(out_q))


# ---------------------------------------------------------------------------
# serialization: floats go through json's repr round trip, so save -> load is
# bit-exact

_DMP_KEYS = {
    "alpha_s", "alpha_z", "beta_z", "tau", "N", "gate_mode",
    "centers", "widths", "weights_pos", "weights_rot", "demo_start", "demo_goal",
}


def _pose_to_dict(p: Pose) -> dict:
    return {
        "position": [float(v) for v in p.position],
        "orientation": [p.orientation.w, p.orientation.x, p.orientation.y, p.orientation.z],
    }


def _pose_from_dict(d: dict, where: str) -> Pose:
    extra = set(d) - {"position", "orientation"}
    if extra:
        raise ValueError(f"unknown key(s) {sorted(extra)} in {where}")
    return Pose(np.asarray(d["position"], dtype=float), UnitQuaternion.from_array(d["orientation"]))


def dmp_to_dict(dmp: PoseDmp) -> dict:
    return {
        "alpha_s": dmp.alpha_s,
        "alpha_z": dmp.alpha_z,
        "beta_z": dmp.beta_z,
        "tau": dmp.tau,
        "N": dmp.n_basis,
        "gate_mode": dmp.gate_mode,
        "centers": dmp.centers.tolist(),
        "widths": dmp.widths.tolist(),
        "weights_pos": dmp.weights_pos.tolist(),
        "weights_rot": dmp.weights_rot.tolist(),
        "demo_start": _pose_to_dict(dmp.demo_start),
        "demo_goal": _pose_to_dict(dmp.demo_goal),
    }


def dmp_from_dict(d: dict) -> PoseDmp:
    extra = set(d) - _DMP_KEYS
    if extra:
        raise ValueError(f"unknown key(s) {sorted(extra)} in primitive file")
    missing = _DMP_KEYS - set(d)
    if missing:
        raise ValueError(f"missing key(s) {sorted(missing)} in primitive file")
    dmp = PoseDmp(
        alpha_s=float(d["alpha_s"]),
        alpha_z=float(d["alpha_z"]),
        beta_z=float(d["beta_z"]),
        tau=float(d["tau"]),
        gate_mode=str(d["gate_mode"]),
        centers=np.asarray(d["centers"], dtype=float),
        widths=np.asarray(d["widths"], dtype=float),
        weights_pos=np.asarray(d["weights_pos"], dtype=float),
        weights_rot=np.asarray(d["weights_rot"], dtype=float),
        demo_start=_pose_from_dict(d["demo_start"], "demo_start"),
        demo_goal=_pose_from_dict(d["demo_goal"], "demo_goal"),
    )
    if dmp.n_basis != int(d["N"]):
        raise ValueError(f"N = {d['N']} does not match {dmp.n_basis} centers")
    return dmp


def save_dmp(dmp: PoseDmp, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        json.dump(dmp_to_dict(dmp), fh, indent=2)
        fh.write("\n")


def load_dmp(path) -> PoseDmp:
    with open(path, "r", encoding="ascii") as fh:
        return dmp_from_dict(json.load(fh))
