"""Factories for synthetic worlds and demonstrations used by tests, scripts,
and the default CLI configuration."""

from __future__ import annotations

import numpy as np
from scipy.interpolate import CubicSpline

from .assembly import AssemblyScenario
from .dmp import fit_pose_dmp
from .ktc import AdmittanceGains, NativeDrive, VirtualHuman, native_drive, proposed_gains
from .se3 import Pose, UnitQuaternion, from_rotation_vector, quat_mul, rotation_vector
from .trajectory import Trajectory
from .vision import BarScene, CameraModel, HoleSpec

__all__ = [
    "make_smooth_demo",
    "demo_pose_waypoints",
    "default_bar_scene",
    "default_camera",
    "default_scenario",
    "default_teach_setup",
]


def make_smooth_demo(
    waypoints: np.ndarray,
    duration: float,
    dt: float = 1e-3,
    orientations: list[UnitQuaternion] | None = None,
) -> Trajectory:
    """Clamped cubic spline through the waypoints, traversed under a smooth
    step time warp so the path starts and ends fully at rest (zero velocity
    and zero acceleration), as a hand-guided demonstration does.

    Orientation waypoints (optional) are splined in the tangent space of the
    first one, so they must stay within a half-turn of it.
    """
    wp = np.asarray(waypoints, dtype=float).reshape(-1, 3)
    k = len(wp)
    if k < 2:
        raise ValueError("need at least 2 waypoints")
    if duration <= 0 or dt <= 0:
        raise ValueError("duration and dt must be positive")
    knots = np.linspace(0.0, duration, k)
    spline = CubicSpline(knots, wp, bc_type="clamped")
    steps = max(int(round(duration / dt)), 1)
    times = np.arange(steps + 1) * (duration / steps)
    u = times / duration
    warped = duration * (10.0 - (15.0 - 6.0 * u) * u) * u**3
    pos = spline(warped)

    if orientations is None:
        quats = np.tile([1.0, 0.0, 0.0, 0.0], (len(times), 1))
    else:
        if len(orientations) != k:
            raise ValueError("orientation waypoints must match position waypoints")
        q0 = orientations[0]
        rvs = np.array([rotation_vector(quat_mul(q, q0.conjugate())) for q in orientations])
        rspline = CubicSpline(knots, rvs, bc_type="clamped")
        rv_t = rspline(warped)
        quats = np.array(
            [quat_mul(from_rotation_vector(rv), q0).as_array() for rv in rv_t]
        )
    return Trajectory(times, pos, quats)


def demo_pose_waypoints(seed: int = 0, scale: float = 0.12):
    """A reproducible, gently curved 5-waypoint 6-DoF path for tests/scripts.

    Single lateral sway, no direction reversals: a 50-basis fit tracks it to
    about 1% of the span, so the default span keeps round-trip error near 1 mm.
    """
    rng = np.random.default_rng(seed)
    base = np.array(
        [
            [0.00, 0.000, 0.00],
            [0.07, 0.020, 0.04],
            [0.13, 0.032, 0.06],
            [0.19, 0.020, 0.04],
            [0.25, 0.000, 0.00],
        ]
    )
    f = scale / 0.25
    wp = base * f + rng.normal(scale=0.0015 * f, size=(5, 3))
    tilts = rng.normal(scale=0.10, size=(5, 3))
    tilts[0] = 0.0
    quats = [from_rotation_vector(t) for t in tilts]
    return wp, quats


def default_bar_scene() -> BarScene:
    """Desk scene: a 0.30 x 0.05 x 0.02 m bar lying flat with three 4 mm
    holes along its top face, outer ones 0.10 m off center."""
    holes = tuple(
        HoleSpec(offset=[x, 0.0, 0.01], radius=0.004, axis=[0.0, 0.0, 1.0])
        for x in (-0.10, 0.0, 0.10)
    )
    return BarScene(
        bar=Pose([0.0, 0.0, 0.05]),
        dims=[0.30, 0.05, 0.02],
        holes=holes,
    )


def default_camera() -> CameraModel:
    """Overhead camera 0.30 m up, looking straight down (180 deg about x),
    VGA with the usual RGB-D intrinsics."""
    return CameraModel(pose=Pose([0.0, 0.0, 0.30], UnitQuaternion(0.0, 1.0, 0.0, 0.0)))


def default_teach_setup(
    controller: str, seed: int = 0, scale: float = 0.12
) -> tuple[VirtualHuman, AdmittanceGains | NativeDrive]:
    """Guided-hand operator plus the matching controller for a teaching run.

    The same waypoint path is used for both controllers; the operator pushes
    harder against the native drive (it takes real force to backdrive) and
    gently against the proposed admittance.
    """
    wp, quats = demo_pose_waypoints(seed=seed, scale=scale)
    poses = tuple(Pose(p, q) for p, q in zip(wp, quats))
    if controller == "proposed":
        human = VirtualHuman(waypoints=poses, force_saturation=12.0, torque_saturation=1.0)
        return human, proposed_gains()
    if controller == "native":
        human = VirtualHuman(waypoints=poses, force_saturation=60.0, torque_saturation=6.0)
        return human, native_drive()
    raise ValueError(f"controller must be 'proposed' or 'native', got {controller!r}")


def default_scenario(noise_sigma: float = 5e-4, seed: int = 0) -> AssemblyScenario:
    """Runnable trial setup over the default scene: the primitive is fit from
    the smooth preset demonstration and the arm starts beside the bar.

    The yaw range stays inside +-60 deg, where every hole of the default
    scene is fully visible with margin (the outer ones leave the frustum
    near +-70 deg).
    """
    wp, quats = demo_pose_waypoints(seed=0)
    demo = make_smooth_demo(wp, duration=4.0, orientations=quats)
    return AssemblyScenario(
        scene=default_bar_scene(),
        cam=default_camera(),
        dmp=fit_pose_dmp(demo),
        initial_pose=Pose([-0.06, -0.10, 0.25]),
        noise_sigma=noise_sigma,
        seed=seed,
    )
