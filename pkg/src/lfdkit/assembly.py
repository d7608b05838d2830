"""Pedal-stepped assembly orchestration.

One trial is a short story: the operator places the bar and presses the
pedal, the robot fetches the peg, vision fixes the chosen hole, a second
pedal press releases the insertion move, and a final press closes the task.
A total, deterministic state machine arbitrates that story; planning turns
the fitted hole into a standoff-then-descend trajectory; execution plays it
on the lagged plant against the true bar geometry with a chamfer-style
contact model; batches rerun the whole pipeline under independent seeds.

Tool convention: the peg points along the tool frame -z axis, so an
identity attitude is straight down.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, replace
from enum import Enum
from typing import Sequence

import numpy as np

from .dmp import PoseDmp, RolloutDiverged, rollout
from .ktc import PlantState, plant_step
from .metrics import JerkReport, jerk_metrics, jerk_report_to_dict
from .se3 import Pose, UnitQuaternion, quat_mul, rotation_between
from .trajectory import ParseError, Trajectory
from .vision import (
    BarScene,
    CameraModel,
    HoleEstimate,
    NotDetectable,
    fit_circle3d,
    synthesize_mask,
)

__all__ = [
    "Phase",
    "EventKind",
    "TaskState",
    "StepEvent",
    "AssemblyScenario",
    "InsertionPlan",
    "TrialResult",
    "BatchResult",
    "advance",
    "nominal_events",
    "parse_events",
    "insertion_goal",
    "plan_insertion",
    "execute_trial",
    "run_batch",
    "meets_tolerances",
    "trial_to_dict",
    "batch_to_dict",
    "batch_csv_text",
]

_TOOL_AXIS = np.array([0.0, 0.0, -1.0])
_CONVERGENCE_TOL = 1e-3


class Phase(Enum):
    AWAITING_BAR = "awaiting-bar"
    BAR_PLACED = "bar-placed"
    PEG_GRASPED = "peg-grasped"
    INSERTION_PLANNED = "insertion-planned"
    INSERTING = "inserting"
    AWAITING_HUMAN = "awaiting-human"
    DONE = "done"
    FAILED = "failed"


class EventKind(Enum):
    PEDAL_PRESS = "pedal_press"
    VISION_READY = "vision_ready"
    MOTION_DONE = "motion_done"
    ABORT = "abort"


@dataclass(frozen=True)
class TaskState:
    """Current phase; ``reason`` is set exactly when the phase is FAILED."""

    phase: Phase = Phase.AWAITING_BAR
    reason: str | None = None

    def __post_init__(self) -> None:
        if (self.phase is Phase.FAILED) != (self.reason is not None):
            raise ValueError("reason must be given iff the phase is FAILED")


@dataclass(frozen=True)
class StepEvent:
    """One confirmation signal with its wall-clock time."""

    kind: EventKind
    t: float = 0.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.t) or self.t < 0.0:
            raise ValueError("event time must be finite and nonnegative")


_TABLE = {
    (Phase.AWAITING_BAR, EventKind.PEDAL_PRESS): Phase.BAR_PLACED,
    (Phase.BAR_PLACED, EventKind.MOTION_DONE): Phase.PEG_GRASPED,
    (Phase.PEG_GRASPED, EventKind.VISION_READY): Phase.INSERTION_PLANNED,
    (Phase.INSERTION_PLANNED, EventKind.PEDAL_PRESS): Phase.INSERTING,
    (Phase.INSERTING, EventKind.MOTION_DONE): Phase.AWAITING_HUMAN,
    (Phase.AWAITING_HUMAN, EventKind.PEDAL_PRESS): Phase.DONE,
}


def advance(state: TaskState, event: StepEvent) -> TaskState:
    """One transition, defined for every state/event pair.

    FAILED absorbs everything; an off-graph event fails the task with a
    reason naming the event and the phase, never a silent drop.
    """
    if state.phase is Phase.FAILED:
        return state
    if event.kind is EventKind.ABORT:
        return TaskState(Phase.FAILED, "aborted")
    nxt = _TABLE.get((state.phase, event.kind))
    if nxt is None:
        return TaskState(
            Phase.FAILED,
            f"unexpected event {event.kind.value} in {state.phase.value}",
        )
    return TaskState(nxt)


def nominal_events(spacing: float = 1.0) -> tuple[StepEvent, ...]:
    """The six-signal happy path that drives a fresh task to DONE."""
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    kinds = (
        EventKind.PEDAL_PRESS,
        EventKind.MOTION_DONE,
        EventKind.VISION_READY,
        EventKind.PEDAL_PRESS,
        EventKind.MOTION_DONE,
        EventKind.PEDAL_PRESS,
    )
    return tuple(StepEvent(k, i * spacing) for i, k in enumerate(kinds))


_KINDS = {k.value: k for k in EventKind}


def _check_monotone(events: Sequence[StepEvent], where: str) -> None:
    for prev, cur in zip(events, events[1:]):
        if cur.t < prev.t:
            raise ValueError(
                f"{where}: event times must be non-decreasing; "
                f"got {cur.t:.6g} after {prev.t:.6g}"
            )


def parse_events(text: str, path: str = "<events>") -> tuple[StepEvent, ...]:
    """Parse an event script: one ``time kind`` pair per line, ``#`` comments
    and blank lines skipped."""
    events: list[StepEvent] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(path, lineno, "event", f"expected 'time kind', got {len(parts)} fields")
        try:
            t = float(parts[0])
        except ValueError:
            raise ParseError(path, lineno, "time", f"not a number: {parts[0]!r}") from None
        kind = _KINDS.get(parts[1])
        if kind is None:
            raise ParseError(
                path, lineno, "kind", f"unknown kind {parts[1]!r}; expected one of {sorted(_KINDS)}"
            )
        try:
            events.append(StepEvent(kind, t))
        except ValueError as exc:
            raise ParseError(path, lineno, "time", str(exc)) from None
    _check_monotone(events, path)
    return tuple(events)


def insertion_goal(hole: HoleEstimate, depth: float, reference: UnitQuaternion) -> Pose:
    """Goal pose for a square insertion: ``depth`` below the hole center
    along the axis, tool axis exactly anti-parallel to the hole axis, and
    the attitude otherwise moved as little as possible from ``reference``."""
    if depth <= 0:
        raise ValueError("depth must be positive")
    axis = np.asarray(hole.axis, dtype=float)
    position = np.asarray(hole.center, dtype=float) - depth * axis
    pointing = reference.rotate(_TOOL_AXIS)
    align = rotation_between(pointing, -axis)
    return Pose(position, quat_mul(align, reference))


@dataclass(frozen=True)
class InsertionPlan:
    """Primitive replay out to the standoff pose, then a constant-speed
    straight descent along the hole axis to the goal."""

    goal: Pose
    standoff_pose: Pose
    trajectory: Trajectory


def plan_insertion(
    current: Pose,
    hole: HoleEstimate,
    dmp: PoseDmp,
    standoff: float = 0.030,
    depth: float = 0.012,
    descent_speed: float = 0.02,
    dt: float = 1e-3,
) -> InsertionPlan:
    """Plan the approach-and-insert move for one fitted hole.

    The replayed primitive carries the demonstrated style from ``current``
    out to the standoff point above the hole; the last segment is a straight
    line along the axis so the peg enters square.  ``standoff`` and ``depth``
    are measured along the axis from the hole center, above and below.
    """
    if standoff <= 0:
        raise ValueError("standoff must be positive")
    if descent_speed <= 0:
        raise ValueError("descent_speed must be positive")
    goal = insertion_goal(hole, depth, dmp.demo_goal.orientation)
    axis = np.asarray(hole.axis, dtype=float)
    standoff_pose = Pose(np.asarray(hole.center, dtype=float) + standoff * axis, goal.orientation)

    approach = rollout(dmp, start=current, goal=standoff_pose, dt=dt)
    miss = float(np.linalg.norm(approach.positions[-1] - standoff_pose.position))
    if miss > _CONVERGENCE_TOL:
        raise RolloutDiverged(f"approach endpoint missed the standoff pose by {miss:.3g} m")

    n = max(2, int(math.ceil((standoff + depth) / (descent_speed * dt))))
    times = approach.times[-1] + np.arange(1, n + 1) * dt
    u = (np.arange(1, n + 1) / n)[:, None]
    positions = standoff_pose.position + u * (goal.position - standoff_pose.position)
    positions[-1] = goal.position
    orientations = np.tile(goal.orientation.as_array(), (n, 1))

    traj = Trajectory(
        np.concatenate([approach.times, times]),
        np.vstack([approach.positions, positions]),
        np.vstack([approach.orientations, orientations]),
    )
    return InsertionPlan(goal, standoff_pose, traj)


@dataclass(frozen=True)
class AssemblyScenario:
    """Everything one trial needs; ``hole_id`` and ``yaw`` left as None are
    drawn from the trial seed (uniform detectable hole, uniform yaw)."""

    scene: BarScene
    cam: CameraModel
    dmp: PoseDmp
    initial_pose: Pose
    hole_id: int | None = None
    yaw: float | None = None
    yaw_range: tuple[float, float] = (-math.pi / 3.0, math.pi / 3.0)
    clearance: float = 5e-4
    tilt_tol: float = math.radians(2.0)
    required_depth: float = 0.010
    standoff: float = 0.030
    plan_overtravel: float = 2e-3
    noise_sigma: float = 0.0
    dropout: float = 0.0
    mask_points: int = 600
    plant_time_constant: float = 0.05
    snap_band: float = 1e-3
    seed: int = 0

    def __post_init__(self) -> None:
        if self.mask_points < 3:
            raise ValueError("mask_points must be at least 3")
        if self.clearance <= 0 or self.tilt_tol <= 0 or self.required_depth <= 0:
            raise ValueError("clearance, tilt_tol, and required_depth must be positive")
        if self.standoff <= 0 or self.plan_overtravel < 0 or self.snap_band < 0:
            raise ValueError("standoff must be positive; overtravel and snap_band nonnegative")
        if self.hole_id is not None and not 0 <= self.hole_id < len(self.scene.holes):
            raise ValueError(f"hole_id {self.hole_id} outside 0..{len(self.scene.holes) - 1}")
        lo, hi = self.yaw_range
        if not lo <= hi:
            raise ValueError("yaw_range must be ordered")


def meets_tolerances(lateral: float, tilt: float, depth: float, scenario: AssemblyScenario) -> bool:
    """Success is exactly these three inequalities over the logged errors;
    a trial that never inserted carries nan and compares False."""
    return bool(
        lateral <= scenario.clearance
        and tilt <= scenario.tilt_tol
        and depth >= scenario.required_depth
    )


@dataclass(frozen=True)
class TrialResult:
    success: bool
    lateral_err_m: float
    tilt_rad: float
    depth_m: float
    hole_id: int | None
    yaw: float
    seed: int
    state: TaskState
    events: tuple[StepEvent, ...]
    duration_s: float
    jerk: JerkReport | None


def _detectable(scene: BarScene, cam: CameraModel, hole_id: int) -> bool:
    try:
        synthesize_mask(scene, cam, hole_id, 0.0, 0.0, seed=0)
    except NotDetectable:
        return False
    return True


def _contact_project(
    p: np.ndarray,
    center: np.ndarray,
    axis: np.ndarray,
    bar_inv: Pose,
    half_dims: np.ndarray,
    clearance: float,
    snap_band: float,
) -> np.ndarray:
    """Chamfer-style contact with the true bar.

    Above the top face (or off the bar footprint) motion is free; inside the
    hole the wall caps the lateral offset; within the chamfer band the peg
    funnels in; farther out the face blocks descent.  Attitude is untouched:
    the peg is short enough that wall torque is negligible at these tilts.
    """
    rel = p - center
    h = float(rel @ axis)
    if h >= 0.0:
        return p
    local = bar_inv.transform_point(p)
    if abs(local[0]) > half_dims[0] or abs(local[1]) > half_dims[1]:
        return p
    lat = rel - h * axis
    r = float(np.linalg.norm(lat))
    if r <= clearance:
        return p
    if r <= clearance + snap_band:
        # land a hair inside the wall so the boundary comparison stays robust
        return center + h * axis + lat * (clearance * (1.0 - 1e-9) / r)
    return p - h * axis


def _run_plan(
    plan: InsertionPlan,
    scenario: AssemblyScenario,
    scene: BarScene,
    hole_id: int,
    settle_time: float = 0.5,
) -> Trajectory:
    """Track the plan on the lagged plant, contact-projected against the
    true hole each step, then hold the last command until the lag dies."""
    center = scene.hole_center_world(hole_id)
    axis = scene.hole_axis_world(hole_id)
    bar_inv = scene.bar.inverse()
    half_dims = np.asarray(scene.dims, dtype=float) / 2.0
    cmd_t = plan.trajectory.times
    cmd_p = plan.trajectory.positions
    cmd_q = plan.trajectory.orientations

    start = Pose(cmd_p[0], UnitQuaternion(*cmd_q[0]))
    state = PlantState(start, start, scenario.plant_time_constant)
    times = [float(cmd_t[0])]
    out_p = [np.array(cmd_p[0])]
    out_q = [np.array(cmd_q[0])]

    def step(cmd: Pose, dt: float, t: float) -> None:
        nonlocal state
        state = plant_step(replace(state, x_c=cmd), dt)
        proj = _contact_project(
            state.x_r.position, center, axis, bar_inv, half_dims,
            scenario.clearance, scenario.snap_band,
        )
        if proj is not state.x_r.position:
            state = replace(state, x_r=Pose(proj, state.x_r.orientation))
        times.append(t)
        out_p.append(np.array(state.x_r.position))
        out_q.append(state.x_r.orientation.as_array())

    for i in range(1, cmd_t.size):
        cmd = Pose(cmd_p[i], UnitQuaternion(*cmd_q[i]))
        step(cmd, float(cmd_t[i] - cmd_t[i - 1]), float(cmd_t[i]))
    dt = float(cmd_t[-1] - cmd_t[-2])
    last = Pose(cmd_p[-1], UnitQuaternion(*cmd_q[-1]))
    for j in range(int(round(settle_time / dt))):
        step(last, dt, float(cmd_t[-1]) + (j + 1) * dt)

    return Trajectory(np.array(times), np.vstack(out_p), np.vstack(out_q))


def _final_errors(executed: Trajectory, scene: BarScene, hole_id: int) -> tuple[float, float, float]:
    """Lateral offset from the true hole axis, tool tilt from square, and
    depth below the top face, all at the final executed sample."""
    center = scene.hole_center_world(hole_id)
    axis = scene.hole_axis_world(hole_id)
    p = executed.positions[-1]
    q = UnitQuaternion(*executed.orientations[-1])
    rel = p - center
    h = float(rel @ axis)
    lateral = float(np.linalg.norm(rel - h * axis))
    pointing = q.rotate(_TOOL_AXIS)
    tilt = math.acos(float(np.clip(-(pointing @ axis), -1.0, 1.0)))
    return lateral, tilt, -h


def execute_trial(
    scenario: AssemblyScenario, events: Sequence[StepEvent] | None = None
) -> TrialResult:
    """Run one trial: resolve the seeded choices, walk the state machine over
    the event stream, and localize / plan / execute at the matching steps.

    Vision failures become a FAILED state with its reason, not an exception;
    the trial's errors stay nan unless the insertion motion actually ran.
    """
    evs = nominal_events() if events is None else tuple(events)
    _check_monotone(evs, "events")

    rng = np.random.default_rng(scenario.seed)
    yaw = scenario.yaw if scenario.yaw is not None else float(rng.uniform(*scenario.yaw_range))
    scene = scenario.scene.yawed(yaw)
    hole_id = scenario.hole_id
    no_hole_reason = None
    if hole_id is None:
        candidates = [i for i in range(len(scene.holes)) if _detectable(scene, scenario.cam, i)]
        if candidates:
            hole_id = int(rng.choice(np.asarray(candidates)))
        else:
            no_hole_reason = "hole not detectable: no hole is visible from the camera"
    vision_seed = int(rng.integers(0, 2**31 - 1))

    state = TaskState()
    plan: InsertionPlan | None = None
    lateral = tilt = depth = math.nan
    duration = 0.0
    jerk: JerkReport | None = None

    for ev in evs:
        state = advance(state, ev)
        if state.phase is Phase.FAILED:
            continue
        if state.phase is Phase.INSERTION_PLANNED and plan is None:
            if no_hole_reason is not None:
                state = TaskState(Phase.FAILED, no_hole_reason)
                continue
            try:
                # denser than the oracle default: the tilt of the fitted
                # plane is the noise floor of the whole trial, and the rim
                # annulus of a real mask yields several hundred pixels
                mask = synthesize_mask(
                    scene, scenario.cam, hole_id,
                    scenario.noise_sigma, scenario.dropout, seed=vision_seed,
                    n_points=scenario.mask_points,
                )
                est = fit_circle3d(mask)
            except (NotDetectable, ValueError) as exc:
                state = TaskState(Phase.FAILED, f"hole not detectable: {exc}")
                continue
            est_world = HoleEstimate(
                center=scenario.cam.pose.transform_point(est.center),
                axis=scenario.cam.pose.transform_direction(est.axis),
                radius=est.radius,
                rms=est.rms,
            )
            plan = plan_insertion(
                scenario.initial_pose, est_world, scenario.dmp,
                standoff=scenario.standoff,
                depth=scenario.required_depth + scenario.plan_overtravel,
            )
        elif state.phase is Phase.INSERTING:
            if plan is None:
                state = TaskState(Phase.FAILED, "insertion started without a plan")
                continue
            executed = _run_plan(plan, scenario, scene, hole_id)
            lateral, tilt, depth = _final_errors(executed, scene, hole_id)
            duration = executed.duration
            jerk = jerk_metrics(executed)

    if state.phase is Phase.FAILED:
        lateral = tilt = depth = math.nan
        duration = 0.0
        jerk = None

    return TrialResult(
        success=meets_tolerances(lateral, tilt, depth, scenario),
        lateral_err_m=lateral,
        tilt_rad=tilt,
        depth_m=depth,
        hole_id=hole_id,
        yaw=yaw,
        seed=scenario.seed,
        state=state,
        events=evs,
        duration_s=duration,
        jerk=jerk,
    )


@dataclass(frozen=True)
class BatchResult:
    records: tuple[TrialResult, ...]
    success_rate: float
    failure_reasons: tuple[tuple[str, int], ...]


def run_batch(template: AssemblyScenario, n: int = 20, seed: int = 0) -> BatchResult:
    """Independent seeded reruns of one scenario template.

    Trial i runs with seed ``seed * 1000003 + i``, so any prefix of a batch
    reproduces on its own; the reduction is a plain ordered loop.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    records = tuple(execute_trial(replace(template, seed=seed * 1000003 + i)) for i in range(n))
    rate = sum(r.success for r in records) / n
    reasons = Counter(r.state.reason for r in records if r.state.phase is Phase.FAILED)
    return BatchResult(records, float(rate), tuple(sorted(reasons.items())))


def _num(x: float) -> float | None:
    return float(x) if math.isfinite(x) else None


def trial_to_dict(r: TrialResult) -> dict:
    return {
        "success": bool(r.success),
        "lateral_err_m": _num(r.lateral_err_m),
        "tilt_rad": _num(r.tilt_rad),
        "depth_m": _num(r.depth_m),
        "hole_id": r.hole_id,
        "yaw": float(r.yaw),
        "seed": r.seed,
        "phase": r.state.phase.value,
        "reason": r.state.reason,
        "duration_s": float(r.duration_s),
        "jerk": None if r.jerk is None else jerk_report_to_dict(r.jerk),
        "events": [[e.t, e.kind.value] for e in r.events],
    }


def batch_to_dict(b: BatchResult) -> dict:
    return {
        "n": len(b.records),
        "success_rate": b.success_rate,
        "failure_reasons": dict(b.failure_reasons),
        "trials": [trial_to_dict(r) for r in b.records],
    }


def _fmt(x: float) -> str:
    return format(float(x), ".9g")


def batch_csv_text(b: BatchResult) -> str:
    """One row per trial: ``trial,seed,hole_id,success,lat_err_m,tilt_rad,depth_m``."""
    lines = ["trial,seed,hole_id,success,lat_err_m,tilt_rad,depth_m"]
    for i, r in enumerate(b.records):
        hole = "" if r.hole_id is None else str(r.hole_id)
        lines.append(
            f"{i},{r.seed},{hole},{int(r.success)},"
            f"{_fmt(r.lateral_err_m)},{_fmt(r.tilt_rad)},{_fmt(r.depth_m)}"
        )
    return "\n".join(lines) + "\n"
