"""Quality measures of a reaching-task solution."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .arm import (
    ActuationSignal,
    ArmModel,
    Trajectory,
    end_effector_velocity,
    forward_kinematics,
    wrap_angle,
)
from .errors import DimensionError


@dataclass(frozen=True)
class ErrorReport:
    """Errors of one solved task.

    ``err_I`` and ``err_F`` mix rad and rad/s, ``err_F_ee`` mixes m and m/s,
    ``err_P`` is in N m s^0.5.
    """

    err_I: float
    err_P: float
    err_F: float
    err_F_ee: float

    def __post_init__(self):
        for k, v in asdict(self).items():
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{k} must be finite and non-negative, got {v}")

    def to_dict(self) -> dict:
        return asdict(self)


def _final_state_distance(dq, dqdot):
    return float(np.sqrt(np.sum(np.square(dq)) + np.sum(np.square(dqdot))))


def interpolation_error(task, interpolant: Trajectory) -> float:
    """Distance between the interpolant's final state and the task's target state."""
    t = interpolant.with_derivatives()
    return _final_state_distance(wrap_angle(task.qT - t.q[-1]), t.qdot[-1] - task.qTdot)


def projection_error(u_target: ActuationSignal, u_realized: ActuationSignal) -> float:
    """L2 distance over [0, T] between two torque signals (trapezoidal rule)."""
    if u_target.u.shape != u_realized.u.shape or u_target.dt != u_realized.dt:
        raise DimensionError("signals must share sample count, joint count and dt")
    sq = np.sum(np.square(u_target.u - u_realized.u), axis=1)
    return float(np.sqrt(np.trapezoid(sq, dx=u_target.dt)))


def forward_dynamics_error(task, realized: Trajectory, space: str = "joint", model: ArmModel | None = None) -> float:
    """Distance between a realized trajectory's final state and the task's target.

    ``space="joint"`` compares angles (wrapped) and joint velocities;
    ``space="end_effector"`` compares end-effector positions and velocities,
    the realized velocity taken through the Jacobian at the final posture.
    """
    t = realized.with_derivatives()
    q, qdot = t.q[-1], t.qdot[-1]
    if space == "joint":
        return _final_state_distance(wrap_angle(q - task.qT), qdot - task.qTdot)
    if space == "end_effector":
        if model is None:
            raise ValueError("end-effector error needs the arm model")
        dp = forward_kinematics(model, q) - forward_kinematics(model, task.qT)
        dv = end_effector_velocity(model, q, qdot) - end_effector_velocity(model, task.qT, task.qTdot)
        return _final_state_distance(dp, dv)
    raise ValueError(f"unknown space {space!r}")
