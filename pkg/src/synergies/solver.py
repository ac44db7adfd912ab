"""Reaching tasks solved by combining dynamic responses, then projecting onto synergies.

A task is first solved kinematically: the responses, expressed as deviations
from the common initial posture, are mixed with combinators ``a`` so that the
mixture meets the final posture at rest. The torque realizing that mixture
is computed by inverse dynamics and projected onto the span of the
synergies, giving the synergy combinators ``b``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .arm import (
    ActuationSignal,
    ArmModel,
    JointState,
    Trajectory,
    integrate,
    inverse_dynamics,
    inverse_kinematics,
    wrap_angle,
)
from .errors import DimensionError, DivergenceError
from .metrics import (
    ErrorReport,
    forward_dynamics_error,
    interpolation_error,
    projection_error,
)

RCOND = 1e-10
COMBINATOR_KINDS = ("kinematic_a", "synergy_b", "probe_lambda")


@dataclass(frozen=True)
class ReachingTask:
    """Rest-to-rest point-to-point task over ``[0, T]``."""

    q0: np.ndarray
    qT: np.ndarray
    T: float
    q0dot: np.ndarray = None
    qTdot: np.ndarray = None

    def __post_init__(self):
        q0 = np.array(self.q0, dtype=float).reshape(-1)
        qT = np.array(self.qT, dtype=float).reshape(-1)
        if q0.shape != qT.shape:
            raise DimensionError("q0 and qT must have the same length")
        z = np.zeros_like(q0)
        q0dot = z if self.q0dot is None else np.array(self.q0dot, dtype=float).reshape(-1)
        qTdot = z if self.qTdot is None else np.array(self.qTdot, dtype=float).reshape(-1)
        if np.any(q0dot != 0) or np.any(qTdot != 0):
            raise ValueError("only rest-to-rest tasks (zero initial and final velocity) are supported")
        if not self.T > 0:
            raise ValueError("T must be positive")
        for name, v in (("q0", q0), ("qT", qT), ("q0dot", q0dot), ("qTdot", qTdot)):
            object.__setattr__(self, name, v)
        object.__setattr__(self, "T", float(self.T))

    @classmethod
    def to_point(cls, model: ArmModel, q0, target, T: float, branch="elbow_down") -> "ReachingTask":
        """Task reaching the end-effector point ``target`` from posture ``q0``.

        The final posture is the representative of the inverse-kinematics
        solution closest to ``q0`` (each joint moves by at most pi).
        """
        q0 = np.asarray(q0, dtype=float)
        qT = inverse_kinematics(model, target, branch)
        return cls(q0, q0 + wrap_angle(qT - q0), T)

    def to_dict(self) -> dict:
        return {"q0": self.q0.tolist(), "qT": self.qT.tolist(), "T": self.T}

    @classmethod
    def from_dict(cls, d: dict) -> "ReachingTask":
        return cls(d["q0"], d["qT"], d["T"], d.get("q0dot"), d.get("qTdot"))


@dataclass(frozen=True)
class CombinatorVector:
    coefficients: np.ndarray
    kind: str = "kinematic_a"
    underdetermined: bool = False

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float).reshape(-1)
        if not np.all(np.isfinite(c)):
            raise ValueError("combinators must be finite")
        if self.kind not in COMBINATOR_KINDS:
            raise ValueError(f"kind must be one of {COMBINATOR_KINDS}")
        object.__setattr__(self, "coefficients", c)

    def __len__(self):
        return self.coefficients.size

    @classmethod
    def unit(cls, i, size, kind="kinematic_a"):
        e = np.zeros(size)
        e[i] = 1.0
        return cls(e, kind)


@dataclass(frozen=True)
class BasisSet:
    """Paired synergies and dynamic responses on a shared time grid.

    Arrays have shape ``(K, N, n)``: ``K`` basis elements, ``N`` samples,
    ``n`` joints. Every response starts at rest at ``q0``.
    """

    dt: float
    q0: np.ndarray
    synergies: np.ndarray
    q: np.ndarray
    qdot: np.ndarray
    qddot: np.ndarray
    kind: str = "exploration"
    source_indices: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        shapes = {a.shape for a in (self.synergies, self.q, self.qdot, self.qddot)}
        if len(shapes) != 1 or self.synergies.ndim != 3:
            raise DimensionError(f"basis arrays must share one (K, N, n) shape, got {shapes}")
        object.__setattr__(self, "q0", np.asarray(self.q0, dtype=float).reshape(-1))

    @classmethod
    def from_archive(cls, archive, indices=None) -> "BasisSet":
        idx = np.arange(len(archive)) if indices is None else np.asarray(indices)
        return cls(
            archive.dt, np.asarray(archive.config.initial_q), archive.signals[idx],
            archive.q[idx], archive.qdot[idx], archive.qddot[idx],
            kind="exploration", source_indices=tuple(int(i) for i in idx),
        )

    def subset(self, indices) -> "BasisSet":
        idx = np.asarray(indices)
        src = None if self.source_indices is None else tuple(self.source_indices[i] for i in idx)
        return BasisSet(self.dt, self.q0, self.synergies[idx], self.q[idx], self.qdot[idx],
                        self.qddot[idx], self.kind, src)

    @property
    def size(self) -> int:
        return self.synergies.shape[0]

    @property
    def n_samples(self) -> int:
        return self.synergies.shape[1]

    @property
    def n_joints(self) -> int:
        return self.synergies.shape[2]

    @property
    def duration(self) -> float:
        return (self.n_samples - 1) * self.dt

    def synergy(self, i) -> ActuationSignal:
        return ActuationSignal(self.dt, self.synergies[i])

    def response(self, i) -> Trajectory:
        return Trajectory(self.dt, self.q[i], self.qdot[i], self.qddot[i])

    @cached_property
    def synergy_matrix(self) -> np.ndarray:
        """Synergies as columns of an ``(N*n, K)`` matrix."""
        return self.synergies.reshape(self.size, -1).T

    @cached_property
    def synergy_pinv(self) -> np.ndarray:
        return np.linalg.pinv(self.synergy_matrix, rcond=RCOND)

    @cached_property
    def end_constraints(self) -> np.ndarray:
        """``(2n, K)`` matrix of final deviations and final velocities of each response."""
        dev = self.q[:, -1, :] - self.q0
        return np.concatenate([dev, self.qdot[:, -1, :]], axis=1).T


def _check_task(basis: BasisSet, task: ReachingTask):
    if task.q0.shape[0] != basis.n_joints:
        raise DimensionError("task and basis joint counts differ")
    if not np.allclose(task.q0, basis.q0, rtol=0, atol=1e-12):
        raise ValueError(f"task starts at {task.q0}, basis responses start at {basis.q0}")
    if not np.isclose(task.T, basis.duration, rtol=1e-9):
        raise ValueError(f"task duration {task.T} differs from basis duration {basis.duration}")


def solve_kinematic(basis: BasisSet, task: ReachingTask) -> CombinatorVector:
    """Minimum-norm least-squares combinators meeting the task's final state."""
    _check_task(basis, task)
    A = basis.end_constraints
    rhs = np.concatenate([task.qT - task.q0, task.qTdot])
    u, s, vt = np.linalg.svd(A, full_matrices=False)
    keep = s > RCOND * s[0] if s.size and s[0] > 0 else np.zeros_like(s, dtype=bool)
    a = vt[keep].T @ ((u[:, keep].T @ rhs) / s[keep])
    return CombinatorVector(a, "kinematic_a", underdetermined=int(keep.sum()) < A.shape[0])


def interpolant(basis: BasisSet, a: CombinatorVector) -> Trajectory:
    """The mixture ``q0 + sum_i a_i (theta_i - q0)`` with its exact derivatives."""
    c = a.coefficients
    if c.size != basis.size:
        raise DimensionError(f"{c.size} combinators for a basis of size {basis.size}")
    q = basis.q0 + np.einsum("k,kni->ni", c, basis.q - basis.q0)
    qd = np.einsum("k,kni->ni", c, basis.qdot)
    qdd = np.einsum("k,kni->ni", c, basis.qddot)
    return Trajectory(basis.dt, q, qd, qdd)


def compute_task_actuation(model: ArmModel, basis: BasisSet, a: CombinatorVector) -> ActuationSignal:
    if a.kind != "kinematic_a":
        raise ValueError("expected kinematic combinators")
    return inverse_dynamics(model, interpolant(basis, a))


def project_onto_synergies(basis: BasisSet, u_target: ActuationSignal) -> CombinatorVector:
    """``b = pinv(Phi) u``: least-squares (minimum-norm) synergy combinators."""
    if u_target.u.shape != basis.synergies.shape[1:] or not np.isclose(u_target.dt, basis.dt):
        raise DimensionError("actuation does not match the basis discretization")
    return CombinatorVector(basis.synergy_pinv @ u_target.u.reshape(-1), "synergy_b")


def synergy_actuation(basis: BasisSet, b: CombinatorVector) -> ActuationSignal:
    """``Phi b`` (also used with probe combinators)."""
    if b.coefficients.size != basis.size:
        raise DimensionError(f"{b.coefficients.size} combinators for a basis of size {basis.size}")
    return ActuationSignal(basis.dt, np.einsum("k,kni->ni", b.coefficients, basis.synergies))


def map_M(model: ArmModel, basis: BasisSet, a: CombinatorVector) -> CombinatorVector:
    """The nonlinear map from kinematic to synergy combinators."""
    return project_onto_synergies(basis, compute_task_actuation(model, basis, a))


@dataclass(frozen=True)
class TaskSolution:
    task: ReachingTask
    a: CombinatorVector
    b: CombinatorVector
    interpolant: Trajectory
    actuation_target: ActuationSignal
    actuation_realized: ActuationSignal
    realized: Trajectory
    errors: ErrorReport

    def to_dict(self) -> dict:
        return {
            "task": self.task.to_dict(),
            "a": self.a.coefficients.tolist(),
            "b": self.b.coefficients.tolist(),
            "underdetermined": self.a.underdetermined,
            "errors": self.errors.to_dict(),
        }


def solve_tasks(model: ArmModel, basis: BasisSet, tasks) -> list:
    """Solve several tasks against one basis; forward integrations run as one batch.

    Entries are :class:`TaskSolution`, or a :class:`DivergenceError` for tasks
    whose realized actuation could not be integrated.
    """
    tasks = list(tasks)
    if not tasks:
        return []
    parts = []
    for task in tasks:
        a = solve_kinematic(basis, task)
        interp = interpolant(basis, a)
        u_t = inverse_dynamics(model, interp)
        b = project_onto_synergies(basis, u_t)
        parts.append((task, a, interp, u_t, b, synergy_actuation(basis, b)))

    torques = np.stack([p[5].u for p in parts])
    q, qd, qdd, ok, bad = integrate(model, torques, basis.dt, basis.q0, np.zeros_like(basis.q0))
    out = []
    for j, (task, a, interp, u_t, b, u_r) in enumerate(parts):
        if not ok[j]:
            out.append(DivergenceError(bad[j], bad[j] * basis.dt))
            continue
        realized = Trajectory(basis.dt, q[j], qd[j], qdd[j])
        report = ErrorReport(
            err_I=interpolation_error(task, interp),
            err_P=projection_error(u_t, u_r),
            err_F=forward_dynamics_error(task, realized, "joint"),
            err_F_ee=forward_dynamics_error(task, realized, "end_effector", model),
        )
        out.append(TaskSolution(task, a, b, interp, u_t, u_r, realized, report))
    return out


def solve_task(model: ArmModel, basis: BasisSet, task: ReachingTask) -> TaskSolution:
    """Full pipeline for one task: interpolate, inverse dynamics, project, integrate, score."""
    _check_task(basis, task)
    res = solve_tasks(model, basis, [task])[0]
    if isinstance(res, Exception):
        raise res
    return res


def initial_state(basis: BasisSet) -> JointState:
    return JointState(basis.q0)
