"""Planar kinematic chain: dynamics with an RK4 integrator, plus kinematics.

Joint angles are relative (joint ``i`` measured from link ``i-1``), the chain
lies in the x-y plane and gravity, when nonzero, acts along -y. All array
functions accept arbitrary leading batch dimensions: ``q`` has shape
``(..., n_links)``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DivergenceError, ReachabilityError

DEFAULT_DT = 5e-3


def _as_tuple(values, name, n=None):
    out = tuple(float(v) for v in np.atleast_1d(np.asarray(values, dtype=float)))
    if n is not None and len(out) != n:
        raise DimensionError(f"{name} has {len(out)} entries, expected {n}")
    return out


@dataclass(frozen=True)
class ArmModel:
    """Physical parameters of a planar serial chain with revolute joints.

    Units are SI: lengths and center-of-mass offsets in m, masses in kg,
    inertias (about each link's center of mass) in kg m^2, viscous joint
    damping in N m s/rad and gravity in m/s^2.
    """

    link_lengths: tuple = (0.30, 0.33)
    link_masses: tuple = (2.10, 1.65)
    link_com_offsets: tuple = (0.15, 0.18)
    link_inertias: tuple = (0.0159, 0.0257)
    joint_damping: tuple = (0.1, 0.1)
    gravity: float = 0.0

    def __post_init__(self):
        lengths = _as_tuple(self.link_lengths, "link_lengths")
        n = len(lengths)
        if n < 1:
            raise ValueError("an arm needs at least one link")
        set_ = object.__setattr__
        set_(self, "link_lengths", lengths)
        set_(self, "link_masses", _as_tuple(self.link_masses, "link_masses", n))
        set_(self, "link_com_offsets", _as_tuple(self.link_com_offsets, "link_com_offsets", n))
        set_(self, "link_inertias", _as_tuple(self.link_inertias, "link_inertias", n))
        set_(self, "joint_damping", _as_tuple(self.joint_damping, "joint_damping", n))
        set_(self, "gravity", float(self.gravity))

        values = (
            self.link_lengths + self.link_masses + self.link_com_offsets
            + self.link_inertias + self.joint_damping + (self.gravity,)
        )
        if not np.all(np.isfinite(values)):
            raise ValueError("arm parameters must be finite")
        if min(self.link_lengths) <= 0 or min(self.link_masses) <= 0 or min(self.link_inertias) <= 0:
            raise ValueError("link lengths, masses and inertias must be strictly positive")
        for c, l in zip(self.link_com_offsets, self.link_lengths):
            if not 0.0 <= c <= l:
                raise ValueError(f"center-of-mass offset {c} outside [0, {l}]")
        if min(self.joint_damping) < 0:
            raise ValueError("joint damping must be non-negative")

    @property
    def n_links(self) -> int:
        return len(self.link_lengths)

    def to_dict(self) -> dict:
        return {
            "link_lengths": list(self.link_lengths),
            "link_masses": list(self.link_masses),
            "link_com_offsets": list(self.link_com_offsets),
            "link_inertias": list(self.link_inertias),
            "joint_damping": list(self.joint_damping),
            "gravity": self.gravity,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ArmModel":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    # -- equations of motion -------------------------------------------------

    def mass_matrix(self, q) -> np.ndarray:
        q = self._check(q)
        if self.n_links == 2:
            return _mass_matrix_2link(self, q)
        n = self.n_links
        zeros = np.zeros_like(q)
        cols = []
        for j in range(n):
            e = np.zeros_like(q)
            e[..., j] = 1.0
            cols.append(_rnea(self, q, zeros, e, gravity=0.0))
        return np.stack(cols, axis=-1)

    def bias(self, q, qdot) -> np.ndarray:
        """Velocity and gravity dependent torques ``C q' + B q' + g``."""
        q = self._check(q)
        qdot = self._check(qdot)
        damping = np.asarray(self.joint_damping) * qdot
        if self.n_links == 2:
            return _bias_2link(self, q, qdot) + damping
        return _rnea(self, q, qdot, np.zeros_like(q), gravity=self.gravity) + damping

    def torque(self, q, qdot, qddot) -> np.ndarray:
        qddot = self._check(qddot)
        return np.einsum("...ij,...j->...i", self.mass_matrix(q), qddot) + self.bias(q, qdot)

    def acceleration(self, q, qdot, u) -> np.ndarray:
        rhs = np.asarray(u, dtype=float) - self.bias(q, qdot)
        if self.n_links == 2:
            m = _mass_matrix_2link(self, np.asarray(q, dtype=float))
            m11, m12, m22 = m[..., 0, 0], m[..., 0, 1], m[..., 1, 1]
            det = m11 * m22 - m12 * m12
            a1 = (m22 * rhs[..., 0] - m12 * rhs[..., 1]) / det
            a2 = (m11 * rhs[..., 1] - m12 * rhs[..., 0]) / det
            return np.stack([a1, a2], axis=-1)
        return np.linalg.solve(self.mass_matrix(q), rhs[..., None])[..., 0]

    def kinetic_energy(self, q, qdot) -> np.ndarray:
        qdot = np.asarray(qdot, dtype=float)
        return 0.5 * np.einsum("...i,...ij,...j->...", qdot, self.mass_matrix(q), qdot)

    def _check(self, q):
        q = np.asarray(q, dtype=float)
        if q.ndim == 0 or q.shape[-1] != self.n_links:
            raise DimensionError(f"expected trailing dimension {self.n_links}, got shape {q.shape}")
        return q


def _mass_matrix_2link(model, q):
    l1 = model.link_lengths[0]
    m1, m2 = model.link_masses
    c1, c2 = model.link_com_offsets
    i1, i2 = model.link_inertias
    cos2 = np.cos(q[..., 1])
    m11 = i1 + i2 + m1 * c1**2 + m2 * (l1**2 + c2**2 + 2 * l1 * c2 * cos2)
    m12 = i2 + m2 * (c2**2 + l1 * c2 * cos2)
    m22 = np.full_like(m11, i2 + m2 * c2**2)
    return np.stack([np.stack([m11, m12], -1), np.stack([m12, m22], -1)], -2)


def _bias_2link(model, q, qdot):
    l1 = model.link_lengths[0]
    m1, m2 = model.link_masses
    c1, c2 = model.link_com_offsets
    g = model.gravity
    h = m2 * l1 * c2 * np.sin(q[..., 1])
    qd1, qd2 = qdot[..., 0], qdot[..., 1]
    b1 = -h * (2 * qd1 * qd2 + qd2**2)
    b2 = h * qd1**2
    if g != 0.0:
        cos12 = np.cos(q[..., 0] + q[..., 1])
        b1 = b1 + (m1 * c1 + m2 * l1) * g * np.cos(q[..., 0]) + m2 * c2 * g * cos12
        b2 = b2 + m2 * c2 * g * cos12
    return np.stack([b1, b2], axis=-1)


def _cross(r, f):
    return r[..., 0] * f[..., 1] - r[..., 1] * f[..., 0]


def _rnea(model, q, qdot, qddot, gravity):
    """Recursive Newton-Euler inverse dynamics for a planar chain, without damping."""
    n = model.n_links
    phi = np.cumsum(q, axis=-1)
    omega = np.cumsum(qdot, axis=-1)
    alpha = np.cumsum(qddot, axis=-1)
    batch = q.shape[:-1]

    acc = np.zeros(batch + (2,))
    acc[..., 1] = gravity  # base acceleration emulates gravity along -y
    com_acc, com_arm, link_vec = [], [], []
    for i in range(n):
        e = np.stack([np.cos(phi[..., i]), np.sin(phi[..., i])], -1)
        e_perp = np.stack([-e[..., 1], e[..., 0]], -1)
        w, a = omega[..., i, None], alpha[..., i, None]
        r, l = model.link_com_offsets[i], model.link_lengths[i]
        com_acc.append(acc + r * (a * e_perp - w**2 * e))
        com_arm.append(r * e)
        link_vec.append(l * e)
        acc = acc + l * (a * e_perp - w**2 * e)

    tau = np.zeros(batch + (n,))
    force = np.zeros(batch + (2,))
    moment = np.zeros(batch)
    for i in reversed(range(n)):
        f_i = model.link_masses[i] * com_acc[i]
        moment = (
            moment + model.link_inertias[i] * alpha[..., i]
            + _cross(com_arm[i], f_i) + _cross(link_vec[i], force)
        )
        force = force + f_i
        tau[..., i] = moment
    return tau


# -- sampled signals -------------------------------------------------------------


@dataclass(frozen=True)
class JointState:
    q: np.ndarray
    qdot: np.ndarray = None

    def __post_init__(self):
        q = np.array(self.q, dtype=float).reshape(-1)
        qdot = np.zeros_like(q) if self.qdot is None else np.array(self.qdot, dtype=float).reshape(-1)
        if qdot.shape != q.shape:
            raise DimensionError("q and qdot must have the same length")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(qdot))):
            raise ValueError("joint state must be finite")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "qdot", qdot)

    @classmethod
    def at_rest(cls, q) -> "JointState":
        return cls(q)


def central_velocity(x, dt):
    """2nd-order central differences, 2nd-order one-sided at both ends."""
    x = np.asarray(x, dtype=float)
    # differencing offsets from the first sample keeps constant signals exactly still
    return np.gradient(x - x[0], dt, axis=0, edge_order=2)


def central_acceleration(x, dt):
    x = np.asarray(x, dtype=float)
    if x.shape[0] < 4:
        raise ValueError("need at least 4 samples for second differences")
    x = x - x[0]
    out = np.empty_like(x)
    out[1:-1] = x[2:] - 2 * x[1:-1] + x[:-2]
    out[0] = 2 * x[0] - 5 * x[1] + 4 * x[2] - x[3]
    out[-1] = 2 * x[-1] - 5 * x[-2] + 4 * x[-3] - x[-4]
    return out / dt**2


@dataclass(frozen=True)
class Trajectory:
    """Joint-space path sampled at ``N`` instants ``k * dt``.

    ``qdot`` and ``qddot`` are optional; :meth:`with_derivatives` fills the
    missing ones by finite differences. Trajectories produced by
    :func:`forward_dynamics` carry the integrator's own velocities and the
    accelerations given by the equations of motion.
    """

    dt: float
    q: np.ndarray
    qdot: np.ndarray | None = None
    qddot: np.ndarray | None = None

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        if q.ndim == 1:
            q = q[:, None]
        if q.ndim != 2 or q.shape[0] < 2:
            raise DimensionError(f"trajectory samples must have shape (N >= 2, n), got {q.shape}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "dt", float(self.dt))
        for name in ("qdot", "qddot"):
            v = getattr(self, name)
            if v is not None:
                v = np.asarray(v, dtype=float).reshape(q.shape)
                object.__setattr__(self, name, v)

    @property
    def n_samples(self) -> int:
        return self.q.shape[0]

    @property
    def duration(self) -> float:
        return (self.n_samples - 1) * self.dt

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_samples) * self.dt

    def with_derivatives(self) -> "Trajectory":
        if self.qdot is not None and self.qddot is not None:
            return self
        qdot = self.qdot if self.qdot is not None else central_velocity(self.q, self.dt)
        if self.qddot is not None:
            qddot = self.qddot
        elif self.qdot is not None:
            qddot = central_velocity(self.qdot, self.dt)
        else:
            qddot = central_acceleration(self.q, self.dt)
        return Trajectory(self.dt, self.q, qdot, qddot)

    def final_state(self) -> JointState:
        t = self.with_derivatives()
        return JointState(t.q[-1], t.qdot[-1])


@dataclass(frozen=True)
class ActuationSignal:
    """Joint torques [N m] sampled at ``N`` instants ``k * dt``."""

    dt: float
    u: np.ndarray = field(repr=False)

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        if u.ndim == 1:
            u = u[:, None]
        if u.ndim != 2 or u.shape[0] < 2:
            raise DimensionError(f"actuation samples must have shape (N >= 2, n), got {u.shape}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def n_samples(self) -> int:
        return self.u.shape[0]

    @property
    def duration(self) -> float:
        return (self.n_samples - 1) * self.dt


# -- dynamics ---------------------------------------------------------------------


def inverse_dynamics(model: ArmModel, traj: Trajectory) -> ActuationSignal:
    """Torques realizing ``traj``: ``u = M(q) q'' + C(q, q') q' + B q' + g(q)``."""
    if traj.q.shape[1] != model.n_links:
        raise DimensionError(
            f"trajectory has {traj.q.shape[1]} joints, model has {model.n_links}"
        )
    t = traj.with_derivatives()
    return ActuationSignal(t.dt, model.torque(t.q, t.qdot, t.qddot))


def midpoint_torques(u):
    """Cubic (4-point Lagrange) interpolation of torques half-way between samples.

    ``u`` has shape ``(..., N, n)``; returns ``(..., N-1, n)``. Interior
    intervals use the centred stencil, the first and last use one-sided ones.
    Falls back to linear interpolation when fewer than 4 samples exist.
    """
    u = np.asarray(u, dtype=float)
    n = u.shape[-2]
    if n < 4:
        return 0.5 * (u[..., 1:, :] + u[..., :-1, :])
    mid = np.empty(u.shape[:-2] + (n - 1,) + u.shape[-1:])
    mid[..., 1:-1, :] = (-u[..., :-3, :] + 9 * u[..., 1:-2, :] + 9 * u[..., 2:-1, :] - u[..., 3:, :]) / 16
    mid[..., 0, :] = (5 * u[..., 0, :] + 15 * u[..., 1, :] - 5 * u[..., 2, :] + u[..., 3, :]) / 16
    mid[..., -1, :] = (5 * u[..., -1, :] + 15 * u[..., -2, :] - 5 * u[..., -3, :] + u[..., -4, :]) / 16
    return mid


def integrate(model: ArmModel, torques, dt: float, q0, qdot0):
    """Batched fixed-step RK4 integration of the equations of motion.

    Parameters
    ----------
    torques : array, shape (B, N, n)
    q0, qdot0 : array, shape (n,) or (B, n)

    Returns
    -------
    q, qdot, qddot : arrays, shape (B, N, n)
    finite : bool array, shape (B,)
        False for signals whose state became non-finite.
    first_bad : int array, shape (B,)
        Step index at which each diverging signal first went non-finite, -1 otherwise.
    """
    u = np.asarray(torques, dtype=float)
    if u.ndim != 3 or u.shape[-1] != model.n_links:
        raise DimensionError(f"torques must have shape (B, N, {model.n_links}), got {u.shape}")
    b, n_steps, n = u.shape
    u_mid = midpoint_torques(u)
    q = np.empty_like(u)
    qd = np.empty_like(u)
    qdd = np.empty_like(u)
    x = np.broadcast_to(np.asarray(q0, dtype=float), (b, n)).copy()
    v = np.broadcast_to(np.asarray(qdot0, dtype=float), (b, n)).copy()
    first_bad = np.full(b, -1)
    acc = model.acceleration
    h = dt / 2
    with np.errstate(all="ignore"):
        for k in range(n_steps):
            q[:, k], qd[:, k] = x, v
            a1 = acc(x, v, u[:, k])
            qdd[:, k] = a1
            bad = ~np.all(np.isfinite(a1), axis=-1) & (first_bad < 0)
            first_bad[bad] = k
            if k == n_steps - 1:
                break
            x2, v2 = x + h * v, v + h * a1
            a2 = acc(x2, v2, u_mid[:, k])
            x3, v3 = x + h * v2, v + h * a2
            a3 = acc(x3, v3, u_mid[:, k])
            x4, v4 = x + dt * v3, v + dt * a3
            a4 = acc(x4, v4, u[:, k + 1])
            x = x + dt / 6 * (v + 2 * v2 + 2 * v3 + v4)
            v = v + dt / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
    return q, qd, qdd, first_bad < 0, first_bad


def forward_dynamics(model: ArmModel, u: ActuationSignal, init: JointState) -> Trajectory:
    """Response of the arm to ``u`` starting from ``init``, sampled like ``u``."""
    if u.u.shape[1] != model.n_links or init.q.shape[0] != model.n_links:
        raise DimensionError("actuation/initial state do not match the model's joint count")
    if not np.all(np.isfinite(u.u)):
        raise ValueError("actuation must be finite")
    q, qd, qdd, ok, bad = integrate(model, u.u[None], u.dt, init.q, init.qdot)
    if not ok[0]:
        raise DivergenceError(bad[0], bad[0] * u.dt)
    return Trajectory(u.dt, q[0], qd[0], qdd[0])


# -- kinematics -------------------------------------------------------------------


def forward_kinematics(model: ArmModel, q) -> np.ndarray:
    """End-effector position(s), shape ``(..., 2)``."""
    q = model._check(q)
    phi = np.cumsum(q, axis=-1)
    lengths = np.asarray(model.link_lengths)
    return np.stack([(lengths * np.cos(phi)).sum(-1), (lengths * np.sin(phi)).sum(-1)], -1)


def joint_positions(model: ArmModel, q) -> np.ndarray:
    """Base, intermediate joints and end effector, shape ``(..., n+1, 2)``."""
    q = model._check(q)
    phi = np.cumsum(q, axis=-1)
    lengths = np.asarray(model.link_lengths)
    seg = np.stack([lengths * np.cos(phi), lengths * np.sin(phi)], -1)
    zero = np.zeros(q.shape[:-1] + (1, 2))
    return np.concatenate([zero, np.cumsum(seg, axis=-2)], axis=-2)


def jacobian(model: ArmModel, q) -> np.ndarray:
    """End-effector Jacobian ``dp/dq``, shape ``(..., 2, n)``."""
    q = model._check(q)
    phi = np.cumsum(q, axis=-1)
    lengths = np.asarray(model.link_lengths)
    # column j sums the links distal to joint j
    dx = -np.flip(np.cumsum(np.flip(lengths * np.sin(phi), -1), -1), -1)
    dy = np.flip(np.cumsum(np.flip(lengths * np.cos(phi), -1), -1), -1)
    return np.stack([dx, dy], -2)


def end_effector_velocity(model: ArmModel, q, qdot) -> np.ndarray:
    return np.einsum("...ij,...j->...i", jacobian(model, q), np.asarray(qdot, dtype=float))


def workspace_boundary(model: ArmModel) -> tuple[float, float]:
    """Inner and outer radius of the reachable annulus of a 2-link arm."""
    if model.n_links != 2:
        raise DimensionError("workspace annulus is defined for 2-link arms")
    l1, l2 = model.link_lengths
    return abs(l1 - l2), l1 + l2


BRANCHES = ("elbow_down", "elbow_up")


def inverse_kinematics(model: ArmModel, p, branch: str = "elbow_down") -> np.ndarray:
    """Closed-form 2-link inverse kinematics.

    ``elbow_down`` returns the solution with ``q2 <= 0``, ``elbow_up`` the one
    with ``q2 >= 0``. Accepts points of shape ``(..., 2)``.
    """
    if model.n_links != 2:
        raise DimensionError("closed-form inverse kinematics needs a 2-link arm")
    if branch not in BRANCHES:
        raise ValueError(f"branch must be one of {BRANCHES}, got {branch!r}")
    p = np.asarray(p, dtype=float)
    l1, l2 = model.link_lengths
    r_min, r_max = workspace_boundary(model)
    r = np.hypot(p[..., 0], p[..., 1])
    tol = 1e-12 * r_max
    deficit = np.maximum(r - r_max, r_min - r)
    if np.any(deficit > tol):
        idx = np.unravel_index(np.argmax(deficit), deficit.shape) if deficit.ndim else ()
        raise ReachabilityError(p[idx], deficit[idx])
    c2 = np.clip((r**2 - l1**2 - l2**2) / (2 * l1 * l2), -1.0, 1.0)
    s2 = np.sqrt(1.0 - c2**2)
    if branch == "elbow_down":
        s2 = -s2
    q2 = np.arctan2(s2, c2)
    q1 = np.arctan2(p[..., 1], p[..., 0]) - np.arctan2(l2 * s2, l1 + l2 * c2)
    return np.stack([q1, q2], -1)


def wrap_angle(x):
    """Map angles to the interval (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(x, dtype=float), 2 * np.pi)
