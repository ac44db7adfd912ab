"""Exploration phase: extensive actuation sets and their dynamic responses."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import signal as sps

from .arm import (
    DEFAULT_DT,
    ActuationSignal,
    ArmModel,
    JointState,
    Trajectory,
    forward_kinematics,
    integrate,
    inverse_kinematics,
    workspace_boundary,
)
from .errors import DivergenceError, SynergyError

log = logging.getLogger(__name__)

SIGNAL_CLASSES = ("min_jerk", "lowpass_random")
WINDOWS = ("none", "start", "both")
DEFAULT_INITIAL_Q = (1.0, -2.0)


@dataclass(frozen=True)
class ExplorationConfig:
    """Settings of one exploration run.

    ``target_radius_fraction`` bounds min-jerk targets to a disc of that
    fraction of the outer workspace radius around the initial end-effector
    point; ``path_margin`` is the fraction of the annulus width every
    min-jerk stroke keeps from both workspace boundaries. ``window`` shapes
    random signals: ``"none"``, ``"start"`` (zero torque at t = 0) or
    ``"both"`` (zero torque at both ends).
    """

    signal_class: str = "lowpass_random"
    count: int = 90
    duration: float = 1.0
    dt: float = DEFAULT_DT
    initial_q: tuple = DEFAULT_INITIAL_Q
    amplitude: float = 5.0
    cutoff: float = 2.0
    target_radius_fraction: float = 0.9
    path_margin: float = 0.1
    window: str = "none"
    branch: str = "elbow_down"
    rng_seed: int = 0
    max_retries: int = 1000

    def __post_init__(self):
        object.__setattr__(self, "initial_q", tuple(float(v) for v in self.initial_q))
        if self.signal_class not in SIGNAL_CLASSES:
            raise ValueError(f"signal_class must be one of {SIGNAL_CLASSES}")
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if not (self.dt > 0 and self.duration > 0):
            raise ValueError("dt and duration must be positive")
        if not 0 < self.cutoff < 1 / (2 * self.dt):
            raise ValueError(f"cutoff must lie in (0, {1 / (2 * self.dt)}) Hz")
        if self.window not in WINDOWS:
            raise ValueError(f"window must be one of {WINDOWS}")
        if self.amplitude < 0:
            raise ValueError("amplitude must be non-negative")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration / self.dt)) + 1

    @property
    def initial_state(self) -> JointState:
        return JointState(self.initial_q)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["initial_q"] = list(self.initial_q)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExplorationConfig":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


def min_jerk_profile(tau):
    """Minimum-jerk time scaling and its first two derivatives w.r.t. ``tau`` in [0, 1]."""
    tau = np.asarray(tau, dtype=float)
    s = tau**3 * (10 - 15 * tau + 6 * tau**2)
    ds = 30 * tau**2 * (1 - tau) ** 2
    dds = 60 * tau * (1 - tau) * (1 - 2 * tau)
    return s, ds, dds


def endpoint_window(n_samples, kind="both"):
    """Smooth taper built from the min-jerk profile ``s``.

    ``"both"`` is ``4 s (1 - s)`` (zero at both ends), ``"start"`` is ``s``
    (zero at the start only), ``"none"`` is all ones.
    """
    s, _, _ = min_jerk_profile(np.linspace(0.0, 1.0, n_samples))
    if kind == "both":
        return 4 * s * (1 - s)
    if kind == "start":
        return s
    if kind == "none":
        return np.ones(n_samples)
    raise ValueError(f"unknown window {kind!r}")


def min_jerk_joint_trajectory(model: ArmModel, q0, target, duration, dt, branch="elbow_down") -> Trajectory:
    """Joint trajectory whose end effector follows a straight minimum-jerk stroke.

    Velocities and accelerations are exact (through the Jacobian), so the
    torques obtained from it carry no differentiation error.
    """
    n = int(round(duration / dt)) + 1
    tau = np.linspace(0.0, 1.0, n)
    s, ds, dds = min_jerk_profile(tau)
    p0 = forward_kinematics(model, q0)
    d = np.asarray(target, dtype=float) - p0
    p = p0 + s[:, None] * d
    pd = (ds / duration)[:, None] * d
    pdd = (dds / duration**2)[:, None] * d
    q = inverse_kinematics(model, p, branch)
    # keep the first joint continuous with the start posture
    q = q + np.round((np.asarray(q0) - q[0]) / (2 * np.pi)) * 2 * np.pi
    q = np.unwrap(q, axis=0)

    l1, l2 = model.link_lengths
    phi1 = q[:, 0]
    phi2 = q[:, 0] + q[:, 1]
    jac = np.empty((n, 2, 2))
    jac[:, 0, 0] = -l1 * np.sin(phi1) - l2 * np.sin(phi2)
    jac[:, 0, 1] = -l2 * np.sin(phi2)
    jac[:, 1, 0] = l1 * np.cos(phi1) + l2 * np.cos(phi2)
    jac[:, 1, 1] = l2 * np.cos(phi2)
    qd = np.linalg.solve(jac, pd[..., None])[..., 0]
    w1 = qd[:, 0]
    w2 = qd[:, 0] + qd[:, 1]
    jdot_qd = -np.stack(
        [l1 * w1**2 * np.cos(phi1) + l2 * w2**2 * np.cos(phi2),
         l1 * w1**2 * np.sin(phi1) + l2 * w2**2 * np.sin(phi2)], -1)
    qdd = np.linalg.solve(jac, (pdd - jdot_qd)[..., None])[..., 0]
    qd[0] = qd[-1] = 0.0
    qdd[0] = qdd[-1] = 0.0
    return Trajectory(dt, q, qd, qdd)


def _segment_radii(model, p0, target, n=64):
    s = np.linspace(0.0, 1.0, n)[:, None]
    pts = p0 + s * (np.asarray(target) - p0)
    return np.hypot(pts[:, 0], pts[:, 1])


def stroke_is_admissible(model: ArmModel, p0, target, margin: float) -> bool:
    """True if the straight segment p0 -> target stays inside the shrunk annulus."""
    r_min, r_max = workspace_boundary(model)
    pad = margin * (r_max - r_min)
    r = _segment_radii(model, p0, target)
    return bool(np.all(r >= r_min + pad) and np.all(r <= r_max - pad))


def sample_min_jerk_targets(model: ArmModel, cfg: ExplorationConfig, rng) -> np.ndarray:
    """Targets uniform over the annulus intersected with a disc around the start point."""
    p0 = forward_kinematics(model, cfg.initial_q)
    r_max = workspace_boundary(model)[1]
    radius = cfg.target_radius_fraction * r_max
    targets = []
    tries = 0
    while len(targets) < cfg.count:
        tries += 1
        if tries > cfg.max_retries * cfg.count:
            raise SynergyError("could not sample enough admissible min-jerk targets")
        rho = radius * np.sqrt(rng.uniform())
        ang = rng.uniform(0, 2 * np.pi)
        p = p0 + rho * np.array([np.cos(ang), np.sin(ang)])
        if stroke_is_admissible(model, p0, p, cfg.path_margin):
            targets.append(p)
    return np.array(targets)


def generate_min_jerk_actuations(model: ArmModel, cfg: ExplorationConfig, targets=None):
    """Torques driving the end effector along straight minimum-jerk strokes.

    Returns the list of :class:`ActuationSignal` (one per target). ``targets``
    defaults to ``cfg.count`` points drawn with ``cfg.rng_seed``.
    """
    from .arm import inverse_dynamics

    if targets is None:
        targets = sample_min_jerk_targets(model, cfg, np.random.default_rng(cfg.rng_seed))
    return [
        inverse_dynamics(model, min_jerk_joint_trajectory(model, cfg.initial_q, p, cfg.duration, cfg.dt, cfg.branch))
        for p in targets
    ]


def _lowpass_random_batch(cfg, rng, count, n_links):
    n = cfg.n_samples
    raw = rng.uniform(-cfg.amplitude, cfg.amplitude, size=(count, n, n_links))
    b, a = sps.butter(1, cfg.cutoff, fs=1.0 / cfg.dt)
    smooth = sps.filtfilt(b, a, raw, axis=1)
    return smooth * endpoint_window(n, cfg.window)[None, :, None]


def generate_lowpass_random_actuations(cfg: ExplorationConfig, n_links: int = 2):
    """Uniform noise through a zero-phase single-pole low-pass, then tapered per ``cfg.window``."""
    rng = np.random.default_rng(cfg.rng_seed)
    batch = _lowpass_random_batch(cfg, rng, cfg.count, n_links)
    return [ActuationSignal(cfg.dt, u) for u in batch]


@dataclass
class ExplorationArchive:
    """Paired exploration signals (torques) and responses (joint trajectories)."""

    config: ExplorationConfig
    model_fingerprint: str
    signals: np.ndarray  # (count, N, n) torques
    q: np.ndarray  # (count, N, n) response angles
    qdot: np.ndarray
    qddot: np.ndarray
    targets: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if not (self.signals.shape == self.q.shape == self.qdot.shape == self.qddot.shape):
            raise ValueError("signals and responses must share shape (count, N, n)")

    def __len__(self):
        return self.signals.shape[0]

    @property
    def dt(self) -> float:
        return self.config.dt

    def signal(self, i) -> ActuationSignal:
        return ActuationSignal(self.dt, self.signals[i])

    def response(self, i) -> Trajectory:
        return Trajectory(self.dt, self.q[i], self.qdot[i], self.qddot[i])


def run_exploration(model: ArmModel, cfg: ExplorationConfig) -> ExplorationArchive:
    """Generate ``cfg.count`` signals of the configured class and integrate each from rest.

    Signals whose integration diverges are replaced by fresh draws (bounded
    by ``cfg.max_retries`` attempts per slot).
    """
    rng = np.random.default_rng(cfg.rng_seed)
    n = model.n_links
    targets = None
    if cfg.signal_class == "min_jerk":
        targets = sample_min_jerk_targets(model, cfg, rng)
        signals = np.stack([s.u for s in generate_min_jerk_actuations(model, cfg, targets)])
    else:
        signals = _lowpass_random_batch(cfg, rng, cfg.count, n)

    init = cfg.initial_state
    q, qd, qdd, ok, bad = integrate(model, signals, cfg.dt, init.q, init.qdot)
    for attempt in range(cfg.max_retries):
        if ok.all():
            break
        idx = np.flatnonzero(~ok)
        log.warning("regenerating %d diverged exploration signal(s): %s", idx.size, idx.tolist())
        if cfg.signal_class == "min_jerk":
            new_t = sample_min_jerk_targets(model, ExplorationConfig(**{**cfg.to_dict(), "count": idx.size}), rng)
            targets[idx] = new_t
            signals[idx] = np.stack([s.u for s in generate_min_jerk_actuations(model, cfg, new_t)])
        else:
            signals[idx] = _lowpass_random_batch(cfg, rng, idx.size, n)
        q2, qd2, qdd2, ok2, bad2 = integrate(model, signals[idx], cfg.dt, init.q, init.qdot)
        q[idx], qd[idx], qdd[idx], ok[idx], bad[idx] = q2, qd2, qdd2, ok2, bad2
    else:
        if not ok.all():
            k = int(bad[~ok][0])
            raise DivergenceError(k, k * cfg.dt, np.flatnonzero(~ok))
    return ExplorationArchive(cfg, model.fingerprint(), signals, q, qd, qdd, targets)


def verify_archive(model: ArmModel, archive: ExplorationArchive, n_check=None, seed=0) -> bool:
    """Re-integrate stored signals and require bit-identical responses.

    Checks all pairs when ``n_check`` is None, else ``n_check`` random ones.
    """
    if archive.model_fingerprint != model.fingerprint():
        return False
    idx = np.arange(len(archive))
    if n_check is not None and n_check < len(archive):
        idx = np.sort(np.random.default_rng(seed).choice(len(archive), n_check, replace=False))
    init = archive.config.initial_state
    q, qd, qdd, ok, _ = integrate(model, archive.signals[idx], archive.dt, init.q, init.qdot)
    return bool(
        ok.all()
        and np.array_equal(q, archive.q[idx])
        and np.array_equal(qd, archive.qdot[idx])
        and np.array_equal(qdd, archive.qddot[idx])
    )


def end_effector_traces(model: ArmModel, archive: ExplorationArchive) -> np.ndarray:
    """End-effector paths of all responses, shape (count, N, 2)."""
    return forward_kinematics(model, archive.q)
