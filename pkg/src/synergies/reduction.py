"""Reduction phase: distill an exploration basis into a few synergies via proto-tasks."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .arm import ArmModel, inverse_dynamics, workspace_boundary
from .errors import DivergenceError, ReachabilityError, RejectedProtoTaskError, SaturationError
from .metrics import interpolation_error
from .solver import BasisSet, ReachingTask, interpolant, solve_kinematic, solve_tasks

log = logging.getLogger(__name__)

ACCEPT_ERR_I = 1e-6
EXCLUSION_RADIUS = 0.05
PROVENANCES = ("random_seed", "error_driven")


@dataclass(frozen=True)
class ProtoTask:
    target: tuple
    provenance: str = "random_seed"

    def __post_init__(self):
        object.__setattr__(self, "target", tuple(float(v) for v in self.target))
        if len(self.target) != 2:
            raise ValueError("proto-task target must be a planar point")
        if self.provenance not in PROVENANCES:
            raise ValueError(f"provenance must be one of {PROVENANCES}")

    def check_inside(self, model: ArmModel):
        r_min, r_max = workspace_boundary(model)
        r = float(np.hypot(*self.target))
        if not r_min < r < r_max:
            raise ReachabilityError(self.target, max(r - r_max, r_min - r, 0.0))

    def to_task(self, model, q0, T, branch="elbow_down") -> ReachingTask:
        self.check_inside(model)
        return ReachingTask.to_point(model, q0, self.target, T, branch)

    def to_dict(self):
        return {"target": list(self.target), "provenance": self.provenance}


def reduce(model: ArmModel, basis: BasisSet, proto_tasks, branch="elbow_down",
           threshold: float = ACCEPT_ERR_I) -> BasisSet:
    """Solve each proto-task with ``basis`` and keep the solutions as the new basis.

    The reduced responses are the interpolants themselves; their synergies
    come from inverse dynamics, so each pair is realizable by construction.

    Raises
    ------
    RejectedProtoTaskError
        If a proto-task cannot be interpolated within ``threshold``.
    """
    proto_tasks = list(proto_tasks)
    if basis.size == 0 or not proto_tasks:
        raise ValueError("need a nonempty basis and at least one proto-task")
    syn, q, qd, qdd = [], [], [], []
    for pt in proto_tasks:
        task = pt.to_task(model, basis.q0, basis.duration, branch)
        a = solve_kinematic(basis, task)
        traj = interpolant(basis, a)
        err = interpolation_error(task, traj)
        if not err <= threshold:
            raise RejectedProtoTaskError(pt.target, err, threshold)
        syn.append(inverse_dynamics(model, traj).u)
        q.append(traj.q)
        qd.append(traj.qdot)
        qdd.append(traj.qddot)
    return BasisSet(basis.dt, basis.q0, np.stack(syn), np.stack(q), np.stack(qd), np.stack(qdd), kind="reduced")


@dataclass(frozen=True)
class ErrorMap:
    grid: np.ndarray  # (M, 2) end-effector targets
    err_P: np.ndarray  # (M,), NaN where the solve failed
    err_F_ee: np.ndarray
    basis_size: int

    @property
    def mean_err_P(self) -> float:
        return float(np.nanmean(self.err_P))

    def to_rows(self):
        return [
            {"x": float(x), "y": float(y), "err_P": float(p), "err_F_ee": float(f)}
            for (x, y), p, f in zip(self.grid, self.err_P, self.err_F_ee)
        ]


def polar_grid(model: ArmModel, n_angles=24, n_radii=12, shrink=0.05) -> np.ndarray:
    """Evaluation targets on a polar grid covering the annulus, shrunk from both boundaries."""
    r_min, r_max = workspace_boundary(model)
    pad = shrink * (r_max - r_min)
    radii = np.linspace(r_min + pad, r_max - pad, n_radii)
    angles = np.arange(n_angles) * (2 * np.pi / n_angles)
    rr, aa = np.meshgrid(radii, angles, indexing="ij")
    return np.stack([rr * np.cos(aa), rr * np.sin(aa)], -1).reshape(-1, 2)


def evaluate_error_map(model: ArmModel, basis: BasisSet, grid, branch="elbow_down") -> ErrorMap:
    """err_P and end-effector err_F of a rest-to-rest reach to every grid target.

    Targets that fail (unreachable, divergent) are recorded as NaN.
    """
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    err_P = np.full(len(grid), np.nan)
    err_F = np.full(len(grid), np.nan)
    tasks, where = [], []
    for j, p in enumerate(grid):
        try:
            tasks.append(ReachingTask.to_point(model, basis.q0, p, basis.duration, branch))
            where.append(j)
        except ReachabilityError as exc:
            log.warning("grid target %d skipped: %s", j, exc)
    for j, res in zip(where, solve_tasks(model, basis, tasks)):
        if isinstance(res, DivergenceError):
            log.warning("grid target %d diverged: %s", j, res)
            continue
        err_P[j] = res.errors.err_P
        err_F[j] = res.errors.err_F_ee
    return ErrorMap(grid, err_P, err_F, basis.size)


def add_proto_task(error_map: ErrorMap, existing, d_min: float = EXCLUSION_RADIUS, excluded=()) -> ProtoTask:
    """Grid target of largest err_P at least ``d_min`` away from existing proto-tasks.

    Ties go to the lowest grid index. ``excluded`` lists grid indices to skip
    (e.g. targets already rejected).
    """
    grid = error_map.grid
    if len(grid) == 0:
        raise ValueError("empty error map")
    ok = np.isfinite(error_map.err_P)
    for pt in existing:
        ok &= np.hypot(*(grid - np.asarray(pt.target)).T) >= d_min
    ok[list(excluded)] = False
    if not ok.any():
        raise SaturationError("every grid target lies within d_min of an existing proto-task")
    scores = np.where(ok, error_map.err_P, -np.inf)
    return ProtoTask(grid[int(np.argmax(scores))], "error_driven")


def sample_random_proto_tasks(model: ArmModel, count: int, rng, existing=(), d_min=EXCLUSION_RADIUS,
                              shrink=0.05) -> list:
    """Area-uniform random targets in the shrunk annulus, pairwise ``d_min`` apart."""
    r_min, r_max = workspace_boundary(model)
    pad = shrink * (r_max - r_min)
    lo, hi = r_min + pad, r_max - pad
    out = list(existing)
    new = []
    while len(new) < count:
        r = np.sqrt(rng.uniform(lo**2, hi**2))
        ang = rng.uniform(0, 2 * np.pi)
        p = np.array([r * np.cos(ang), r * np.sin(ang)])
        if all(np.hypot(*(p - np.asarray(pt.target))) >= d_min for pt in out):
            pt = ProtoTask(p, "random_seed")
            out.append(pt)
            new.append(pt)
    return new


@dataclass(frozen=True)
class GrowthResult:
    basis: BasisSet
    proto_tasks: list
    maps: list
    saturated: bool = False


def grow_basis(model: ArmModel, basis0: BasisSet, n_target: int, seed: int, grid=None,
               branch="elbow_down", n_seed: int = 2, d_min: float = EXCLUSION_RADIUS,
               max_attempts: int = 100) -> GrowthResult:
    """Start from ``n_seed`` random proto-tasks and add error-driven ones up to ``n_target``.

    Returns the final basis, the proto-tasks and one error map per basis size
    ``n_seed .. n_target`` (the last map belongs to the final basis).
    """
    if n_target < n_seed:
        raise ValueError(f"n_target must be >= {n_seed}")
    grid = polar_grid(model) if grid is None else np.asarray(grid, dtype=float)
    rng = np.random.default_rng(seed)

    protos = []
    for _ in range(max_attempts):
        if len(protos) == n_seed:
            break
        cand = sample_random_proto_tasks(model, 1, rng, protos, d_min)[0]
        try:
            reduce(model, basis0, [cand], branch)
        except RejectedProtoTaskError as exc:
            log.info("random proto-task rejected: %s", exc)
            continue
        protos.append(cand)
    else:
        raise RejectedProtoTaskError(cand.target, np.nan, ACCEPT_ERR_I)

    basis = reduce(model, basis0, protos, branch)
    maps = [evaluate_error_map(model, basis, grid, branch)]
    rejected = set()
    saturated = False
    while len(protos) < n_target:
        try:
            new = add_proto_task(maps[-1], protos, d_min, rejected)
        except SaturationError as exc:
            log.warning("stopping growth early: %s", exc)
            saturated = True
            break
        try:
            candidate = reduce(model, basis0, protos + [new], branch)
        except RejectedProtoTaskError as exc:
            log.info("error-driven proto-task rejected: %s", exc)
            rejected.add(int(np.flatnonzero(np.all(grid == np.asarray(new.target), axis=1))[0]))
            continue
        protos.append(new)
        basis = candidate
        maps.append(evaluate_error_map(model, basis, grid, branch))
    return GrowthResult(basis, protos, maps, saturated)
