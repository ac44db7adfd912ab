"""End-to-end experiment drivers (exploration, 13-target solve, reduction, subset comparison)."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .arm import ArmModel
from .config import ExperimentConfig
from .errors import SynergyError
from .exploration import ExplorationArchive, run_exploration
from .reduction import GrowthResult, grow_basis, polar_grid
from .solver import BasisSet, ReachingTask, TaskSolution, solve_tasks

log = logging.getLogger(__name__)

ERROR_FIELDS = ("err_I", "err_P", "err_F", "err_F_ee")


def explore(cfg: ExperimentConfig, classes=("min_jerk", "lowpass_random")) -> dict:
    return {c: run_exploration(cfg.model, cfg.exploration(c)) for c in classes}


def evaluation_tasks(cfg: ExperimentConfig, basis: BasisSet, stay_put=False):
    """``(task_id, ReachingTask)`` pairs for the configured evaluation targets."""
    out = [
        (f"T{i + 1:02d}", ReachingTask.to_point(cfg.model, basis.q0, p, basis.duration, cfg.branch))
        for i, p in enumerate(cfg.evaluation_targets)
    ]
    if stay_put:
        out.append(("stay", ReachingTask(basis.q0, basis.q0, basis.duration)))
    return out


def solve_evaluation(cfg: ExperimentConfig, basis: BasisSet, stay_put=False):
    """Solve every evaluation task; failures are returned as exceptions in place."""
    labelled = []
    tasks = []
    for tid, task in evaluation_tasks(cfg, basis, stay_put):
        labelled.append(tid)
        tasks.append(task)
    return list(zip(labelled, solve_tasks(cfg.model, basis, tasks)))


def error_table(results) -> list:
    rows = []
    for tid, res in results:
        if isinstance(res, TaskSolution):
            rows.append([tid] + [getattr(res.errors, k) for k in ERROR_FIELDS])
        else:
            rows.append([tid] + [float("nan")] * len(ERROR_FIELDS))
    return rows


def max_errors(results) -> dict:
    """Summary of a target set: the largest value of each error over solved tasks."""
    rows = np.array([r[1:] for r in error_table(results)], dtype=float)
    return {k: float(np.nanmax(rows[:, i])) for i, k in enumerate(ERROR_FIELDS)}


def reduce_archive(cfg: ExperimentConfig, archive_basis: BasisSet, seed=None) -> GrowthResult:
    grid = polar_grid(cfg.model, cfg.grid.n_angles, cfg.grid.n_radii, cfg.grid.shrink)
    r = cfg.reduction
    return grow_basis(
        cfg.model, archive_basis, r.n_proto_tasks, r.seed if seed is None else seed, grid,
        cfg.branch, n_seed=r.n_seed_tasks, d_min=r.d_min,
    )


def _box_stats(values):
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    if v.size == 0:
        return {"n": 0}
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = v[(v >= lo_fence) & (v <= hi_fence)]
    return {
        "n": int(v.size),
        "mean": float(v.mean()),
        "q1": float(q1),
        "median": float(med),
        "q3": float(q3),
        "whisker_low": float(inside.min()),
        "whisker_high": float(inside.max()),
        "outliers": sorted(float(x) for x in v[(v < lo_fence) | (v > hi_fence)]),
    }


@dataclass
class ComparisonReport:
    task_ids: list
    subsets: np.ndarray  # (n_subsets, subset_size) archive indices
    subset_err_P: np.ndarray  # (n_subsets, n_targets)
    subset_err_F_ee: np.ndarray
    reduced_err_P: np.ndarray  # (n_targets,)
    reduced_err_F_ee: np.ndarray
    disjoint: bool

    @property
    def reduced_mean_err_P(self) -> float:
        return float(np.nanmean(self.reduced_err_P))

    @property
    def subset_means(self) -> np.ndarray:
        return np.nanmean(self.subset_err_P, axis=1)

    @property
    def mean_of_subset_means(self) -> float:
        return float(np.nanmean(self.subset_means))

    @property
    def ratio(self) -> float:
        return self.mean_of_subset_means / self.reduced_mean_err_P

    def summary(self) -> dict:
        best = float(np.nanmin(self.subset_means))
        worst_reduced = float(np.nanmax(self.reduced_err_P))
        return {
            "n_subsets": int(self.subsets.shape[0]),
            "subset_size": int(self.subsets.shape[1]),
            "reduced_mean_err_P": self.reduced_mean_err_P,
            "mean_of_subset_means_err_P": self.mean_of_subset_means,
            "ratio": self.ratio,
            "orders_of_magnitude": float(np.log10(self.ratio)),
            "best_subset_mean_err_P": best,
            "best_subset_min_err_P": float(np.nanmin(self.subset_err_P)),
            "reduced_worst_err_P": worst_reduced,
            "reduced_worst_order_le_best_subset_order": bool(
                np.floor(np.log10(worst_reduced)) <= np.floor(np.log10(best))),
            "reduced_synergies_disjoint_from_archive": self.disjoint,
        }

    def to_dict(self) -> dict:
        per_target = []
        for j, tid in enumerate(self.task_ids):
            per_target.append({
                "task_id": tid,
                "err_P": _box_stats(self.subset_err_P[:, j]),
                "err_F_ee": _box_stats(self.subset_err_F_ee[:, j]),
                "reduced_err_P": float(self.reduced_err_P[j]),
                "reduced_err_F_ee": float(self.reduced_err_F_ee[j]),
            })
        return {"summary": self.summary(), "per_target": per_target, "subsets": self.subsets.tolist()}


def synergies_disjoint(reduced: BasisSet, archive_basis: BasisSet) -> bool:
    """True if no reduced synergy coincides with an archive signal."""
    a = archive_basis.synergies.reshape(archive_basis.size, -1)
    for s in reduced.synergies.reshape(reduced.size, -1):
        if np.any(np.all(a == s, axis=1)):
            return False
    return True


def compare_subsets(cfg: ExperimentConfig, archive_basis: BasisSet, reduced: BasisSet,
                    n_subsets=None, subset_size=None, seed=None) -> ComparisonReport:
    """Errors of random archive subsets versus the reduced basis on the evaluation targets."""
    trial = cfg.subset_trial
    n_subsets = trial.n_subsets if n_subsets is None else n_subsets
    subset_size = trial.subset_size if subset_size is None else subset_size
    seed = trial.seed if seed is None else seed
    if subset_size > archive_basis.size:
        raise SynergyError("subset size exceeds archive size")
    if reduced.size != subset_size:
        log.warning("reduced basis has %d synergies, subsets have %d", reduced.size, subset_size)

    rng = np.random.default_rng(seed)
    subsets = np.stack([np.sort(rng.choice(archive_basis.size, subset_size, replace=False))
                        for _ in range(n_subsets)])
    ids = [tid for tid, _ in evaluation_tasks(cfg, archive_basis)]
    err_P = np.full((n_subsets, len(ids)), np.nan)
    err_F = np.full_like(err_P, np.nan)
    for i, idx in enumerate(subsets):
        for j, (_, res) in enumerate(solve_evaluation(cfg, archive_basis.subset(idx))):
            if isinstance(res, TaskSolution):
                err_P[i, j] = res.errors.err_P
                err_F[i, j] = res.errors.err_F_ee
    red = solve_evaluation(cfg, reduced)
    red_P = np.array([r.errors.err_P if isinstance(r, TaskSolution) else np.nan for _, r in red])
    red_F = np.array([r.errors.err_F_ee if isinstance(r, TaskSolution) else np.nan for _, r in red])
    return ComparisonReport(ids, subsets, err_P, err_F, red_P, red_F, synergies_disjoint(reduced, archive_basis))


def archive_basis(archive: ExplorationArchive) -> BasisSet:
    return BasisSet.from_archive(archive)


def check_model(model: ArmModel, archive: ExplorationArchive):
    from .errors import FingerprintMismatchError

    if archive.model_fingerprint != model.fingerprint():
        raise FingerprintMismatchError(
            f"archive model {archive.model_fingerprint} != config model {model.fingerprint()}")
