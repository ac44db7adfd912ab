"""Experiment configuration, loaded from TOML or JSON."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .arm import ArmModel, forward_kinematics, workspace_boundary
from .exploration import DEFAULT_INITIAL_Q, ExplorationConfig

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib


def default_evaluation_targets(model: ArmModel, q0=DEFAULT_INITIAL_Q, radius=0.25, n_circle=12, shrink=0.05):
    """12 points on a circle around the start point plus one near the outer boundary.

    Points are pulled radially into the annulus shrunk by ``shrink`` of its width.
    """
    p0 = forward_kinematics(model, q0)
    r_min, r_max = workspace_boundary(model)
    pad = shrink * (r_max - r_min)
    lo, hi = r_min + pad, r_max - pad
    ang = np.arange(n_circle) * (2 * np.pi / n_circle)
    pts = p0 + radius * np.stack([np.cos(ang), np.sin(ang)], -1)
    r = np.hypot(pts[:, 0], pts[:, 1])
    pts = pts * (np.clip(r, lo, hi) / r)[:, None]
    edge = p0 / np.hypot(*p0) * hi
    return np.vstack([pts, edge])


@dataclass(frozen=True)
class GridSpec:
    n_angles: int = 24
    n_radii: int = 12
    shrink: float = 0.05


@dataclass(frozen=True)
class ReductionSpec:
    n_proto_tasks: int = 6
    n_seed_tasks: int = 2
    seed: int = 0
    d_min: float = 0.05


@dataclass(frozen=True)
class SubsetTrial:
    n_subsets: int = 100
    subset_size: int = 6
    seed: int = 0


@dataclass(frozen=True)
class ExperimentConfig:
    model: ArmModel = field(default_factory=ArmModel)
    min_jerk: ExplorationConfig = field(
        default_factory=lambda: ExplorationConfig(signal_class="min_jerk", count=100))
    lowpass_random: ExplorationConfig = field(
        default_factory=lambda: ExplorationConfig(signal_class="lowpass_random", count=90))
    evaluation_targets: tuple = None
    grid: GridSpec = field(default_factory=GridSpec)
    reduction: ReductionSpec = field(default_factory=ReductionSpec)
    subset_trial: SubsetTrial = field(default_factory=SubsetTrial)
    branch: str = "elbow_down"
    output_dir: str = "results"

    def __post_init__(self):
        if self.min_jerk.signal_class != "min_jerk" or self.lowpass_random.signal_class != "lowpass_random":
            raise ValueError("exploration sections must match their signal class")
        if self.min_jerk.initial_q != self.lowpass_random.initial_q:
            raise ValueError("both exploration classes must share the initial posture")
        if self.evaluation_targets is None:
            targets = default_evaluation_targets(self.model, self.initial_q)
        else:
            targets = np.asarray(self.evaluation_targets, dtype=float).reshape(-1, 2)
        object.__setattr__(self, "evaluation_targets", tuple(tuple(float(v) for v in p) for p in targets))
        for name, value in (
            ("n_proto_tasks", self.reduction.n_proto_tasks),
            ("n_subsets", self.subset_trial.n_subsets),
            ("subset_size", self.subset_trial.subset_size),
            ("n_angles", self.grid.n_angles),
            ("n_radii", self.grid.n_radii),
        ):
            if value < 1:
                raise ValueError(f"{name} must be positive")

    @property
    def initial_q(self):
        return self.min_jerk.initial_q

    def exploration(self, signal_class: str) -> ExplorationConfig:
        return {"min_jerk": self.min_jerk, "lowpass_random": self.lowpass_random}[signal_class]

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "min_jerk": self.min_jerk.to_dict(),
            "lowpass_random": self.lowpass_random.to_dict(),
            "evaluation_targets": [list(p) for p in self.evaluation_targets],
            "grid": asdict(self.grid),
            "reduction": asdict(self.reduction),
            "subset_trial": asdict(self.subset_trial),
            "branch": self.branch,
            "output_dir": self.output_dir,
        }

    def fingerprint(self) -> str:
        d = self.to_dict()
        d.pop("output_dir")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        kw = {}
        if "model" in d:
            kw["model"] = ArmModel.from_dict(d["model"])
        # a shared initial posture may be given at top level
        shared = {k: d[k] for k in ("initial_q",) if k in d}
        for name in ("min_jerk", "lowpass_random"):
            sec = {**shared, **d.get(name, {}), "signal_class": name}
            sec.setdefault("count", 100 if name == "min_jerk" else 90)
            kw[name] = ExplorationConfig.from_dict(sec)
        if d.get("evaluation_targets") is not None:
            kw["evaluation_targets"] = d["evaluation_targets"]
        for name, typ in (("grid", GridSpec), ("reduction", ReductionSpec), ("subset_trial", SubsetTrial)):
            if name in d:
                kw[name] = typ(**d[name])
        for name in ("branch", "output_dir"):
            if name in d:
                kw[name] = d[name]
        return cls(**kw)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        """Same config with every named seed replaced by ``seed``."""
        return replace(
            self,
            min_jerk=replace(self.min_jerk, rng_seed=seed),
            lowpass_random=replace(self.lowpass_random, rng_seed=seed),
            reduction=replace(self.reduction, seed=seed),
            subset_trial=replace(self.subset_trial, seed=seed),
            evaluation_targets=self.evaluation_targets,
        )


def load_config(path) -> ExperimentConfig:
    """Read a ``.toml`` or ``.json`` experiment configuration."""
    path = Path(path)
    text = path.read_bytes()
    if path.suffix.lower() == ".toml":
        data = tomllib.loads(text.decode())
    else:
        data = json.loads(text)
    return ExperimentConfig.from_dict(data)
