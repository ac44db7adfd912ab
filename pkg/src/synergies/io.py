"""File formats: archive/basis JSON, CSV tables and SVG heatmaps."""

from __future__ import annotations

import csv
import gzip
import json
import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .arm import ArmModel, joint_positions, workspace_boundary
from .errors import FingerprintMismatchError, SynergyError
from .exploration import ExplorationArchive, ExplorationConfig
from .reduction import ErrorMap, ProtoTask
from .solver import BasisSet

FORMAT = "synergies-archive"
VERSION = 1


def _open_text(path):
    path = Path(path)
    raw = path.read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw.decode()


def read_json(path):
    return json.loads(_open_text(path))


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(obj, indent=1 if _small(obj) else None, sort_keys=False)
    if path.suffix == ".gz":
        # mtime=0 keeps the compressed bytes reproducible
        path.write_bytes(gzip.compress(text.encode(), mtime=0))
    else:
        path.write_text(text)


def _small(obj):
    return not (isinstance(obj, dict) and "signals" in obj)


def _header(count, n_samples, n_joints, dt):
    return {
        "count": count,
        "n_samples": n_samples,
        "n_joints": n_joints,
        "dt": dt,
        "layout": "signals/responses/velocities/accelerations are [element][sample][joint]; "
                  "signals in N m, responses in rad, velocities in rad/s, accelerations in rad/s^2",
    }


def archive_to_dict(archive: ExplorationArchive, model: ArmModel) -> dict:
    k, n, j = archive.signals.shape
    d = {
        "format": FORMAT,
        "version": VERSION,
        "kind": "exploration",
        "header": _header(k, n, j, archive.dt),
        "config": archive.config.to_dict(),
        "model": model.to_dict(),
        "model_fingerprint": archive.model_fingerprint,
        "initial_q": list(archive.config.initial_q),
        "signals": archive.signals.tolist(),
        "responses": archive.q.tolist(),
        "velocities": archive.qdot.tolist(),
        "accelerations": archive.qddot.tolist(),
    }
    if archive.targets is not None:
        d["targets"] = np.asarray(archive.targets).tolist()
    return d


def basis_to_dict(basis: BasisSet, model: ArmModel, proto_tasks=(), extra=None) -> dict:
    k, n, j = basis.synergies.shape
    d = {
        "format": FORMAT,
        "version": VERSION,
        "kind": "reduced" if basis.kind == "reduced" else "exploration",
        "header": _header(k, n, j, basis.dt),
        "config": {"proto_tasks": [pt.to_dict() for pt in proto_tasks], **(extra or {})},
        "model": model.to_dict(),
        "model_fingerprint": model.fingerprint(),
        "initial_q": basis.q0.tolist(),
        "signals": basis.synergies.tolist(),
        "responses": basis.q.tolist(),
        "velocities": basis.qdot.tolist(),
        "accelerations": basis.qddot.tolist(),
    }
    if basis.source_indices is not None:
        d["source_indices"] = list(basis.source_indices)
    return d


def save_archive(path, archive: ExplorationArchive, model: ArmModel):
    write_json(path, archive_to_dict(archive, model))


def save_basis(path, basis: BasisSet, model: ArmModel, proto_tasks=(), extra=None):
    write_json(path, basis_to_dict(basis, model, proto_tasks, extra))


def _arrays(d):
    h = d["header"]
    shape = (h["count"], h["n_samples"], h["n_joints"])
    out = []
    for key in ("signals", "responses", "velocities", "accelerations"):
        a = np.asarray(d[key], dtype=float)
        if a.shape != shape:
            raise SynergyError(f"archive field {key!r} has shape {a.shape}, header says {shape}")
        out.append(a)
    return out


def _check_format(d):
    if d.get("format") != FORMAT:
        raise SynergyError("not a synergy archive file")


def check_fingerprint(d: dict, model: ArmModel | None):
    if model is not None and d["model_fingerprint"] != model.fingerprint():
        raise FingerprintMismatchError(
            f"archive was built for model {d['model_fingerprint']}, config model is {model.fingerprint()}"
        )


def load_archive(path, model: ArmModel | None = None) -> ExplorationArchive:
    d = read_json(path)
    _check_format(d)
    if d["kind"] != "exploration":
        raise SynergyError(f"{path} holds a {d['kind']!r} basis, not an exploration archive")
    check_fingerprint(d, model)
    sig, q, qd, qdd = _arrays(d)
    targets = np.asarray(d["targets"]) if "targets" in d else None
    return ExplorationArchive(ExplorationConfig.from_dict(d["config"]), d["model_fingerprint"], sig, q, qd, qdd, targets)


def load_basis(path, model: ArmModel | None = None):
    """Load a reduced basis (or an exploration archive as a full basis).

    Returns ``(basis, proto_tasks)``; ``proto_tasks`` is empty for archives.
    """
    d = read_json(path)
    _check_format(d)
    check_fingerprint(d, model)
    sig, q, qd, qdd = _arrays(d)
    kind = "reduced" if d["kind"] == "reduced" else "exploration"
    src = tuple(d["source_indices"]) if "source_indices" in d else None
    if kind == "exploration" and src is None:
        src = tuple(range(sig.shape[0]))
    basis = BasisSet(d["header"]["dt"], np.asarray(d["initial_q"]), sig, q, qd, qdd, kind, src)
    protos = [ProtoTask(p["target"], p["provenance"]) for p in d.get("config", {}).get("proto_tasks", [])]
    return basis, protos


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def read_csv(path):
    with Path(path).open(newline="") as f:
        return list(csv.DictReader(f))


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def write_error_map_csv(path, error_map: ErrorMap):
    write_csv(path, ["x", "y", "err_P", "err_F_ee"],
              [(r["x"], r["y"], r["err_P"], r["err_F_ee"]) for r in error_map.to_rows()])


def write_trajectory_csv(path, solution):
    """Per-sample trajectories of a solved task."""
    n = solution.interpolant.q.shape[1]
    header = (
        ["t"]
        + [f"q_interp_{i + 1}" for i in range(n)]
        + [f"q_realized_{i + 1}" for i in range(n)]
        + [f"u_target_{i + 1}" for i in range(n)]
        + [f"u_realized_{i + 1}" for i in range(n)]
    )
    t = solution.interpolant.times
    cols = np.column_stack([
        t, solution.interpolant.q, solution.realized.q,
        solution.actuation_target.u, solution.actuation_realized.u,
    ])
    write_csv(path, header, cols.tolist())


# -- SVG ---------------------------------------------------------------------------

_VIRIDIS = [
    (0.0, (68, 1, 84)),
    (0.25, (59, 82, 139)),
    (0.5, (33, 145, 140)),
    (0.75, (94, 201, 98)),
    (1.0, (253, 231, 37)),
]


def _color(x):
    """Viridis-like color for ``x`` in [0, 1]; grey for NaN."""
    if not math.isfinite(x):
        return "#bbbbbb"
    x = min(max(x, 0.0), 1.0)
    for (x0, c0), (x1, c1) in zip(_VIRIDIS, _VIRIDIS[1:]):
        if x <= x1:
            w = (x - x0) / (x1 - x0)
            return "#%02x%02x%02x" % tuple(round(a + w * (b - a)) for a, b in zip(c0, c1))
    return "#%02x%02x%02x" % _VIRIDIS[-1][1]


def error_map_svg(error_map: ErrorMap, model: ArmModel, q0=None, proto_tasks=(), field="err_P",
                  title=None, size=480) -> str:
    """Self-contained SVG of an error map on log10 color scale."""
    values = np.asarray(getattr(error_map, field), dtype=float)
    r_min, r_max = workspace_boundary(model)
    scale = (size / 2 - 30) / r_max
    cx = cy = size / 2

    def xy(p):
        return cx + scale * p[0], cy - scale * p[1]

    logs = np.log10(np.where(values > 0, values, np.nan))
    finite = logs[np.isfinite(logs)]
    lo, hi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    span = hi - lo or 1.0
    cell = max(2.0, 0.6 * scale * (r_max - r_min) / max(1, int(np.sqrt(len(values)))))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size + 40}" '
        f'viewBox="0 0 {size} {size + 40}">',
        f'<rect width="100%" height="100%" fill="white"/>',
    ]
    if title:
        parts.append(f'<text x="10" y="18" font-family="sans-serif" font-size="13">{escape(title)}</text>')
    for p, v in zip(error_map.grid, logs):
        x, y = xy(p)
        parts.append(
            f'<rect x="{x - cell / 2:.2f}" y="{y - cell / 2:.2f}" width="{cell:.2f}" height="{cell:.2f}" '
            f'fill="{_color((v - lo) / span)}"/>'
        )
    for r in (r_min, r_max):
        parts.append(f'<circle cx="{cx}" cy="{cy}" r="{scale * r:.2f}" fill="none" stroke="black" stroke-width="1"/>')
    if q0 is not None:
        pts = joint_positions(model, np.asarray(q0, dtype=float))
        path = " ".join(f"{x:.2f},{y:.2f}" for x, y in (xy(p) for p in pts))
        parts.append(f'<polyline points="{path}" fill="none" stroke="black" stroke-width="3"/>')
    for pt in proto_tasks:
        x, y = xy(pt.target)
        parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="5" fill="none" stroke="red" stroke-width="2"/>')
    # color bar
    for i in range(100):
        parts.append(
            f'<rect x="{30 + i * (size - 60) / 100:.2f}" y="{size + 8}" width="{(size - 60) / 100 + 0.5:.2f}" '
            f'height="10" fill="{_color(i / 99)}"/>'
        )
    parts.append(f'<text x="30" y="{size + 32}" font-family="sans-serif" font-size="11">'
                 f'log10 {field}: {lo:.2f}</text>')
    parts.append(f'<text x="{size - 30}" y="{size + 32}" text-anchor="end" font-family="sans-serif" '
                 f'font-size="11">{hi:.2f}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
