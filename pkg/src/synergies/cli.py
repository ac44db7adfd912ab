"""Command-line harness.

    synergies explore  [--config C] [--seed S] [--out DIR]
    synergies solve13  --archive A [--stay-put]
    synergies reduce   --archive A
    synergies compare  --archive A --basis B
    synergies solve    --task TASK.json (--archive A | --basis B)

Errors are reported as one JSON object on stderr with a nonzero exit code.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from . import io
from .arm import forward_kinematics
from .config import ExperimentConfig, load_config
from .errors import SynergyError
from .exploration import verify_archive
from .reduction import ProtoTask
from .solver import BasisSet, ReachingTask, TaskSolution, solve_task

log = logging.getLogger("synergies")


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _out(args, cfg) -> Path:
    out = Path(args.out if args.out else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(cfg, command, **extra):
    return {
        "command": command,
        "config_fingerprint": cfg.fingerprint(),
        "model_fingerprint": cfg.model.fingerprint(),
        "config": cfg.to_dict(),
        **extra,
    }


def _load_archive(args, cfg):
    if not args.archive:
        raise SynergyError("--archive is required")
    archive = io.load_archive(args.archive, cfg.model)
    if not verify_archive(cfg.model, archive, n_check=min(5, len(archive)), seed=0):
        raise SynergyError(f"{args.archive}: stored responses do not match re-integrated signals")
    return archive


def cmd_explore(args):
    cfg = _config(args)
    out = _out(args, cfg)
    classes = [args.signal_class] if args.signal_class else ["min_jerk", "lowpass_random"]
    files = {}
    for cls, archive in ex.explore(cfg, classes).items():
        path = out / f"archive_{cls}.json"
        io.save_archive(path, archive, cfg.model)
        traces = forward_kinematics(cfg.model, archive.q)
        t = np.arange(traces.shape[1]) * archive.dt
        rows = [(k, t[i], traces[k, i, 0], traces[k, i, 1])
                for k in range(traces.shape[0]) for i in range(traces.shape[1])]
        io.write_csv(out / f"traces_{cls}.csv", ["signal", "t", "x", "y"], rows)
        files[cls] = {"archive": path.name, "pairs": len(archive)}
        log.info("%s: %d pairs -> %s", cls, len(archive), path)
    io.write_json(out / "manifest_explore.json", _manifest(cfg, "explore", outputs=files))
    return files


def cmd_solve13(args):
    cfg = _config(args)
    archive = _load_archive(args, cfg)
    basis = ex.archive_basis(archive)
    label = archive.config.signal_class
    out = _out(args, cfg) / f"solve13_{label}"
    results = ex.solve_evaluation(cfg, basis, stay_put=args.stay_put)
    io.write_csv(out / "summary.csv", ["task_id", *ex.ERROR_FIELDS], ex.error_table(results))
    trace_rows = []
    failures = {}
    for tid, res in results:
        if not isinstance(res, TaskSolution):
            failures[tid] = str(res)
            continue
        io.write_json(out / "solutions" / f"{tid}.json", res.to_dict())
        io.write_trajectory_csv(out / "solutions" / f"{tid}.csv", res)
        p = forward_kinematics(cfg.model, res.realized.q)
        trace_rows += [(tid, t, x, y) for t, (x, y) in zip(res.realized.times, p)]
    io.write_csv(out / "fd_traces.csv", ["task_id", "t", "x", "y"], trace_rows)
    table = ex.max_errors(results)
    io.write_json(out / "max_errors.json", {"signal_class": label, "n_basis": basis.size, "max": table,
                                        "failures": failures})
    io.write_json(out / "manifest.json", _manifest(cfg, "solve13", archive=str(args.archive)))
    log.info("%s max errors: %s", label, table)
    return table


def cmd_reduce(args):
    cfg = _config(args)
    archive = _load_archive(args, cfg)
    out = _out(args, cfg) / "reduce"
    result = ex.reduce_archive(cfg, ex.archive_basis(archive))
    q0 = archive.config.initial_q
    growth = []
    for i, m in enumerate(result.maps):
        io.write_error_map_csv(out / f"map_{m.basis_size}.csv", m)
        shown = result.proto_tasks[: m.basis_size]
        svg = io.error_map_svg(m, cfg.model, q0, shown, "err_P", f"projection error, {m.basis_size} proto-tasks")
        (out / f"map_{m.basis_size}.svg").write_text(svg)
        growth.append({"basis_size": m.basis_size, "mean_err_P": m.mean_err_P,
                       "mean_err_F_ee": float(np.nanmean(m.err_F_ee))})
    final = result.maps[-1]
    svg = io.error_map_svg(final, cfg.model, q0, result.proto_tasks, "err_F_ee",
                           f"end-effector forward error, {final.basis_size} synergies")
    (out / f"map_{final.basis_size}_err_F_ee.svg").write_text(svg)
    io.save_basis(out / "basis.json", result.basis, cfg.model, result.proto_tasks,
                  {"archive_signal_class": archive.config.signal_class})
    io.write_json(out / "proto_tasks.json", [pt.to_dict() for pt in result.proto_tasks])
    summary = {
        "iterations": growth,
        "saturated": result.saturated,
        "combinator_dimension": result.basis.size,
        "archive_dimension": len(archive),
        "reduction_factor": len(archive) / result.basis.size,
    }
    io.write_json(out / "growth.json", summary)
    io.write_json(out / "manifest.json", _manifest(cfg, "reduce", archive=str(args.archive)))
    return summary


def cmd_compare(args):
    cfg = _config(args)
    archive = _load_archive(args, cfg)
    if not args.basis:
        raise SynergyError("--basis is required")
    reduced, _ = io.load_basis(args.basis, cfg.model)
    out = _out(args, cfg) / "compare"
    report = ex.compare_subsets(cfg, ex.archive_basis(archive), reduced)
    io.write_json(out / "report.json", report.to_dict())
    rows = []
    for t in report.to_dict()["per_target"]:
        s = t["err_P"]
        rows.append([t["task_id"], s["mean"], s["q1"], s["median"], s["q3"], s["whisker_low"],
                     s["whisker_high"], len(s["outliers"]), t["reduced_err_P"], t["reduced_err_F_ee"]])
    io.write_csv(out / "per_target.csv",
                 ["task_id", "subset_mean", "q1", "median", "q3", "whisker_low", "whisker_high",
                  "n_outliers", "reduced_err_P", "reduced_err_F_ee"], rows)
    io.write_csv(out / "subset_errors.csv", ["subset", "task_id", "err_P", "err_F_ee"],
                 [(i, tid, report.subset_err_P[i, j], report.subset_err_F_ee[i, j])
                  for i in range(report.subsets.shape[0]) for j, tid in enumerate(report.task_ids)])
    io.write_json(out / "manifest.json", _manifest(cfg, "compare", archive=str(args.archive), basis=str(args.basis)))
    return report.summary()


def _read_task(path, cfg, basis: BasisSet) -> ReachingTask:
    d = io.read_json(path)
    if "target" in d:
        return ProtoTask(d["target"]).to_task(cfg.model, basis.q0, d.get("T", basis.duration), cfg.branch)
    d = {"q0": basis.q0.tolist(), "T": basis.duration, **d}
    return ReachingTask.from_dict(d)


def cmd_solve(args):
    cfg = _config(args)
    if args.basis:
        basis, _ = io.load_basis(args.basis, cfg.model)
    else:
        basis = ex.archive_basis(_load_archive(args, cfg))
    task = _read_task(args.task, cfg, basis)
    sol = solve_task(cfg.model, basis, task)
    result = sol.to_dict()
    if args.out:
        out = _out(args, cfg) / "solve"
        io.write_json(out / "solution.json", result)
        io.write_trajectory_csv(out / "trajectories.csv", sol)
    print(json.dumps(result["errors"]))
    return result


COMMANDS = {
    "explore": cmd_explore,
    "solve13": cmd_solve13,
    "reduce": cmd_reduce,
    "compare": cmd_compare,
    "solve": cmd_solve,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML or JSON experiment configuration")
    common.add_argument("--seed", type=int, help="override every seed in the configuration")
    common.add_argument("--out", help="output directory (default: config output_dir)")
    common.add_argument("--archive", help="exploration archive JSON (optionally gzipped)")
    common.add_argument("--basis", help="reduced basis JSON")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="synergies", description=__doc__.splitlines()[0] if __doc__ else None)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("explore", parents=[common], help="generate exploration archives")
    p.add_argument("--class", dest="signal_class", choices=["min_jerk", "lowpass_random"])
    p = sub.add_parser("solve13", parents=[common], help="solve the evaluation targets with a full archive")
    p.add_argument("--stay-put", action="store_true", help="append a zero-displacement task")
    sub.add_parser("reduce", parents=[common], help="grow a reduced basis from proto-tasks")
    sub.add_parser("compare", parents=[common], help="reduced basis vs random archive subsets")
    p = sub.add_parser("solve", parents=[common], help="solve one task given as JSON")
    p.add_argument("--task", required=True, help='JSON with {"target": [x, y]} or {"qT": [...]}')
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except (SynergyError, ValueError, KeyError, OSError) as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc),
                                     "command": args.command}) + "\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
