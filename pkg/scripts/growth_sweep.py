"""Workspace-average err_P after each growth step, over several seeds."""

import argparse
import dataclasses

from synergies import experiments as ex
from synergies.config import ExperimentConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3])
    ap.add_argument("--n", type=int, default=6, help="final number of proto-tasks")
    args = ap.parse_args()

    for seed in args.seeds:
        cfg = ExperimentConfig().with_seed(seed)
        cfg = dataclasses.replace(cfg, reduction=dataclasses.replace(cfg.reduction, n_proto_tasks=args.n))
        archive = ex.explore(cfg, ["lowpass_random"])["lowpass_random"]
        res = ex.reduce_archive(cfg, ex.archive_basis(archive))
        print(f"seed {seed}: " + "  ".join(f"{m.basis_size}:{m.mean_err_P:.2e}" for m in res.maps))


if __name__ == "__main__":
    main()
