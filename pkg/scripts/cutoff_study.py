"""Max err_P on the 13 evaluation targets as a function of the SVD cutoff.

Shows that the min-jerk projection error floor is set by the singular values
the cutoff discards, not by the integrator.
"""

import argparse

import numpy as np

from synergies import experiments as ex
from synergies import solver
from synergies.config import ExperimentConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--cutoffs", type=float, nargs="+", default=[1e-8, 1e-10, 1e-12, 1e-14])
    args = ap.parse_args()

    default = solver.RCOND
    print("seed  class            " + "  ".join(f"{c:>9.0e}" for c in args.cutoffs))
    try:
        for seed in args.seeds:
            cfg = ExperimentConfig().with_seed(seed)
            for cls, archive in ex.explore(cfg).items():
                row = []
                for c in args.cutoffs:
                    solver.RCOND = c
                    basis = ex.archive_basis(archive)  # fresh basis: the pseudoinverse is cached per instance
                    row.append(ex.max_errors(ex.solve_evaluation(cfg, basis))["err_P"])
                s = np.linalg.svd(basis.synergy_matrix, compute_uv=False)
                kept = [int((s > c * s[0]).sum()) for c in args.cutoffs]
                print(f"{seed:>4}  {cls:<15}  " + "  ".join(f"{v:9.2e}" for v in row), " rank", kept)
    finally:
        solver.RCOND = default


if __name__ == "__main__":
    main()
