"""Run the whole pipeline (explore, solve13 x2, reduce, compare) into one output directory."""

import argparse
import json
import sys
import time
from pathlib import Path

from synergies.cli import main as cli


def step(name, argv):
    t0 = time.perf_counter()
    code = cli(argv)
    print(f"{name:<24} exit {code}  {time.perf_counter() - t0:6.1f} s")
    if code:
        sys.exit(code)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", help="TOML/JSON config (defaults if omitted)")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()

    common = ["--out", args.out]
    if args.config:
        common += ["--config", args.config]
    if args.seed is not None:
        common += ["--seed", str(args.seed)]
    out = Path(args.out)
    mj, rnd = str(out / "archive_min_jerk.json"), str(out / "archive_lowpass_random.json")

    step("explore", ["explore", *common])
    step("solve13 min_jerk", ["solve13", *common, "--archive", mj, "--stay-put"])
    step("solve13 lowpass_random", ["solve13", *common, "--archive", rnd, "--stay-put"])
    step("reduce", ["reduce", *common, "--archive", rnd])
    step("compare", ["compare", *common, "--archive", rnd, "--basis", str(out / "reduce" / "basis.json")])

    print()
    for cls in ("min_jerk", "lowpass_random"):
        t = json.loads((out / f"solve13_{cls}" / "max_errors.json").read_text())["max"]
        print(f"{cls:<15}", "  ".join(f"{k} {v:.2e}" for k, v in t.items()))
    g = json.loads((out / "reduce" / "growth.json").read_text())
    print("growth         ", "  ".join(f"{it['basis_size']}:{it['mean_err_P']:.2e}" for it in g["iterations"]))
    s = json.loads((out / "compare" / "report.json").read_text())["summary"]
    print(f"compare         ratio {s['ratio']:.1f} ({s['orders_of_magnitude']:.2f} orders)")


if __name__ == "__main__":
    main()
