#!/usr/bin/env python3
"""End-to-end demo on a generated corpus: synth -> eda -> bench -> train ->
evaluate, then a side-by-side summary of both branches.

Runs in a couple of minutes on a laptop CPU and needs no external data.

    python scripts/synthetic_demo.py --out runs/demo
"""

import argparse
import json
import sys
from pathlib import Path

from hatebench import cli


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/demo")
    parser.add_argument("--n", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=31)
    parser.add_argument("--epochs", type=int, default=10)
    args = parser.parse_args()

    out = Path(args.out)
    data = out / "synthetic.csv"
    common = ["--data", str(data), "--seed", str(args.seed)]

    steps = [
        ["synth", "--n", str(args.n), "--seed", str(args.seed), "--out", str(data)],
        ["eda", *common, "--out", str(out / "eda")],
        ["bench", *common, "--out", str(out / "bench")],
        ["train", *common, "--out", str(out / "train"),
         "--set", f"max_epochs={args.epochs}"],
        ["evaluate", str(out / "train" / "checkpoint.npz"), *common,
         "--out", str(out / "evaluate")],
    ]
    for step in steps:
        print(f"\n=== hatebench {' '.join(step)}")
        code = cli.main(step)
        if code != 0:
            return code

    bench = json.loads((out / "bench" / "report.json").read_text())
    train = json.loads((out / "train" / "report.json").read_text())
    print("\n=== summary (percent) ===")
    print(f"{'method':<16} {'acc':>6} {'prec':>6} {'rec':>6} {'f1':>6}")
    for method in ("linear_svm", "naive_bayes", "random_forest"):
        pct = bench["metrics"][method]["percent"]
        print(f"{method:<16} {pct['accuracy']:>6} {pct['precision']:>6} "
              f"{pct['recall']:>6} {pct['f1']:>6}")
    pct = train["metrics"]["cnn_bilstm"]["percent"]
    print(f"{'cnn_bilstm':<16} {pct['accuracy']:>6} {pct['precision']:>6} "
          f"{pct['recall']:>6} {pct['f1']:>6}")
    print(f"\nchampion of the conventional branch: {bench['meta']['champion']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
