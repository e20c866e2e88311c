#!/usr/bin/env python3
"""Full benchmark driver for the released annotation table.

Runs EDA, the conventional leaderboard and the neural branch on the HS
task (optionally also the auxiliary abusive task) from one root seed, then
merges both branches into a single four-row comparison table.

    python scripts/paper_benchmark.py \
        --data data/re_dataset.csv \
        --slang resources/slang.csv \
        --stopwords resources/stopwords.txt \
        --lexicon resources/abusive.txt \
        --out runs/full --with-abusive

Expect roughly 15 minutes for the conventional branch and up to an hour
for the neural branch on a desktop CPU.
"""

import argparse
import json
import sys
from pathlib import Path

from hatebench import cli

METHOD_ORDER = ("linear_svm", "naive_bayes", "random_forest", "cnn_bilstm")


def run_task(task: str, out: Path, common: list[str]) -> None:
    task_args = [*common, "--task", task]
    for step in (
        ["bench", *task_args, "--out", str(out / task / "bench")],
        ["train", *task_args, "--out", str(out / task / "train")],
    ):
        print(f"\n=== hatebench {' '.join(step)}")
        code = cli.main(step)
        if code != 0:
            raise SystemExit(code)


def merge_table(task_dir: Path) -> list[str]:
    bench = json.loads((task_dir / "bench" / "report.json").read_text())
    train = json.loads((task_dir / "train" / "report.json").read_text())
    merged = {**bench["metrics"], **train["metrics"]}
    lines = ["method,accuracy,precision,recall,f1"]
    for method in METHOD_ORDER:
        if method in merged:
            pct = merged[method]["percent"]
            lines.append(f"{method},{pct['accuracy']},{pct['precision']},"
                         f"{pct['recall']},{pct['f1']}")
    return lines


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--data", required=True, help="released annotation table")
    parser.add_argument("--slang", help="slang/typo normalization map")
    parser.add_argument("--stopwords", help="stopword list, one per line")
    parser.add_argument("--lexicon", help="abusive lexicon, one per line")
    parser.add_argument("--out", default="runs/full")
    parser.add_argument("--seed", type=int, default=13)
    parser.add_argument("--with-abusive", action="store_true",
                        help="also run the auxiliary abusive-label task")
    args = parser.parse_args()

    out = Path(args.out)
    common = ["--data", args.data, "--seed", str(args.seed)]
    for key in ("slang", "stopwords", "lexicon"):
        value = getattr(args, key)
        if value:
            common += ["--set", f"{key}={value}"]

    print(f"\n=== hatebench eda --data {args.data}")
    code = cli.main(["eda", *common, "--out", str(out / "eda")])
    if code != 0:
        return code

    tasks = ["hs"] + (["abusive"] if args.with_abusive else [])
    for task in tasks:
        run_task(task, out, common)
        lines = merge_table(out / task)
        table = out / task / "metrics_combined.csv"
        table.write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"\n=== combined table ({task}) -> {table}")
        print("\n".join(lines))
    return 0


if __name__ == "__main__":
    sys.exit(main())
