#!/usr/bin/env python3
"""Reproduce the synthetic-benchmark numbers end to end.

Generates the 10-class benchmark, trains a k-shot head per seed, evaluates
the aggregate, then runs the zero-shot pretraining path and evaluates that
too. Everything goes through the protoverb CLI so the numbers match what a
user would get by hand.
"""

import argparse
import json
import subprocess
import sys
from pathlib import Path


def sh(*args):
    cmd = [sys.executable, "-m", "protoverb"] + [str(a) for a in args]
    proc = subprocess.run(cmd, text=True, capture_output=True)
    if proc.returncode != 0:
        sys.stderr.write(proc.stderr)
        raise SystemExit(proc.returncode)
    return proc.stdout


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--workdir", type=Path, default=Path("runs/synth"))
    ap.add_argument("--classes", type=int, default=10)
    ap.add_argument("--k", type=int, default=20)
    ap.add_argument("--q", type=int, default=30)
    ap.add_argument("--seeds", default="0,1,2", help="comma list, fanned out")
    ap.add_argument("--noise", type=float, default=0.1)
    args = ap.parse_args()

    work = args.workdir
    data = work / "data"
    ckpts = work / "checkpoints"
    zero_dir = ckpts / "zero"
    zero_dir.mkdir(parents=True, exist_ok=True)

    sh("synth", "--out", data, "--classes", args.classes,
       "--train-per-class", 100, "--test-per-class", 100,
       "--noise", args.noise, "--seed", 0)

    common = [
        "--labels", data / "labels.txt",
        "--label-words", data / "label_words.txt",
        "--template-file", data / "templates.txt",
    ]
    sh("train", "--dataset", data / "train.csv", *common,
       "--k", args.k, "--seed", args.seeds, "--out", ckpts)

    seed_list = args.seeds.split(",")
    paths = ",".join(str(ckpts / f"checkpoint_seed{s}.json") for s in seed_list)
    kshot = sh("eval", "--checkpoint", paths, "--dataset", data / "test.csv",
               *common, "--out", work / "report_kshot.json")

    sh("pretrain", "--corpus", data / "corpus.txt",
       "--labels", data / "labels.txt", "--label-words", data / "label_words.txt",
       "--q", args.q, "--seed", args.seeds, "--out", zero_dir)
    zero_paths = ",".join(
        str(zero_dir / f"checkpoint_seed{s}.json") for s in seed_list
    )
    zshot = sh("eval", "--checkpoint", zero_paths, "--dataset", data / "test.csv",
               *common, "--out", work / "report_zeroshot.json")

    print(f"{args.k}-shot  aggregate: {json.loads(kshot)}")
    print(f"zero-shot aggregate: {json.loads(zshot)}")
    print(f"reports under {work}/")


if __name__ == "__main__":
    main()
