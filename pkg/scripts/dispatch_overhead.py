"""Dispatch-phase vs kernel-phase split, full and fast path, for a short
(8 tokens) and a long (384 tokens) attention projection."""
import argparse
import pathlib
import sys

from cpuinfer.cli import main

p = argparse.ArgumentParser()
p.add_argument("--threads", default="2,4")
p.add_argument("--reps", default="10000")
p.add_argument("--outdir", default="results")
args = p.parse_args()

outdir = pathlib.Path(args.outdir)
outdir.mkdir(parents=True, exist_ok=True)
for m in (8, 384):
    out = outdir / f"dispatch_{m}x768x768.csv"
    rc = main(["bench-dispatch", "--shape", f"{m},768,768", "--threads", args.threads, "--reps", args.reps,
               "--verify", "--out", str(out)])
    if rc:
        sys.exit(rc)
    print(out)
