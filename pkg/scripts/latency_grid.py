"""Encoder latency grid with breakdowns: seq len {8, 64, 384} x threads, for the
framework-default weights (adaptive off) and adaptive selection, under both
partition profiles.  Writes one CSV per variant into the output directory."""
import argparse
import pathlib
import sys

from cpuinfer.cli import main

p = argparse.ArgumentParser()
p.add_argument("--cfg", default="bert-base")
p.add_argument("--threads", default="1,2,4")
p.add_argument("--seq-len", default="8,64,384")
p.add_argument("--reps", default="5")
p.add_argument("--outdir", default="results")
args = p.parse_args()

outdir = pathlib.Path(args.outdir)
outdir.mkdir(parents=True, exist_ok=True)
for partition in ("baseline", "patched"):
    for adaptive in ("off", "on"):
        out = outdir / f"latency_{args.cfg}_{partition}_adaptive-{adaptive}.csv"
        rc = main(["-v", "bench-model", "--cfg", args.cfg, "--threads", args.threads, "--seq-len", args.seq_len,
                   "--reps", args.reps, "--partition", partition, "--adaptive", adaptive, "--out", str(out)])
        if rc:
            sys.exit(rc)
        print(out)
