"""BK sweep (16, 64, 128, 384) over the linear-layer operands of bert-base and
bert-large; every row carries its error against the naive kernel."""
import argparse
import pathlib
import sys

from cpuinfer.cli import main

p = argparse.ArgumentParser()
p.add_argument("--bk", default="16,64,128,384")
p.add_argument("--seq-len", default="128")
p.add_argument("--threads", default="1")
p.add_argument("--reps", default="3")
p.add_argument("--outdir", default="results")
args = p.parse_args()

outdir = pathlib.Path(args.outdir)
outdir.mkdir(parents=True, exist_ok=True)
for cfg in ("bert-base", "bert-large"):
    out = outdir / f"sweep_{cfg}.csv"
    rc = main(["sweep-partition", "--cfg", cfg, "--bk", args.bk, "--seq-len", args.seq_len,
               "--threads", args.threads, "--reps", args.reps, "--modes", "NN,NT", "--out", str(out)])
    if rc:
        sys.exit(rc)
    print(out)
