"""NN/NT time-ratio grid over the encoder's three weight shapes, sequence lengths
1..512 and a list of thread counts."""
import argparse
import sys

from cpuinfer.cli import main

p = argparse.ArgumentParser()
p.add_argument("--cfg", default="bert-base")
p.add_argument("--threads", default="1,2,4")
p.add_argument("--reps", default="5")
p.add_argument("--out", default="results/ratio.csv")
args = p.parse_args()

sys.exit(main(["bench-matmul", "--cfg", args.cfg, "--threads", args.threads, "--reps", args.reps, "--out", args.out]))
