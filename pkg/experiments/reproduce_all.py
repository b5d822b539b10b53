#!/usr/bin/env python3
import os, sys, subprocess, argparse

ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

def run(cmd):
    print("+", " ".join(cmd))
    subprocess.check_call(cmd)

def main():
    ap = argparse.ArgumentParser(description="Reproduce the pipeline run, the Monte-Carlo tables and the plots.")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--design", type=str, default="fiducial(60)")
    ap.add_argument("--out", type=str, default="out")
    args = ap.parse_args()

    cli = [sys.executable, "scripts/gpt_pipeline.py"]
    common = ["--seed", str(args.seed), "--design", args.design, "--out", args.out]
    run(cli + ["simulate"] + common)
    run(cli + ["fit"] + common + ["--ranks", "8,9,10"])
    run(cli + ["analyze"] + common + ["--rank", "9"])
    run(cli + ["report"] + common)
    run([sys.executable, "experiments/run_all.py", "--seeds", str(args.seeds), "--first-seed", str(args.seed)])
    run([sys.executable, "experiments/plot_results.py"])
    print(f"All done. See {args.out}/, experiments/results.csv, experiments/sweeps.csv and experiments/plots/.")

if __name__ == "__main__":
    main()
