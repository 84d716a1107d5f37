"""Two-pixel dynamics of a perturbed proximal operator
=====================================================

The denoiser D(x) = (I + P) soft_t(x) is a slightly perturbed proximal
operator of t * ||x||_1.  Plugged into forward-backward splitting with a
diagonal forward operator, the perturbation P decides the fate of the
iteration; averaging the denoiser over coordinate swaps replaces P by its
flip average, which is closer to a true proximal operator.

This script runs both canned parameter sets and prints the head and tail of
each trajectory (full trajectories go to CSV files in toy_out/).
"""

from pathlib import Path

from eqpnp.experiments import run_toy2d

results = run_toy2d("toy_out", max_iters=20_000)
for name, record in results.items():
    print(f"--- {name} ---")
    print(f"  oracle minimizer            {record['oracle']}")
    for tag in ("standard", "equivariant"):
        run = record[tag]
        dist = run["distance_to_oracle"]
        dist_txt = f"{dist:.4f}" if dist is not None else "n/a (diverged)"
        print(f"  {tag:12s} status={run['status']:9s} distance to minimizer {dist_txt}")

print()
for csv in sorted(Path("toy_out").glob("*_trajectory.csv")):
    lines = csv.read_text().strip().split("\n")
    print(f"{csv.name}: {len(lines) - 1} iterates; first {lines[1]}; last {lines[-1]}")
