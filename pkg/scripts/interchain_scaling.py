"""Inter-chain core-hit ratio as a function of start size.

Usage: python scripts/interchain_scaling.py [--orbits N] [--r R]
"""
import argparse

from collatz_lab.fiber57 import InterchainConfig, interchain_batch

ap = argparse.ArgumentParser()
ap.add_argument("--orbits", type=int, default=2000)
ap.add_argument("--r", type=int, default=2)
ap.add_argument("--seed", type=int, default=20240917)
a = ap.parse_args()

print(f"{'bits':>5} {'visits':>8} {'R_r':>7} {'control':>8}")
for bits in (20, 32, 40, 64, 100):
    cfg = InterchainConfig(orbits=a.orbits, n_max=2**bits, seed=a.seed)
    res = interchain_batch(a.r, cfg)
    ctl = interchain_batch(a.r, cfg, control=True)
    print(f"{bits:>5} {res.visits:>8} {res.normalized_R_r:>7.3f} {ctl.normalized_R_r:>8.3f}")
