"""Absorption of core residues under different lift offsets.

Shows the tower element 8^r - 1 re-entering the core when the offset is 0 mod 8.
"""
import argparse

from collatz_lab.fiber57 import absorption_run, invariant_core

ap = argparse.ArgumentParser()
ap.add_argument("--offsets", type=int, nargs="*", default=[1, 2, 9, 10000, 10001, 12345])
ap.add_argument("--rmax", type=int, default=8)
a = ap.parse_args()

for L in a.offsets:
    worst, rev = 0, []
    for r in range(2, a.rmax + 1):
        for s in invariant_core(r).values():
            run = absorption_run(r, s, offset=L)
            worst = max(worst, run.steps)
            if run.revisited_core:
                rev.append((r, s, run.revisits[0]))
    print(f"offset {L}: max odd steps {worst}, revisits {len(rev)}")
    for r, s, hit in rev[:6]:
        print(f"   r={r} s={s} first revisit (step, residue) = {hit}")
