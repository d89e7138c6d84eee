"""Acyclicity zones and longest-path ranks of the residue-budget graphs."""
import sys

from collatz_lab.state_graphs import dag_zone_table

Ms = range(6, int(sys.argv[1]) + 1 if len(sys.argv) > 1 else 20)
print(f"{'M':>3} {'K':>2} {'acyclic':>8} {'cycle_states':>13} {'max_rank':>9}")
for row in dag_zone_table(Ms, (1, 5)):
    print(f"{row.M:>3} {row.K:>2} {str(row.acyclic):>8} {row.cycle_states:>13} {str(row.max_rank):>9}")
