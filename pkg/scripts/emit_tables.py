"""Write every registered table as CSV into a directory (default ./tables)."""
import pathlib
import sys

from collatz_lab.cli_reports import TABLES, emit_table

out = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "tables")
out.mkdir(parents=True, exist_ok=True)
for name in sorted(TABLES):
    (out / f"{name}.csv").write_text(emit_table(name, "csv"))
    print("wrote", out / f"{name}.csv")
