"""
Driving experiments from the command line
=========================================

The ``riskbound`` console script runs a configured experiment to a CSV
of raw trials plus a JSON summary, and renders a deterministic SVG from
a summary.  This demo exercises the same entry point in-process.
"""

import json
from pathlib import Path

from riskbound import cli

out_dir = Path(__file__).resolve().parent / "_output"
out_dir.mkdir(exist_ok=True)

# A small rate sweep on the parametric regression scenario.
config = {
    "experiment": "rate",
    "method": "erm",
    "scenario.name": "finite-dim",
    "scenario.d": 3,
    "plan.n_sweep": [32, 64, 128, 256, 512, 1024],
    "plan.replicates": 30,
    "plan.t": 1.0,
    "seed": 0,
}
config_path = out_dir / "rate_demo.json"
config_path.write_text(json.dumps(config, indent=2))

code = cli.main(["run", str(config_path), "--out-dir", str(out_dir)])
print(f"run exit code: {code}")

csv_path = out_dir / "rate_demo.csv"
summary_path = out_dir / "rate_demo.summary.json"
print("\nfirst CSV rows:")
for line in csv_path.read_text().splitlines()[:4]:
    print(" ", line)

summary = json.loads(summary_path.read_text())
print(f"\nfitted log-log slope: {summary['slope']:.3f} "
      f"(+/- {summary['slope_ci']:.3f})")

# Plotting is a separate subcommand reading only the summary.
code = cli.main(["plot", str(summary_path), "--out-dir", str(out_dir)])
svg_path = out_dir / "rate_demo.svg"
print(f"\nplot exit code: {code}; wrote {svg_path.name} "
      f"({svg_path.stat().st_size} bytes)")
