"""
Running a verification campaign
===============================

Scenarios bundle a solver run, its measurements and pass/fail checks.
This is what the ``aggregation1d`` command does, driven from Python with a
reduced configuration.
"""

# %%
import json
import tempfile
from pathlib import Path

from aggregation1d import resolve_config, run_experiment

# %%
out = Path(tempfile.mkdtemp())
cfg = resolve_config(
    {
        "output": str(out),
        "grid": {"L": 60.0, "N": 1024},
        "solver": {"t_end": 32.0, "checkpoints": [2, 8, 32]},
        "diagnostics": {
            "t0": 2.0,
            "lambdas": [1, 4, 16],
            "test_functions": [{"kind": "Bump", "width": 3.0}, {"kind": "GaussianTest", "width": 0.4}],
        },
    },
    "rescale",
)
report = run_experiment(cfg)
print("\n".join(report.summary_lines()))

# %%
print(sorted(p.name for p in out.iterdir()))
print(json.dumps(json.loads((out / "report.json").read_text())["checks"][0], indent=2))
