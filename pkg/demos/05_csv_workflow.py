"""
From CSV files to a p-value
===========================

The empirical workflow: an already-transformed monthly panel in CSV form, the
outcome led by one period, standardized columns, and a p-value on the level
grid 0.001, 0.002, ..., 0.999. The same run from the shell is::

    fsrtest pvalue --y y.csv --x x.csv --date-column --lag 1 --standardize \
        --grid-size 2000 --bootstrap 2000
"""

import tempfile
from pathlib import Path

import numpy as np

from fsrtest import SimulationConfig, TestConfig, generate_panel, load_panel, p_value
from fsrtest.cli import main
from fsrtest.data_io import CsvPanel, write_csv_panel

sim = generate_panel(SimulationConfig.for_design(2, T=128, p=60, m=0.3, seed=11), 0)
dates = tuple(f"{2009 + (i + 6) // 12}-{(i + 6) % 12 + 1:02d}" for i in range(128))

workdir = Path(tempfile.mkdtemp())
# shift the outcome so that y at t+1 lines up with x at t after lag alignment
y_led = np.r_[0.0, sim.Y[:-1]]
write_csv_panel(workdir / "y.csv", CsvPanel(("outcome",), y_led[:, None], dates))
write_csv_panel(workdir / "x.csv", CsvPanel(tuple(f"x{j}" for j in range(60)), sim.X, dates))

data = load_panel(workdir / "y.csv", workdir / "x.csv", date_column=True, standardize_data=True, lag=1)
print("T after alignment:", data.T, " first label:", data.labels[0])

res = p_value(data, cfg=TestConfig(M=200, L=200, seed=42))
print(f"p-value {res.p_value:.3f} with K_hat={res.K_hat}")

print("\nCLI report:")
main(["pvalue", "--y", str(workdir / "y.csv"), "--x", str(workdir / "x.csv"),
      "--date-column", "--lag", "1", "--standardize", "--format", "text"])
