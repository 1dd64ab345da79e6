"""
Rejection frequencies
=====================

A reduced version of the simulation table: Design 1 at T = p = 100 over a
range of signal strengths. Each cell runs ``reps`` seeded replications.
Raise ``reps`` (and ``workers`` on a multi-core machine) for tighter numbers.
"""

from fsrtest import SimulationConfig, run_monte_carlo

reps = 100
table = None
for m in (0.0, 0.2, 0.4):
    cfg = SimulationConfig.for_design(1, T=100, p=100, m=m, reps=reps, L=100, M=100, seed=7)
    cell = run_monte_carlo(cfg, workers=1)
    if table is None:
        table = cell
    else:
        table.extend(cell)

print(table.to_text())
print(table.to_csv(timing=False))
