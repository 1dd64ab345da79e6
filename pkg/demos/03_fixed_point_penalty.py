"""
The penalty chosen by the bootstrap
===================================

Walk along the LASSO path and compare each grid penalty with the bootstrap
quantile of the criterion evaluated there. The critical value is the
smallest grid penalty above which every quantile stays below its penalty.
"""

import numpy as np

from fsrtest import SimulationConfig, generate_panel
from fsrtest.bootstrap_test import bootstrap_draws, quantile_path, select_lambda
from fsrtest.factor_model import decompose
from fsrtest.lasso import LambdaGrid, compute_lambda_bar

data = generate_panel(SimulationConfig.for_design(1, T=100, p=100, m=0.4, seed=5), 0)
dec = decompose(data)
lam_bar = compute_lambda_bar(dec.U_hat, dec.Y_tilde)
grid = LambdaGrid.equidistant(lam_bar, M=50)
draws = bootstrap_draws(dec.U_hat, dec.Y_tilde, grid, L=200, seed=42)

alpha = 0.05
q = quantile_path(draws, alpha)
m_hat, threshold = select_lambda(draws, alpha)

print("   m   lambda_m   q(lambda_m)  q <= lambda")
for m in np.linspace(0, grid.M - 1, 12).astype(int):
    lam = grid.values[m]
    print(f"{m + 1:>4}  {lam:9.4f}  {q[m]:11.4f}  {q[m] <= lam}")
# m_hat is None when even the top grid point fails; the quantile at
# lambda_bar is then the threshold.
print(f"m_hat={m_hat}, threshold={threshold:.4f}, statistic={lam_bar:.4f}, reject={lam_bar > threshold}")
