"""
How many factors?
=================

The eigenvalue-ratio estimator on a Design-2 panel, next to the scree of the
scaled Gram matrix.
"""

from fsrtest import SimulationConfig, generate_panel
from fsrtest.factor_model import decompose, eigenvalue_ratios, gram_eigenvalues

data = generate_panel(SimulationConfig.for_design(2, T=100, p=100, seed=3), 0)

eig = gram_eigenvalues(data.X)
ratios = eigenvalue_ratios(eig, k_max=8)
print(" k  eigenvalue   ratio")
for k in range(8):
    print(f"{k + 1:>2}  {eig[k]:10.4f}  {ratios[k]:7.3f}")

dec = decompose(data)
print("estimated K:", dec.K_hat)

# residualized regressors are orthogonal to the estimated factors
print("max |U_hat' F_hat|:", abs(dec.U_hat.T @ dec.F_hat).max())
