# A homogeneous slab is the one case with a closed form, so start there.
# The envelope is constant, eps_v = eps_bar (1 - delta), and the series in
# delta should reproduce the three-layer answer order by order.
import math

import numpy as np

from hope import Constant, HopeProblem, NumericalParams, ScatteringConfig, run_hope, taylor_sum
from hope.diagnostics import analyticity_report, scattering_result
from hope.oracles import three_layer
from hope.verification import transfer_matrix_errors

# period 0.9 keeps every lateral mode away from cutoff at k0 = 2 pi
cfg = ScatteringConfig(k0=2 * math.pi, h=1.0, delta=0.05, theta=0.3, d_x=0.9, d_y=0.9)
problem = HopeProblem.build(cfg, NumericalParams(8, 8, 32, 10), Constant(1.0))
series = run_hope(problem)

print(problem.table.counts())  # propagating modes per medium

# order-by-order norms: roughly geometric, ratio ~ B
rep = analyticity_report(series, delta=cfg.delta)
print("B =", round(rep.B, 3), " B*delta =", round(rep.b_delta, 3))
print(np.round(series.ratios(), 3))

# amplitude error against the transfer matrix, truncating at L = 0..10
errs = transfer_matrix_errors(problem, series, cfg.delta)
for L, e in enumerate(errs):
    print(f"L={L:2d}  error {e:.2e}")

# the reflected efficiency should match |r|^2 of the exact slab
exact = three_layer(cfg, cfg.eps_bar * (1 - cfg.delta))
res = scattering_result(series, problem)
print("R (series) =", res.efficiency.total_reflected)
print("R (exact)  =", float(np.sum(np.abs(exact.reflected) ** 2)))
print("energy defect", res.energy_defect)

# delta is only a parameter of the summation, so other slabs come for free
for d in (0.02, 0.1, -0.05):
    r = scattering_result(series, problem, d)
    ex = three_layer(cfg, cfg.eps_bar * (1 - d))
    print(d, r.efficiency.total_reflected, float(np.sum(np.abs(ex.reflected) ** 2)))
