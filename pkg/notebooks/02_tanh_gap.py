# Slab with an air gap: eps_v = eps_bar (1 - delta E) with E the smoothed
# indicator of a slot of width 2 g around x = 0 and a thin layer in z.
# Period 2, wavelength 1.5.
import math
import warnings

import numpy as np

from hope import HopeProblem, NumericalParams, ScatteringConfig, TanhSlabGap, run_hope
from hope.diagnostics import (analyticity_report, envelope_lateral_slope, scattering_result,
                              spatial_decay_probe)
from hope.driver import divergence_invariant

env = TanhSlabGap(d=0.25, g=0.1, w=50.0)
cfg = ScatteringConfig(k0=4 * math.pi / 3, d_x=2.0, d_y=2.0, h=1.0, theta=math.radians(10))
problem = HopeProblem.build(cfg, NumericalParams(16, 16, 32, 12), env)
series = run_hope(problem)

# per-order H^2 norms and their ratios
for ell, (n, r) in enumerate(zip(series.norms, [np.nan] + list(series.ratios()))):
    print(f"{ell:2d}  {n:.3e}  {r:.3f}")

rep = analyticity_report(series)
print("fitted B", rep.B, "-> radius of convergence roughly", 1 / rep.B)

# The transverse part is solved, the normal part comes from the divergence
# relation, so this is zero up to round-off
print(max(divergence_invariant(series, problem, ell) for ell in range(series.L + 1)))

# Efficiencies for a few slab contrasts, all from the same coefficients
for delta in (0.05, 0.1, 0.2):
    res = scattering_result(series, problem, delta)
    print(f"delta={delta:.2f}  R={res.efficiency.total_reflected:.6f}  "
          f"T={res.efficiency.total_transmitted:.6f}  defect={res.energy_defect:.1e}")

# lateral spectrum of E_1 vs the envelope itself
with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    probe = spatial_decay_probe(series, 1)
print("E_1 slope", probe.lateral_slope, "compensated", probe.compensated_lateral_slope)
print("envelope slope", envelope_lateral_slope(problem.env, problem.lateral))
