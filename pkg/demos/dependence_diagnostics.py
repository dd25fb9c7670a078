"""Coupling and oscillation diagnostics for the kernel-weighted empirical process.

First the coupling discrepancy sup|F - F~| at growing N with k = floor(3 log N),
then the modulus of continuity of the centred process against delta.
"""

import numpy as np

from ladcurves import DesignSpec, ErrorModel, default_curves
from ladcurves.diagnostics import (EmpiricalProcessFrame, coupling_discrepancy_sweep, coupling_lag_rule,
                                   loglog_slope, modulus_sweep)
from ladcurves.estimate import default_grid

curves = default_curves()
model = ErrorModel.noncausal_linear(0.5)

for row in coupling_discrepancy_sweep([1000, 4000, 16000], curves, model, seeds=5):
    print(f"N={row['N']:6d} k={row['coupling_lag']:2d} median sup|F - F~| = {row['median_discrepancy']:.3f}")

design = DesignSpec.balanced(40, 50)
frame = EmpiricalProcessFrame.simulate(design, curves, model, coupling_lag_rule(design.total), 0.1, seed=4)
deltas = [0.4, 0.2, 0.1, 0.05]
rows = modulus_sweep(frame, deltas, default_grid(curves.domain, 0.1, 11), np.linspace(-2.5, 2.5, 21),
                     replications=50, seed=5)
for r in rows:
    print(f"delta={r['delta']:.3f} sup|D| = {r['sup_abs_D']:.3f} (centring se {r['centering_se']:.3f})")
print(f"log-log slope {loglog_slope(deltas, [r['sup_abs_D'] for r in rows]):.2f} (about 1/2 expected)")
