"""
Boundary control through a Neumann condition
============================================

y_t = y_xx - y + 5 y(t - 0.2) on (0, 1) with y_x(0) = 0 and y_x(1) = u.
In cosine modes the control matrix has entries of constant size, so the
control operator is unbounded; the same pipeline still applies.
"""
import numpy as np

from delaystab import (
    History, SimConfig, SynthesisRequest, build_neumann_boundary_model, check_assumptions,
    estimate_decay_rate, simulate_closed_loop, spectral_abscissa, synthesize,
)

sys = build_neumann_boundary_model(24, alpha_shift=1.0, kappa=5.0, tau=0.2)
print("control column:", np.round(sys.control_matrix[:5, 0], 4))
print("assumptions:", check_assumptions(sys, admissibility_bound=1.4))
print("open-loop abscissa:", spectral_abscissa(sys).value)

y0 = 1.0 / np.arange(1, 25)
cfg = SimConfig(y0, History.exponential(-1.0, y0, 0.2, 64))
for gamma in (1.0, 2.0, 4.0):
    law = synthesize(sys, SynthesisRequest(alpha=gamma))
    print(f"gamma={gamma:g}: fitted rate {estimate_decay_rate(simulate_closed_loop(sys, law, cfg)):.2f}")
