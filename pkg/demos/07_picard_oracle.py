"""
A fixed-point check on the time stepper
=======================================

On short windows the closed loop is a contraction of its integral form.
Iterating it gives an independent solution to compare with the stepper.
"""
import numpy as np

from delaystab import (
    History, SimConfig, SynthesisRequest, build_interior_model, picard_solve_step,
    simulate_closed_loop, synthesize,
)

sys = build_interior_model(24, [(0.2, 0.9)], kappa=10.0, tau=0.2)
law = synthesize(sys, SynthesisRequest(alpha=2.0))
y0 = 1.0 / np.arange(1, 25)
cfg = SimConfig(y0, History.exponential(-1.0, y0, 0.2, 64), dt=0.001)

pic = picard_solve_step(sys, law, cfg, horizon=0.2)
print(f"window {pic.step_length:g}, contraction {pic.contraction:.3f},"
      f" iterations per window {min(pic.iterations)}..{pic.max_iterations}")

step = simulate_closed_loop(sys, law, cfg.replace(dt=0.0005, horizon=0.2))
print("sup difference:", np.max(np.abs(pic.heads - step.heads)))

# without feedback the map does not depend on the iterate
print("F = 0 iterations:", picard_solve_step(sys, np.zeros((24, 24)), cfg).max_iterations)
