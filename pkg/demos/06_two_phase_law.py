"""
Localized delay and the two-phase law
=====================================

The delay acts on omega1 = (0, 0.5), the control on omega2 = (0.5, 1).
No control is applied on [0, tau]; afterwards u = F y(t) + a y(t - tau)
on omega2 completes the delay term to a constant coupling a y(t - tau).
"""
import numpy as np

from delaystab import (
    History, SimConfig, build_interior_model, build_localized_model, estimate_decay_rate,
    simulate_closed_loop, simulate_open_loop, simulate_two_phase, synthesize_localized,
)

a, tau = 5.0, 0.2
sys = build_localized_model(24, [(0, 0.5)], [(0.5, 1)], a, tau)
law = synthesize_localized(sys, [(0, 0.5)], [(0.5, 1)], gamma=2.0)
y0 = 1.0 / np.arange(1, 25) ** 2
cfg = SimConfig(y0, History.exponential(-1.0, y0, tau, 64))

traj = simulate_two_phase(sys, law, cfg)
lag = traj.info["switch_index"]
print("max |u| on [0, tau]:", traj.control_norms[: lag + 1].max())
print("fitted rate after tau:", estimate_decay_rate(traj))

# after tau the trajectory is the constant-coefficient closed loop restarted at tau
free = simulate_open_loop(sys, cfg.replace(horizon=tau))
const = build_interior_model(24, [(0.5, 1)], a, tau)
h = traj.info["dt"]
rest = simulate_closed_loop(const, law.inner, SimConfig(
    free.final_state, free.end_history, dt=h, horizon=(len(traj.times) - 1 - lag) * h))
print("restart mismatch:", np.max(np.abs(traj.heads[lag:] - rest.heads)))
