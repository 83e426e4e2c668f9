import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from delaystab.modal import (
    ModalSystem,
    build_interior_model,
    build_localized_model,
    zero_control_rows,
)
from delaystab.roots import rightmost_root
from delaystab.simulate import (
    ContractionError,
    History,
    SimConfig,
    SimulationError,
    Trajectory,
    admissibility_constant,
    estimate_decay_rate,
    fit_constant,
    picard_solve_step,
    simulate_closed_loop,
    simulate_open_loop,
    simulate_two_phase,
    verify_rapid,
)
from delaystab.synthesis import SynthesisRequest, synthesize, synthesize_localized

OMEGA = 0.5671432904097838
BENCH = build_interior_model(24, [(0.2, 0.9)], 10.0, 0.2)


def bench_cfg(**kw):
    y0 = 1.0 / np.arange(1, 25)
    return SimConfig(y0, History.exponential(-1.0, y0, 0.2), **kw)


def synthetic(times, norms, tau=0.1):
    return Trajectory(np.asarray(times), np.asarray(norms), np.zeros(len(times)), tau)


class TestHistory:
    def test_constant(self):
        h = History.constant(2.0, 3, 1.0, 4)
        assert h.values.shape == (3, 5)
        v, d = h.sample([-0.37, 0.0])
        assert np.all(v == 2.0) and np.all(d == 0.0)

    def test_hermite_exact_on_cubics(self):
        f = lambda t: np.array([t**3 - t, 2 * t**2])
        df = lambda t: np.array([3 * t**2 - 1, 4 * t])
        h = History.from_function(f, 1.0, 3, df)
        th = np.linspace(-1, 0, 17)
        v, d = h.sample(th)
        assert np.allclose(v, np.column_stack([f(t) for t in th]), atol=1e-14)
        assert np.allclose(d, np.column_stack([df(t) for t in th]), atol=1e-13)

    def test_outside_window(self):
        with pytest.raises(ValueError):
            History.constant(1.0, 1, 1.0).sample([0.5])

    def test_scaled(self):
        h = History.exponential(0.5, [1.0], 1.0, 8).scaled(1.5)
        assert np.allclose(h.values[0], np.exp(2.0 * h.theta))
        assert np.allclose(h.derivs[0], 2.0 * np.exp(2.0 * h.theta))

    def test_l2_norm(self):
        h = History.constant([3.0, 4.0], 2, 0.25, 10)
        assert h.l2_norm() == pytest.approx(2.5)

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            History.from_samples([[1.0, np.nan]], 1.0)


class TestOpenLoop:
    def test_pure_decay(self):
        sys = ModalSystem([-1.0], [[1.0]], 0.0, 1.0)
        tr = simulate_open_loop(sys, SimConfig([1.0], dt=0.01, horizon=5.0))
        assert np.max(np.abs(tr.heads[:, 0] - np.exp(-tr.times))) <= 1e-8

    def test_method_of_steps(self):
        # y' = y(t - 1), phi = 1: y = 1 + t on [0, 1], 2 + (t^2 - 1)/2 on [1, 2]
        sys = ModalSystem([0.0], [[1.0]], 1.0, 1.0)
        tr = simulate_open_loop(sys, SimConfig([1.0], 1.0, dt=0.01, horizon=2.0))
        t, y = tr.times, tr.heads[:, 0]
        exact = np.where(t <= 1, 1 + t, 2 + (t**2 - 1) / 2)
        assert y[100] == pytest.approx(2.0, abs=1e-13)
        assert np.max(np.abs(y - exact)) <= 1e-12

    def test_growth_rate(self):
        sys = ModalSystem([0.0], [[1.0]], 1.0, 1.0)
        tr = simulate_open_loop(sys, SimConfig([1.0], dt=0.01, horizon=30.0))
        assert -estimate_decay_rate(tr, skip=15.0) == pytest.approx(OMEGA, abs=1e-3)

    def test_external_input(self):
        sys = ModalSystem([-1.0], [[1.0]], 0.0, 1.0)
        tr = simulate_open_loop(sys, SimConfig([1.0], dt=0.01, horizon=4.0),
                                u=lambda t: np.array([math.sin(t)]),
                                u_dot=lambda t: np.array([math.cos(t)]))
        t = tr.times
        exact = np.exp(-t) + (np.sin(t) - np.cos(t) + np.exp(-t)) / 2
        assert np.max(np.abs(tr.heads[:, 0] - exact)) <= 1e-9
        assert np.allclose(tr.control_norms, np.abs(np.sin(t)))

    def test_fourth_order(self):
        sys = ModalSystem([-2.0, -5.0], np.eye(2), 3.0, 0.5)
        cfg = SimConfig([1.0, -1.0], History.from_function(
            lambda t: np.array([math.cos(3 * t), t]), 0.5, 64,
            lambda t: np.array([-3 * math.sin(3 * t), 1.0])), horizon=2.0)
        ref = simulate_open_loop(sys, cfg.replace(dt=0.5 / 640)).final_state
        e = [np.linalg.norm(simulate_open_loop(sys, cfg.replace(dt=0.5 / L)).final_state - ref)
             for L in (10, 20)]
        assert e[0] / e[1] >= 12

    def test_nonfinite_aborts_with_time(self):
        sys = ModalSystem([1e3], [[1.0]], 0.0, 1.0)
        with pytest.raises(SimulationError) as info:
            simulate_open_loop(sys, SimConfig([1.0], dt=0.005, horizon=4.0))
        assert 0 < info.value.time < 4.0

    def test_dt_rounded_to_divide_delay(self):
        sys = ModalSystem([-1.0], [[1.0]], 0.5, 0.3)
        tr = simulate_open_loop(sys, SimConfig([1.0], dt=0.0071, horizon=1.0))
        lag = tr.info["lag"]
        assert lag == round(0.3 / 0.0071)
        assert tr.info["dt"] * lag == pytest.approx(0.3, rel=1e-15)

    def test_history_shape_checked(self):
        with pytest.raises(ValueError):
            simulate_open_loop(ModalSystem([-1.0], [[1.0]], 0.5, 0.3),
                               SimConfig([1.0], History.constant(0.0, 2, 0.3)))


class TestClosedLoop:
    def test_zero_gain_is_open_loop(self):
        cfg = bench_cfg(horizon=1.0)
        a = simulate_open_loop(BENCH, cfg)
        b = simulate_closed_loop(BENCH, np.zeros((24, 24)), cfg)
        assert np.array_equal(a.heads, b.heads)

    def test_benchmark_alpha_2(self):
        law = synthesize(BENCH, SynthesisRequest(alpha=2.0))
        tr = simulate_closed_loop(BENCH, law, bench_cfg())
        assert estimate_decay_rate(tr) >= 1.9
        tail = tr.window(tr.times[-1] - 1.0, tr.times[-1])
        l2 = math.sqrt(np.sum(tr.control_norms[tail] ** 2) * tr.info["dt"])
        assert l2 < 1e-6
        assert math.isfinite(fit_constant(tr, 2.0))

    def test_deterministic(self):
        law = synthesize(BENCH, SynthesisRequest(alpha=1.0))
        a = simulate_closed_loop(BENCH, law, bench_cfg(horizon=1.0))
        b = simulate_closed_loop(BENCH, law, bench_cfg(horizon=1.0))
        assert np.array_equal(a.heads, b.heads)
        assert np.array_equal(a.control_norms, b.control_norms)

    def test_scaling_identity(self):
        gamma, tau = 3.0, BENCH.tau
        law = synthesize(BENCH, SynthesisRequest(alpha=2.0))
        y0 = 1.0 / np.arange(1, 25)
        # history on the step grid, so scaling commutes with resampling
        cfg = SimConfig(y0, History.exponential(-1.0, y0, tau, 800), dt=tau / 800, horizon=5.0)
        y = simulate_closed_loop(BENCH, law, cfg)
        z = simulate_closed_loop(BENCH.shifted(gamma), law,
                                 cfg.replace(history=cfg.history.scaled(gamma)))
        scaled = np.exp(gamma * y.times)[:, None] * y.heads
        rel = np.linalg.norm(scaled - z.heads, axis=1) / np.linalg.norm(z.heads, axis=1)
        assert np.max(rel) <= 1e-8


@pytest.fixture(scope="module")
def setup():
    sys = build_localized_model(24, [(0, 0.5)], [(0.5, 1)], 5.0, 0.2)
    law = synthesize_localized(sys, [(0, 0.5)], [(0.5, 1)], 2.0)
    y0 = 1.0 / np.arange(1, 25) ** 2
    cfg = SimConfig(y0, History.exponential(-1.0, y0, 0.2))
    return sys, law, cfg, simulate_two_phase(sys, law, cfg)


class TestTwoPhase:
    def test_free_phase(self, setup):
        sys, law, cfg, tr = setup
        lag = tr.info["switch_index"]
        assert np.all(tr.control_norms[: lag + 1] == 0)
        assert np.any(tr.control_norms[lag + 1:] > 0)
        free = simulate_open_loop(sys, cfg.replace(horizon=sys.tau))
        assert np.array_equal(tr.heads[: lag + 1], free.heads)

    def test_decay(self, setup):
        _, _, _, tr = setup
        assert estimate_decay_rate(tr) >= 0.95 * 2.0

    def test_restart_equivalence(self, setup):
        sys, law, cfg, tr = setup
        lag = tr.info["switch_index"]
        free = simulate_open_loop(sys, cfg.replace(horizon=sys.tau))
        const = build_interior_model(24, [(0.5, 1)], 5.0, 0.2)
        n_after = len(tr.times) - 1 - lag
        rest = simulate_closed_loop(
            const, law.inner,
            SimConfig(free.final_state, free.end_history, dt=tr.info["dt"],
                      horizon=n_after * tr.info["dt"]))
        a, b = tr.heads[lag:], rest.heads
        rel = np.max(np.linalg.norm(a - b, axis=1)) / np.max(np.linalg.norm(b, axis=1))
        assert rel <= 1e-8

    def test_horizon_too_short(self, setup):
        sys, law, cfg, _ = setup
        with pytest.raises(ValueError):
            simulate_two_phase(sys, law, cfg.replace(horizon=0.1))


class TestPicard:
    def test_zero_gain_one_iteration(self):
        sys = ModalSystem([-1.0, -4.0], np.eye(2), 2.0, 0.5)
        cfg = SimConfig([1.0, 2.0], dt=0.01)
        res = picard_solve_step(sys, np.zeros((2, 2)), cfg, horizon=1.0)
        assert res.max_iterations == 1
        step = simulate_open_loop(sys, cfg.replace(dt=0.005, horizon=1.0))
        assert np.max(np.abs(res.heads - step.heads)) <= 1e-13

    def test_iterations_grow_with_gain(self):
        sys = ModalSystem([-1.0], [[1.0]], 1.0, 1.0)
        cfg = SimConfig([1.0], dt=0.01)
        counts = [picard_solve_step(sys, [[-g]], cfg, T=0.25).max_iterations
                  for g in (0.1, 0.5, 1.0)]
        assert counts[0] < counts[1] < counts[2]

    def test_contraction_bound(self):
        sys = ModalSystem([-1.0], [[1.0]], 1.0, 1.0)
        res = picard_solve_step(sys, [[-2.0]], SimConfig([1.0], dt=0.01))
        C = admissibility_constant(sys, res.step_length)
        assert res.contraction == pytest.approx(math.sqrt(2 * res.step_length * C) * 2.0)
        assert res.contraction < 1

    def test_no_contraction(self):
        sys = ModalSystem([-1.0], [[1.0]], 1.0, 1.0)
        with pytest.raises(ContractionError):
            picard_solve_step(sys, [[-1e4]], SimConfig([1.0], dt=0.5))

    def test_admissibility_constant(self):
        sys = ModalSystem([-2.0, 0.0], [[1.0], [2.0]], 0.0, 1.0)
        T = 0.3
        assert admissibility_constant(sys, T) == pytest.approx(
            (1 - math.exp(-4 * T)) / 4 + 4 * T)

    def test_agrees_with_stepper(self):
        sys = ModalSystem([-1.0, -3.0], np.array([[1.0], [0.5]]), 1.5, 0.4)
        F = np.array([[-1.2, 0.4]])
        cfg = SimConfig([1.0, -1.0], History.exponential(-0.5, [1.0, -1.0], 0.4), dt=0.01)
        res = picard_solve_step(sys, F, cfg, horizon=1.2)
        step = simulate_closed_loop(sys, F, cfg.replace(dt=0.005, horizon=1.2))
        assert np.max(np.abs(res.heads - step.heads)) <= 1e-11

    def test_stepper_convergence_against_oracle(self):
        sys = ModalSystem([-1.0, -3.0], np.array([[1.0], [0.5]]), 1.5, 0.4)
        F = np.array([[-1.2, 0.4]])
        cfg = SimConfig([1.0, -1.0], History.exponential(-0.5, [1.0, -1.0], 0.4, 64),
                        horizon=1.2)
        ref = picard_solve_step(sys, F, cfg.replace(dt=0.4 / 64), horizon=1.2, refine=4)
        errs = []
        for L in (4, 8):
            tr = simulate_closed_loop(sys, F, cfg.replace(dt=0.4 / L))
            errs.append(np.linalg.norm(tr.final_state - ref.heads[-1]))
        assert errs[0] / errs[1] >= 3.5


class TestDecayEstimate:
    def test_exponential(self):
        t = np.linspace(0, 5, 200)
        assert estimate_decay_rate(synthetic(t, np.exp(-2 * t))) == pytest.approx(2.0)

    def test_rotation_has_zero_rate(self):
        t = np.linspace(0, 5, 200)
        norms = np.hypot(np.cos(t), np.sin(t))
        assert estimate_decay_rate(synthetic(t, norms)) == pytest.approx(0.0, abs=1e-12)

    def test_zero_trajectory(self):
        t = np.linspace(0, 5, 200)
        assert estimate_decay_rate(synthetic(t, np.zeros_like(t))) == math.inf

    def test_too_few_samples(self):
        with pytest.raises(ValueError):
            estimate_decay_rate(synthetic(np.linspace(0, 1, 20), np.ones(20)), skip=0.9)

    def test_fit_constant_bounds_trajectory(self):
        t = np.linspace(0, 5, 200)
        tr = synthetic(t, 3 * np.exp(-2 * t))
        C = fit_constant(tr, 2.0)
        sel = t >= 0.2
        assert np.all(tr.state_norms[sel] <= C * np.exp(-1.9 * t[sel]) * (1 + 1e-12))


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 5.0), st.floats(-3.0, 3.0))
def test_decay_rate_recovers_slope(rate, offset):
    t = np.linspace(0, 4, 100)
    tr = synthetic(t, np.exp(offset - rate * t))
    assert estimate_decay_rate(tr) == pytest.approx(rate, rel=1e-9)


@settings(max_examples=20, deadline=None)
@given(st.floats(-3.0, -0.1), st.floats(-1.0, 1.0).filter(lambda k: abs(k) > 0.05))
def test_scalar_rate_matches_root(mu, kappa):
    sys = ModalSystem([mu], [[1.0]], kappa, 0.5)
    tr = simulate_open_loop(sys, SimConfig([1.0], dt=0.01, horizon=12.0))
    r = rightmost_root(mu, kappa, 0.5)
    if abs(r.value.imag) > 0:
        return  # oscillatory norm, slope is only asymptotic
    assert estimate_decay_rate(tr, skip=6.0) == pytest.approx(-r.value.real, abs=2e-2)


class TestVerifyRapid:
    def test_benchmark_passes(self):
        rep = verify_rapid(BENCH, [1.0, 2.0], bench_cfg())
        assert rep.passed
        assert all(e.alpha_hat >= 0.95 * e.alpha for e in rep.entries)

    def test_broken_control_fails_with_witness(self):
        sys = zero_control_rows(build_interior_model(6, [(0, 1)], 10.0, 0.2), [0])
        rep = verify_rapid(sys, [1.0, 2.0], SimConfig(np.ones(6)))
        assert not rep.passed
        assert all(e.witness_mode == 0 and not e.passed for e in rep.entries)
        assert rep.to_dict()["pass"] is False

    def test_alphas_increasing(self):
        with pytest.raises(ValueError):
            verify_rapid(BENCH, [2.0, 1.0], bench_cfg())
        with pytest.raises(ValueError):
            verify_rapid(BENCH, [], bench_cfg())
