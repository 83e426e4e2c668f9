"""Acceptance criteria, one function each, at their stated tolerances.

Each criterion returns (passed, detail). Under pytest every criterion is a
test and its PASS/FAIL line appears in the terminal summary; run the file
directly to get the same lines without pytest.
"""
import math
import sys as _sys
import time

import numpy as np
from click.testing import CliRunner

from delaystab.cli import main as cli_main
from delaystab.lifting import build_lifted_generator, embed, lifted_spectrum
from delaystab.modal import (
    ModalSystem,
    build_interior_model,
    build_localized_model,
    build_neumann_boundary_model,
    zero_control_rows,
)
from delaystab.roots import (
    PreimageQuery,
    preimage_residual,
    rightmost_roots,
    solve_preimage,
    spectral_abscissa,
)
from delaystab.simulate import (
    History,
    SimConfig,
    estimate_decay_rate,
    picard_solve_step,
    simulate_closed_loop,
    simulate_open_loop,
    simulate_two_phase,
    verify_rapid,
)
from delaystab.synthesis import (
    SynthesisRequest,
    hautus_check,
    split_spectrum,
    choose_beta,
    synthesize,
    synthesize_localized,
)

SEED = 20240601
N, OMEGA2, KAPPA, TAU = 24, [(0.2, 0.9)], 10.0, 0.2


def benchmark():
    return build_interior_model(N, OMEGA2, KAPPA, TAU)


def bench_config(n_intervals=64, **kw):
    y0 = 1.0 / np.arange(1, N + 1)
    return SimConfig(y0, History.exponential(-1.0, y0, TAU, n_intervals), **kw)


def crit_preimage():
    rng = np.random.default_rng(SEED)
    n = 1000
    eta = rng.uniform(-5, 5, n) + 1j * rng.uniform(-5, 5, n)
    kappa = rng.uniform(-3, 3, n)
    kappa[kappa == 0] = 1.0
    tau = rng.uniform(0.1, 2.0, n)
    t0 = time.perf_counter()
    worst = 0.0
    failures = 0
    for e, k, t in zip(eta, kappa, tau):
        try:
            z = solve_preimage(PreimageQuery(complex(e), float(k), float(t), tol=1e-10))
        except ArithmeticError:
            failures += 1
            continue
        worst = max(worst, preimage_residual(z, e, k, t))
    elapsed = time.perf_counter() - t0
    ok = failures == 0 and worst <= 1e-9 and elapsed < 5.0
    return ok, f"{n} queries, {failures} failures, max residual {worst:.2e}, {elapsed:.2f} s"


def crit_roots():
    r = rightmost_roots(0.0, 1.0, 1.0, 1)[0]
    err = abs(r.value - 0.5671433)
    rng = np.random.default_rng(SEED + 1)
    worst = 0.0
    n_sets = 200
    for _ in range(n_sets):
        mu = rng.uniform(-50, 5)
        kappa = rng.uniform(-10, 10)
        tau = rng.uniform(0.05, 2.0)
        vals = [x.value for x in rightmost_roots(mu, kappa, tau, int(rng.integers(1, 9)))]
        for z in vals:
            if z.imag != 0:
                d = min(abs(np.conj(z) - w) for w in vals) / max(1.0, abs(z))
                worst = max(worst, d)
    ok = err <= 1e-6 and r.value.imag == 0 and worst <= 1e-12
    return ok, (f"rightmost root {r.value.real:.10f} (|err| {err:.1e}); "
                f"conjugate mismatch over {n_sets} sets {worst:.1e}")


def crit_lifting(floor=1e-12):
    sys = ModalSystem([0.0], [[1.0]], 1.0, 1.0)
    ref = [x.value for x in rightmost_roots(0.0, 1.0, 1.0, 5)]

    def errs(m):
        ev = np.array(lifted_spectrum(build_lifted_generator(sys, m), 15))
        return [float(np.min(np.abs(ev - z))) for z in ref]

    e32 = errs(32)
    agg = [max(errs(m)) for m in range(32, 65, 4)]
    # below the floor the error is eigensolver roundoff, not discretization
    mono = all(b <= max(a, floor) for a, b in zip(agg, agg[1:]))
    ok = e32[0] <= 1e-6 and max(e32[1:3]) <= 1e-3 and mono
    return ok, (f"M=32 rightmost {e32[0]:.1e}, pair {max(e32[1:3]):.1e}; "
                f"max error M=32..64 {', '.join(f'{a:.0e}' for a in agg)}")


def crit_benchmark():
    sys = benchmark()
    ab = spectral_abscissa(sys).value
    parts = []
    ok = ab > 0
    for alpha in (1.0, 2.0, 4.0, 8.0):
        t0 = time.perf_counter()
        law = synthesize(sys, SynthesisRequest(alpha=alpha))
        traj = simulate_closed_loop(sys, law, bench_config())
        rate = estimate_decay_rate(traj)
        dt = time.perf_counter() - t0
        ok &= rate >= 0.95 * alpha and dt <= 10.0
        parts.append(f"a={alpha:g}: {rate:.2f} ({dt:.2f} s)")
    return bool(ok), f"open-loop abscissa {ab:.4f}; " + ", ".join(parts)


def crit_instantaneity():
    sys = benchmark()
    law = synthesize(sys, SynthesisRequest(alpha=2.0))
    rng = np.random.default_rng(SEED + 5)
    m = 32
    y0 = rng.normal(size=N)
    state = embed(y0, lambda t: np.cos(7 * t) * y0, m, TAU)
    u0 = law.control_from_state(state)
    changed = 0
    for _ in range(100):
        pert = np.zeros_like(state.tail)
        pert[:, 1:] = rng.normal(scale=10.0 ** rng.uniform(-3, 6), size=(N, m))
        if not np.array_equal(law.control_from_state(state.with_tail(state.tail + pert)), u0):
            changed += 1
    return changed == 0, f"100 tail perturbations, {changed} changed the control"


def crit_neumann():
    sys = build_neumann_boundary_model(24, alpha_shift=1.0, kappa=5.0, tau=0.2)
    y0 = 1.0 / np.arange(1, 25)
    cfg = SimConfig(y0, History.exponential(-1.0, y0, 0.2, 64))
    ok = spectral_abscissa(sys).value > 0
    parts = []
    for g in (1.0, 2.0, 4.0):
        law = synthesize(sys, SynthesisRequest(alpha=g))
        rate = estimate_decay_rate(simulate_closed_loop(sys, law, cfg))
        ok &= rate >= 0.95 * g
        parts.append(f"g={g:g}: {rate:.2f}")
    return bool(ok), ", ".join(parts)


def crit_two_phase():
    a, gamma = 5.0, 2.0
    sys = build_localized_model(N, [(0, 0.5)], [(0.5, 1)], a, TAU)
    law = synthesize_localized(sys, [(0, 0.5)], [(0.5, 1)], gamma)
    y0 = 1.0 / np.arange(1, N + 1) ** 2
    cfg = SimConfig(y0, History.exponential(-1.0, y0, TAU, 64))
    traj = simulate_two_phase(sys, law, cfg)
    lag = traj.info["switch_index"]
    zero = bool(np.all(traj.control_norms[: lag + 1] == 0.0))
    rate = estimate_decay_rate(traj)
    free = simulate_open_loop(sys, cfg.replace(horizon=TAU))
    const = build_interior_model(N, [(0.5, 1)], a, TAU)
    h = traj.info["dt"]
    rest = simulate_closed_loop(const, law.inner, SimConfig(
        free.final_state, free.end_history, dt=h, horizon=(len(traj.times) - 1 - lag) * h))
    diff = np.linalg.norm(traj.heads[lag:] - rest.heads, axis=1)
    rel = float(np.max(diff) / np.max(np.linalg.norm(rest.heads, axis=1)))
    ok = zero and rate >= 0.95 * gamma and rel <= 1e-8
    return ok, f"zero on [0, tau]: {zero}; post-tau rate {rate:.2f}; restart mismatch {rel:.1e}"


def crit_picard():
    sys = benchmark()
    law = synthesize(sys, SynthesisRequest(alpha=2.0))
    cfg = bench_config(dt=TAU / 200)
    pic = picard_solve_step(sys, law, cfg, horizon=TAU)
    h = TAU / (200 * 2)
    step = simulate_closed_loop(sys, law, cfg.replace(dt=h, horizon=TAU))
    err = float(np.max(np.abs(pic.heads - step.heads)))
    zero = picard_solve_step(sys, np.zeros((N, N)), cfg, horizon=TAU)
    ok = err <= 1e-6 and zero.max_iterations == 1
    return ok, (f"T={pic.step_length:.4g} (contraction {pic.contraction:.3f}), "
                f"sup error {err:.1e}, F=0 iterations {zero.max_iterations}")


def crit_scaling():
    sys = benchmark()
    law = synthesize(sys, SynthesisRequest(alpha=2.0))
    gamma = law.meta["gamma"]
    lag = 800
    cfg = bench_config(n_intervals=lag, dt=TAU / lag, horizon=5.0)
    y = simulate_closed_loop(sys, law, cfg)
    z = simulate_closed_loop(sys.shifted(gamma), law,
                             cfg.replace(history=cfg.history.scaled(gamma)))
    scaled = np.exp(gamma * y.times)[:, None] * y.heads
    rel = np.linalg.norm(scaled - z.heads, axis=1) / np.linalg.norm(z.heads, axis=1)
    worst = float(np.max(rel))
    return worst <= 1e-8, f"gamma={gamma:g}, dt=tau/{lag}, max relative mismatch {worst:.1e}"


def crit_negative():
    sys = zero_control_rows(benchmark(), [0])
    req = SynthesisRequest(alpha=2.0)
    split = split_spectrum(sys, req.gamma, choose_beta(2.0, req.gamma, KAPPA, TAU, 1.0))
    idx = list(split.unstable_modes)
    h = hautus_check(np.diag(sys.eigenvalues[idx] + req.gamma), sys.control_matrix[idx])
    witness = idx[h.mode] if not h.ok else None
    rep = verify_rapid(sys, [1.0, 2.0, 4.0], bench_config())
    per_alpha = [not e.passed and e.witness_mode == 0 for e in rep.entries]
    res = CliRunner().invoke(cli_main, ["verify", "broken_hautus", "--quiet",
                                        "--output-dir", _tmpdir()])
    ok = (not h.ok) and witness == 0 and all(per_alpha) and not rep.passed \
        and res.exit_code != 0
    return ok, (f"hautus ok={h.ok} witness mode {witness}; verify_rapid failures "
                f"{sum(per_alpha)}/{len(per_alpha)}; CLI exit code {res.exit_code}")


def _tmpdir():
    import tempfile
    return tempfile.mkdtemp(prefix="delaystab-acc-")


CRITERIA = [
    ("1 preimage surjectivity", crit_preimage),
    ("2 characteristic roots", crit_roots),
    ("3 lifting consistency", crit_lifting),
    ("4 rapid stabilization benchmark", crit_benchmark),
    ("5 instantaneity", crit_instantaneity),
    ("6 Neumann boundary control", crit_neumann),
    ("7 two-phase law", crit_two_phase),
    ("8 Picard oracle", crit_picard),
    ("9 scaling identity", crit_scaling),
    ("10 negative control", crit_negative),
]


def _line(label, ok, detail):
    return f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}"


def _make_test(label, fn):
    def test(acceptance_log):
        ok, detail = fn()
        line = _line(label, ok, detail)
        acceptance_log.append(line)
        print(line)
        assert ok, line

    test.__name__ = "test_criterion_" + label.split()[0].zfill(2) + "_" + "_".join(
        label.split()[1:]).lower().replace("-", "_")
    return test


for _label, _fn in CRITERIA:
    _t = _make_test(_label, _fn)
    globals()[_t.__name__] = _t
del _label, _fn, _t


if __name__ == "__main__":
    all_ok = True
    for label, fn in CRITERIA:
        ok, detail = fn()
        all_ok &= ok
        print(_line(label, ok, detail), flush=True)
    _sys.exit(0 if all_ok else 1)
