"""Command line interface: ``delaystab roots|spectrum|synthesize|simulate|verify|report``."""
from __future__ import annotations

import json
import sys as _sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .lifting import SCHEMES, build_lifted_generator, lifted_spectrum
from .modal import ModalSystem
from .roots import RootError, rightmost_roots
from .scenario import (
    ScenarioError,
    dumps,
    export,
    load_scenario,
    run_scenario,
    summary_text,
    write_trajectory_csv,
)
from .simulate import (
    RATE_TOLERANCE,
    estimate_decay_rate,
    fit_constant,
    simulate_closed_loop,
)
from .synthesis import FeedbackLaw, SynthesisError, SynthesisRequest, synthesize

DEFAULT_SCENARIO = "benchmark_interior"


def _emit(obj):
    click.echo(dumps(obj))


def _load(ref):
    try:
        return load_scenario(ref)
    except ScenarioError as exc:
        raise click.ClickException(str(exc)) from None


scenario_option = click.option(
    "--scenario", "scenario_ref", default=DEFAULT_SCENARIO, show_default=True,
    help="Scenario file, or the name of a bundled scenario.",
)


def law_from_dict(d: dict, n_modes: int) -> FeedbackLaw:
    shape = tuple(d["gain_shape"])
    gain = np.array(d["gain"], dtype=float).reshape(shape)
    meta = {k: d.get(k) for k in ("alpha", "gamma", "beta", "zeta", "mu")}
    return FeedbackLaw(gain, tuple(d["unstable_modes"]), n_modes, meta,
                       dict(d.get("certificates", {})))


@click.group()
@click.version_option(__version__, prog_name="delaystab")
def main():
    """Instantaneous feedback for delayed heat equations in modal form."""


@main.command()
@click.option("--eta-re", type=float, default=0.0, show_default=True)
@click.option("--eta-im", type=float, default=0.0, show_default=True)
@click.option("--kappa", type=float, required=True)
@click.option("--tau", type=float, required=True)
@click.option("--count", type=int, default=1, show_default=True)
@click.option("--tol", type=float, default=1e-12, show_default=True)
def roots(eta_re, eta_im, kappa, tau, count, tol):
    """Rightmost roots of lam = eta + kappa exp(-lam tau)."""
    if not tau > 0:
        raise click.BadParameter("tau must be positive", param_hint="--tau")
    if count < 1:
        raise click.BadParameter("count must be positive", param_hint="--count")
    try:
        rs = rightmost_roots(complex(eta_re, eta_im), kappa, tau, count, tol)
    except RootError as exc:
        raise click.ClickException(str(exc)) from None
    _emit([r.to_dict() for r in rs])


@main.command()
@scenario_option
@click.option("--m-nodes", type=int, default=32, show_default=True)
@click.option("--scheme", type=click.Choice(SCHEMES), default="chebyshev", show_default=True)
@click.option("--count", type=int, default=5, show_default=True)
@click.option("--mu", type=float, default=None, help="Single mode rate (overrides --scenario).")
@click.option("--kappa", type=float, default=None)
@click.option("--tau", type=float, default=None)
def spectrum(scenario_ref, m_nodes, scheme, count, mu, kappa, tau):
    """Lifted-generator eigenvalues against characteristic roots."""
    if mu is not None:
        if kappa is None or tau is None:
            raise click.UsageError("--mu needs --kappa and --tau")
        sysm = ModalSystem([mu], [[1.0]], kappa, tau)
    else:
        sysm = _load(scenario_ref).build_system()
    if not sysm.has_scalar_delay:
        raise click.ClickException("spectrum comparison needs a scalar delay")
    if m_nodes < 4:
        raise click.BadParameter("must be at least 4", param_hint="--m-nodes")
    gen = build_lifted_generator(sysm, m_nodes, scheme)
    lifted = lifted_spectrum(gen, min(count, gen.dim))
    chars = []
    for m in sysm.eigenvalues:
        chars += [r.value for r in rightmost_roots(m, sysm.kappa, sysm.tau, count) if r.ok]
    chars.sort(key=lambda z: (-z.real, -z.imag))
    chars = chars[:count]
    lifted_all = np.array(lifted_spectrum(gen, min(gen.dim, 4 * count + 4)))
    err = max(float(np.min(np.abs(lifted_all - c))) for c in chars)
    _emit({
        "lifted": [{"re": z.real, "im": z.imag} for z in lifted],
        "characteristic": [{"re": z.real, "im": z.imag} for z in chars],
        "max_abs_error": err,
        "m_nodes": m_nodes,
        "scheme": scheme,
    })


@main.command("synthesize")
@scenario_option
@click.option("--alpha", type=float, required=True)
@click.option("--gamma", type=float, default=None)
@click.option("--margin", type=float, default=1.0, show_default=True)
@click.option("--output", "out_path", type=click.Path(dir_okay=False), default=None,
              help="Also write the law to this JSON file.")
def synthesize_cmd(scenario_ref, alpha, gamma, margin, out_path):
    """Design an instantaneous feedback law for decay rate ALPHA."""
    sysm = _load(scenario_ref).build_system()
    try:
        law = synthesize(sysm, SynthesisRequest(alpha=alpha, gamma=gamma, margin=margin))
    except (SynthesisError, ValueError) as exc:
        raise click.ClickException(str(exc)) from None
    d = law.to_dict()
    if out_path:
        Path(out_path).write_text(dumps(d) + "\n")
    _emit(d)


@main.command("simulate")
@scenario_option
@click.option("--law", "law_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Law JSON from `synthesize --output`; designed on the fly if omitted.")
@click.option("--alpha", type=float, default=None,
              help="Decay target when designing on the fly (default: first scenario alpha).")
@click.option("--dt", type=float, default=None)
@click.option("--horizon", type=float, default=None)
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), default=None,
              help="Trajectory CSV destination (default: stdout).")
def simulate_cmd(scenario_ref, law_path, alpha, dt, horizon, csv_path):
    """Closed-loop run; CSV trajectory plus a JSON rate report."""
    s = _load(scenario_ref)
    sysm = s.build_system()
    if law_path:
        law = law_from_dict(json.loads(Path(law_path).read_text()), sysm.n_modes)
    else:
        a = alpha if alpha is not None else s.synthesis["alphas"][0]
        try:
            law = synthesize(sysm, SynthesisRequest(alpha=a, margin=s.synthesis["margin"]))
        except (SynthesisError, ValueError) as exc:
            raise click.ClickException(str(exc)) from None
    target = law.meta.get("alpha") or alpha
    cfg = s.sim_config(sysm).replace(dt=dt, horizon=horizon)
    traj = simulate_closed_loop(sysm, law, cfg, alpha=target)
    rate = estimate_decay_rate(traj)
    report = {
        "alpha": target,
        "alpha_hat": rate,
        "C_hat": fit_constant(traj, target) if target else None,
        "pass": bool(target and rate >= RATE_TOLERANCE * target),
    }
    if csv_path:
        write_trajectory_csv(csv_path, traj)
        _emit(report)
    else:
        write_trajectory_csv(_sys.stdout, traj)
        click.echo(dumps(report), err=True)


@main.command()
@click.argument("scenario_ref")
@click.option("--output-dir", type=click.Path(file_okay=False), default=None,
              help="Overrides the scenario's directory and $DELAYSTAB_OUTPUT_DIR.")
@click.option("--quiet", is_flag=True)
def verify(scenario_ref, output_dir, quiet):
    """Run a scenario end to end; exit status 0 iff every alpha passes."""
    s = _load(scenario_ref)
    record = run_scenario(s)
    written = export(record, directory=output_dir)
    if not quiet:
        click.echo(summary_text(record.to_dict()), nl=False)
        for p in written:
            click.echo(f"wrote {p}")
    _sys.exit(0 if record.passed else 1)


@main.command()
@click.argument("report_path", type=click.Path(exists=True, dir_okay=False))
def report(report_path):
    """Summarize a saved JSON report; exit status mirrors its verdict."""
    try:
        d = json.loads(Path(report_path).read_text())
        text = summary_text(d)
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise click.ClickException(f"not a run report: {exc}") from None
    click.echo(text, nl=False)
    _sys.exit(0 if d.get("pass") else 1)


if __name__ == "__main__":
    main()
