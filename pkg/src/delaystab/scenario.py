"""Scenario files, experiment runs and result export.

A scenario is a YAML document with four sections::

    name: benchmark_interior
    system:      {model, n_modes, kappa, tau, omega | omega1/omega2 | alpha_shift | mu/b}
    synthesis:   {alphas, gamma, margin}
    simulation:  {dt, horizon, y0, history}
    output:      {directory, formats}

Unknown keys are errors. Every schema violation is collected before
failing.
"""
from __future__ import annotations

import copy
import csv
import datetime as _dt
import hashlib
import json
import math
import os
import time as _time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .modal import (
    IntervalSet,
    ModalSystem,
    ModelError,
    build_interior_model,
    build_localized_model,
    build_neumann_boundary_model,
    check_assumptions,
)
from .simulate import (
    History,
    RapidEntry,
    RapidReport,
    SimConfig,
    estimate_decay_rate,
    fit_constant,
    simulate_two_phase,
    verify_rapid,
    RATE_TOLERANCE,
)
from .synthesis import SynthesisError, check_disjoint_cover, synthesize_localized

OUTPUT_ENV = "DELAYSTAB_OUTPUT_DIR"
MODELS = ("interior", "neumann", "custom", "localized")
FORMATS = ("json", "csv", "summary")

_SYSTEM_KEYS = {"model", "n_modes", "kappa", "tau", "omega", "omega1", "omega2",
                "alpha_shift", "mu", "b"}
_SYNTH_KEYS = {"alphas", "gamma", "margin"}
_SIM_KEYS = {"dt", "horizon", "y0", "history"}
_OUT_KEYS = {"directory", "formats"}
_TOP_KEYS = {"name", "system", "synthesis", "simulation", "output"}

DEFAULTS = {
    "system": {"model": "interior", "n_modes": 24, "kappa": 0.0, "tau": 1.0,
               "omega": [[0.0, 1.0]]},
    "synthesis": {"alphas": [1.0], "gamma": None, "margin": 1.0},
    "simulation": {"dt": None, "horizon": None,
                   "y0": {"kind": "decay", "power": 1.0},
                   "history": {"kind": "constant", "value": 0.0}},
    "output": {"directory": "results", "formats": list(FORMATS)},
}


class ScenarioError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid scenario:\n  " + "\n  ".join(self.errors))


@dataclass
class Scenario:
    name: str
    system: dict
    synthesis: dict
    simulation: dict
    output: dict
    source: str | None = None

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "system": self.system,
            "synthesis": self.synthesis,
            "simulation": self.simulation,
            "output": self.output,
        }

    @property
    def hash(self) -> str:
        return scenario_hash(self.as_dict())

    def build_system(self) -> ModalSystem:
        return build_system(self.system)

    def sim_config(self, sys: ModalSystem) -> SimConfig:
        sim = self.simulation
        y0 = _initial_state(sim["y0"], sys.n_modes)
        hist = _history(sim["history"], y0, sys.tau)
        return SimConfig(y0, hist, dt=sim["dt"], horizon=sim["horizon"])


def canonical_json(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, separators=(",", ":"))


def scenario_hash(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, complex):
        return {"re": _jsonable(obj.real), "im": _jsonable(obj.imag)}
    return obj


def dumps(obj, indent=2) -> str:
    """JSON with shortest round-trip float repr and inf/nan as strings."""
    return json.dumps(_jsonable(obj), indent=indent, sort_keys=True)


# --------------------------------------------------------------------------
# parsing
# --------------------------------------------------------------------------


def _is_num(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _check_intervals(val, where, errors):
    if not isinstance(val, list) or not val:
        errors.append(f"{where}: expected a nonempty list of [lo, hi] pairs")
        return None
    try:
        if not all(isinstance(p, list) and all(_is_num(v) for v in p) for p in val):
            raise ModelError("entries must be numeric [lo, hi] pairs")
        return IntervalSet(val)
    except ModelError as exc:
        errors.append(f"{where}: {exc}")
        return None


def _validate(raw: dict) -> tuple[dict, list[str]]:
    errors = []
    if not isinstance(raw, dict):
        return {}, ["top level must be a mapping"]
    for k in sorted(set(raw) - _TOP_KEYS):
        errors.append(f"unknown key {k!r} at top level")
    data = copy.deepcopy(DEFAULTS)
    data["name"] = raw.get("name", "scenario")
    if not isinstance(data["name"], str) or not data["name"]:
        errors.append("name must be a nonempty string")
    for sec, keys in (("system", _SYSTEM_KEYS), ("synthesis", _SYNTH_KEYS),
                      ("simulation", _SIM_KEYS), ("output", _OUT_KEYS)):
        block = raw.get(sec, {})
        if block is None:
            block = {}
        if not isinstance(block, dict):
            errors.append(f"section {sec!r} must be a mapping")
            continue
        for k in sorted(set(block) - keys):
            errors.append(f"unknown key {k!r} in section {sec!r}")
        if sec == "system" and block.get("model", "interior") != "interior":
            data["system"].pop("omega", None)
        data[sec].update({k: v for k, v in block.items() if k in keys})

    s = data["system"]
    model = s.get("model")
    if model not in MODELS:
        errors.append(f"system.model must be one of {MODELS}, got {model!r}")
    for key in ("kappa", "tau"):
        if not _is_num(s.get(key)):
            errors.append(f"system.{key} must be a finite number")
    if _is_num(s.get("tau")) and not s["tau"] > 0:
        errors.append("system.tau: tau must be positive")
    if model != "custom":
        n = s.get("n_modes")
        if not (isinstance(n, int) and not isinstance(n, bool) and n >= 1):
            errors.append("system.n_modes must be a positive integer")
    if model == "interior":
        _check_intervals(s.get("omega"), "system.omega", errors)
    elif model == "localized":
        o1 = _check_intervals(s.get("omega1"), "system.omega1", errors)
        o2 = _check_intervals(s.get("omega2"), "system.omega2", errors)
        if o1 is not None and o2 is not None:
            try:
                check_disjoint_cover(o1, o2)
            except ModelError as exc:
                errors.append(
                    f"system.omega1/omega2: {exc} (the two-phase law needs "
                    "chi_omega1 + chi_omega2 = 1)"
                )
    elif model == "neumann":
        a = s.setdefault("alpha_shift", 1.0)
        if not _is_num(a) or not a > 0:
            errors.append("system.alpha_shift must be positive (Neumann map requirement)")
    elif model == "custom":
        mu, b = s.get("mu"), s.get("b")
        if not (isinstance(mu, list) and mu and all(_is_num(v) for v in mu)):
            errors.append("system.mu must be a nonempty list of finite numbers")
        if not (isinstance(b, list) and b and all(
                isinstance(r, list) and r and all(_is_num(v) for v in r) for r in b)):
            errors.append("system.b must be a nonempty list of numeric rows")
        elif isinstance(mu, list) and len(b) != len(mu):
            errors.append(f"system.b has {len(b)} rows, expected {len(mu)}")
        elif len({len(r) for r in b}) != 1:
            errors.append("system.b rows must have equal length")
    if model != "localized":
        for key in ("omega1", "omega2"):
            if key in s:
                errors.append(f"system.{key} only applies to the localized model")

    syn = data["synthesis"]
    al = syn.get("alphas")
    if not (isinstance(al, list) and al and all(_is_num(v) and v > 0 for v in al)):
        errors.append("synthesis.alphas must be a nonempty list of positive numbers")
    elif any(b <= a for a, b in zip(al, al[1:])):
        errors.append("synthesis.alphas must be increasing")
    if syn.get("gamma") is not None and not _is_num(syn["gamma"]):
        errors.append("synthesis.gamma must be a number or null")
    if not (_is_num(syn.get("margin")) and syn["margin"] > 0):
        errors.append("synthesis.margin must be positive")

    sim = data["simulation"]
    for key in ("dt", "horizon"):
        v = sim.get(key)
        if v is not None and not (_is_num(v) and v > 0):
            errors.append(f"simulation.{key} must be positive or null")
    _validate_y0(sim.get("y0"), errors)
    _validate_history(sim.get("history"), errors)

    out = data["output"]
    if not isinstance(out.get("directory"), str):
        errors.append("output.directory must be a string")
    fm = out.get("formats")
    if not (isinstance(fm, list) and all(f in FORMATS for f in fm)):
        errors.append(f"output.formats must be a list drawn from {FORMATS}")
    return data, errors


def _validate_y0(item, errors):
    if isinstance(item, list):
        if not item or not all(_is_num(v) for v in item):
            errors.append("simulation.y0 list must hold finite numbers")
        return
    if not isinstance(item, dict):
        errors.append("simulation.y0 must be a list or a mapping with 'kind'")
        return
    kind = item.get("kind")
    allowed = {"constant": {"kind", "value"}, "decay": {"kind", "power", "scale"}}
    if kind not in allowed:
        errors.append(f"simulation.y0.kind must be one of {sorted(allowed)}")
        return
    for k in sorted(set(item) - allowed[kind]):
        errors.append(f"unknown key {k!r} in simulation.y0")
    for k in allowed[kind] - {"kind"}:
        if k in item and not _is_num(item[k]):
            errors.append(f"simulation.y0.{k} must be a finite number")


def _validate_history(item, errors):
    if not isinstance(item, dict):
        errors.append("simulation.history must be a mapping with 'kind'")
        return
    kind = item.get("kind")
    allowed = {"constant": {"kind", "value"}, "samples": {"kind", "values"},
               "exponential": {"kind", "lambda"}}
    if kind not in allowed:
        errors.append(f"simulation.history.kind must be one of {sorted(allowed)}")
        return
    for k in sorted(set(item) - allowed[kind]):
        errors.append(f"unknown key {k!r} in simulation.history")
    if kind == "constant" and not _is_num(item.get("value", 0.0)):
        errors.append("simulation.history.value must be a finite number")
    if kind == "exponential" and not _is_num(item.get("lambda")):
        errors.append("simulation.history.lambda must be a finite number")
    if kind == "samples":
        v = item.get("values")
        if not (isinstance(v, list) and v and all(
                isinstance(r, list) and len(r) >= 2 and all(_is_num(x) for x in r) for r in v)):
            errors.append("simulation.history.values must be per-mode rows of >= 2 samples")


def scenario_from_dict(raw: dict, source: str | None = None) -> Scenario:
    data, errors = _validate(raw)
    if not errors:
        try:
            sysm = build_system(data["system"])
            hist = data["simulation"]["history"]
            if hist.get("kind") == "samples" and len(hist["values"]) != sysm.n_modes:
                errors.append(
                    f"simulation.history.values has {len(hist['values'])} rows, "
                    f"system has {sysm.n_modes} modes"
                )
            y0 = data["simulation"]["y0"]
            if isinstance(y0, list) and len(y0) != sysm.n_modes:
                errors.append(f"simulation.y0 has {len(y0)} entries, system has {sysm.n_modes}")
        except ModelError as exc:
            errors.append(f"system: {exc}")
    if errors:
        raise ScenarioError(errors)
    return Scenario(data["name"], data["system"], data["synthesis"], data["simulation"],
                    data["output"], source)


def parse_scenario(path) -> Scenario:
    """Read and validate a scenario file (YAML; JSON is valid YAML)."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ScenarioError([f"file not found: {p}"]) from None
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError([f"not valid YAML: {exc}"]) from None
    return scenario_from_dict(raw if raw is not None else {}, str(p))


def bundled_scenarios() -> list[str]:
    root = resources.files("delaystab") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def bundled_path(name: str) -> Path:
    root = resources.files("delaystab") / "scenarios"
    p = root / f"{name}.yaml"
    if not p.is_file():
        raise ScenarioError([f"no bundled scenario named {name!r}; have {bundled_scenarios()}"])
    return Path(str(p))


def load_scenario(ref: str) -> Scenario:
    """Path to a file, or the name of a bundled scenario."""
    if Path(ref).is_file():
        return parse_scenario(ref)
    return parse_scenario(bundled_path(ref))


# --------------------------------------------------------------------------
# construction helpers
# --------------------------------------------------------------------------


def build_system(s: dict) -> ModalSystem:
    model = s["model"]
    if model == "interior":
        return build_interior_model(s["n_modes"], s["omega"], s["kappa"], s["tau"])
    if model == "neumann":
        return build_neumann_boundary_model(s["n_modes"], s.get("alpha_shift", 1.0),
                                            s["kappa"], s["tau"])
    if model == "localized":
        return build_localized_model(s["n_modes"], s["omega1"], s["omega2"],
                                     s["kappa"], s["tau"])
    return ModalSystem(np.array(s["mu"], dtype=float), np.array(s["b"], dtype=float),
                       s["kappa"], s["tau"], basis_tag="custom")


def _initial_state(item, n: int) -> np.ndarray:
    if isinstance(item, list):
        return np.array(item, dtype=float)
    if item["kind"] == "constant":
        return np.full(n, float(item.get("value", 1.0)))
    k = np.arange(1, n + 1, dtype=float)
    return float(item.get("scale", 1.0)) * k ** (-float(item.get("power", 1.0)))


def _history(item, y0, tau) -> History:
    n = y0.size
    if item["kind"] == "constant":
        return History.constant(float(item.get("value", 0.0)), n, tau)
    if item["kind"] == "exponential":
        return History.exponential(float(item["lambda"]), y0, tau, 64)
    return History.from_samples(np.array(item["values"], dtype=float), tau)


# --------------------------------------------------------------------------
# running and export
# --------------------------------------------------------------------------


@dataclass
class RunRecord:
    scenario: Scenario
    scenario_hash: str
    version: str
    started: str
    finished: str
    assumptions: dict
    report: RapidReport
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.report.passed

    def payload(self) -> dict:
        """Everything except timestamps and runtimes (reproducible part)."""
        res = []
        for e in self.report.to_dict()["results"]:
            e = dict(e)
            e.pop("runtime", None)
            res.append(e)
        return {
            "scenario": self.scenario.as_dict(),
            "scenario_hash": self.scenario_hash,
            "version": self.version,
            "assumptions": self.assumptions,
            "pass": self.passed,
            "results": res,
            **self.extra,
        }

    def to_dict(self) -> dict:
        d = self.payload()
        d["started"] = self.started
        d["finished"] = self.finished
        d["runtimes"] = [e.runtime for e in self.report.entries]
        return d


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


def _run_two_phase(s: Scenario, sys: ModalSystem, cfg: SimConfig) -> RapidReport:
    entries = []
    for gamma in s.synthesis["alphas"]:
        t0 = _time.perf_counter()
        try:
            law = synthesize_localized(sys, s.system["omega1"], s.system["omega2"], gamma,
                                       margin=s.synthesis["margin"])
            traj = simulate_two_phase(sys, law, cfg)
            lag = traj.info["lag"]
            zero_free = bool(np.all(traj.control_norms[: lag + 1] == 0.0))
            rate = estimate_decay_rate(traj, 2 * sys.tau)
            entries.append(RapidEntry(
                gamma, bool(zero_free and rate >= RATE_TOLERANCE * gamma),
                alpha_hat=rate, C_hat=fit_constant(traj, gamma), law=law.inner,
                runtime=_time.perf_counter() - t0, trajectory=traj,
                error=None if zero_free else "control nonzero on [0, tau]",
            ))
        except (SynthesisError, ModelError, ValueError, ArithmeticError) as exc:
            entries.append(RapidEntry(gamma, False, error=str(exc),
                                      runtime=_time.perf_counter() - t0))
    return RapidReport(entries)


def run_scenario(s: Scenario) -> RunRecord:
    """check_assumptions -> synthesize -> simulate -> verify, per alpha."""
    started = _now()
    sys = s.build_system()
    rep = check_assumptions(sys)
    assumptions = {
        "ok": rep.ok,
        "monotone": rep.monotone,
        "min_gap": rep.min_gap,
        "admissibility": rep.admissibility,
        "violations": list(rep.violations),
    }
    cfg = s.sim_config(sys)
    if s.system["model"] == "localized":
        report = _run_two_phase(s, sys, cfg)
    else:
        report = verify_rapid(sys, s.synthesis["alphas"], cfg,
                              margin=s.synthesis["margin"], gamma=s.synthesis["gamma"],
                              keep_trajectories=True)
    return RunRecord(s, s.hash, __version__, started, _now(), assumptions, report)


def output_dir(s: Scenario, override=None) -> Path:
    d = override or os.environ.get(OUTPUT_ENV) or s.output["directory"]
    return Path(d)


def write_trajectory_csv(path, traj) -> None:
    """Columns t, state_norm, control_norm; ``path`` may be an open text stream."""
    if hasattr(path, "write"):
        _write_rows(path, traj)
        return
    with open(path, "w", newline="") as fh:
        _write_rows(fh, traj)


def _write_rows(fh, traj):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["t", "state_norm", "control_norm"])
    for t, y, u in zip(traj.times, traj.state_norms, traj.control_norms):
        w.writerow(["%.17g" % t, "%.17g" % y, "%.17g" % u])


def summary_text(record_dict: dict) -> str:
    lines = [
        f"scenario: {record_dict['scenario']['name']}  hash {record_dict['scenario_hash'][:12]}",
        f"model: {record_dict['scenario']['system']['model']}",
        f"assumptions ok: {record_dict['assumptions']['ok']}",
    ]
    for r in record_dict["results"]:
        if r.get("alpha_hat") is None:
            lines.append(f"  alpha={r['alpha']:g}: FAIL  {r.get('error', '')}")
        else:
            lines.append(
                f"  alpha={r['alpha']:g}: alpha_hat={float(r['alpha_hat']):.6g} "
                f"C_hat={float(r['C_hat']):.4g} {'PASS' if r['pass'] else 'FAIL'}"
            )
    lines.append(f"aggregate: {'PASS' if record_dict['pass'] else 'FAIL'}")
    return "\n".join(lines) + "\n"


def export(record: RunRecord, formats=None, directory=None) -> list[Path]:
    formats = record.scenario.output["formats"] if formats is None else formats
    out = output_dir(record.scenario, directory)
    out.mkdir(parents=True, exist_ok=True)
    name = record.scenario.name
    written = []
    d = record.to_dict()
    if "json" in formats:
        p = out / f"{name}_report.json"
        p.write_text(dumps(d) + "\n")
        written.append(p)
    if "csv" in formats:
        for e in record.report.entries:
            if e.trajectory is not None:
                p = out / f"{name}_alpha{e.alpha:g}.csv"
                write_trajectory_csv(p, e.trajectory)
                written.append(p)
    if "summary" in formats:
        p = out / f"{name}_summary.txt"
        p.write_text(summary_text(d))
        written.append(p)
    return written
