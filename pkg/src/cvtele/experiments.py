"""Declarative scenarios for the three demonstrations, plus sweeps.

A scenario names its kind, resources, teleporter settings, optional
calibration stages, optional Monte-Carlo shots and optional targets.
:func:`run` turns it into a :class:`ScenarioReport`, a flat table of named
quantities with linear value, dB level, and pass/fail against targets.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .calibration import CalibrationResult, CalTarget, Setup, calibrate, observables, reference_level
from .errors import InvalidArgumentError, ScenarioError
from .gaussian import VACUUM_VAR, coherent, tensor
from .metrics import (
    PAIR_REF,
    SINGLE_REF,
    fidelity_coherent,
    fidelity_from_duan_symmetric,
    normalized_gain,
    to_db,
)
from .protocol import (
    EprSpec,
    TeleporterConfig,
    empirical_moments,
    make_epr,
    swap_joint,
    teleport_exact,
    teleport_shots,
)

KINDS = ("coherent_teleport", "epr_characterize", "entanglement_swap",
         "gain_sweep", "squeeze_sweep", "calibrate")

#: coherent amplitude 20.7 dB above the single-quadrature vacuum level
DEFAULT_AMPLITUDE_DB = 20.7

#: an "ideal" resource: finite squeezing small enough to be invisible at 1e-5
IDEAL_V_SQ = 1e-6

ADDITIVITY_TOL = 1e-10
MC_SIGMAS = 3.0


def amplitude_mean(amplitude_db: float = DEFAULT_AMPLITUDE_DB) -> tuple[float, float]:
    """Coherent mean with |mean|^2 = 10^(dB/10) / 4, split evenly over x and p.

    Both quadratures get the same displacement so both normalized gains are
    defined.  The amplitude never affects variances or the fidelity.
    """
    r = math.sqrt(10 ** (amplitude_db / 10) * VACUUM_VAR)
    return r / math.sqrt(2), r / math.sqrt(2)


@dataclass(frozen=True)
class Target:
    """Expected value of a report entry.

    ``scale`` is ``"db"`` when ``value`` and ``tol`` are in dB, otherwise
    ``"linear"``.  ``lo``/``hi`` replace ``value +- tol`` as the acceptance
    window when given; ``value`` is then kept for reference only.
    """

    value: float
    tol: Optional[float] = None
    scale: str = "linear"
    lo: Optional[float] = None
    hi: Optional[float] = None

    def window(self) -> tuple[float, float]:
        if self.lo is not None or self.hi is not None:
            return (-math.inf if self.lo is None else self.lo, math.inf if self.hi is None else self.hi)
        tol = 0.0 if self.tol is None else self.tol
        return self.value - tol, self.value + tol


@dataclass(frozen=True)
class CalibrationStage:
    targets: tuple  # of CalTarget
    free: tuple
    tie_pure: bool = True
    max_residual: Optional[float] = None


@dataclass(frozen=True)
class SweepSpec:
    param: str
    values: tuple


@dataclass(frozen=True)
class ExperimentScenario:
    name: str
    kind: str
    resources: dict = field(default_factory=dict)  # "epr1"/"epr2" -> EprSpec
    teleporter: TeleporterConfig = field(default_factory=TeleporterConfig)
    input_mean: Optional[tuple] = None
    shots: Optional[int] = None
    seed: int = 0
    targets: dict = field(default_factory=dict)  # entry name -> Target
    calibration: tuple = ()
    sweep: Optional[SweepSpec] = None
    description: str = ""

    def validate(self) -> None:
        """Raise :class:`ScenarioError` listing every missing or bad field."""
        problems = []
        if self.kind not in KINDS:
            problems.append(f"kind: unknown kind {self.kind!r} (expected one of {', '.join(KINDS)})")
            raise ScenarioError(problems)
        provided = {k for k, v in self.resources.items() if v is not None}
        for k in self.resources:
            if k not in ("epr1", "epr2"):
                problems.append(f"resources.{k}: unknown resource (expected epr1 or epr2)")
        for i, stage in enumerate(self.calibration):
            if not stage.targets:
                problems.append(f"calibrate[{i}].targets: at least one target required")
            if not stage.free:
                problems.append(f"calibrate[{i}].free: at least one free parameter required")
            elif len(stage.targets) < len(stage.free):
                problems.append(
                    f"calibrate[{i}]: {len(stage.targets)} targets cannot fix {len(stage.free)} parameters"
                )
            provided |= {p.split(".")[0] for p in stage.free if p.startswith("epr")}
        need = {
            "coherent_teleport": {"epr2"},
            "gain_sweep": {"epr2"},
            "squeeze_sweep": {"epr2"},
            "epr_characterize": {"epr1"},
            "entanglement_swap": {"epr1", "epr2"},
            "calibrate": set(),
        }[self.kind]
        for r in sorted(need - provided):
            problems.append(f"resources.{r}: required for kind {self.kind} (give it or calibrate it)")
        if self.kind in ("gain_sweep", "squeeze_sweep"):
            if self.sweep is None:
                problems.append("sweep: required for sweep kinds")
            elif not self.sweep.values:
                problems.append("sweep.values: must not be empty")
        if self.kind == "calibrate" and not self.calibration:
            problems.append("calibrate: kind calibrate needs at least one [[calibrate]] stage")
        if self.shots is not None and (not isinstance(self.shots, int) or self.shots < 1):
            problems.append(f"shots.n: must be a positive integer, got {self.shots!r}")
        if self.input_mean is not None and len(self.input_mean) != 2:
            problems.append("input: needs both x and p")
        if self.sweep is not None and not is_param_path(self.sweep.param):
            problems.append(f"sweep.param: unknown parameter path {self.sweep.param!r}")
        if problems:
            raise ScenarioError(problems)


@dataclass
class ReportEntry:
    name: str
    linear: float
    db: Optional[float] = None
    db_ref: Optional[float] = None
    target: Optional[float] = None
    tolerance: Optional[float] = None
    scale: str = "linear"
    lo: Optional[float] = None
    hi: Optional[float] = None
    passed: Optional[bool] = None
    note: str = ""

    def check(self, target: Target) -> None:
        self.target, self.tolerance, self.scale = target.value, target.tol, target.scale
        self.lo, self.hi = target.lo, target.hi
        if target.scale == "db" and self.db is None:
            raise ScenarioError(f"targets.{self.name}: quantity has no dB level, give a linear value")
        v = self.db if target.scale == "db" else self.linear
        lo, hi = target.window()
        self.passed = bool(lo <= v <= hi)
        if not self.note and target.value is not None:
            diff = v - target.value
            unit = " dB" if target.scale == "db" else ""
            self.note = f"model - target = {diff:+.4g}{unit}"


def make_entry(name: str, linear: float, v_ref: Optional[float] = None, note: str = "") -> ReportEntry:
    linear = float(linear)
    if v_ref is None:
        return ReportEntry(name, linear, note=note)
    return ReportEntry(name, linear, to_db(linear, v_ref), v_ref, note=note)


@dataclass
class ScenarioReport:
    name: str
    kind: str
    entries: list = field(default_factory=list)
    calibrations: list = field(default_factory=list)
    setup: Optional[Setup] = None

    def __getitem__(self, name: str) -> ReportEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return any(e.name == name for e in self.entries)

    def names(self) -> list:
        return [e.name for e in self.entries]

    @property
    def all_pass(self) -> bool:
        return all(e.passed is not False for e in self.entries)

    def failures(self) -> list:
        return [e for e in self.entries if e.passed is False]


# -- parameter paths --------------------------------------------------------

def _epr_with(spec: Optional[EprSpec], field_name: str, value: float) -> EprSpec:
    if field_name == "delta":
        return EprSpec.symmetric(value)
    if field_name == "v_sq":
        eta_a = spec.eta_a if spec else 1.0
        eta_b = spec.eta_b if spec else 1.0
        return replace(EprSpec.pure(value), eta_a=eta_a, eta_b=eta_b)
    if spec is None:
        raise ScenarioError(f"cannot set {field_name} on a resource that is not defined")
    if field_name == "eta":
        return replace(spec, eta_a=value, eta_b=value)
    if field_name in ("v_sq_x", "v_sq_p"):
        q = field_name[-1]
        anti = max(getattr(spec, f"v_anti_{q}"), VACUUM_VAR**2 / value)
        return replace(spec, **{field_name: value, f"v_anti_{q}": anti})
    return replace(spec, **{field_name: value})


_EPR_PATHS = ("delta", "v_sq", "v_sq_x", "v_anti_x", "v_sq_p", "v_anti_p", "eta", "eta_a", "eta_b")
_TEL_PATHS = ("g", "g_x", "g_p", "jitter_rms", "eta_out")


def is_param_path(path: str) -> bool:
    head, _, tail = str(path).partition(".")
    return (
        (head == "teleporter" and tail in _TEL_PATHS)
        or (head in ("epr1", "epr2") and tail in _EPR_PATHS)
        or (head == "input" and tail in ("x", "p"))
    )


def resolve_param(scenario: ExperimentScenario, path: str, value) -> ExperimentScenario:
    """Return a copy of ``scenario`` with the parameter at ``path`` set to ``value``.

    Paths: ``teleporter.{g, g_x, g_p, jitter_rms, eta_out}`` (``g`` sets both
    gains), ``epr1.<field>`` / ``epr2.<field>`` for any EprSpec field plus
    ``eta`` (both beams), ``v_sq`` (pure, both quadratures) and ``delta``
    (lossless symmetric resource), and ``input.x`` / ``input.p``.
    """
    head, _, tail = str(path).partition(".")
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ScenarioError(f"sweep value {value!r} for {path} is not a number") from None
    try:
        if head == "teleporter" and tail in _TEL_PATHS:
            t = scenario.teleporter
            t = t.with_gain(value) if tail == "g" else replace(t, **{tail: value})
            return replace(scenario, teleporter=t)
        if head in ("epr1", "epr2") and tail in _EPR_PATHS:
            res = dict(scenario.resources)
            res[head] = _epr_with(res.get(head), tail, value)
            return replace(scenario, resources=res)
        if head == "input" and tail in ("x", "p"):
            mean = list(scenario.input_mean or amplitude_mean())
            mean["xp".index(tail)] = value
            return replace(scenario, input_mean=tuple(mean))
    except InvalidArgumentError as exc:
        raise ScenarioError(f"{path}={value}: {exc}") from None
    raise ScenarioError(f"unknown parameter path {path!r}")


# -- running ----------------------------------------------------------------

def calibrated_setup(scenario: ExperimentScenario):
    setup = Setup(scenario.resources.get("epr1"), scenario.resources.get("epr2"),
                  replace(scenario.teleporter, epr=None))
    results = []
    for stage in scenario.calibration:
        res = calibrate(stage.targets, stage.free, base=setup, tie_pure=stage.tie_pure)
        results.append(res)
        setup = res.setup
    return setup, results


def calibration_entries(scenario: ExperimentScenario, results) -> list:
    entries = []
    for i, (stage, res) in enumerate(zip(scenario.calibration, results)):
        e = make_entry(f"calibration[{i}].residual_db", res.residual,
                   note="free: " + ", ".join(stage.free))
        if stage.max_residual is not None:
            note = e.note
            e.check(Target(0.0, stage.max_residual, lo=0.0, hi=stage.max_residual))
            e.note = note
        entries.append(e)
        for name, val in res.parameter_values().items():
            entries.append(make_entry(f"calibration[{i}].{name}", val))
    return entries


def _epr1_entries(setup: Setup) -> list:
    vals = observables(setup, ["ref.x", "ref.p", "in.x", "in.p", "ref-in.x", "ref+in.p", "delta_ref_in"])
    entries = [make_entry(n, vals[n], reference_level(n)) for n in list(vals)[:-1]]
    d = vals["delta_ref_in"]
    entries.append(make_entry("delta_ref_in", d))
    entries.append(make_entry("entangled_ref_in", float(d < 1.0)))
    return entries


def _epr2_entries(setup: Setup) -> list:
    vals = observables(setup, ["A-B.x", "A+B.p", "delta_AB"])
    return [
        make_entry("A-B.x", vals["A-B.x"], PAIR_REF),
        make_entry("A+B.p", vals["A+B.p"], PAIR_REF),
        make_entry("delta_AB", vals["delta_AB"]),
    ]


def _coherent_entries(scenario: ExperimentScenario, setup: Setup) -> list:
    cfg = setup.cfg
    mean = scenario.input_mean or amplitude_mean()
    joint = tensor([coherent(*mean), make_epr(cfg.epr)])
    out = teleport_exact(joint, 0, 1, 2, cfg)
    sx, sp = float(out.cov[0, 0]), float(out.cov[1, 1])
    fid = fidelity_coherent(sx, sp, gains=(cfg.g_x, cfg.g_p))
    entries = [
        make_entry("tel.x", sx, SINGLE_REF),
        make_entry("tel.p", sp, SINGLE_REF),
        make_entry("mean.x", out.mean[0]),
        make_entry("mean.p", out.mean[1]),
    ]
    if mean[0] != 0 and mean[1] != 0:
        gx, gp = normalized_gain(mean, out.mean)
        entries += [make_entry("g_x", gx), make_entry("g_p", gp)]
    entries += _epr2_entries(setup)
    note = "" if fid.unity_gain else "non-unity gain: variance formula, not phase-space averaged"
    entries.append(make_entry("F_c", fid.fidelity, note=note))
    delta = entries[-2].linear
    entries.append(make_entry("F_c_from_delta", fidelity_from_duan_symmetric(delta),
                          note="symmetric split of delta_AB, lossless teleporter"))
    if scenario.shots:
        entries += _coherent_mc(scenario, joint, cfg, out)
    return entries


def _mc_entry(name, value, exact, se, v_ref=None) -> ReportEntry:
    e = make_entry(name, value, v_ref)
    tol = MC_SIGMAS * float(se)
    e.check(Target(float(exact), tol))
    e.note = f"exact {exact:.6g}, {MC_SIGMAS:g} std errors = {tol:.3g}"
    return e


def _coherent_mc(scenario, joint, cfg, exact) -> list:
    rec = teleport_shots(joint, 0, 1, 2, cfg, scenario.shots, scenario.seed)
    mean, cov, se_mean, se_var = empirical_moments(rec.outputs)
    entries = [
        _mc_entry("mc.mean.x", mean[0], exact.mean[0], se_mean[0]),
        _mc_entry("mc.mean.p", mean[1], exact.mean[1], se_mean[1]),
        _mc_entry("mc.tel.x", cov[0, 0], exact.cov[0, 0], se_var[0], SINGLE_REF),
        _mc_entry("mc.tel.p", cov[1, 1], exact.cov[1, 1], se_var[1], SINGLE_REF),
    ]
    fid = fidelity_coherent(cov[0, 0], cov[1, 1], gains=(cfg.g_x, cfg.g_p))
    entries.append(make_entry("mc.F_c", fid.fidelity, note=f"{len(rec)} shots, seed {rec.seed}"))
    return entries


def _swap_entries(scenario: ExperimentScenario, setup: Setup) -> list:
    entries = _epr1_entries(setup) + _epr2_entries(setup)
    vals = observables(setup, ["out.x", "out.p", "ref-out.x", "ref+out.p", "delta_ref_out"])
    entries += [make_entry(n, vals[n], reference_level(n)) for n in ("out.x", "out.p", "ref-out.x", "ref+out.p")]
    d_out = vals["delta_ref_out"]
    entries.append(make_entry("delta_ref_out", d_out))
    entries.append(make_entry("entangled_ref_out", float(d_out < 1.0)))
    t = setup.teleporter
    if t.g_x == 1 and t.g_p == 1 and t.jitter_rms == 0 and t.eta_out == 1:
        gap = abs(d_out - (scenario_value(entries, "delta_ref_in") + scenario_value(entries, "delta_AB")))
        e = make_entry("additivity_gap", gap, note="|delta_ref_out - (delta_ref_in + delta_AB)|")
        e.check(Target(0.0, ADDITIVITY_TOL))
        e.note = "|delta_ref_out - (delta_ref_in + delta_AB)|"
        entries.append(e)
    if scenario.shots:
        entries += _swap_mc(scenario, setup, vals)
    return entries


def _swap_mc(scenario, setup, exact_vals) -> list:
    joint = swap_joint(setup.epr1, setup.epr2)
    rec = teleport_shots(joint, 1, 2, 3, setup.cfg, scenario.shots, scenario.seed)
    s = rec.outputs  # columns x_ref, p_ref, x_out, p_out
    combos = {"ref-out.x": s[:, 0] - s[:, 2], "ref+out.p": s[:, 1] + s[:, 3]}
    entries = []
    total = 0.0
    for name, col in combos.items():
        _, cov, _, se_var = empirical_moments(col[:, None])
        total += cov[0, 0]
        entries.append(_mc_entry("mc." + name, cov[0, 0], exact_vals[name], se_var[0], PAIR_REF))
    entries.append(make_entry("mc.delta_ref_out", total, note=f"{len(rec)} shots, seed {rec.seed}"))
    return entries


def scenario_value(entries, name):
    for e in entries:
        if e.name == name:
            return e.linear
    raise KeyError(name)


def _sweep_entries(scenario: ExperimentScenario) -> list:
    base = replace(scenario, kind="coherent_teleport", sweep=None, targets={})
    entries = []
    for value, rep in zip(scenario.sweep.values, sweep(base, scenario.sweep.param, scenario.sweep.values)):
        for e in rep.entries:
            e.name = f"[{scenario.sweep.param}={value:g}] {e.name}"
            entries.append(e)
    return entries


def run(scenario: ExperimentScenario) -> ScenarioReport:
    """Execute a scenario in exact mode, plus Monte-Carlo when shots are set."""
    scenario.validate()
    setup, cal = calibrated_setup(scenario)
    entries = calibration_entries(scenario, cal)
    sc = replace(scenario, resources={"epr1": setup.epr1, "epr2": setup.epr2},
                 teleporter=setup.teleporter, calibration=())
    if scenario.kind == "coherent_teleport":
        entries += _coherent_entries(sc, setup)
    elif scenario.kind == "epr_characterize":
        entries += _epr1_entries(setup)
    elif scenario.kind == "entanglement_swap":
        entries += _swap_entries(sc, setup)
    elif scenario.kind in ("gain_sweep", "squeeze_sweep"):
        entries += _sweep_entries(sc)
    report = ScenarioReport(scenario.name, scenario.kind, entries, cal, setup)
    problems = []
    for name, target in scenario.targets.items():
        if name not in report:
            problems.append(f"targets.{name}: no such quantity in a {scenario.kind} report")
            continue
        try:
            report[name].check(target)
        except ScenarioError as exc:
            problems.extend(exc.problems)
    if problems:
        raise ScenarioError(problems)
    return report


def sweep(base: ExperimentScenario, param: str, values: Sequence, workers: int = 1) -> list:
    """One report per value, in the order of ``values``."""
    values = list(values)
    if not values:
        raise InvalidArgumentError("sweep needs at least one value")
    if not is_param_path(param):
        raise InvalidArgumentError(f"unknown parameter path {param!r}")
    if base.calibration:
        # calibrate once, then sweep on top of the fitted resources
        setup, _ = calibrated_setup(base)
        base = replace(base, resources={"epr1": setup.epr1, "epr2": setup.epr2},
                       teleporter=setup.teleporter, calibration=())
    scenarios = [resolve_param(base, param, v) for v in values]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, scenarios))
    return [run(s) for s in scenarios]
