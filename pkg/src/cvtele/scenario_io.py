"""Load scenario files (TOML) into :class:`ExperimentScenario` objects.

Schema (every section optional unless the kind needs it)::

    name = "fig2_coherent"          # defaults to the file stem
    kind = "coherent_teleport"      # see experiments.KINDS
    description = "..."

    [input]                         # coherent input, default amplitude_db = 20.7
    amplitude_db = 20.7             # or: x = 1.0, p = 2.0

    [teleporter]
    g_x = 1.0                       # or g = 1.0 for both
    g_p = 1.0
    jitter_rms = 0.0                # radians, on both resource beams
    eta_out = 1.0                   # loss on Bob's output

    [resources.epr2]                # one of:
    v_sq_x = 0.11                   #   explicit EprSpec fields (+ eta for both beams)
    # delta = 0.42                  #   lossless pure resource with this delta
    # v_sq = 0.1                    #   pure squeezers, same level in x and p (+ eta)
    # ideal = true                  #   v_sq = 1e-6, pure, lossless
    # vacuum = true                 #   no squeezing

    [[calibrate]]                   # stages run in order before the scenario
    free = ["epr2.v_sq_x", "epr2.v_sq_p"]
    targets = { "tel.x" = 2.82, "tel.p" = 2.64 }     # dB levels
    tie_pure = true
    max_residual = 0.01

    [targets]                       # checks on report entries
    "tel.x" = { db = 2.82, tol = 0.09 }
    "F_c" = { value = 0.70, tol = 0.01 }
    "delta_ref_out" = { value = 0.91, lo = 0.85, hi = 0.93 }

    [shots]                         # Monte-Carlo, off unless n is given
    n = 100000
    seed = 0

    [sweep]                         # for gain_sweep / squeeze_sweep
    param = "teleporter.g"
    values = [0.0, 0.5, 1.0]
"""

from __future__ import annotations

import sys
from importlib import resources as importlib_resources
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .calibration import CalTarget
from .errors import CVTeleError, ScenarioError
from .experiments import (
    IDEAL_V_SQ,
    CalibrationStage,
    ExperimentScenario,
    SweepSpec,
    Target,
    amplitude_mean,
)
from .protocol import EprSpec, TeleporterConfig

_TOP = {"name", "kind", "description", "input", "teleporter", "resources", "calibrate", "targets", "shots", "sweep"}


def builtin_scenarios() -> list:
    """Names of the scenario files shipped with the package."""
    root = importlib_resources.files("cvtele") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def builtin_path(name: str) -> Optional[Path]:
    stem = name[:-5] if name.endswith(".toml") else name
    path = importlib_resources.files("cvtele") / "scenarios" / f"{stem}.toml"
    return Path(str(path)) if path.is_file() else None


def _number(where, v, problems):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        problems.append(f"{where}: expected a number, got {v!r}")
        return None
    return float(v)


def _unknown(where, table, allowed, problems):
    for k in table:
        if k not in allowed:
            problems.append(f"{where}.{k}: unknown field")


def _epr(where, t, problems) -> Optional[EprSpec]:
    if not isinstance(t, dict):
        problems.append(f"{where}: expected a table")
        return None
    fields = {"v_sq_x", "v_anti_x", "v_sq_p", "v_anti_p", "eta", "eta_a", "eta_b", "delta", "v_sq", "ideal", "vacuum"}
    _unknown(where, t, fields, problems)
    nums = {k: _number(f"{where}.{k}", v, problems) for k, v in t.items() if k not in ("ideal", "vacuum") and k in fields}
    if any(v is None for v in nums.values()):
        return None
    eta = nums.pop("eta", None)
    eta_a = nums.pop("eta_a", eta if eta is not None else 1.0)
    eta_b = nums.pop("eta_b", eta if eta is not None else 1.0)
    try:
        if t.get("ideal"):
            return EprSpec.pure(IDEAL_V_SQ, eta=1.0)
        if t.get("vacuum"):
            return EprSpec.vacuum()
        if "delta" in nums:
            return EprSpec.symmetric(nums["delta"])
        if "v_sq" in nums:
            base = EprSpec.pure(nums["v_sq"])
            return EprSpec(base.v_sq_x, base.v_anti_x, base.v_sq_p, base.v_anti_p, eta_a, eta_b)
        missing = [k for k in ("v_sq_x", "v_sq_p") if k not in nums]
        if missing:
            problems.append(f"{where}: missing {', '.join(missing)} (or give delta, v_sq, ideal, vacuum)")
            return None
        sx, sp = nums["v_sq_x"], nums["v_sq_p"]
        return EprSpec(
            sx, nums.get("v_anti_x", 1 / (16 * sx)),
            sp, nums.get("v_anti_p", 1 / (16 * sp)),
            eta_a, eta_b,
        )
    except CVTeleError as exc:
        problems.append(f"{where}: {exc}")
        return None


def _target(where, t, problems) -> Optional[Target]:
    if isinstance(t, (int, float)) and not isinstance(t, bool):
        return Target(float(t), 0.0)
    if not isinstance(t, dict):
        problems.append(f"{where}: expected a number or a table")
        return None
    _unknown(where, t, {"db", "value", "tol", "lo", "hi"}, problems)
    if ("db" in t) == ("value" in t):
        problems.append(f"{where}: give exactly one of db or value")
        return None
    scale = "db" if "db" in t else "linear"
    nums = {k: _number(f"{where}.{k}", v, problems) for k, v in t.items() if k in ("db", "value", "tol", "lo", "hi")}
    if any(v is None for v in nums.values()):
        return None
    value = nums.get("db", nums.get("value"))
    if "tol" not in nums and "lo" not in nums and "hi" not in nums:
        problems.append(f"{where}: give tol or lo/hi")
        return None
    return Target(value, nums.get("tol"), scale, nums.get("lo"), nums.get("hi"))


def parse_scenario(data: dict, default_name: str = "scenario") -> ExperimentScenario:
    """Build and validate a scenario from a parsed TOML table."""
    problems = []
    _unknown("<top>", data, _TOP, problems)
    kind = data.get("kind")
    if kind is None:
        problems.append("kind: required field is missing")

    teleporter = TeleporterConfig()
    tel = data.get("teleporter", {})
    if isinstance(tel, dict):
        _unknown("teleporter", tel, {"g", "g_x", "g_p", "jitter_rms", "eta_out"}, problems)
        nums = {k: _number(f"teleporter.{k}", v, problems) for k, v in tel.items()}
        if all(v is not None for v in nums.values()):
            g = nums.pop("g", None)
            if g is not None:
                nums.setdefault("g_x", g)
                nums.setdefault("g_p", g)
            try:
                teleporter = TeleporterConfig(**{k: v for k, v in nums.items() if k in ("g_x", "g_p", "jitter_rms", "eta_out")})
            except CVTeleError as exc:
                problems.append(f"teleporter: {exc}")
    else:
        problems.append("teleporter: expected a table")

    resources = {}
    for name, t in data.get("resources", {}).items():
        if name not in ("epr1", "epr2"):
            problems.append(f"resources.{name}: unknown resource (expected epr1 or epr2)")
            continue
        spec = _epr(f"resources.{name}", t, problems)
        if spec is not None:
            resources[name] = spec

    input_mean = None
    inp = data.get("input")
    if inp is not None:
        _unknown("input", inp, {"amplitude_db", "x", "p"}, problems)
        if "amplitude_db" in inp:
            a = _number("input.amplitude_db", inp["amplitude_db"], problems)
            input_mean = amplitude_mean(a) if a is not None else None
        elif "x" in inp or "p" in inp:
            x = _number("input.x", inp.get("x", 0.0), problems)
            p = _number("input.p", inp.get("p", 0.0), problems)
            input_mean = (x, p) if x is not None and p is not None else None

    stages = []
    for i, st in enumerate(data.get("calibrate", [])):
        where = f"calibrate[{i}]"
        _unknown(where, st, {"free", "targets", "tie_pure", "max_residual"}, problems)
        free = st.get("free", [])
        if not isinstance(free, list) or not all(isinstance(f, str) for f in free):
            problems.append(f"{where}.free: expected a list of parameter names")
            free = []
        cal_targets = []
        for obs, db in st.get("targets", {}).items():
            v = _number(f"{where}.targets.{obs}", db, problems)
            if v is None:
                continue
            try:
                cal_targets.append(CalTarget(obs, v))
            except CVTeleError as exc:
                problems.append(f"{where}.targets.{obs}: {exc}")
        max_res = st.get("max_residual")
        if max_res is not None:
            max_res = _number(f"{where}.max_residual", max_res, problems)
        stages.append(CalibrationStage(tuple(cal_targets), tuple(free), bool(st.get("tie_pure", True)), max_res))

    targets = {}
    for name, t in data.get("targets", {}).items():
        tg = _target(f"targets.{name}", t, problems)
        if tg is not None:
            targets[name] = tg

    shots, seed = None, 0
    sh = data.get("shots")
    if sh is not None:
        _unknown("shots", sh, {"n", "seed"}, problems)
        shots = sh.get("n")
        seed = sh.get("seed", 0)
        if shots is not None and (isinstance(shots, bool) or not isinstance(shots, int) or shots < 1):
            problems.append(f"shots.n: must be a positive integer, got {shots!r}")
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            problems.append(f"shots.seed: must be a non-negative integer, got {seed!r}")

    sweep = None
    sw = data.get("sweep")
    if sw is not None:
        _unknown("sweep", sw, {"param", "values"}, problems)
        values = sw.get("values", [])
        nums = [_number(f"sweep.values[{i}]", v, problems) for i, v in enumerate(values)]
        if "param" not in sw:
            problems.append("sweep.param: required field is missing")
        sweep = SweepSpec(str(sw.get("param", "")), tuple(v for v in nums if v is not None))

    if problems:
        raise ScenarioError(problems)
    scenario = ExperimentScenario(
        name=str(data.get("name", default_name)),
        kind=kind,
        resources=resources,
        teleporter=teleporter,
        input_mean=input_mean,
        shots=shots,
        seed=seed,
        targets=targets,
        calibration=tuple(stages),
        sweep=sweep,
        description=str(data.get("description", "")),
    )
    scenario.validate()
    return scenario


def load_scenario(path) -> ExperimentScenario:
    """Read a scenario file; TOML syntax errors are reported with line and column."""
    path = Path(path)
    text = path.read_text()
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"{path}: {exc}") from None
    try:
        return parse_scenario(data, default_name=path.stem)
    except ScenarioError as exc:
        raise ScenarioError([f"{path}: {p}" for p in exc.problems]) from None
