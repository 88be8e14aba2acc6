"""Observable model of the three demonstrations and a dB-space calibration fitter.

Observables are named by the modes they involve:

==============  ===============================  ==========
name            quantity                         dB ref
==============  ===============================  ==========
``ref.x``       V(x) of EPR1 beam A (reference)  1/4
``in.x``        V(x) of EPR1 beam B (input)      1/4
``ref-in.x``    V(x_ref - x_in)                  1/2
``ref+in.p``    V(p_ref + p_in)                  1/2
``A.x``         V(x) of EPR2 beam A              1/4
``A-B.x``       V(x_A - x_B)                     1/2
``A+B.p``       V(p_A + p_B)                     1/2
``tel.x``       output V(x) for a coherent input 1/4
``out.x``       swapped output V(x)              1/4
``ref-out.x``   V(x_ref - x_out)                 1/2
``ref+out.p``   V(p_ref + p_out)                 1/2
==============  ===============================  ==========

with the obvious ``.p`` twins.  Inseparability sums (``delta_ref_in``,
``delta_AB``, ``delta_ref_out``) and ``F_c`` are available as linear values
only and cannot be calibration targets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import ConvergenceError, InvalidArgumentError
from .gaussian import VACUUM_VAR, GaussianState, QuadCombination, combination_variance
from .metrics import PAIR_REF, SINGLE_REF, duan, fidelity_coherent, from_db, to_db
from .protocol import EprSpec, TeleporterConfig, make_epr, teleport_coherent, swap_scenario

MAX_ITER = 10_000
IMPROVEMENT_TOL = 1e-10
LOSSY_START = 0.6

_EPR1_OBS = {
    "ref.x": ("single", 0, "x"), "ref.p": ("single", 0, "p"),
    "in.x": ("single", 1, "x"), "in.p": ("single", 1, "p"),
    "ref-in.x": ("pair", 0, "x"), "ref+in.p": ("pair", 0, "p"),
}
_EPR2_OBS = {
    "A.x": ("single", 0, "x"), "A.p": ("single", 0, "p"),
    "B.x": ("single", 1, "x"), "B.p": ("single", 1, "p"),
    "A-B.x": ("pair", 0, "x"), "A+B.p": ("pair", 0, "p"),
}
_SWAP_OBS = {
    "out.x": ("single", 1, "x"), "out.p": ("single", 1, "p"),
    "ref-out.x": ("pair", 0, "x"), "ref+out.p": ("pair", 0, "p"),
}
_TEL_OBS = {"tel.x": ("single", 0, "x"), "tel.p": ("single", 0, "p")}

DB_OBSERVABLES = tuple(_EPR1_OBS) + tuple(_EPR2_OBS) + tuple(_TEL_OBS) + tuple(_SWAP_OBS)
LINEAR_OBSERVABLES = ("delta_ref_in", "delta_AB", "delta_ref_out", "F_c")
OBSERVABLES = DB_OBSERVABLES + LINEAR_OBSERVABLES


def reference_level(name: str) -> Optional[float]:
    """dB reference for an observable, or None for linear-only ones."""
    for table in (_EPR1_OBS, _EPR2_OBS, _SWAP_OBS, _TEL_OBS):
        if name in table:
            return SINGLE_REF if table[name][0] == "single" else PAIR_REF
    if name in LINEAR_OBSERVABLES:
        return None
    raise InvalidArgumentError(f"unknown observable {name!r}")


@dataclass(frozen=True)
class Setup:
    """Everything the observables depend on."""

    epr1: Optional[EprSpec] = None
    epr2: Optional[EprSpec] = None
    teleporter: TeleporterConfig = field(default_factory=TeleporterConfig)

    @property
    def cfg(self) -> TeleporterConfig:
        return replace(self.teleporter, epr=self.epr2)


def _variance(state: GaussianState, kind: str, mode: int, quad: str) -> float:
    if kind == "single":
        i = 2 * mode + (quad == "p")
        return float(state.cov[i, i])
    combo = QuadCombination.x_minus(mode, mode + 1) if quad == "x" else QuadCombination.p_plus(mode, mode + 1)
    return combination_variance(state, combo)


def _need(setup: Setup, which: str):
    if getattr(setup, which) is None:
        raise InvalidArgumentError(f"observable needs resource {which}")


def observables(setup: Setup, names: Sequence[str]) -> dict:
    """Linear values of the requested observables (states built once, lazily)."""
    cache = {}

    def epr1():
        if "epr1" not in cache:
            _need(setup, "epr1")
            cache["epr1"] = make_epr(setup.epr1)
        return cache["epr1"]

    def epr2():
        if "epr2" not in cache:
            _need(setup, "epr2")
            cache["epr2"] = make_epr(setup.epr2)
        return cache["epr2"]

    def tel():
        if "tel" not in cache:
            _need(setup, "epr2")
            cache["tel"] = teleport_coherent((0.0, 0.0), setup.cfg)
        return cache["tel"]

    def swap():
        if "swap" not in cache:
            _need(setup, "epr1")
            _need(setup, "epr2")
            cache["swap"] = swap_scenario(setup.epr1, setup.epr2, setup.cfg)
        return cache["swap"]

    out = {}
    for name in names:
        if name in _EPR1_OBS:
            out[name] = _variance(epr1(), *_EPR1_OBS[name])
        elif name in _EPR2_OBS:
            out[name] = _variance(epr2(), *_EPR2_OBS[name])
        elif name in _TEL_OBS:
            out[name] = _variance(tel(), *_TEL_OBS[name])
        elif name in _SWAP_OBS:
            out[name] = _variance(swap(), *_SWAP_OBS[name])
        elif name == "delta_ref_in":
            out[name] = duan(epr1(), 0, 1).delta
        elif name == "delta_AB":
            out[name] = duan(epr2(), 0, 1).delta
        elif name == "delta_ref_out":
            out[name] = duan(swap(), 0, 1).delta
        elif name == "F_c":
            t = tel()
            out[name] = fidelity_coherent(t.cov[0, 0], t.cov[1, 1]).fidelity
        else:
            raise InvalidArgumentError(f"unknown observable {name!r}")
    return out


# -- fitting ----------------------------------------------------------------

@dataclass(frozen=True)
class CalTarget:
    observable: str
    db: float
    v_ref: Optional[float] = None

    def __post_init__(self):
        ref = reference_level(self.observable)
        if ref is None:
            raise InvalidArgumentError(f"{self.observable!r} has no dB level and cannot be a calibration target")
        if self.v_ref is None:
            object.__setattr__(self, "v_ref", ref)
        elif abs(self.v_ref - ref) > 1e-12:
            raise InvalidArgumentError(
                f"{self.observable!r} is measured against {ref}, not {self.v_ref}"
            )


@dataclass(frozen=True)
class CalibrationResult:
    setup: Setup
    free_params: tuple
    targets: tuple
    model_db: tuple
    residual: float
    iterations: int

    @property
    def epr1(self):
        return self.setup.epr1

    @property
    def epr2(self):
        return self.setup.epr2

    @property
    def jitter_rms(self):
        return self.setup.teleporter.jitter_rms

    def parameter_values(self) -> dict:
        return dict(zip(self.free_params, _read_params(self.setup, self.free_params)))


_EPR_PARAMS = ("v_sq_x", "v_anti_x", "v_sq_p", "v_anti_p", "eta", "eta_a", "eta_b")
_TEL_PARAMS = ("g", "g_x", "g_p", "jitter_rms", "eta_out")


def _split(param: str):
    head, _, tail = param.partition(".")
    if head in ("epr1", "epr2") and tail in _EPR_PARAMS:
        return head, tail
    if head == "teleporter" and tail in _TEL_PARAMS:
        return head, tail
    raise InvalidArgumentError(f"unknown calibration parameter {param!r}")


def _read_params(setup: Setup, params):
    vals = []
    for p in params:
        head, tail = _split(p)
        obj = setup.teleporter if head == "teleporter" else getattr(setup, head)
        if tail == "eta":
            tail = "eta_a"
        elif tail == "g":
            tail = "g_x"
        vals.append(getattr(obj, tail))
    return vals


def _bounds(tail: str):
    if tail.startswith("v_sq"):
        return (math.log(1e-5), math.log(10.0))
    if tail.startswith("v_anti"):
        return (0.0, 12.0)
    if tail.startswith("eta"):
        return (0.0, 1.0)
    if tail == "jitter_rms":
        return (0.0, 1.0)
    return (-5.0, 5.0)


class _Model:
    """Maps the free-parameter vector to a Setup.

    Squeezed variances live in log space; antisqueezed variances are stored
    as ``log(16 v_sq v_anti) >= 0`` (excess over a pure state), so every
    point inside the bounds is a valid EprSpec.  When a squeezed variance is
    free but its antisqueezed partner is not, the partner follows the pure
    state if ``tie_pure`` is set and is otherwise kept (raised to the pure
    value if needed).  Resources without free parameters are left untouched.
    """

    def __init__(self, base: Setup, free: Sequence[str], tie_pure: bool):
        self.base = base
        self.free = list(free)
        self.tie_pure = tie_pure
        self.split = [_split(p) for p in self.free]

    def setup(self, z) -> Setup:
        vals = {"epr1": {}, "epr2": {}, "teleporter": {}}
        for (head, tail), v in zip(self.split, z):
            vals[head][tail] = float(v)
        eprs = {}
        for which in ("epr1", "epr2"):
            base = getattr(self.base, which)
            if base is None and not vals[which]:
                eprs[which] = None
                continue
            if not vals[which]:
                eprs[which] = base
                continue
            base = base if base is not None else EprSpec.vacuum()
            kw = {}
            for q in ("x", "p"):
                sq = math.exp(vals[which][f"v_sq_{q}"]) if f"v_sq_{q}" in vals[which] else getattr(base, f"v_sq_{q}")
                pure_anti = VACUUM_VAR**2 / sq
                if f"v_anti_{q}" in vals[which]:
                    anti = pure_anti * math.exp(vals[which][f"v_anti_{q}"])
                elif self.tie_pure and f"v_sq_{q}" in vals[which]:
                    anti = pure_anti
                else:
                    anti = max(getattr(base, f"v_anti_{q}"), pure_anti)
                kw[f"v_sq_{q}"], kw[f"v_anti_{q}"] = sq, anti
            eta_a = vals[which].get("eta_a", vals[which].get("eta", base.eta_a))
            eta_b = vals[which].get("eta_b", vals[which].get("eta", base.eta_b))
            eprs[which] = EprSpec(eta_a=eta_a, eta_b=eta_b, **kw)
        t = vals["teleporter"]
        tel = replace(
            self.base.teleporter,
            g_x=t.get("g_x", t.get("g", self.base.teleporter.g_x)),
            g_p=t.get("g_p", t.get("g", self.base.teleporter.g_p)),
            jitter_rms=t.get("jitter_rms", self.base.teleporter.jitter_rms),
            eta_out=t.get("eta_out", self.base.teleporter.eta_out),
        )
        return Setup(eprs["epr1"], eprs["epr2"], tel)


def _start_value(head: str, tail: str, base: Setup, targets: dict) -> float:
    """Closed-form guess from the targets, assuming no loss, else the base value."""

    def lin(name):
        return from_db(targets[name], reference_level(name)) if name in targets else None

    epr = getattr(base, head, None) if head != "teleporter" else None
    corr_x = {"epr1": "ref-in.x", "epr2": "A-B.x"}.get(head)
    corr_p = {"epr1": "ref+in.p", "epr2": "A+B.p"}.get(head)
    if tail in ("v_sq_x", "v_sq_p"):
        q = tail[-1]
        v = lin(corr_x if q == "x" else corr_p)
        if v is None and head == "epr2":
            t = lin(f"tel.{q}")
            v = None if t is None else max(t - VACUUM_VAR, 1e-4)
        sq = v / 2 if v is not None else (getattr(epr, tail) if epr else 0.1)
        return math.log(min(max(sq, 1e-4), 9.0))
    if tail in ("v_anti_x", "v_anti_p"):
        q = tail[-1]
        other = "p" if q == "x" else "x"
        # beam-alone V(other quadrature) = (v_anti_q + v_sq_other) / 2
        beam = lin(("ref." if head == "epr1" else "A.") + other)
        sq_q = lin(corr_x if q == "x" else corr_p)
        sq_o = lin(corr_p if q == "x" else corr_x)
        if beam is not None and sq_q is not None and sq_o is not None:
            anti = 2 * beam - sq_o / 2
            return float(np.clip(math.log(16 * anti * sq_q / 2), 1e-3, 11.0))
        return 1e-3
    if tail.startswith("eta"):
        return 0.99
    if tail == "jitter_rms":
        return max(base.teleporter.jitter_rms, 1e-3)
    if tail == "g":
        return base.teleporter.g_x
    return getattr(base.teleporter, tail)


def calibrate(
    targets: Sequence[CalTarget],
    free_params: Sequence[str],
    base: Optional[Setup] = None,
    tie_pure: bool = True,
) -> CalibrationResult:
    """Least-squares fit of model parameters to measured dB levels.

    Minimises the root-mean-square of ``model dB - target dB`` with a bounded
    Nelder-Mead search started from closed-form per-observable inversions,
    plus one extra start per free transmissivity; the best fit wins.
    Stops when the residual improves by less than 1e-10 or after 10^4
    iterations; hitting the cap raises :class:`ConvergenceError` carrying
    the best result.
    """
    targets = tuple(targets)
    free = tuple(free_params)
    if not targets:
        raise InvalidArgumentError("calibrate needs at least one target")
    if not free:
        raise InvalidArgumentError("calibrate needs at least one free parameter")
    if len(set(free)) != len(free):
        raise InvalidArgumentError("free parameters must be distinct")
    if len(targets) < len(free):
        raise InvalidArgumentError(
            f"under-determined fit: {len(targets)} targets for {len(free)} free parameters"
        )
    base = base or Setup()
    model = _Model(base, free, tie_pure)
    names = [t.observable for t in targets]
    want = np.array([t.db for t in targets])
    tdict = dict(zip(names, want))

    def model_db(z):
        s = model.setup(z)
        vals = observables(s, names)
        return np.array([to_db(vals[n], reference_level(n)) for n in names])

    def cost(z):
        try:
            return float(np.sqrt(np.mean((model_db(z) - want) ** 2)))
        except (InvalidArgumentError, ValueError):
            return 1e6

    bounds = [_bounds(tail) for _, tail in model.split]
    z0 = np.array([
        np.clip(_start_value(h, t, base, tdict), lo, hi)
        for (h, t), (lo, hi) in zip(model.split, bounds)
    ])
    # transmissivities can trade against each other (loss on one beam or the
    # other), so each free eta also gets a start from a lossy value
    starts = [z0]
    for i, (_, tail) in enumerate(model.split):
        if tail.startswith("eta"):
            alt = z0.copy()
            alt[i] = LOSSY_START
            starts.append(alt)
    best_z, best_cost, res = z0, cost(z0), None
    nit, capped = 0, False
    for start in starts:
        r = minimize(
            cost, start, method="Nelder-Mead", bounds=bounds,
            options={"maxiter": MAX_ITER, "maxfev": 20 * MAX_ITER,
                     "xatol": 1e-10, "fatol": IMPROVEMENT_TOL, "adaptive": len(free) > 2},
        )
        nit += int(r.nit)
        capped = capped or (not r.success and r.nit >= MAX_ITER)
        if r.fun < best_cost:
            best_z, best_cost, res = r.x, r.fun, r
    z = best_z
    fitted = model.setup(z)
    result = CalibrationResult(
        setup=fitted,
        free_params=free,
        targets=targets,
        model_db=tuple(float(v) for v in model_db(z)),
        residual=cost(z),
        iterations=nit,
    )
    if capped and (res is None or not res.success):
        raise ConvergenceError(f"calibration did not converge in {MAX_ITER} iterations", best=result)
    return result
