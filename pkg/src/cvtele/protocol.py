"""EPR resources and the unity-gain teleportation protocol.

Deriving the output map
-----------------------
Alice mixes the input with her EPR beam A on a half beam splitter and
homodynes ``x_u = (x_in - x_A)/sqrt(2)`` and ``p_v = (p_in + p_A)/sqrt(2)``.
Before her measurement Bob's beam can be written identically as::

    x_B = x_in - (x_A - x_B) - sqrt(2) x_u
    p_B = p_in + (p_A + p_B) - sqrt(2) p_v

Bob then displaces by ``sqrt(2) g x_u`` and ``sqrt(2) g p_v``.  Because the
displacement is linear in the outcomes, the unconditional output is the
operator identity::

    x_out = x_B + sqrt(2) g_x x_u = g_x x_in + x_B - g_x x_A
    p_out = p_B + sqrt(2) g_p p_v = g_p p_in + p_B + g_p p_A

so the exact mode never conditions on outcomes: it applies this linear map to
the joint mean and covariance.  At unity gain the output is the input plus
the resource's ``x_A - x_B`` and ``p_A + p_B`` noise.

:func:`teleport_shots` performs the explicit measure-then-displace sequence
shot by shot and converges to the same moments.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import InvalidArgumentError
from .gaussian import (
    VACUUM_VAR,
    GaussianState,
    beamsplitter,
    coherent,
    loss_channel,
    phase_jitter,
    tensor,
)

SQRT2 = math.sqrt(2.0)

#: ulps of the largest variance added to a fresh EPR pair, see make_epr
ROUNDING_GUARD = 4.0

#: shots per independently seeded block in :func:`teleport_shots`
SHOT_BLOCK = 8192


@dataclass(frozen=True)
class EprSpec:
    """Two squeezed inputs and per-beam transmissivities of one EPR source.

    The x-squeezed OPO output sets ``V(x_A - x_B) = 2 v_sq_x`` and the
    p-squeezed one sets ``V(p_A + p_B) = 2 v_sq_p`` (before loss).
    """

    v_sq_x: float
    v_anti_x: float
    v_sq_p: float
    v_anti_p: float
    eta_a: float = 1.0
    eta_b: float = 1.0

    def __post_init__(self):
        for name in ("v_sq_x", "v_anti_x", "v_sq_p", "v_anti_p"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise InvalidArgumentError(f"{name} must be a positive finite number, got {v!r}")
        for q in ("x", "p"):
            prod = getattr(self, f"v_sq_{q}") * getattr(self, f"v_anti_{q}")
            if prod < VACUUM_VAR**2 - 1e-12:
                raise InvalidArgumentError(
                    f"{q}-squeezer violates the uncertainty product: {prod:.6g} < 1/16"
                )
        for name in ("eta_a", "eta_b"):
            eta = getattr(self, name)
            if not 0.0 <= eta <= 1.0:
                raise InvalidArgumentError(f"{name} must lie in [0, 1], got {eta}")

    @classmethod
    def pure(cls, v_sq_x: float, v_sq_p: Optional[float] = None, eta: float = 1.0) -> "EprSpec":
        """Minimum-uncertainty squeezers with a symmetric loss on both beams."""
        if v_sq_p is None:
            v_sq_p = v_sq_x
        return cls(v_sq_x, VACUUM_VAR**2 / v_sq_x, v_sq_p, VACUUM_VAR**2 / v_sq_p, eta, eta)

    @classmethod
    def symmetric(cls, delta: float) -> "EprSpec":
        """Lossless pure resource with inseparability sum ``delta`` split evenly."""
        if not delta > 0:
            raise InvalidArgumentError(f"delta must be positive, got {delta}")
        return cls.pure(delta / 4)

    @classmethod
    def vacuum(cls) -> "EprSpec":
        """No squeezing: the two beams are independent vacua."""
        return cls.pure(VACUUM_VAR)

    @property
    def lossless_delta(self) -> float:
        return 2 * (self.v_sq_x + self.v_sq_p)


@dataclass(frozen=True)
class TeleporterConfig:
    """Feedforward gains, residual phase jitter and the EPR resource.

    ``jitter_rms`` is applied independently to both resource beams right
    before the Bell measurement.  ``eta_out`` is an optional loss on Bob's
    displaced output (the 99/1 combiner), 1 by default.
    """

    epr: Optional[EprSpec] = None
    g_x: float = 1.0
    g_p: float = 1.0
    jitter_rms: float = 0.0
    eta_out: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.g_x) and math.isfinite(self.g_p)):
            raise InvalidArgumentError("gains must be finite")
        if not self.jitter_rms >= 0:
            raise InvalidArgumentError(f"jitter_rms must be non-negative, got {self.jitter_rms}")
        if not 0.0 <= self.eta_out <= 1.0:
            raise InvalidArgumentError(f"eta_out must lie in [0, 1], got {self.eta_out}")

    def with_gain(self, g: float) -> "TeleporterConfig":
        return replace(self, g_x=g, g_p=g)


@dataclass(frozen=True)
class BellOutcome:
    x_u: float
    p_v: float


@dataclass(frozen=True, eq=False)
class MeasurementRecord:
    """Per-shot Bell outcomes and output quadrature samples.

    Arrays are stored column-wise; ``spectators`` has one ``(x, p)`` column
    pair per spectator mode.  ``outputs`` holds the same samples laid out like
    the state returned by :func:`teleport_exact`.
    """

    x_u: np.ndarray
    p_v: np.ndarray
    x_out: np.ndarray
    p_out: np.ndarray
    spectators: np.ndarray
    outputs: np.ndarray
    seed: int

    def __len__(self):
        return self.x_u.size

    @property
    def shots(self) -> Iterator[tuple[BellOutcome, float, float]]:
        for xu, pv, xo, po in zip(self.x_u, self.p_v, self.x_out, self.p_out):
            yield BellOutcome(float(xu), float(pv)), float(xo), float(po)

    def identical_to(self, other: "MeasurementRecord") -> bool:
        return self.seed == other.seed and all(
            np.array_equal(getattr(self, k), getattr(other, k))
            for k in ("x_u", "p_v", "x_out", "p_out", "spectators")
        )


def make_epr(spec: EprSpec) -> GaussianState:
    """Two-mode EPR state (A, B) from squeezed vacua on a half beam splitter.

    The p-squeezed vacuum enters port a and the x-squeezed one port b, so
    with outputs ``A = (a+b)/sqrt(2)``, ``B = (a-b)/sqrt(2)`` one gets
    ``x_A - x_B = sqrt(2) x_b`` and ``p_A + p_B = sqrt(2) p_a``.
    """
    if not isinstance(spec, EprSpec):
        raise InvalidArgumentError("make_epr needs an EprSpec")
    pair = np.diag([spec.v_anti_p, spec.v_sq_p, spec.v_sq_x, spec.v_anti_x])
    bs = beamsplitter(0.5).matrix
    cov = bs @ pair @ bs.T
    # The correlations live in differences of entries of size ~v_anti, so
    # rounding can leave the product just below the uncertainty bound for
    # very strong squeezing.  A few ulps of extra variance make the rounding
    # err on the mixed side.
    cov += ROUNDING_GUARD * np.finfo(float).eps * float(np.max(np.diag(cov))) * np.eye(4)
    state = GaussianState(np.zeros(4), cov)
    state = loss_channel(state, 0, spec.eta_a)
    return loss_channel(state, 1, spec.eta_b)


def _check_roles(joint: GaussianState, in_mode: int, a_mode: int, b_mode: int) -> None:
    roles = (in_mode, a_mode, b_mode)
    for m in roles:
        if isinstance(m, bool) or not isinstance(m, (int, np.integer)) or not 0 <= m < joint.n_modes:
            raise InvalidArgumentError(f"mode {m!r} is not valid for a {joint.n_modes}-mode state")
    if len(set(roles)) != 3:
        raise InvalidArgumentError(f"in, A and B modes must be distinct, got {roles}")


def _jittered(joint: GaussianState, a_mode: int, b_mode: int, cfg: TeleporterConfig) -> GaussianState:
    if cfg.jitter_rms > 0:
        joint = phase_jitter(joint, a_mode, cfg.jitter_rms)
        joint = phase_jitter(joint, b_mode, cfg.jitter_rms)
    return joint


def _output_map(n_modes: int, in_mode: int, a_mode: int, b_mode: int, cfg: TeleporterConfig):
    """Linear map from the joint quadratures to the post-teleportation modes.

    Returns ``(T, kept)`` where ``kept`` lists the original mode index of each
    output mode; Bob's mode keeps its slot and becomes the output.
    """
    kept = [m for m in range(n_modes) if m not in (in_mode, a_mode)]
    t = np.zeros((2 * len(kept), 2 * n_modes))
    for row, m in enumerate(kept):
        t[2 * row, 2 * m] = 1.0
        t[2 * row + 1, 2 * m + 1] = 1.0
        if m == b_mode:
            t[2 * row, 2 * in_mode] += cfg.g_x
            t[2 * row, 2 * a_mode] -= cfg.g_x
            t[2 * row + 1, 2 * in_mode + 1] += cfg.g_p
            t[2 * row + 1, 2 * a_mode + 1] += cfg.g_p
    return t, kept


def teleport_exact(
    joint: GaussianState, in_mode: int, a_mode: int, b_mode: int, cfg: TeleporterConfig
) -> GaussianState:
    """Teleport ``in_mode`` onto ``b_mode`` using the resource (a_mode, b_mode).

    The input and Alice's beam are consumed by the homodyne detectors and
    dropped; every other mode keeps its relative order, and Bob's slot
    holds the output.  Correlations between spectators and the output are
    propagated exactly.
    """
    _check_roles(joint, in_mode, a_mode, b_mode)
    joint = _jittered(joint, a_mode, b_mode, cfg)
    t, kept = _output_map(joint.n_modes, in_mode, a_mode, b_mode, cfg)
    out = GaussianState(t @ joint.mean, t @ joint.cov @ t.T)
    if cfg.eta_out < 1.0:
        out = loss_channel(out, kept.index(b_mode), cfg.eta_out)
    return out


def _psd_sqrt(cov: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(cov)
    return v * np.sqrt(np.clip(w, 0.0, None))


def teleport_shots(
    joint: GaussianState,
    in_mode: int,
    a_mode: int,
    b_mode: int,
    cfg: TeleporterConfig,
    n_shots: int,
    seed: int = 0,
    workers: int = 1,
) -> MeasurementRecord:
    """Monte-Carlo teleportation: sample Bell outcomes, condition Bob, displace.

    Per shot, ``(x_u, p_v)`` is drawn from its Gaussian marginal, the
    remaining modes from the Gaussian conditioned on that outcome, and Bob's
    mode is displaced by ``sqrt(2) g`` times the outcome.

    Shots are generated in blocks of :data:`SHOT_BLOCK`, each with its own
    child of ``SeedSequence(seed)``, so the record is bit-identical for any
    ``workers`` count.
    """
    if isinstance(n_shots, bool) or not isinstance(n_shots, (int, np.integer)) or n_shots < 1:
        raise InvalidArgumentError(f"n_shots must be a positive integer, got {n_shots!r}")
    if workers < 1:
        raise InvalidArgumentError(f"workers must be positive, got {workers}")
    _check_roles(joint, in_mode, a_mode, b_mode)
    joint = _jittered(joint, a_mode, b_mode, cfg)
    n = joint.n_modes
    spect = [m for m in range(n) if m not in (in_mode, a_mode, b_mode)]

    # rows: x_u, p_v, x_B, p_B, then spectator quadratures
    lin = np.zeros((4 + 2 * len(spect), 2 * n))
    lin[0, 2 * in_mode] = 1 / SQRT2
    lin[0, 2 * a_mode] = -1 / SQRT2
    lin[1, 2 * in_mode + 1] = 1 / SQRT2
    lin[1, 2 * a_mode + 1] = 1 / SQRT2
    lin[2, 2 * b_mode] = 1.0
    lin[3, 2 * b_mode + 1] = 1.0
    for k, m in enumerate(spect):
        lin[4 + 2 * k, 2 * m] = 1.0
        lin[5 + 2 * k, 2 * m + 1] = 1.0
    mu = lin @ joint.mean
    sig = lin @ joint.cov @ lin.T

    mu_m, mu_y = mu[:2], mu[2:]
    s_mm, s_ym, s_yy = sig[:2, :2], sig[2:, :2], sig[2:, 2:]
    gain_k = s_ym @ np.linalg.pinv(s_mm)
    root_m = _psd_sqrt(s_mm)
    root_y = _psd_sqrt(s_yy - gain_k @ s_ym.T)
    disp = SQRT2 * np.array([cfg.g_x, cfg.g_p])
    eta = cfg.eta_out
    dim_y = mu_y.size

    def block(args):
        size, child = args
        rng = np.random.default_rng(child)
        z = rng.standard_normal((size, 2 + dim_y + 2))
        m = mu_m + z[:, :2] @ root_m.T
        y = mu_y + (m - mu_m) @ gain_k.T + z[:, 2:2 + dim_y] @ root_y.T
        y[:, :2] += m * disp
        if eta < 1.0:
            y[:, :2] = math.sqrt(eta) * y[:, :2] + math.sqrt((1 - eta) * VACUUM_VAR) * z[:, -2:]
        return m, y

    n_blocks = -(-n_shots // SHOT_BLOCK)
    sizes = [min(SHOT_BLOCK, n_shots - b * SHOT_BLOCK) for b in range(n_blocks)]
    children = np.random.SeedSequence(seed).spawn(n_blocks)
    jobs = list(zip(sizes, children))
    if workers == 1 or n_blocks == 1:
        parts = [block(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(block, jobs))
    m = np.concatenate([p[0] for p in parts])
    y = np.concatenate([p[1] for p in parts])

    # reassemble the output state layout: spectators and Bob in original order
    kept = [mm for mm in range(n) if mm not in (in_mode, a_mode)]
    cols = []
    for mm in kept:
        k = 0 if mm == b_mode else 2 + 2 * spect.index(mm)
        cols.extend([k, k + 1])
    return MeasurementRecord(
        x_u=m[:, 0], p_v=m[:, 1], x_out=y[:, 0], p_out=y[:, 1],
        spectators=y[:, 2:], outputs=y[:, cols], seed=seed,
    )


def teleport_coherent(mean, cfg: TeleporterConfig) -> GaussianState:
    """Teleport a coherent state with quadrature means ``mean`` through ``cfg.epr``."""
    if cfg.epr is None:
        raise InvalidArgumentError("TeleporterConfig.epr is required")
    joint = tensor([coherent(*mean), make_epr(cfg.epr)])
    return teleport_exact(joint, 0, 1, 2, cfg)


def swap_joint(epr1: EprSpec, epr2: EprSpec) -> GaussianState:
    """Four-mode state (ref, in, A, B) before the swap."""
    return tensor([make_epr(epr1), make_epr(epr2)])


def swap_scenario(epr1: EprSpec, epr2: Optional[EprSpec], cfg: TeleporterConfig) -> GaussianState:
    """Entanglement swapping: teleport the input half of EPR1 with EPR2.

    EPR1's beam A is kept as the reference and beam B is the input.  Returns
    the two-mode ``(ref, out)`` state.  ``epr2`` falls back to ``cfg.epr``.
    """
    epr2 = epr2 if epr2 is not None else cfg.epr
    if epr2 is None:
        raise InvalidArgumentError("swap_scenario needs an EPR2 resource")
    return teleport_exact(swap_joint(epr1, epr2), 1, 2, 3, cfg)


def empirical_moments(samples: np.ndarray):
    """Sample mean, covariance and the standard errors of the mean and variances."""
    samples = np.asarray(samples, dtype=float)
    n = samples.shape[0]
    mean = samples.mean(axis=0)
    cov = np.cov(samples, rowvar=False, ddof=1).reshape(samples.shape[1], samples.shape[1])
    var = np.diag(cov)
    centred = samples - mean
    m4 = (centred**4).mean(axis=0)
    se_mean = np.sqrt(var / n)
    se_var = np.sqrt(np.clip(m4 - var**2, 0, None) / n)
    return mean, cov, se_mean, se_var


def combination_samples(samples: np.ndarray, weights: Sequence[float]) -> np.ndarray:
    return np.asarray(samples) @ np.asarray(weights, dtype=float)
