"""Figures of merit: coherent-state fidelity, inseparability sum, gains, dB levels."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidArgumentError, UndefinedGainError
from .gaussian import VACUUM_VAR, GaussianState, QuadCombination, combination_variance

#: reference level for a single quadrature of the vacuum
SINGLE_REF = VACUUM_VAR
#: reference level for a two-mode sum/difference over two vacua
PAIR_REF = 2 * VACUUM_VAR

CLASSICAL_LIMIT = 0.5
NO_CLONING_LIMIT = 2.0 / 3.0


@dataclass(frozen=True)
class FidelityResult:
    sigma_x: float
    sigma_p: float
    fidelity: float
    #: False when the fidelity was evaluated for non-unity gains; the
    #: variance formula then overstates the phase-space averaged fidelity.
    unity_gain: bool = True


@dataclass(frozen=True)
class DuanResult:
    v_x_minus: float
    v_p_plus: float
    delta: float
    entangled: bool
    below_half: bool


def fidelity_coherent(sigma_x: float, sigma_p: float, gains=(1.0, 1.0)) -> FidelityResult:
    """Fidelity of a teleported coherent state from its output variances.

    Valid at unity gain, where the output mean equals the input mean and the
    overlap depends on the variances only.  ``gains`` is recorded so callers
    can tell whether that assumption held.
    """
    if not (sigma_x > 0 and sigma_p > 0):
        raise InvalidArgumentError(f"variances must be positive, got {sigma_x}, {sigma_p}")
    f = 2.0 / math.sqrt((1 + 4 * sigma_x) * (1 + 4 * sigma_p))
    unity = bool(gains[0] == 1.0 and gains[1] == 1.0)
    return FidelityResult(float(sigma_x), float(sigma_p), f, unity)


def fidelity_from_duan_symmetric(delta: float) -> float:
    """Lossless-teleporter fidelity for a resource whose inseparability sum
    ``delta`` splits evenly between the two quadratures."""
    if not delta >= 0:
        raise InvalidArgumentError(f"delta must be non-negative, got {delta}")
    sigma = VACUUM_VAR + delta / 2
    return fidelity_coherent(sigma, sigma).fidelity


def duan(state: GaussianState, i: int, j: int) -> DuanResult:
    """Inseparability sum V(x_i - x_j) + V(p_i + p_j) from the exact covariance."""
    if i == j:
        raise InvalidArgumentError("duan needs two different modes")
    for m in (i, j):
        if not 0 <= m < state.n_modes:
            raise InvalidArgumentError(f"mode {m} out of range for a {state.n_modes}-mode state")
    vx = combination_variance(state, QuadCombination.x_minus(i, j))
    vp = combination_variance(state, QuadCombination.p_plus(i, j))
    delta = vx + vp
    return DuanResult(vx, vp, delta, delta < 1.0, delta < 0.5)


def normalized_gain(in_mean, out_mean) -> tuple[float, float]:
    """Per-quadrature ratio of output to input mean."""
    gains = []
    for q, a, b in zip("xp", in_mean, out_mean):
        if a == 0:
            raise UndefinedGainError(f"gain in {q} is undefined for a zero input mean")
        gains.append(b / a)
    return gains[0], gains[1]


def to_db(v: float, v_ref: float) -> float:
    if not (v > 0 and v_ref > 0):
        raise InvalidArgumentError(f"dB conversion needs positive values, got {v}, {v_ref}")
    return 10.0 * math.log10(v / v_ref)


def from_db(db: float, v_ref: float) -> float:
    if not v_ref > 0:
        raise InvalidArgumentError(f"reference level must be positive, got {v_ref}")
    if not math.isfinite(db):
        raise InvalidArgumentError(f"dB value must be finite, got {db}")
    return v_ref * 10.0 ** (db / 10.0)
