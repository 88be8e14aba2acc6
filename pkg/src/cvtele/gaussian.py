"""Multimode Gaussian states in the hbar = 1/2 quadrature convention.

Quadratures obey ``[x, p] = i/2``, so the vacuum has variance 1/4 in every
quadrature.  Vectors are ordered ``(x1, p1, x2, p2, ...)`` and the symplectic
form is block diagonal with blocks ``[[0, 1], [-1, 0]]``.

States are immutable: every operation returns a new :class:`GaussianState`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidArgumentError, NotSymplecticError, UncertaintyViolationError

VACUUM_VAR = 0.25

SYMMETRY_TOL = 1e-10
SYMPLECTIC_TOL = 1e-10
PHYSICALITY_TOL = 1e-9


def omega(n_modes: int) -> np.ndarray:
    """Symplectic form for ``n_modes`` modes in xpxp ordering."""
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def rotation_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def symplectic_eigenvalues(cov: np.ndarray) -> np.ndarray:
    """Symplectic spectrum of ``cov``, sorted ascending (one value per mode).

    With ``cov = L L^T`` the spectrum is that of the Hermitian matrix
    ``i L^T Omega L``. The result is exact for a matrix within a few ulps
    of ``cov``; for a mode squeezed to variance ``v`` that limits the
    relative accuracy to roughly ``eps / v**2``.
    """
    cov = np.asarray(cov, dtype=float)
    n = cov.shape[0] // 2
    try:
        low = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        ev = np.abs(np.linalg.eigvals(1j * omega(n) @ cov))
    else:
        ev = np.abs(np.linalg.eigvalsh(1j * (low.T @ omega(n) @ low)))
    return np.sort(ev)[::2]


def uncertainty_min_eigenvalue(cov: np.ndarray) -> float:
    """Smallest eigenvalue of ``cov + (i/4) Omega``; non-negative for physical states."""
    cov = np.asarray(cov, dtype=float)
    n = cov.shape[0] // 2
    return float(np.linalg.eigvalsh(cov + 0.25j * omega(n)).min())


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GaussianState:
    """Mean vector and covariance matrix of an N-mode Gaussian state.

    The constructor checks shape, symmetry (1e-10 per entry) and the
    uncertainty relation (1e-9 slack) and raises if any fails.
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        cov = np.asarray(self.cov, dtype=float)
        if mean.size == 0 or mean.size % 2:
            raise InvalidArgumentError(f"mean must have even non-zero length, got {mean.size}")
        if cov.shape != (mean.size, mean.size):
            raise InvalidArgumentError(f"cov shape {cov.shape} does not match mean length {mean.size}")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise InvalidArgumentError("mean and cov must be finite")
        if np.max(np.abs(cov - cov.T)) > SYMMETRY_TOL:
            raise InvalidArgumentError("cov is not symmetric")
        cov = 0.5 * (cov + cov.T)
        lam = uncertainty_min_eigenvalue(cov)
        if lam < -PHYSICALITY_TOL:
            raise UncertaintyViolationError(
                f"cov violates the uncertainty relation (min eigenvalue of cov + i*Omega/4 is {lam:.3e})"
            )
        object.__setattr__(self, "mean", _frozen(mean))
        object.__setattr__(self, "cov", _frozen(cov))

    @property
    def n_modes(self) -> int:
        return self.mean.size // 2

    def mode_cov(self, mode: int) -> np.ndarray:
        """2x2 covariance block of a single mode."""
        i = 2 * _check_mode(self, mode)
        return self.cov[i:i + 2, i:i + 2].copy()

    def symplectic_eigenvalues(self) -> np.ndarray:
        return symplectic_eigenvalues(self.cov)

    def allclose(self, other: "GaussianState", atol: float = 1e-10) -> bool:
        return (
            self.n_modes == other.n_modes
            and np.allclose(self.mean, other.mean, rtol=0, atol=atol)
            and np.allclose(self.cov, other.cov, rtol=0, atol=atol)
        )

    def __repr__(self):
        return f"GaussianState(n_modes={self.n_modes}, mean={self.mean.tolist()})"


def _check_mode(state: GaussianState, mode) -> int:
    if isinstance(mode, bool) or not isinstance(mode, (int, np.integer)):
        raise InvalidArgumentError(f"mode index must be an integer, got {mode!r}")
    if not 0 <= mode < state.n_modes:
        raise InvalidArgumentError(f"mode {mode} out of range for a {state.n_modes}-mode state")
    return int(mode)


def _check_modes(state: GaussianState, modes: Iterable[int]) -> list[int]:
    modes = [_check_mode(state, m) for m in modes]
    if len(set(modes)) != len(modes):
        raise InvalidArgumentError(f"modes must be distinct, got {modes}")
    return modes


def _quad_indices(modes: Sequence[int]) -> np.ndarray:
    return np.array([[2 * m, 2 * m + 1] for m in modes], dtype=int).reshape(-1)


# -- state preparation ------------------------------------------------------

def vacuum(n_modes: int) -> GaussianState:
    if isinstance(n_modes, bool) or not isinstance(n_modes, (int, np.integer)) or n_modes < 1:
        raise InvalidArgumentError(f"n_modes must be a positive integer, got {n_modes!r}")
    return GaussianState(np.zeros(2 * n_modes), VACUUM_VAR * np.eye(2 * n_modes))


def coherent(x: float, p: float) -> GaussianState:
    """Single-mode coherent state with quadrature means ``(x, p)``."""
    return GaussianState(np.array([x, p], dtype=float), VACUUM_VAR * np.eye(2))


def squeezed_vacuum(v_sq: float, v_anti: float, angle: float = 0.0) -> GaussianState:
    """Single-mode squeezed vacuum, possibly impure.

    ``v_sq`` is the variance along the minor axis, which sits at ``angle``
    radians from the x axis; ``v_anti`` is the variance along the major axis.
    Impure states (``v_sq * v_anti > 1/16``) model excess antisqueezing.
    """
    if not (v_sq > 0 and v_anti > 0):
        raise InvalidArgumentError(f"variances must be positive, got {v_sq}, {v_anti}")
    if v_sq * v_anti < VACUUM_VAR**2 - 1e-12:
        raise UncertaintyViolationError(
            f"v_sq * v_anti = {v_sq * v_anti:.6g} is below the minimum 1/16"
        )
    r = rotation_matrix(angle)
    return GaussianState(np.zeros(2), r @ np.diag([v_sq, v_anti]) @ r.T)


def tensor(states: Sequence[GaussianState]) -> GaussianState:
    """Block-diagonal composition of independent states, modes in list order."""
    states = list(states)
    if not states:
        raise InvalidArgumentError("tensor needs at least one state")
    mean = np.concatenate([s.mean for s in states])
    dim = mean.size
    cov = np.zeros((dim, dim))
    k = 0
    for s in states:
        d = s.mean.size
        cov[k:k + d, k:k + d] = s.cov
        k += d
    return GaussianState(mean, cov)


def partial_trace(state: GaussianState, keep: Sequence[int]) -> GaussianState:
    """Reduced state on ``keep``; the returned modes follow the order of ``keep``."""
    keep = _check_modes(state, keep)
    if not keep:
        raise InvalidArgumentError("keep must name at least one mode")
    idx = _quad_indices(keep)
    return GaussianState(state.mean[idx], state.cov[np.ix_(idx, idx)])


# -- symplectic operations --------------------------------------------------

@dataclass(frozen=True, eq=False)
class SymplecticOp:
    """Real ``2M x 2M`` symplectic matrix acting on M designated modes."""

    matrix: np.ndarray
    kind: str = "custom"

    def __post_init__(self):
        s = np.asarray(self.matrix, dtype=float)
        if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] % 2 or s.size == 0:
            raise InvalidArgumentError(f"symplectic matrix must be square with even size, got {s.shape}")
        if self.kind not in ("beamsplitter", "rotation", "squeezer", "custom"):
            raise InvalidArgumentError(f"unknown op kind {self.kind!r}")
        w = omega(s.shape[0] // 2)
        err = np.max(np.abs(s.T @ w @ s - w))
        if err > SYMPLECTIC_TOL:
            raise NotSymplecticError(f"matrix is not symplectic (max |S^T W S - W| = {err:.3e})")
        object.__setattr__(self, "matrix", _frozen(s))

    @property
    def n_modes(self) -> int:
        return self.matrix.shape[0] // 2


def beamsplitter(transmissivity: float = 0.5) -> SymplecticOp:
    """Two-mode beam splitter.

    Outputs are ``sqrt(T) a + sqrt(1-T) b`` and ``sqrt(1-T) a - sqrt(T) b``; at
    T = 1/2 these are ``(a+b)/sqrt(2)`` and ``(a-b)/sqrt(2)``.  The matrix is
    its own inverse, so applying it twice restores the input exactly.
    """
    if not 0.0 <= transmissivity <= 1.0:
        raise InvalidArgumentError(f"transmissivity must lie in [0, 1], got {transmissivity}")
    t, r = np.sqrt(transmissivity), np.sqrt(1.0 - transmissivity)
    return SymplecticOp(np.kron(np.array([[t, r], [r, -t]]), np.eye(2)), "beamsplitter")


def rotation(theta: float) -> SymplecticOp:
    """Phase-space rotation by ``theta`` (x -> x cos - p sin)."""
    return SymplecticOp(rotation_matrix(theta), "rotation")


def squeezer(r: float, angle: float = 0.0) -> SymplecticOp:
    """Single-mode squeezer: shrinks the quadrature at ``angle`` by ``exp(-r)``."""
    rot = rotation_matrix(angle)
    return SymplecticOp(rot @ np.diag([np.exp(-r), np.exp(r)]) @ rot.T, "squeezer")


def _embed(n_modes: int, modes: Sequence[int], small: np.ndarray) -> np.ndarray:
    big = np.eye(2 * n_modes)
    idx = _quad_indices(modes)
    big[np.ix_(idx, idx)] = small
    return big


def apply_symplectic(state: GaussianState, op: SymplecticOp, modes: Sequence[int]) -> GaussianState:
    """Apply ``op`` to ``modes`` of ``state``: mean -> S mean, cov -> S cov S^T."""
    if not isinstance(op, SymplecticOp):
        raise NotSymplecticError("op must be a SymplecticOp")
    modes = _check_modes(state, modes)
    if len(modes) != op.n_modes:
        raise InvalidArgumentError(f"op acts on {op.n_modes} modes but {len(modes)} were given")
    s = _embed(state.n_modes, modes, op.matrix)
    return GaussianState(s @ state.mean, s @ state.cov @ s.T)


def displace(state: GaussianState, mode: int, dx: float, dp: float) -> GaussianState:
    i = 2 * _check_mode(state, mode)
    mean = state.mean.copy()
    mean[i] += dx
    mean[i + 1] += dp
    return GaussianState(mean, state.cov)


# -- noisy channels ---------------------------------------------------------

def loss_channel(state: GaussianState, mode: int, eta: float) -> GaussianState:
    """Pure-loss channel of transmissivity ``eta`` on one mode.

    Mixes the mode with vacuum: V -> eta V + (1 - eta)/4, means and
    cross-covariances scale by sqrt(eta).
    """
    if not 0.0 <= eta <= 1.0:
        raise InvalidArgumentError(f"eta must lie in [0, 1], got {eta}")
    m = _check_mode(state, mode)
    scale = np.ones(state.mean.size)
    scale[2 * m:2 * m + 2] = np.sqrt(eta)
    cov = state.cov * np.outer(scale, scale)
    i = 2 * m
    cov[i:i + 2, i:i + 2] += (1.0 - eta) * VACUUM_VAR * np.eye(2)
    return GaussianState(state.mean * scale, cov)


def phase_jitter(state: GaussianState, mode: int, rms_theta: float) -> GaussianState:
    """Average the state over a random rotation of one mode, theta ~ N(0, rms_theta^2).

    The average is exact at the level of first and second moments:
    E[cos theta] = exp(-s^2/2), E[cos 2 theta] = exp(-2 s^2), and the odd
    moments vanish.  The result is the Gaussian state with those moments.
    """
    if not rms_theta >= 0:
        raise InvalidArgumentError(f"rms_theta must be non-negative, got {rms_theta}")
    m = _check_mode(state, mode)
    if rms_theta == 0:
        return state
    var = rms_theta**2
    c1 = np.exp(-var / 2)
    c2 = np.exp(-2 * var)
    i = 2 * m
    sl = slice(i, i + 2)

    mean = state.mean.copy()
    cov = state.cov.copy()
    mu = state.mean[sl]
    # second moment of the jittered mode, rotated and averaged
    (a, b), (_, d) = state.cov[sl, sl] + np.outer(mu, mu)
    ecc, ess = (1 + c2) / 2, (1 - c2) / 2
    second = np.array([
        [ecc * a + ess * d, c2 * b],
        [c2 * b, ess * a + ecc * d],
    ])
    mean[sl] = c1 * mu
    cov[sl, sl] = second - np.outer(mean[sl], mean[sl])
    others = np.ones(cov.shape[0], dtype=bool)
    others[sl] = False
    cov[sl, others] *= c1
    cov[others, sl] *= c1
    return GaussianState(mean, cov)


# -- linear combinations of quadratures ------------------------------------

@dataclass(frozen=True)
class QuadCombination:
    """Weighted sum of quadrature operators, e.g. ``x_A - x_B``.

    ``terms`` is a tuple of ``(mode, "x" | "p", weight)``.
    """

    terms: tuple

    def __post_init__(self):
        terms = tuple((int(m), q, float(w)) for m, q, w in self.terms)
        for m, q, _ in terms:
            if q not in ("x", "p"):
                raise InvalidArgumentError(f"quadrature selector must be 'x' or 'p', got {q!r}")
            if m < 0:
                raise InvalidArgumentError(f"negative mode index {m}")
        if not any(w != 0 for _, _, w in terms):
            raise InvalidArgumentError("combination needs at least one nonzero weight")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def x_minus(cls, i: int, j: int) -> "QuadCombination":
        return cls(((i, "x", 1.0), (j, "x", -1.0)))

    @classmethod
    def p_plus(cls, i: int, j: int) -> "QuadCombination":
        return cls(((i, "p", 1.0), (j, "p", 1.0)))

    def scaled(self, k: float) -> "QuadCombination":
        return QuadCombination(tuple((m, q, k * w) for m, q, w in self.terms))

    def vector(self, n_modes: int) -> np.ndarray:
        c = np.zeros(2 * n_modes)
        for m, q, w in self.terms:
            if m >= n_modes:
                raise InvalidArgumentError(f"mode {m} out of range for a {n_modes}-mode state")
            c[2 * m + (q == "p")] += w
        return c


def combination_variance(state: GaussianState, combo: QuadCombination) -> float:
    c = combo.vector(state.n_modes)
    return float(c @ state.cov @ c)


def combination_mean(state: GaussianState, combo: QuadCombination) -> float:
    return float(combo.vector(state.n_modes) @ state.mean)
