import numpy as np
import pytest

from cvtele import gaussian
from cvtele.gaussian import GaussianState, SymplecticOp, omega, symplectic_eigenvalues

# Every GaussianState constructed during the session is recorded here with
# its smallest symplectic eigenvalue (criterion 8 of the acceptance suite).
STATE_LOG = {"count": 0, "min_nu": np.inf, "worst": None}
# Likewise every SymplecticOp, with its largest |S^T W S - W| entry.
OP_LOG = {"count": 0, "max_err": 0.0}
CRITERIA = []

_original_post_init = GaussianState.__post_init__


def _recording_post_init(self):
    _original_post_init(self)
    nu = float(symplectic_eigenvalues(self.cov).min())
    STATE_LOG["count"] += 1
    if nu < STATE_LOG["min_nu"]:
        STATE_LOG["min_nu"] = nu
        STATE_LOG["worst"] = self


GaussianState.__post_init__ = _recording_post_init

_original_op_post_init = SymplecticOp.__post_init__


def _recording_op_post_init(self):
    _original_op_post_init(self)
    w = omega(self.n_modes)
    err = float(np.max(np.abs(self.matrix.T @ w @ self.matrix - w)))
    OP_LOG["count"] += 1
    OP_LOG["max_err"] = max(OP_LOG["max_err"], err)


SymplecticOp.__post_init__ = _recording_op_post_init


@pytest.fixture
def record_criterion():
    def record(number, ok, detail):
        CRITERIA.append((number, bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(CRITERIA, key=lambda c: c[0]):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}")
    terminalreporter.write_line(
        f"states constructed this session: {STATE_LOG['count']}, "
        f"smallest symplectic eigenvalue {STATE_LOG['min_nu']:.12f} (bound {gaussian.VACUUM_VAR} - 1e-9)"
    )
    terminalreporter.write_line(
        f"symplectic ops constructed: {OP_LOG['count']}, largest |S^T W S - W| {OP_LOG['max_err']:.3e}"
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)


def random_state(rng, n_modes, thermal=True):
    """Random physical Gaussian state: thermal modes scrambled by random optics."""
    from cvtele.gaussian import apply_symplectic, beamsplitter, rotation, squeezer, tensor

    nu = 0.25 * (1 + (rng.exponential(1.0, n_modes) if thermal else np.zeros(n_modes)))
    state = tensor([GaussianState(rng.normal(0, 1, 2), v * np.eye(2)) for v in nu])
    for _ in range(3 * n_modes):
        m = int(rng.integers(n_modes))
        state = apply_symplectic(state, rotation(rng.uniform(0, 2 * np.pi)), [m])
        state = apply_symplectic(state, squeezer(rng.uniform(-0.8, 0.8), rng.uniform(0, np.pi)), [m])
        if n_modes > 1:
            a, b = (int(k) for k in rng.choice(n_modes, 2, replace=False))
            state = apply_symplectic(state, beamsplitter(rng.uniform()), [a, b])
    return state


def pytest_configure(config):
    config.addinivalue_line("markers", "run_last: run after every other test in the session")


def pytest_collection_modifyitems(items):
    items.sort(key=lambda item: item.get_closest_marker("run_last") is not None)
