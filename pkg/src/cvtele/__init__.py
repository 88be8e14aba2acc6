"""Gaussian simulator of continuous-variable teleportation and entanglement swapping."""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    ConvergenceError,
    CVTeleError,
    InvalidArgumentError,
    NotSymplecticError,
    ScenarioError,
    UncertaintyViolationError,
    UndefinedGainError,
)
from .gaussian import (  # noqa: F401
    GaussianState,
    QuadCombination,
    SymplecticOp,
    apply_symplectic,
    beamsplitter,
    coherent,
    combination_variance,
    loss_channel,
    partial_trace,
    phase_jitter,
    rotation,
    squeezed_vacuum,
    squeezer,
    tensor,
    vacuum,
)
from .metrics import (  # noqa: F401
    duan,
    fidelity_coherent,
    fidelity_from_duan_symmetric,
    from_db,
    normalized_gain,
    to_db,
)
from .protocol import (  # noqa: F401
    EprSpec,
    MeasurementRecord,
    TeleporterConfig,
    make_epr,
    swap_scenario,
    teleport_coherent,
    teleport_exact,
    teleport_shots,
)
