"""Exact simulator for linear-optics entanglement concentration on entangled coherent states."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    BranchTerm,
    CoherentStateError,
    CoherentSuperposition,
    DecoherenceError,
    DegenerateStateError,
    InvalidArgumentError,
    ShapeError,
    ToleranceConfig,
    canonicalize,
    fidelity,
    inner_product,
    mode_overlap,
    norm_squared,
    normalize,
    tensor_product,
)
from .optics import (  # noqa: E402
    SelectionOutcome,
    beam_splitter,
    beam_splitter_with_vacuum,
    discard_correlated_mode,
    project_vacuum,
    select_vacuum_branch,
    swap_modes,
)
from .protocols import (  # noqa: E402
    Ecp1Params,
    Ecp2Params,
    ProtocolReport,
    ThetaParams,
    run_ecp1,
    run_ecp2,
)
