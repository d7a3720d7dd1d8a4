"""Heralded N00N-superposition simulator: Fock-space states, phase-space analysis and Bell tests."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    AccuracyWarning,
    DegenerateError,
    NonConvergenceError,
    TruncationError,
    UnsupportedOrderError,
    ZeroProbabilityError,
)
from .fock import (  # noqa: E402
    ModeParams,
    PureState1,
    PureState2,
    inner,
    make_coherent,
    make_fock,
    make_squeezed_vacuum,
    make_vacuum,
    mean_photon,
    normalize,
    photon_distribution,
    tensor,
)
from .interferometer import (  # noqa: E402
    HeraldOutcome,
    beam_splitter,
    ecs_match_mean,
    ecs_state,
    psi_m_state,
    psi_state,
    subtract_photons,
)
