"""Single-photon routing through an atom array bridging two waveguides."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    AtResolventPole,
    BranchOverflow,
    GARouterError,
    InsufficientResolution,
    MismatchedAtomCount,
    NonPositiveHopping,
    OutOfBand,
    PoleAtThirdState,
    SingularSystem,
    TooFewSites,
    ValidationError,
)
from .model import AsymmetricParams, ModelParams, validate  # noqa: E402
from .scattering import sa_amplitudes, scatter  # noqa: E402
from .oracle import compare_with_closed_form, solve_direct  # noqa: E402
