"""Bell nonlocality of entangled coherent states under amplitude damping.

Closed-form phase-space and two-qubit Bell measures, a multi-start settings
optimizer, and a truncated Fock-basis oracle that checks every closed form.
"""

from .coherent import (CoherentDyad, DyadSum, EcsSpec, build_ecs_state, canonicalize,
                       coherent_overlap, ecs_normalization)
from .decoherence import DecoherenceClock, clock_from_r, damp_state
from .errors import (ConsistencyError, DegenerateStateError, EcsError, OptimizationError,
                     TruncationError, ValidationError)
from .optimize import SearchConfig, SettingsLayout, maximize, sweep
from .parity import (CIRELSON, PhaseSpaceSettings, bell_measure, bw_restricted_bell,
                     parity_expectation, wigner)
from .qubit import bmax_closed_form, horodecki_bmax, rho_minus_matrix

__version__ = "0.1.0"

__all__ = [
    "CIRELSON", "CoherentDyad", "ConsistencyError", "DecoherenceClock", "DegenerateStateError",
    "DyadSum", "EcsError", "EcsSpec", "OptimizationError", "PhaseSpaceSettings", "SearchConfig",
    "SettingsLayout", "TruncationError", "ValidationError", "bell_measure", "bmax_closed_form",
    "build_ecs_state", "bw_restricted_bell", "canonicalize", "clock_from_r", "coherent_overlap",
    "damp_state", "ecs_normalization", "horodecki_bmax", "maximize", "parity_expectation",
    "rho_minus_matrix", "sweep", "wigner",
]
