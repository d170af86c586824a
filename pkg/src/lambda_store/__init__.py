"""Stored-light simulator for a resonant double-Λ medium.

Propagates two weak signal pulses through a cell of four-level atoms in the
moving-window frame, with spatially uniform control fields switched by tanh
ramps, and extracts exit-face peaks, photon bookkeeping and dark-state
diagnostics.
"""

from .bloch import LocalFields, ground_state, liouville_rhs, step_atoms
from .config import format_config, parse_config
from .diagnostics import (
    Peak,
    PolaritonSample,
    adiabatic_sigma_bc,
    detect_peaks,
    dressed_eigenvalues,
    nonadiabatic_mismatch,
    polariton_psi,
    polariton_velocity,
)
from .errors import (
    AdiabaticRelationError,
    ConfigError,
    LambdaStoreError,
    NoStoredCoherenceError,
    NothingReleasedError,
    NumericalInvariantError,
)
from .field import FieldState, Grid, MediumState, advance_window_step, propagate_signals
from .model import DecayRates, LevelScheme, MediumSpec, derive_dipole, derive_frequencies, paper_medium
from .pulses import ControlSchedule, ProbeSpec, PulseSchedule, SwitchEvent, control_value, probe_envelope
from .scenario import (
    ScenarioConfig,
    SimulationRecord,
    preset,
    quanta_budget,
    released_energy_split,
    run_scenario,
)

__version__ = "0.1.0"
