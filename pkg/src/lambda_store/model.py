"""Unit system, level scheme and medium parameters (Hartree atomic units)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy.constants import physical_constants

# ħ = e = mₑ = 1; c = 1/α; ε₀ = 1/(4π)
ALPHA = physical_constants["fine-structure constant"][0]
C = 1.0 / ALPHA
EPS0 = 1.0 / (4.0 * math.pi)
HBAR = 1.0

BOHR_M = physical_constants["atomic unit of length"][0]
AU_TIME_S = physical_constants["atomic unit of time"][0]


@dataclass(frozen=True)
class Constants:
    c: float = C
    eps0: float = EPS0
    hbar: float = HBAR

    def __post_init__(self):
        if not (self.c > 0 and self.eps0 > 0):
            raise ValueError("c and eps0 must be positive")
        if self.hbar != 1.0:
            raise ValueError("atomic units require hbar == 1")


CONSTANTS = Constants()


def length_to_mm(x_au):
    return x_au * BOHR_M * 1e3


def density_to_per_cm3(n_au):
    return n_au / (BOHR_M * 100.0) ** 3


def time_to_us(t_au):
    return t_au * AU_TIME_S * 1e6


@dataclass(frozen=True)
class LevelScheme:
    """Energies of the double-Λ levels; b, c lower (metastable), a, d upper."""

    E_a: float
    E_b: float
    E_c: float
    E_d: float

    def __post_init__(self):
        if not (self.E_b < self.E_c < self.E_a < self.E_d):
            raise ValueError(
                "level ordering must be E_b < E_c < E_a < E_d, got "
                f"E_a={self.E_a}, E_b={self.E_b}, E_c={self.E_c}, E_d={self.E_d}"
            )


@dataclass(frozen=True)
class DecayRates:
    """Partial spontaneous-emission rates, one per optical channel."""

    gamma_ab: float
    gamma_ac: float
    gamma_db: float
    gamma_dc: float

    def __post_init__(self):
        for name in ("gamma_ab", "gamma_ac", "gamma_db", "gamma_dc"):
            v = getattr(self, name)
            if not (v >= 0.0 and math.isfinite(v)):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")

    @property
    def total_a(self):
        return self.gamma_ab + self.gamma_ac

    @property
    def total_d(self):
        return self.gamma_db + self.gamma_dc


def derive_frequencies(levels: LevelScheme) -> tuple[float, float, float, float]:
    """Resonant angular frequencies (ω₁, ω₂, ω₃, ω₄) of the four couplings."""
    if not isinstance(levels, LevelScheme):
        levels = LevelScheme(*levels)
    return (
        levels.E_a - levels.E_b,
        levels.E_a - levels.E_c,
        levels.E_d - levels.E_b,
        levels.E_d - levels.E_c,
    )


def derive_dipole(gamma: float, omega: float) -> float:
    """Transition dipole from a single-channel spontaneous rate.

    Inverts Γ = (4/3) α³ ω³ d².
    """
    if not (gamma > 0 and omega > 0):
        raise ValueError(f"gamma and omega must be positive, got gamma={gamma}, omega={omega}")
    return math.sqrt(3.0 * gamma / (4.0 * ALPHA**3 * omega**3))


@dataclass(frozen=True)
class MediumSpec:
    """Everything the dynamics needs to know about the atomic sample.

    Dipoles are derived from the decay rates unless given explicitly, which
    is how a relaxation-free variant with the same couplings is built.
    """

    levels: LevelScheme
    decays: DecayRates
    N: float
    L: float
    d1: float | None = None
    d2: float | None = None
    d3: float | None = None
    d4: float | None = None
    omega1: float = field(init=False)
    omega2: float = field(init=False)
    omega3: float = field(init=False)
    omega4: float = field(init=False)

    def __post_init__(self):
        if not (self.N > 0 and math.isfinite(self.N)):
            raise ValueError(f"N must be positive, got {self.N}")
        if not (self.L > 0 and math.isfinite(self.L)):
            raise ValueError(f"L must be positive, got {self.L}")
        omegas = derive_frequencies(self.levels)
        for k, w in enumerate(omegas, start=1):
            object.__setattr__(self, f"omega{k}", w)
        gammas = (
            self.decays.gamma_ab,
            self.decays.gamma_ac,
            self.decays.gamma_db,
            self.decays.gamma_dc,
        )
        for k, (g, w) in enumerate(zip(gammas, omegas), start=1):
            name = f"d{k}"
            d = getattr(self, name)
            if d is None:
                d = derive_dipole(g, w)
            elif not (d > 0 and math.isfinite(d)):
                raise ValueError(f"{name} must be positive, got {d}")
            object.__setattr__(self, name, float(d))

    @property
    def dipoles(self):
        return (self.d1, self.d2, self.d3, self.d4)

    @property
    def omegas(self):
        return (self.omega1, self.omega2, self.omega3, self.omega4)

    @property
    def kappa1(self):
        """Coupling constant of the ε₁ propagation equation, N d₁ ω₁/(ε₀ c)."""
        return self.N * self.d1 * self.omega1 / (EPS0 * C)

    @property
    def kappa3(self):
        return self.N * self.d3 * self.omega3 / (EPS0 * C)

    def with_decays(self, decays: DecayRates) -> "MediumSpec":
        """Same levels, density, length and dipoles; different relaxation."""
        return MediumSpec(self.levels, decays, self.N, self.L, *self.dipoles)


DEFAULT_GAMMA = 2.4e-9


def paper_medium() -> MediumSpec:
    return MediumSpec(
        levels=LevelScheme(E_a=-0.10, E_b=-0.20, E_c=-0.18, E_d=-0.05),
        decays=DecayRates(DEFAULT_GAMMA, DEFAULT_GAMMA, DEFAULT_GAMMA, DEFAULT_GAMMA),
        N=3e-13,
        L=3e7,
    )
