"""Trap and ion parameters, and the derived coupled-mode quantities.

Three ions in a linear Paul trap: the axial breathing mode (eigenvector
(1,0,-1)/sqrt(2), frequency omega_a = sqrt(3) omega_z) is coupled by the Coulomb
anharmonicity to the radial zigzag mode (eigenvector (1,-2,1)/sqrt(6), frequency
omega_b = sqrt(omega_x^2 - 12 omega_z^2 / 5)).

Internals use angular frequencies (rad/s) throughout.  Config files carry
ordinary Hz; the conversion happens exactly once, in ``load_config``.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, replace

import numpy as np
from scipy.constants import atomic_mass, electron_mass, elementary_charge, epsilon_0, hbar

# 171Yb+ (atomic mass of the neutral, minus one electron for the ion)
YB171_ION_MASS = 170.936 * atomic_mass - electron_mass

TWO_PI = 2.0 * np.pi


class TrapModelError(ValueError):
    pass


@dataclass(frozen=True)
class TrapConfig:
    """Single-ion secular frequencies (rad/s) and ion properties."""

    omega_x: float
    omega_y: float
    omega_z: float
    ion_mass: float = YB171_ION_MASS
    ion_charge: float = elementary_charge

    def __post_init__(self):
        for name in ("omega_x", "omega_y", "omega_z"):
            if getattr(self, name) <= 0:
                raise TrapModelError(f"{name} must be > 0")
        if self.ion_mass <= 0:
            raise TrapModelError("ion_mass must be > 0")
        if self.omega_x**2 <= 12 * self.omega_z**2 / 5:
            raise TrapModelError(
                "radial zigzag mode is unstable: need omega_x^2 > 12 omega_z^2 / 5, "
                f"i.e. omega_x/2pi > {np.sqrt(12 / 5) * self.omega_z / TWO_PI:.1f} Hz"
            )


@dataclass(frozen=True)
class ModePair:
    """Derived coupled-mode quantities, all in SI (rad/s, meters)."""

    omega_a: float  # axial breathing
    omega_b: float  # radial zigzag
    xi: float       # coupling strength
    x0: float       # equilibrium ion spacing
    delta: float    # two-mode detuning, delta = 2 omega_b - omega_a


def ion_spacing(cfg: TrapConfig) -> float:
    """Equilibrium distance between neighboring ions, x0 = (5 e^2 / 16 pi eps0 m wz^2)^(1/3)."""
    return (
        5 * cfg.ion_charge**2 / (16 * np.pi * epsilon_0 * cfg.ion_mass * cfg.omega_z**2)
    ) ** (1.0 / 3.0)


def coupling_strength(cfg: TrapConfig, omega_a: float, omega_b: float, x0: float) -> float:
    """Mode-mode coupling xi = 9 wz^2 sqrt(hbar / (m wa wb^2)) / (10 x0), in rad/s.

    Uses the actual omega_b; at a resonance-tuned config omega_b = omega_a / 2
    and this reduces to the on-resonance prediction.
    """
    return 9 * cfg.omega_z**2 * np.sqrt(hbar / (cfg.ion_mass * omega_a * omega_b**2)) / (10 * x0)


def mode_frequencies(cfg: TrapConfig) -> ModePair:
    """Derive (omega_a, omega_b, xi, x0, delta) from the trap configuration."""
    omega_a = np.sqrt(3.0) * cfg.omega_z
    rad_sq = cfg.omega_x**2 - 12 * cfg.omega_z**2 / 5
    if rad_sq <= 0:
        raise TrapModelError("omega_b is imaginary; increase omega_x")
    omega_b = np.sqrt(rad_sq)
    x0 = ion_spacing(cfg)
    xi = coupling_strength(cfg, omega_a, omega_b, x0)
    return ModePair(omega_a=omega_a, omega_b=omega_b, xi=xi, x0=x0, delta=2 * omega_b - omega_a)


def detune_to(cfg: TrapConfig, target_delta: float) -> TrapConfig:
    """Return a config with omega_x adjusted so delta = 2 omega_b - omega_a hits the target.

    omega_z (hence omega_a and x0) is left unchanged, mirroring the electrode
    offset tuning of the radial frequencies.
    """
    omega_a = np.sqrt(3.0) * cfg.omega_z
    omega_b = (target_delta + omega_a) / 2.0
    if omega_b <= 0:
        raise TrapModelError(
            f"target delta/2pi = {target_delta / TWO_PI:.1f} Hz unachievable; "
            f"need delta > -omega_a = -2pi x {omega_a / TWO_PI:.1f} Hz"
        )
    omega_x = np.sqrt(omega_b**2 + 12 * cfg.omega_z**2 / 5)
    return replace(cfg, omega_x=omega_x)


def paper_trap() -> TrapConfig:
    """The three-ion 171Yb+ trap: (omega_x, omega_y, omega_z)/2pi = (1042, 979, 587) kHz."""
    return TrapConfig(
        omega_x=TWO_PI * 1042e3,
        omega_y=TWO_PI * 979e3,
        omega_z=TWO_PI * 587e3,
    )


_CONFIG_KEYS = {"omega_x_hz", "omega_y_hz", "omega_z_hz", "ion_mass_u", "ion_charge_e"}


def load_config(path: str) -> TrapConfig:
    """Parse a key = value trap config (section [trap]); unknown keys are rejected."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise TrapModelError(f"config file not found: {path}")
    if set(parser.sections()) - {"trap"}:
        extra = set(parser.sections()) - {"trap"}
        raise TrapModelError(f"unknown config sections: {sorted(extra)}")
    if "trap" not in parser:
        raise TrapModelError("config file is missing the [trap] section")
    section = parser["trap"]
    unknown = set(section.keys()) - _CONFIG_KEYS
    if unknown:
        raise TrapModelError(f"unknown config keys: {sorted(unknown)}")
    for key in ("omega_x_hz", "omega_y_hz", "omega_z_hz"):
        if key not in section:
            raise TrapModelError(f"config is missing required key {key}")
    return TrapConfig(
        omega_x=TWO_PI * section.getfloat("omega_x_hz"),
        omega_y=TWO_PI * section.getfloat("omega_y_hz"),
        omega_z=TWO_PI * section.getfloat("omega_z_hz"),
        ion_mass=section.getfloat("ion_mass_u") * atomic_mass - electron_mass
        if "ion_mass_u" in section
        else YB171_ION_MASS,
        ion_charge=section.getfloat("ion_charge_e") * elementary_charge
        if "ion_charge_e" in section
        else elementary_charge,
    )
