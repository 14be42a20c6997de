"""Physical constants, trap/gas parameters, the harmonic mode lattice and thermal scales.

Unit convention used throughout the package: chemical potentials are angular
frequencies in rad/s, so every Boltzmann-type exponent is written ``beta*hbar*mu``
and phases are ``Re(mu) * t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.constants as const

__all__ = [
    "HBAR",
    "KB",
    "ZETA3",
    "PhysicalConstants",
    "CONSTANTS",
    "TrapConfig",
    "GasParams",
    "ModeSpectrum",
    "ThermalScales",
    "DomainError",
    "EmptySpectrumError",
    "mode_energies",
    "thermal_scales",
    "default_cutoff",
]

HBAR = const.hbar
KB = const.k
ZETA3 = 1.2020569031595943

# relative tolerance of the isotropy predicate
_ISO_RTOL = 1e-12


class DomainError(ValueError):
    """An input lies outside the physical domain of an operation."""


class EmptySpectrumError(ValueError):
    """The energy cutoff admits no modes."""


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = HBAR
    kB: float = KB


CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class TrapConfig:
    """Angular trap frequencies in rad/s."""

    omega_x: float
    omega_y: float
    omega_z: float

    def __post_init__(self):
        for name in ("omega_x", "omega_y", "omega_z"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be a positive finite frequency, got {value!r}")

    @classmethod
    def isotropic(cls, omega: float) -> "TrapConfig":
        return cls(omega, omega, omega)

    @classmethod
    def from_hz(cls, fx: float, fy: float | None = None, fz: float | None = None) -> "TrapConfig":
        """Build from ordinary frequencies in Hz (``omega = 2*pi*f``)."""
        fy = fx if fy is None else fy
        fz = fx if fz is None else fz
        return cls(2 * math.pi * fx, 2 * math.pi * fy, 2 * math.pi * fz)

    @property
    def omegas(self) -> np.ndarray:
        return np.array([self.omega_x, self.omega_y, self.omega_z])

    @property
    def omega_min(self) -> float:
        return min(self.omega_x, self.omega_y, self.omega_z)

    @property
    def omega_geometric_mean(self) -> float:
        return (self.omega_x * self.omega_y * self.omega_z) ** (1.0 / 3.0)

    @property
    def is_isotropic(self) -> bool:
        w = self.omegas
        return bool(np.all(np.abs(w - w[0]) <= _ISO_RTOL * np.max(w)))


@dataclass(frozen=True)
class GasParams:
    """Mean atom number, temperature (K) and width of the Gaussian atom-number draw."""

    n_mean: float
    temperature: float
    n_sigma: float = 0.0

    def __post_init__(self):
        if not (self.n_mean >= 1):
            raise DomainError(f"n_mean must be >= 1, got {self.n_mean!r}")
        if not (self.temperature > 0):
            raise DomainError(f"temperature must be > 0, got {self.temperature!r}")
        if not (self.n_sigma >= 0):
            raise DomainError(f"n_sigma must be >= 0, got {self.n_sigma!r}")


@dataclass(frozen=True, eq=False)
class ModeSpectrum:
    """Harmonic-oscillator modes below an energy cutoff.

    ``indices`` is an ``(n, 3)`` integer array of ``(kx, ky, kz)`` and
    ``energies`` the matching single-particle energies in joules, sorted
    ascending with lexicographic tie-breaking on the index.
    """

    indices: np.ndarray
    energies: np.ndarray
    cutoff: float
    includes_ground: bool

    def __post_init__(self):
        self.indices.setflags(write=False)
        self.energies.setflags(write=False)

    def __len__(self) -> int:
        return len(self.energies)

    def __iter__(self):
        for k, e in zip(self.indices, self.energies):
            yield (int(k[0]), int(k[1]), int(k[2])), float(e)


@dataclass(frozen=True)
class ThermalScales:
    """Inverse temperature ``beta`` (1/J), coherence time ``tau = beta*hbar`` (s)
    and, when a trap is given, the per-axis ``beta*hbar*omega``."""

    temperature: float
    beta: float
    tau: float
    beta_hbar_omega: np.ndarray | None = field(default=None, compare=False)


def _lattice(omegas: np.ndarray, emax: float) -> tuple[np.ndarray, np.ndarray]:
    """All (kx, ky, kz) >= 0 with hbar*(k.omega) <= emax, unsorted.

    Energies are computed in units of hbar (rad/s) and converted once, so the
    result is exactly ``hbar * (kx*wx + ky*wy + kz*wz)``.
    """
    wx, wy, wz = omegas
    cap = emax / HBAR
    # small slack so that modes sitting exactly on the cutoff are not lost to rounding
    slack = 1e-12 * cap
    chunks = []
    for kx in range(int(math.floor((cap + slack) / wx)) + 1):
        rx = cap - kx * wx
        ky = np.arange(int(math.floor((rx + slack) / wy)) + 1)
        nz = np.floor((rx - ky * wy + slack) / wz).astype(np.int64) + 1
        nz = np.maximum(nz, 0)
        total = int(nz.sum())
        if total == 0:
            continue
        kys = np.repeat(ky, nz)
        # kz runs 0..nz-1 inside each ky block
        starts = np.repeat(np.cumsum(nz) - nz, nz)
        kzs = np.arange(total) - starts
        block = np.empty((total, 3), dtype=np.int64)
        block[:, 0] = kx
        block[:, 1] = kys
        block[:, 2] = kzs
        chunks.append(block)
    if not chunks:
        return np.empty((0, 3), dtype=np.int64), np.empty(0)
    idx = np.concatenate(chunks)
    freq = idx[:, 0] * wx + idx[:, 1] * wy + idx[:, 2] * wz
    keep = freq <= cap + slack
    idx = idx[keep]
    return idx, HBAR * (idx[:, 0] * wx + idx[:, 1] * wy + idx[:, 2] * wz)


def mode_energies(trap: TrapConfig, cutoff: float, include_ground: bool = False,
                  *, sort: bool = True) -> ModeSpectrum:
    """Enumerate the single-particle lattice ``hbar*(kx*wx + ky*wy + kz*wz) <= cutoff``.

    Parameters
    ----------
    trap : TrapConfig
    cutoff : float
        Energy cutoff in joules, inclusive.
    include_ground : bool
        Keep the ``k = (0, 0, 0)`` state (energy 0).
    sort : bool
        Sort ascending by energy, ties broken lexicographically by index.
        Disabling it is only useful for large oracle sums where order is
        irrelevant.

    Raises
    ------
    DomainError
        If ``cutoff <= 0``.
    EmptySpectrumError
        If no mode qualifies.
    """
    if not (cutoff > 0):
        raise DomainError(f"cutoff must be > 0, got {cutoff!r}")
    idx, energies = _lattice(trap.omegas, cutoff)
    if not include_ground:
        nonzero = np.any(idx != 0, axis=1)
        idx, energies = idx[nonzero], energies[nonzero]
    if len(energies) == 0:
        raise EmptySpectrumError(
            f"no modes with energy <= {cutoff:.6g} J (lowest excitation {HBAR * trap.omega_min:.6g} J)"
        )
    if sort:
        order = np.lexsort((idx[:, 2], idx[:, 1], idx[:, 0], energies))
        idx, energies = idx[order], energies[order]
    return ModeSpectrum(np.ascontiguousarray(idx), np.ascontiguousarray(energies), float(cutoff), include_ground)


def thermal_scales(T: float, trap: TrapConfig | None = None) -> ThermalScales:
    """Thermal scales at temperature ``T`` (K): ``beta``, ``tau = beta*hbar``.

    >>> round(thermal_scales(10e-9).tau, 10)
    0.0007638233
    """
    if not (T > 0 and np.isfinite(T)):
        raise DomainError(f"temperature must be > 0, got {T!r}")
    beta = 1.0 / (KB * T)
    bho = None if trap is None else beta * HBAR * trap.omegas
    return ThermalScales(temperature=T, beta=beta, tau=beta * HBAR, beta_hbar_omega=bho)


def default_cutoff(T: float, factor: float = 12.0) -> float:
    """Default mode cutoff ``factor * kB * T`` in joules."""
    return factor * KB * T
