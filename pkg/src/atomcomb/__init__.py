"""Monte-Carlo frequency-comb spectra of a thermal Bose gas in a harmonic trap."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    DomainError,
    EmptySpectrumError,
    GasParams,
    ModeSpectrum,
    PhysicalConstants,
    ThermalScales,
    TrapConfig,
    mode_energies,
    thermal_scales,
)
from .fugacity import critical_temperature, series_lhs, solve_fugacity  # noqa: E402
from .spectrum import (  # noqa: E402
    ChemicalSpectrum,
    CombFit,
    CombPolynomial,
    build_polynomial,
    comb_fit,
    complex_roots,
    spectrum_from_roots,
)

__all__ = [
    "__version__",
    "DomainError",
    "EmptySpectrumError",
    "GasParams",
    "ModeSpectrum",
    "PhysicalConstants",
    "ThermalScales",
    "TrapConfig",
    "mode_energies",
    "thermal_scales",
    "critical_temperature",
    "series_lhs",
    "solve_fugacity",
    "ChemicalSpectrum",
    "CombFit",
    "CombPolynomial",
    "build_polynomial",
    "comb_fit",
    "complex_roots",
    "spectrum_from_roots",
]
