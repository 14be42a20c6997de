"""Complex partial chemical potentials from the truncated conservation polynomial.

The series truncated at ``M`` terms minus ``N`` is a real polynomial of degree
``M`` in the fugacity,

    P(z) = -N + sum_{j=1}^{M} a_j z**j,

and each of its ``M`` complex roots maps to a chemical potential through the
principal logarithm, ``mu_k = log(z_k) / (beta*hbar)`` (rad/s).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import HBAR, KB, DomainError, TrapConfig, default_cutoff
from .fugacity import series_coefficients

__all__ = [
    "CombPolynomial",
    "ChemicalSpectrum",
    "CombFit",
    "DegreeReductionWarning",
    "NotACombWarning",
    "ConvergenceError",
    "BranchError",
    "InsufficientDataError",
    "build_polynomial",
    "complex_roots",
    "spectrum_from_roots",
    "comb_fit",
    "positive_real_root",
    "count_modes",
    "default_degree",
]

MAX_DEGREE = 500


class DegreeReductionWarning(RuntimeWarning):
    """Trailing coefficients underflowed and were trimmed."""


class NotACombWarning(RuntimeWarning):
    """Consecutive spacings are too irregular to call the spectrum a comb."""


class ConvergenceError(ArithmeticError):
    """Root iteration did not reach the residual target."""


class BranchError(ValueError):
    """A root sits at the branch point ``z = 0`` of the logarithm."""


class InsufficientDataError(ValueError):
    """Not enough data for the requested estimate."""


@dataclass(frozen=True, eq=False)
class CombPolynomial:
    """Real polynomial ``sum_j coefficients[j] * z**j`` (ascending order)."""

    coefficients: np.ndarray
    n_atoms: float = float("nan")
    temperature: float = float("nan")
    trap: TrapConfig | None = None

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, z):
        """Horner evaluation at scalar or array ``z``."""
        z = np.asarray(z)
        acc = np.zeros_like(z, dtype=np.result_type(z, float)) + self.coefficients[-1]
        for a in self.coefficients[-2::-1]:
            acc = acc * z + a
        return acc


@dataclass(frozen=True, eq=False)
class ChemicalSpectrum:
    """``M`` complex chemical potentials (rad/s) sorted by real part, then imaginary part."""

    mus: np.ndarray
    source_roots: np.ndarray
    beta_hbar: float

    def __len__(self) -> int:
        return len(self.mus)

    @property
    def omega_k(self) -> np.ndarray:
        return self.mus.real

    @property
    def gamma_k(self) -> np.ndarray:
        return self.mus.imag

    @property
    def temperature(self) -> float:
        return HBAR / (KB * self.beta_hbar)

    @classmethod
    def from_mus(cls, mus, beta_hbar: float) -> "ChemicalSpectrum":
        """Wrap given chemical potentials (synthetic spectra, tests)."""
        mus = np.asarray(mus, dtype=complex)
        order = np.lexsort((mus.imag, mus.real))
        mus = mus[order]
        with np.errstate(over="ignore"):
            roots = np.exp(beta_hbar * mus)
        return cls(mus, roots, float(beta_hbar))


@dataclass(frozen=True, eq=False)
class CombFit:
    """Comb law ``Re(mu_k) = omega_rep * m_k + omega_0``."""

    omega_rep: float
    omega_0: float
    assignments: np.ndarray  # m_k for every spectrum entry, in spectrum order
    rms_residual: float
    spacing_dispersion: float
    not_a_comb: bool = False
    teeth: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))


def count_modes(trap: TrapConfig, cutoff: float, limit: int | None = None) -> int:
    """Number of excited lattice modes with energy ``<= cutoff``, stopping early at ``limit``."""
    wx, wy, wz = trap.omegas
    cap = cutoff / HBAR
    slack = 1e-12 * cap
    total = 0
    for kx in range(int(math.floor((cap + slack) / wx)) + 1):
        rx = cap - kx * wx
        ky = np.arange(int(math.floor((rx + slack) / wy)) + 1)
        total += int(np.sum(np.floor((rx - ky * wy + slack) / wz) + 1))
        if limit is not None and total - 1 >= limit:
            return limit
    return total - 1  # ground state


def default_degree(T: float, trap: TrapConfig, cap: int = MAX_DEGREE) -> int:
    """Excited modes below ``12 kB T``, capped (at least 2)."""
    return max(2, count_modes(trap, default_cutoff(T), limit=cap))


def build_polynomial(N: float, T: float, trap: TrapConfig, M: int) -> CombPolynomial:
    """Degree-``M`` conservation polynomial ``-N + sum_{j<=M} a_j z**j``.

    Warns with :class:`DegreeReductionWarning` and trims when high-order
    coefficients underflow to zero.
    """
    if M < 1:
        raise DomainError(f"degree must be >= 1, got {M}")
    if not N > 0:
        raise DomainError(f"N must be > 0, got {N!r}")
    if not T > 0:
        raise DomainError(f"temperature must be > 0, got {T!r}")
    beta = 1.0 / (KB * T)
    a = series_coefficients(beta, trap, M)
    nz = np.nonzero(a)[0]
    if len(nz) < M:
        keep = int(nz[-1]) + 1 if len(nz) else 0
        if keep < 1:
            raise DomainError("all series coefficients underflow")
        warnings.warn(f"coefficients above j={keep} underflow; degree reduced from {M} to {keep}",
                      DegreeReductionWarning, stacklevel=2)
        a = a[:keep]
    return CombPolynomial(np.concatenate([[-float(N)], a]), float(N), float(T), trap)


def _scaled(coeffs: np.ndarray) -> tuple[np.ndarray, float]:
    """Coefficients of ``P(r*u)`` normalised by their largest magnitude, and ``r``.

    ``r = |a_0/a_M|**(1/M)`` is the geometric mean of the root moduli, which
    brings the roots near the unit circle.
    """
    M = len(coeffs) - 1
    nz = coeffs != 0
    logabs = np.full(len(coeffs), -np.inf)
    logabs[nz] = np.log(np.abs(coeffs[nz]))
    if coeffs[0] != 0:
        log_r = (logabs[0] - logabs[-1]) / M
    else:
        log_r = 0.0
    scaled_log = logabs + np.arange(M + 1) * log_r
    scaled_log -= np.max(scaled_log[nz])
    b = np.where(nz, np.sign(coeffs) * np.exp(scaled_log), 0.0)
    return b, math.exp(log_r)


def _horner_with_derivative(b: np.ndarray, u: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``p(u)``, ``p'(u)`` and the backward-error scale ``sum |b_j| |u|**j``."""
    p = np.full(u.shape, b[-1], dtype=complex)
    dp = np.zeros(u.shape, dtype=complex)
    au = np.abs(u)
    scale = np.full(u.shape, abs(b[-1]))
    for c in b[-2::-1]:
        dp = dp * u + p
        p = p * u + c
        scale = scale * au + abs(c)
    return p, dp, scale


def _companion_roots(b: np.ndarray) -> np.ndarray:
    M = len(b) - 1
    comp = np.zeros((M, M))
    comp[0, :] = -b[-2::-1] / b[-1]
    comp[np.arange(1, M), np.arange(M - 1)] = 1.0
    return np.linalg.eigvals(comp)


def _aberth_roots(b: np.ndarray, maxiter: int) -> np.ndarray:
    M = len(b) - 1
    # starting points on the unit circle, rotated off the real axis
    u = np.exp(1j * (2 * np.pi * (np.arange(M) + 0.25) / M + 0.4))
    for _ in range(maxiter):
        p, dp, scale = _horner_with_derivative(b, u)
        ratio = p / dp
        diff = u[:, None] - u[None, :]
        np.fill_diagonal(diff, 1.0)
        inv = 1.0 / diff
        np.fill_diagonal(inv, 0.0)
        step = ratio / (1.0 - ratio * inv.sum(axis=1))
        u = u - step
        if np.all(np.abs(step) <= 4 * np.finfo(float).eps * np.maximum(np.abs(u), 1.0)):
            break
    return u


def _polish(b: np.ndarray, u: np.ndarray, iters: int = 4) -> np.ndarray:
    """Newton steps that are kept only when they lower the residual."""
    p, dp, scale = _horner_with_derivative(b, u)
    err = np.abs(p) / scale
    for _ in range(iters):
        cand = u - p / dp
        pc, dpc, sc = _horner_with_derivative(b, cand)
        ec = np.abs(pc) / sc
        better = ec < err
        if not np.any(better):
            break
        u = np.where(better, cand, u)
        p, dp, err = np.where(better, pc, p), np.where(better, dpc, dp), np.where(better, ec, err)
    return u


def _pair_conjugates(u: np.ndarray, tol: float) -> np.ndarray:
    """Make near-conjugate pairs exactly conjugate and near-real roots real."""
    u = u.copy()
    real = np.abs(u.imag) <= tol * np.maximum(np.abs(u), 1e-300)
    u[real] = u[real].real
    upper = np.nonzero(~real & (u.imag > 0))[0]
    lower = list(np.nonzero(~real & (u.imag < 0))[0])
    for i in upper:
        if not lower:
            break
        cand = np.array(lower)
        k = int(np.argmin(np.abs(u[cand] - np.conj(u[i]))))
        j = lower.pop(k)
        mid = 0.5 * (u[i] + np.conj(u[j]))
        u[i], u[j] = mid, np.conj(mid)
    return u


def complex_roots(poly: CombPolynomial, method: str = "companion", maxiter: int = 500,
                  tol: float = 1e-8) -> np.ndarray:
    """All roots of ``poly`` with multiplicity.

    Parameters
    ----------
    poly : CombPolynomial
    method : {"companion", "aberth"}
        Eigenvalues of the companion matrix, or Aberth-Ehrlich simultaneous
        iteration.  Either result is Newton-polished.
    maxiter : int
        Iteration budget for the Aberth method.
    tol : float
        Backward-error target ``|P(z)| / sum_j |a_j| |z|**j`` every root must meet.

    Raises
    ------
    ConvergenceError
        Some root misses ``tol``; the message names the worst residual.
    """
    coeffs = np.asarray(poly.coefficients, dtype=float)
    nz = np.nonzero(coeffs)[0]
    if len(nz) == 0 or nz[-1] < 1:
        raise DomainError("polynomial has degree < 1")
    coeffs = coeffs[: nz[-1] + 1]
    # exact zero roots from vanishing low-order coefficients
    n_zero = int(nz[0])
    coeffs = coeffs[n_zero:]
    if len(coeffs) == 1:
        return np.zeros(n_zero, dtype=complex)
    b, r = _scaled(coeffs)
    if method == "companion":
        u = _companion_roots(b)
    elif method == "aberth":
        u = _aberth_roots(b, maxiter)
    else:
        raise ValueError(f"unknown method {method!r}")
    u = _polish(b, u)
    u = _pair_conjugates(u, 1e-13)
    p, _, scale = _horner_with_derivative(b, u)
    backward = np.abs(p) / scale
    worst = float(np.max(backward))
    if not worst <= tol:
        raise ConvergenceError(f"{method} roots: worst backward error {worst:.3e} exceeds {tol:.1e}")
    z = u * r
    z = z[np.lexsort((z.imag, z.real))]
    return np.concatenate([np.zeros(n_zero, dtype=complex), z])


def positive_real_root(roots: np.ndarray, tol: float = 1e-12) -> float:
    """The unique root on the positive real axis."""
    roots = np.asarray(roots)
    mask = (np.abs(roots.imag) <= tol * np.abs(roots)) & (roots.real > 0)
    found = roots[mask].real
    if len(found) != 1:
        raise ArithmeticError(f"expected one positive real root, found {len(found)}")
    return float(found[0])


def spectrum_from_roots(roots, T: float | None = None, *, beta_hbar: float | None = None) -> ChemicalSpectrum:
    """Map fugacity roots to chemical potentials ``log(z)/(beta*hbar)``.

    The principal branch is used with ``Im log z`` in ``(-pi, pi]``; a root on
    the negative real axis therefore maps to ``+i*pi/(beta*hbar)``.  Give either
    the temperature ``T`` (K) or ``beta_hbar`` (s) directly.
    """
    if (T is None) == (beta_hbar is None):
        raise TypeError("give exactly one of T or beta_hbar")
    if beta_hbar is None:
        if not T > 0:
            raise DomainError(f"temperature must be > 0, got {T!r}")
        beta_hbar = HBAR / (KB * T)
    roots = np.asarray(roots, dtype=complex)
    if np.any(roots == 0):
        raise BranchError("root at z = 0 has no logarithm")
    logs = np.log(roots)
    cut = logs.imag == -np.pi
    logs[cut] = logs[cut].real + 1j * np.pi
    mus = logs / beta_hbar
    order = np.lexsort((mus.imag, mus.real))
    return ChemicalSpectrum(mus[order], roots[order], float(beta_hbar))


def _distinct(values: np.ndarray, rtol: float) -> np.ndarray:
    v = np.sort(values)
    if len(v) == 0:
        return v
    scale = max(float(np.max(np.abs(v))), np.finfo(float).tiny)
    keep = np.concatenate([[True], np.diff(v) > rtol * scale])
    return v[keep]


def comb_fit(spec: ChemicalSpectrum, *, distinct_rtol: float = 1e-9,
             dispersion_limit: float = 0.5) -> CombFit:
    """Fit ``Re(mu_k) = omega * m_k`` with the offset fixed at zero.

    The starting ``omega`` is the median spacing of the distinct sorted real
    parts (conjugate partners share a real part and count once).  Teeth are
    assigned by rounding, then ``omega`` gets one least-squares refinement
    ``sum(m*Re mu)/sum(m*m)``.

    Raises
    ------
    InsufficientDataError
        Fewer than three distinct real parts.
    """
    re = np.asarray(spec.mus).real
    d = _distinct(re, distinct_rtol)
    if len(d) < 3:
        raise InsufficientDataError(f"need >= 3 distinct Re(mu), got {len(d)}")
    gaps = np.diff(d)
    omega = float(np.median(gaps))
    dispersion = float(np.std(gaps) / omega)
    m = np.rint(d / omega)
    if np.all(m == 0):
        raise InsufficientDataError("all entries fall on tooth 0")
    omega = float(np.dot(m, d) / np.dot(m, m))
    resid = d - omega * m
    rms = float(np.sqrt(np.mean(resid ** 2)))
    not_comb = dispersion > dispersion_limit
    if not_comb:
        warnings.warn(f"spacing dispersion {dispersion:.3g} exceeds {dispersion_limit:g} of the median",
                      NotACombWarning, stacklevel=2)
    assignments = np.rint(re / omega).astype(np.int64)
    return CombFit(
        omega_rep=omega,
        omega_0=0.0,
        assignments=assignments,
        rms_residual=rms,
        spacing_dispersion=dispersion,
        not_a_comb=bool(not_comb),
        teeth=np.unique(assignments),
    )
