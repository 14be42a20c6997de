"""Particle-number conservation for the trapped ideal Bose gas.

The excited-state occupancy is written as the fugacity series

    L(z) = sum_{j>=1} z**j * a_j,    a_j = prod_l 1/(1 - exp(-j*beta*hbar*omega_l)) - 1,

whose radius of convergence is ``exp(beta*hbar*omega_min)``.  ``occupancy_oracle``
evaluates the same quantity as a direct Bose-Einstein sum over the mode lattice
and is kept independent of the series code on purpose.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import (
    HBAR,
    KB,
    ZETA3,
    DomainError,
    ModeSpectrum,
    TrapConfig,
    mode_energies,
)

__all__ = [
    "SeriesTruncation",
    "FugacitySolveResult",
    "TruncationWarning",
    "PoleError",
    "NoSolutionError",
    "series_coefficients",
    "series_lhs",
    "occupancy_oracle",
    "oracle_modes",
    "solve_fugacity",
    "critical_temperature",
    "upper_fugacity",
]

# distance of the upper root bracket below the series pole
_POLE_MARGIN = 1e-9
_CHUNK = 1 << 15
_LOG_Z_LIMIT = 700.0


class TruncationWarning(RuntimeWarning):
    """The retained series terms do not meet the requested tail tolerance."""


class PoleError(ArithmeticError):
    """A mode is at or beyond its Bose-Einstein pole for the given fugacity."""


class NoSolutionError(ArithmeticError):
    """The conservation equation has no root inside the admissible bracket."""


@dataclass(frozen=True)
class SeriesTruncation:
    """Truncation policy for the fugacity series.

    With ``j_max=None`` terms are added until the rigorous geometric tail bound
    drops below ``tail_tol`` times the partial sum, up to ``j_cap`` terms.  A
    fixed ``j_max`` sums exactly that many terms.
    """

    j_max: int | None = None
    tail_tol: float = 1e-12
    j_cap: int = 10_000_000

    def __post_init__(self):
        if self.j_max is not None and self.j_max < 1:
            raise DomainError(f"j_max must be >= 1, got {self.j_max}")
        if not self.tail_tol > 0:
            raise DomainError(f"tail_tol must be > 0, got {self.tail_tol}")


@dataclass(frozen=True)
class FugacitySolveResult:
    z_star: float
    mu_star: float  # rad/s
    log_z: float  # beta*hbar*mu_star
    residual: float
    iterations: int
    j_max: int
    bracket: tuple[float, float]  # in log-fugacity


def _log_coefficients(j: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``log(a_j)`` for integer ``j`` and per-axis ``x = beta*hbar*omega``.

    Computed without the ``prod - 1`` cancellation, so terms stay accurate when
    ``a_j`` is many orders below one.
    """
    u = -np.multiply.outer(j.astype(float), x)  # (n, 3), log q_l**j
    out = np.empty(len(j))
    small = np.max(u, axis=1) < -30.0
    big = ~small
    if np.any(big):
        ub = u[big]
        # log(1 - q**j): two branches keep full precision at both ends
        l1m = np.where(ub < -math.log(2), np.log1p(-np.exp(ub)), np.log(-np.expm1(ub)))
        out[big] = np.log(np.expm1(-np.sum(l1m, axis=1)))
    if np.any(small):
        # a_j = sum_l q_l**j * (1 + O(q**j)); the correction is below 1e-13
        us = u[small]
        m = np.max(us, axis=1)
        out[small] = m + np.log(np.sum(np.exp(us - m[:, None]), axis=1))
    return out


def series_coefficients(beta: float, trap: TrapConfig, j_max: int) -> np.ndarray:
    """Coefficients ``a_1 .. a_{j_max}`` of the fugacity series (may underflow to 0)."""
    x = beta * HBAR * trap.omegas
    return np.exp(_log_coefficients(np.arange(1, j_max + 1), x))


def upper_fugacity(beta: float, trap: TrapConfig) -> float:
    """Radius of convergence ``exp(beta*hbar*omega_min)`` of the series."""
    return math.exp(beta * HBAR * trap.omega_min)


class _Series:
    """Fugacity series for one ``x = beta*hbar*omega`` with cached ``log a_j``."""

    def __init__(self, x: np.ndarray):
        self.x = np.asarray(x, dtype=float)
        self.x_min = float(np.min(self.x))
        self._log_a = np.empty(0)

    def log_a(self, j0: int, j1: int) -> np.ndarray:
        """``log a_j`` for ``j0 <= j < j1``."""
        n = len(self._log_a)
        if j1 - 1 > n:
            grow = max(j1 - 1, 2 * n, 1024)
            extra = _log_coefficients(np.arange(n + 1, grow + 1), self.x)
            self._log_a = np.concatenate([self._log_a, extra])
        return self._log_a[j0 - 1:j1 - 1]

    def __call__(self, s: float, trunc: SeriesTruncation,
                 stop_above: float | None = None) -> tuple[float, int, float]:
        """Sum ``exp(j*s) * a_j`` for log-fugacity ``s``.

        Returns ``(value, terms_used, tail_bound)``.  When ``stop_above`` is set
        the summation returns as soon as the partial sum (a lower bound)
        exceeds it.
        """
        rho_log = s - self.x_min  # log of the term-ratio bound
        if rho_log >= 0:
            raise DomainError("fugacity at or beyond the series radius of convergence")
        tail_factor = math.exp(rho_log) / -math.expm1(rho_log)
        adaptive = trunc.j_max is None
        limit = trunc.j_cap if adaptive else trunc.j_max
        total = 0.0
        last = 0.0
        j0 = 1
        chunk = _CHUNK
        while j0 <= limit:
            j1 = min(j0 + chunk, limit + 1)
            j = np.arange(j0, j1)
            terms = np.exp(self.log_a(j0, j1) + j * s)
            if adaptive or stop_above is not None:
                csum = total + np.cumsum(terms)
                if stop_above is not None:
                    hit = np.nonzero(csum > stop_above)[0]
                    if len(hit):
                        k = int(hit[0])
                        return float(csum[k]), j0 + k, float(terms[k] * tail_factor)
                if adaptive:
                    ok = np.nonzero(terms * tail_factor <= trunc.tail_tol * csum)[0]
                    if len(ok):
                        k = int(ok[0])
                        # pairwise re-summation of the accepted prefix
                        total += float(np.sum(terms[: k + 1]))
                        return total, j0 + k, float(terms[k] * tail_factor)
            total += float(np.sum(terms))
            last = float(terms[-1])
            j0 = j1
            chunk = min(2 * chunk, 1 << 20)
        return total, limit, last * tail_factor


def _series_log(s: float, x: np.ndarray, trunc: SeriesTruncation,
                stop_above: float | None = None) -> tuple[float, int, float]:
    return _Series(x)(s, trunc, stop_above)


def _check_z(z: float, beta: float, trap: TrapConfig) -> None:
    zmax = upper_fugacity(beta, trap) * (1 - _POLE_MARGIN)
    if not (0 <= z < zmax):
        raise DomainError(f"fugacity {z!r} outside [0, {zmax:.12g})")


def series_lhs(z: float, beta: float, trap: TrapConfig,
               trunc: SeriesTruncation | None = None, full_output: bool = False):
    """Excited-state occupancy from the truncated fugacity series.

    Parameters
    ----------
    z : float
        Fugacity, ``0 <= z < exp(beta*hbar*omega_min) * (1 - 1e-9)``.
    beta : float
        Inverse temperature ``1/(kB*T)`` in 1/J.
    trap : TrapConfig
    trunc : SeriesTruncation, optional
        Defaults to adaptive truncation at relative tail ``1e-12``.
    full_output : bool
        Also return a dict with ``j_max``, ``tail_bound`` and ``truncated``.

    Returns
    -------
    float or (float, dict)
        If the tail bound misses ``tail_tol`` a :class:`TruncationWarning` is
        emitted (and ``truncated`` is True in the info dict).
    """
    trunc = trunc or SeriesTruncation()
    _check_z(z, beta, trap)
    if z == 0:
        value, info = 0.0, {"j_max": 0, "tail_bound": 0.0, "truncated": False}
    else:
        x = beta * HBAR * trap.omegas
        value, used, tail = _series_log(math.log(z), x, trunc)
        truncated = tail > trunc.tail_tol * value
        info = {"j_max": used, "tail_bound": tail, "truncated": bool(truncated)}
        if truncated and not full_output:
            warnings.warn(
                f"series truncated at j={used}: tail bound {tail:.3g} exceeds "
                f"{trunc.tail_tol:.1g} x value", TruncationWarning, stacklevel=2)
    return (value, info) if full_output else value


def occupancy_oracle(z: float, beta: float, modes: ModeSpectrum) -> float:
    """Direct Bose-Einstein occupancy ``sum_k 1/(exp(beta*eps_k)/z - 1)`` over ``modes``.

    Raises
    ------
    PoleError
        If some mode has ``z * exp(-beta*eps_k) >= 1``.
    """
    if modes.includes_ground:
        raise DomainError("the occupancy oracle counts excited modes only; drop the ground state")
    if z < 0:
        raise DomainError(f"fugacity must be >= 0, got {z!r}")
    if z == 0:
        return 0.0
    arg = beta * modes.energies - math.log(z)
    if np.any(arg <= 0):
        k = int(np.argmin(arg))
        raise PoleError(f"mode {tuple(modes.indices[k])} is at or past its pole for z={z!r}")
    return float(np.sum(1.0 / np.expm1(arg)))


def oracle_modes(z: float, beta: float, trap: TrapConfig, rtol: float = 1e-10) -> ModeSpectrum:
    """Excited modes with a cutoff large enough that the neglected occupancy is
    below ``rtol`` times the occupancy of the lowest mode.

    The tail is bounded with ``sum_{beta*eps > E} exp(-beta*eps)
    <= exp(-theta*E) * prod_l 1/(1 - exp(-(1-theta)*x_l))`` for any
    ``0 < theta < 1``.
    """
    x = beta * HBAR * trap.omegas
    s = math.log(z) if z > 0 else -np.inf
    lowest = 1.0 / math.expm1(float(np.min(x)) - s) if z > 0 else 0.0
    if lowest == 0.0:
        return mode_energies(trap, HBAR * trap.omega_min * 1.5, sort=False)
    thetas = np.linspace(0.5, 0.98, 25)
    log_norm = -np.sum(np.log(-np.expm1(-np.outer(1 - thetas, x))), axis=1)

    def bound(E):
        pref = z / -math.expm1(s - E) if s < E else np.inf
        return pref * np.min(np.exp(-thetas * E + log_norm))

    E = float(np.min(x)) + 1.0
    while bound(E) > rtol * lowest:
        E *= 1.25
    return mode_energies(trap, E / beta, sort=False)


def _bracket_low(s_hi: float, series: _Series, N: float, trunc: SeriesTruncation) -> float:
    log_a1 = float(series.log_a(1, 2)[0])
    s = min(s_hi - 1.0, math.log(N) - log_a1 - 1.0)
    step = 1.0
    while series(s, trunc)[0] >= N:
        s -= step
        step *= 2
    return s


def solve_fugacity(N: float, T: float, trap: TrapConfig,
                   trunc: SeriesTruncation | None = None,
                   rtol: float = 1e-12, maxiter: int = 400) -> FugacitySolveResult:
    """Solve ``L(z) = N`` for the fugacity by bisection in ``log z``, then secant polish.

    The bracket is ``(0, exp(beta*hbar*omega_min) * (1 - 1e-9))``: the series
    diverges at its radius of convergence, so with adaptive truncation a root
    exists for any finite ``N``.  With a fixed ``trunc.j_max`` the truncated
    sum stays finite and :class:`NoSolutionError` is raised when ``N`` is out
    of reach.
    """
    if not N > 0:
        raise DomainError(f"N must be > 0, got {N!r}")
    if not T > 0:
        raise DomainError(f"temperature must be > 0, got {T!r}")
    trunc = trunc or SeriesTruncation()
    beta = 1.0 / (KB * T)
    x = beta * HBAR * trap.omegas
    if float(np.min(x)) > _LOG_Z_LIMIT:
        raise DomainError(
            f"beta*hbar*omega_min = {float(np.min(x)):.4g}: the fugacity would overflow a double")
    s_hi = float(np.min(x)) + math.log1p(-_POLE_MARGIN)
    series = _Series(x)

    # partial sums are lower bounds, so exceeding N certifies the sign change
    top, _, _ = series(s_hi, trunc, stop_above=N)
    if not top > N:
        raise NoSolutionError(
            f"occupancy at the upper bracket z={math.exp(s_hi):.12g} is {top:.6g} < N={N:.6g}")
    s_lo = _bracket_low(s_hi, series, N, trunc)
    f_lo = series(s_lo, trunc)[0] - N
    f_hi = np.inf
    if not f_lo < 0:
        raise NoSolutionError("lower bracket end does not undershoot N")

    def f(s):
        return series(s, trunc)[0] - N

    it = 0
    s_best, r_best = s_lo, abs(f_lo)
    while it < maxiter:
        it += 1
        mid = 0.5 * (s_lo + s_hi)
        if mid <= s_lo or mid >= s_hi:
            break
        fm = f(mid)
        if abs(fm) < r_best:
            s_best, r_best = mid, abs(fm)
        if fm == 0 or r_best <= rtol * N:
            break
        if fm < 0:
            s_lo, f_lo = mid, fm
        else:
            s_hi, f_hi = mid, fm
    # secant polish from the final bracket
    if r_best > rtol * N and np.isfinite(f_hi):
        a, fa, b, fb = s_lo, f_lo, s_hi, f_hi
        for _ in range(8):
            if fb == fa:
                break
            c = b - fb * (b - a) / (fb - fa)
            if not (min(s_lo, s_hi) <= c <= max(s_lo, s_hi)):
                break
            fc = f(c)
            it += 1
            if abs(fc) < r_best:
                s_best, r_best = c, abs(fc)
            if r_best <= rtol * N:
                break
            a, fa, b, fb = b, fb, c, fc
    beta_hbar = beta * HBAR
    value, used, tail = series(s_best, trunc)
    if trunc.j_max is None and tail > trunc.tail_tol * value:
        warnings.warn(f"root found with the series capped at j={used}; tail bound {tail:.3g}",
                      TruncationWarning, stacklevel=2)
    return FugacitySolveResult(
        z_star=math.exp(s_best),
        mu_star=s_best / beta_hbar,
        log_z=s_best,
        residual=r_best / N,
        iterations=it,
        j_max=used,
        bracket=(s_lo, s_hi),
    )


def critical_temperature(N: float, trap: TrapConfig) -> float:
    """Ideal-gas condensation temperature ``hbar*omega_bar/kB * (N/zeta(3))**(1/3)`` in K,
    with ``omega_bar`` the geometric-mean trap frequency."""
    if not N >= 0:
        raise DomainError(f"N must be >= 0, got {N!r}")
    return HBAR * trap.omega_geometric_mean / KB * (N / ZETA3) ** (1.0 / 3.0)
