"""Monte-Carlo realisations of the atom-laser field.

* coherent forward/backward pair ``psi_pm(t) = sum_k c_k exp(-/+ i Re(mu_k) t)``
* thermal field ``psi = sum_k c_k exp(-beta*hbar*mu_k)`` for random weights ``c_k``
* filtering of realisations whose phase sits on multiples of a unit phase
* a Metropolis chain over comb teeth with Boltzmann weights ``exp(-beta*hbar*|mu|)``
"""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import DomainError, thermal_scales
from .spectrum import ChemicalSpectrum, CombFit, InsufficientDataError
from .streams import block_stream

__all__ = [
    "WeightModel",
    "FieldSample",
    "FieldEnsemble",
    "RepetitionChain",
    "ScalingError",
    "FrozenChainWarning",
    "coherent_pair",
    "thermal_factors",
    "thermal_field_sample",
    "run_ensemble",
    "phase_filter",
    "metropolis_chain",
    "metropolis_repetition",
]

CHUNK = 4096
_EXP_LIMIT = 700.0
FROZEN_STEPS = 10_000


class ScalingError(ArithmeticError):
    """``exp(-beta*hbar*mu)`` would overflow."""


class FrozenChainWarning(RuntimeWarning):
    """The Metropolis chain rejected every proposal for a long stretch."""


@dataclass(frozen=True)
class WeightModel:
    """Distribution of the mode weights ``c_k``.

    ``complex-normal``: independent standard normal real and imaginary parts.
    ``real-normal``: standard normal, real.
    ``unit-uniform-phase``: ``exp(i*theta)`` with uniform ``theta``.
    """

    kind: str = "complex-normal"

    KINDS = ("complex-normal", "real-normal", "unit-uniform-phase")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown weight model {self.kind!r}; choose from {self.KINDS}")

    def draw(self, rng: np.random.Generator, shape) -> np.ndarray:
        if self.kind == "complex-normal":
            c = rng.standard_normal(tuple(shape) + (2,))
            return c.view(complex)[..., 0]
        if self.kind == "real-normal":
            return rng.standard_normal(shape).astype(complex)
        return np.exp(1j * rng.uniform(-np.pi, np.pi, shape))


@dataclass(frozen=True)
class FieldSample:
    psi: complex
    phase: float
    modulus: float
    draw_index: int = 0

    @classmethod
    def of(cls, psi: complex, draw_index: int = 0) -> "FieldSample":
        psi = complex(psi)
        return cls(psi, _principal_phase(np.array([psi]))[0], abs(psi), draw_index)


def _principal_phase(psi: np.ndarray) -> np.ndarray:
    """``arg(psi)`` mapped into ``(-pi, pi]``."""
    ph = np.angle(psi)
    ph[ph == -np.pi] = np.pi
    return ph


@dataclass(eq=False)
class FieldEnsemble:
    """Field realisations stored as arrays; ``ens[i]`` gives a :class:`FieldSample`."""

    psi: np.ndarray
    draw_index: np.ndarray
    master_seed: int | None = None
    model: WeightModel = field(default_factory=WeightModel)

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=complex)
        self.draw_index = np.asarray(self.draw_index, dtype=np.int64)

    @property
    def n(self) -> int:
        return len(self.psi)

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i: int) -> FieldSample:
        return FieldSample.of(self.psi[i], int(self.draw_index[i]))

    @property
    def samples(self) -> list[FieldSample]:
        return [self[i] for i in range(self.n)]

    @property
    def phase(self) -> np.ndarray:
        return _principal_phase(self.psi)

    @property
    def modulus(self) -> np.ndarray:
        return np.abs(self.psi)

    @property
    def mean(self) -> complex:
        return complex(np.mean(self.psi)) if self.n else complex("nan")

    @property
    def covariance(self) -> np.ndarray:
        """2x2 sample covariance of ``(Re psi, Im psi)``."""
        if self.n < 2:
            return np.full((2, 2), np.nan)
        return np.cov(np.vstack([self.psi.real, self.psi.imag]))

    def std(self) -> float:
        """Root of the total variance ``Var(Re) + Var(Im)``."""
        return float(np.sqrt(np.trace(self.covariance)))


@dataclass(frozen=True, eq=False)
class RepetitionChain:
    states: np.ndarray  # visited teeth m (post burn-in, thinned)
    mu: np.ndarray  # omega_rep * m, rad/s
    omega_samples: np.ndarray  # Re(mu_m)/m per visit, rad/s
    acceptance_rate: float
    burn_in: int
    thinning: int
    chain_length: int
    frozen: bool = False


def coherent_pair(t, spec: ChemicalSpectrum, weights) -> tuple:
    """Forward and backward fields ``sum_k c_k exp(-/+ i Re(mu_k) t)`` at time(s) ``t``."""
    weights = np.asarray(weights)
    if weights.shape != (len(spec.mus),):
        raise ValueError(f"{weights.shape[0] if weights.ndim else 0} weights for {len(spec.mus)} modes")
    t = np.asarray(t, dtype=float)
    phase = np.multiply.outer(t, spec.mus.real)
    plus = np.exp(-1j * phase) @ weights
    minus = np.exp(1j * phase) @ weights
    if t.ndim == 0:
        return complex(plus), complex(minus)
    return plus, minus


def thermal_factors(spec: ChemicalSpectrum) -> np.ndarray:
    """``exp(-beta*hbar*mu_k)``; raises :class:`ScalingError` past ``|beta*hbar*Re mu| > 700``."""
    if len(spec.mus) == 0:
        raise DomainError("empty spectrum")
    x = spec.beta_hbar * spec.mus
    worst = float(np.max(np.abs(x.real)))
    if worst > _EXP_LIMIT:
        raise ScalingError(f"|beta*hbar*Re(mu)| reaches {worst:.4g} > {_EXP_LIMIT:g}")
    return np.exp(-x)


def thermal_field_sample(spec: ChemicalSpectrum, model: WeightModel,
                         rng: np.random.Generator, draw_index: int = 0) -> FieldSample:
    """One realisation ``psi = sum_k c_k exp(-beta*hbar*mu_k)``."""
    factors = thermal_factors(spec)
    c = model.draw(rng, (len(factors),))
    return FieldSample.of(np.dot(c, factors), draw_index)


def _ensemble_blocks(args) -> np.ndarray:
    factors, kind, n, master_seed, blocks, tag = args
    model = WeightModel(kind)
    out = []
    for b in blocks:
        rows = min(CHUNK, n - b * CHUNK)
        c = model.draw(block_stream(master_seed, b, tag), (rows, len(factors)))
        out.append(c @ factors)
    return np.concatenate(out) if out else np.empty(0, dtype=complex)


def run_ensemble(spec: ChemicalSpectrum, model: WeightModel, n: int, master_seed: int,
                 *, workers: int = 1, tag: str = "field") -> FieldEnsemble:
    """``n`` thermal-field realisations.

    Sample ``i`` lives in counter block ``i // 4096`` of the ``tag`` substream,
    so the result is identical for any ``workers`` and any ``n`` prefix.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    factors = thermal_factors(spec)
    n_blocks = -(-n // CHUNK)
    if workers <= 1 or n_blocks == 1:
        psi = _ensemble_blocks((factors, model.kind, n, master_seed, range(n_blocks), tag))
    else:
        groups = [list(range(n_blocks))[w::workers] for w in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_ensemble_blocks,
                                  [(factors, model.kind, n, master_seed, g, tag) for g in groups]))
        psi = np.empty(n, dtype=complex)
        for g, part in zip(groups, parts):
            pos = 0
            for b in g:
                rows = min(CHUNK, n - b * CHUNK)
                psi[b * CHUNK: b * CHUNK + rows] = part[pos: pos + rows]
                pos += rows
    return FieldEnsemble(psi, np.arange(n), master_seed, model)


def phase_filter(ens: FieldEnsemble, phi0: float, delta: float) -> FieldEnsemble:
    """Keep realisations whose phase lies within ``delta`` of an integer multiple of ``phi0``.

    ``delta = phi0/2`` keeps everything.
    """
    if not (0 < phi0 <= np.pi):
        raise DomainError(f"phi0 must be in (0, pi], got {phi0!r}")
    if not (0 < delta <= phi0 / 2):
        raise DomainError(f"delta must be in (0, phi0/2], got {delta!r}")
    ph = ens.phase
    off = ph - phi0 * np.rint(ph / phi0)
    keep = np.abs(off) <= delta
    if delta == phi0 / 2:
        keep[:] = True
    return FieldEnsemble(ens.psi[keep], ens.draw_index[keep], ens.master_seed, ens.model)


def metropolis_chain(energies, n_steps: int, start: int, rng: np.random.Generator,
                     *, burn_in: int = 0, thinning: int = 1) -> tuple[np.ndarray, float, bool]:
    """Metropolis walk on states ``0..S-1`` with dimensionless energies ``energies``.

    Proposals are ``i -> i +/- 1`` with equal probability; a proposal off either
    end is rejected (the walker stays), which keeps the proposal symmetric.

    Returns the visited states after burn-in and thinning, the acceptance rate
    over all steps, and whether the chain froze (``FROZEN_STEPS`` consecutive
    rejections).
    """
    energies = np.asarray(energies, dtype=float)
    S = len(energies)
    if not 0 <= start < S:
        raise DomainError(f"start state {start} outside 0..{S - 1}")
    if n_steps <= burn_in:
        raise DomainError("chain length must exceed burn-in")
    moves = rng.integers(0, 2, n_steps) * 2 - 1
    log_u = np.log(rng.random(n_steps))
    visited = np.empty(n_steps, dtype=np.int64)
    e = energies.tolist()
    state = start
    accepted = 0
    run = 0
    frozen = False
    for i in range(n_steps):
        prop = state + int(moves[i])
        if 0 <= prop < S and log_u[i] < e[state] - e[prop]:
            state = prop
            accepted += 1
            run = 0
        else:
            run += 1
            if run == FROZEN_STEPS:
                frozen = True
        visited[i] = state
    return visited[burn_in::thinning], accepted / n_steps, frozen


def metropolis_repetition(spec: ChemicalSpectrum, fit: CombFit, T: float | None,
                          chain_len: int, burn_in: int, rng: np.random.Generator,
                          *, thinning: int = 1) -> RepetitionChain:
    """Metropolis walk over the occupied comb teeth with weights ``exp(-beta*hbar*|omega*m|)``.

    Starts at the tooth nearest ``beta*hbar*mu = 1``.  Each visit to tooth
    ``m`` emits the repetition-frequency sample ``Re(mu_m)/m``, where
    ``Re(mu_m)`` is the mean real part of the spectrum entries assigned to that
    tooth.  Tooth 0 carries no frequency information and is excluded.
    """
    beta_hbar = spec.beta_hbar if T is None else thermal_scales(T).tau
    m_all = np.asarray(fit.assignments)
    teeth = np.unique(m_all[m_all != 0])
    if len(teeth) < 2:
        raise InsufficientDataError(f"need >= 2 non-zero comb teeth, got {len(teeth)}")
    re = spec.mus.real
    re_tooth = np.array([re[m_all == m].mean() for m in teeth])
    omega_tooth = re_tooth / teeth
    mu_tooth = fit.omega_rep * teeth
    energies = beta_hbar * np.abs(mu_tooth)
    start = int(np.argmin(np.abs(beta_hbar * mu_tooth - 1.0)))
    idx, rate, frozen = metropolis_chain(energies, chain_len, start, rng,
                                         burn_in=burn_in, thinning=thinning)
    if frozen:
        warnings.warn(f"chain froze: {FROZEN_STEPS} consecutive rejections", FrozenChainWarning,
                      stacklevel=2)
    return RepetitionChain(
        states=teeth[idx],
        mu=mu_tooth[idx],
        omega_samples=omega_tooth[idx],
        acceptance_rate=rate,
        burn_in=burn_in,
        thinning=thinning,
        chain_length=chain_len,
        frozen=frozen,
    )

