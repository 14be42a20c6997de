"""Parameter sweeps over temperature and trap frequency.

Each grid point runs the full chain: draw the atom number, solve for the
fugacity, extract the chemical-potential spectrum, fit the comb, sample the
field, filter phases, and run the repetition-frequency Metropolis chain.
Point seeds depend only on ``(master_seed, sweep kind, flat grid index)``, so
tables are identical for any worker count.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .analysis import comb_histogram, envelope_fit, make_histogram
from .core import DomainError, TrapConfig
from .field import WeightModel, metropolis_repetition, phase_filter, run_ensemble
from .fugacity import critical_temperature, solve_fugacity
from .spectrum import (
    MAX_DEGREE,
    build_polynomial,
    comb_fit,
    complex_roots,
    default_degree,
    spectrum_from_roots,
)
from .streams import DEFAULT_SEED, derive_seed, stream

__all__ = [
    "SweepPlan",
    "SweepRow",
    "PointResult",
    "draw_particle_number",
    "run_point",
    "temperature_sweep",
    "trap_sweep",
    "batch_sem",
    "ROW_COLUMNS",
    "row_dict",
]

TWO_PI = 2 * math.pi


def draw_particle_number(n_mean: float, n_sigma: float, rng: np.random.Generator) -> int:
    """Gaussian atom number rounded to an integer and clamped to at least 1."""
    if not n_mean >= 1:
        raise DomainError(f"n_mean must be >= 1, got {n_mean!r}")
    if n_sigma == 0:
        return max(1, int(round(n_mean)))
    return max(1, int(round(rng.normal(n_mean, n_sigma))))


@dataclass(frozen=True)
class SweepPlan:
    """Grid and Monte-Carlo settings for a sweep.

    Trap points are formed from the per-axis grids either pairwise
    (``combine="zip"``, e.g. isotropic grids) or as a Cartesian product.
    ``n_sigma=None`` means ``sqrt(n_mean)``.
    """

    temperatures: tuple = (10e-9, 25e-9, 100e-9)
    omega_x: tuple = (TWO_PI * 125,)
    omega_y: tuple = (TWO_PI * 125,)
    omega_z: tuple = (TWO_PI * 125,)
    combine: str = "zip"
    n_mean: float = 5000.0
    n_sigma: float | None = None
    realizations: int = 10_000
    master_seed: int = DEFAULT_SEED
    phi0: float = math.pi / 20
    delta: float = math.pi / 200
    modes_cap: int = MAX_DEGREE
    weights: str = "complex-normal"
    root_method: str = "aberth"

    def __post_init__(self):
        for name in ("temperatures", "omega_x", "omega_y", "omega_z"):
            grid = np.asarray(getattr(self, name), dtype=float)
            if grid.ndim != 1 or len(grid) == 0:
                raise DomainError(f"{name} grid must be a non-empty list")
            if np.any(grid <= 0):
                raise DomainError(f"{name} grid must be positive")
            if np.any(np.diff(grid) < 0):
                raise DomainError(f"{name} grid must be ascending")
            object.__setattr__(self, name, tuple(float(v) for v in grid))
        if self.combine not in ("zip", "product"):
            raise DomainError(f"combine must be 'zip' or 'product', got {self.combine!r}")
        if self.combine == "zip" and len({len(self.omega_x), len(self.omega_y), len(self.omega_z)}) != 1:
            raise DomainError("zip-combined trap grids need equal lengths")
        if self.realizations < 1:
            raise DomainError("realizations must be >= 1")
        if self.n_mean < 1:
            raise DomainError("n_mean must be >= 1")
        if self.n_sigma is not None and self.n_sigma < 0:
            raise DomainError("n_sigma must be >= 0")
        if not 0 < self.phi0 <= math.pi:
            raise DomainError("phi0 must be in (0, pi]")
        if not 0 < self.delta <= self.phi0 / 2:
            raise DomainError("delta must be in (0, phi0/2]")
        if self.modes_cap < 2:
            raise DomainError("modes_cap must be >= 2")
        WeightModel(self.weights)

    @property
    def sigma(self) -> float:
        return math.sqrt(self.n_mean) if self.n_sigma is None else self.n_sigma

    def trap_points(self) -> list[TrapConfig]:
        if self.combine == "zip":
            combos = zip(self.omega_x, self.omega_y, self.omega_z)
        else:
            combos = ((x, y, z) for x in self.omega_x for y in self.omega_y for z in self.omega_z)
        return [TrapConfig(*c) for c in combos]


@dataclass
class SweepRow:
    index: int
    temperature_k: float
    omega_x: float
    omega_y: float
    omega_z: float
    seed: int
    n_atoms: int = 0
    t_c_k: float = float("nan")
    z_star: float = float("nan")
    mu_star: float = float("nan")
    degree: int = 0
    omega_rep: float = float("nan")
    not_a_comb: bool = False
    omega_mean: float = float("nan")
    omega_std: float = float("nan")
    omega_sem: float = float("nan")
    omega_min: float = float("nan")
    omega_max: float = float("nan")
    acceptance_rate: float = float("nan")
    n_filtered: int = 0
    comb_center: float = float("nan")
    comb_sigma: float = float("nan")
    comb_skewness: float = float("nan")
    comb_goodness: float = float("nan")
    rep_skewness: float = float("nan")
    within_energy_bound: bool = False
    error: str = ""


ROW_COLUMNS = [f.name for f in fields(SweepRow)]


@dataclass
class PointResult:
    row: SweepRow
    omega_samples: np.ndarray = field(default_factory=lambda: np.empty(0))
    filtered_phases: np.ndarray = field(default_factory=lambda: np.empty(0))


def batch_sem(samples: np.ndarray, n_batches: int = 20) -> float:
    """Standard error of the mean of a correlated chain by non-overlapping batch means."""
    x = np.asarray(samples, dtype=float)
    if len(x) < 2 * n_batches:
        return float(np.std(x, ddof=1) / math.sqrt(len(x))) if len(x) > 1 else float("nan")
    size = len(x) // n_batches
    means = x[: size * n_batches].reshape(n_batches, size).mean(axis=1)
    return float(np.std(means, ddof=1) / math.sqrt(n_batches))


def run_point(plan: SweepPlan, T: float, trap: TrapConfig, seed: int, index: int = 0) -> PointResult:
    """Full pipeline at one grid point; failures are stored in ``row.error``."""
    row = SweepRow(index, T, trap.omega_x, trap.omega_y, trap.omega_z, seed)
    res = PointResult(row)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            N = draw_particle_number(plan.n_mean, plan.sigma, stream(seed, "atoms"))
            row.n_atoms = N
            row.t_c_k = critical_temperature(N, trap)
            sol = solve_fugacity(N, T, trap)
            row.z_star, row.mu_star = sol.z_star, sol.mu_star
            M = default_degree(T, trap, plan.modes_cap)
            row.degree = M
            poly = build_polynomial(N, T, trap, M)
            spec = spectrum_from_roots(complex_roots(poly, method=plan.root_method), T)
            fit = comb_fit(spec)
            row.omega_rep, row.not_a_comb = fit.omega_rep, fit.not_a_comb

            n = plan.realizations
            ens = run_ensemble(spec, WeightModel(plan.weights), n, seed)
            kept = phase_filter(ens, plan.phi0, plan.delta)
            row.n_filtered = kept.n
            res.filtered_phases = kept.phase
            if kept.n:
                hist = comb_histogram(kept.phase, plan.phi0)
                if np.count_nonzero(hist.counts) >= 5:
                    env = envelope_fit(hist)
                    row.comb_center, row.comb_sigma = env.center, env.sigma
                    row.comb_skewness, row.comb_goodness = env.skewness, env.goodness

            chain = metropolis_repetition(spec, fit, T, n + n // 10, n // 10, stream(seed, "chain"))
            w = chain.omega_samples
            res.omega_samples = w
            row.acceptance_rate = chain.acceptance_rate
            row.omega_mean, row.omega_std = float(np.mean(w)), float(np.std(w))
            row.omega_min, row.omega_max = float(np.min(w)), float(np.max(w))
            row.omega_sem = batch_sem(w)
            if np.ptp(w) > 0:
                h = make_histogram(w)
                if np.count_nonzero(h.counts) >= 5:
                    row.rep_skewness = envelope_fit(h).skewness
            row.within_energy_bound = bool(row.omega_max <= trap.omega_x + trap.omega_y + trap.omega_z)
    except Exception as exc:  # recorded per point; the sweep carries on
        row.error = f"{type(exc).__name__}: {exc}"
    return res


def _run(args) -> PointResult:
    return run_point(*args)


def _execute(plan: SweepPlan, points: list[tuple[float, TrapConfig]], kind: str,
             workers: int) -> list[PointResult]:
    jobs = [(plan, T, trap, derive_seed(plan.master_seed, kind, i), i)
            for i, (T, trap) in enumerate(points)]
    if workers <= 1 or len(jobs) == 1:
        return [_run(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run, jobs))


def temperature_sweep(plan: SweepPlan, workers: int = 1) -> list[PointResult]:
    """Rows ordered by temperature (then trap point)."""
    traps = plan.trap_points()
    points = [(T, trap) for T in plan.temperatures for trap in traps]
    return _execute(plan, points, "temperature", workers)


def trap_sweep(plan: SweepPlan, workers: int = 1) -> list[PointResult]:
    """One block of rows per temperature, ordered by trap point inside each block."""
    traps = plan.trap_points()
    points = [(T, trap) for T in plan.temperatures for trap in traps]
    return _execute(plan, points, "trap", workers)


def row_dict(row: SweepRow) -> dict:
    return asdict(row)
