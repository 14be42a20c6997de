import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from atomcomb.core import HBAR, KB, DomainError, ModeSpectrum, TrapConfig, mode_energies
from atomcomb.fugacity import (
    NoSolutionError,
    PoleError,
    SeriesTruncation,
    TruncationWarning,
    critical_temperature,
    occupancy_oracle,
    oracle_modes,
    series_coefficients,
    series_lhs,
    solve_fugacity,
    upper_fugacity,
)

# fugacity root at N=5000, T=25 nK, isotropic 2*pi*125 Hz (oracle-checked below)
Z_GOLDEN = 1.2704105342186562


def beta_at(T):
    return 1.0 / (KB * T)


def mp_series(z, x, j_max):
    """Truncated series in 40-digit arithmetic straight from the definition."""
    with mpmath.workdps(40):
        z = mpmath.mpf(z)
        total = mpmath.mpf(0)
        for j in range(1, j_max + 1):
            prod = mpmath.mpf(1)
            for xl in x:
                prod /= 1 - mpmath.exp(-j * mpmath.mpf(xl))
            total += z ** j * (prod - 1)
        return float(total)


def single_mode(energy):
    return ModeSpectrum(np.array([[1, 0, 0]]), np.array([energy]), energy, False)


class TestSeries:
    def test_zero(self, iso):
        assert series_lhs(0.0, beta_at(25e-9), iso) == 0.0

    def test_single_term(self):
        w = 2 * math.pi * 125
        T = HBAR * w / KB  # beta*hbar*omega = 1
        coeff = (1 / (1 - math.exp(-1))) ** 3 - 1
        assert coeff == pytest.approx(2.9591, abs=5e-5)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TruncationWarning)
            val = series_lhs(0.3, beta_at(T), TrapConfig(w, w, w), SeriesTruncation(j_max=1))
        assert val == pytest.approx(coeff * 0.3, rel=1e-14)

    @pytest.mark.parametrize("z,T,hz", [(0.5, 25e-9, (125, 125, 125)), (1.1, 10e-9, (125, 75, 25)),
                                        (0.9, 40e-9, (200, 150, 100))])
    def test_against_high_precision(self, z, T, hz):
        trap = TrapConfig.from_hz(*hz)
        x = beta_at(T) * HBAR * trap.omegas
        trunc = SeriesTruncation(j_max=60)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TruncationWarning)
            val = series_lhs(z, beta_at(T), trap, trunc)
        assert val == pytest.approx(mp_series(z, x, 60), rel=1e-13)

    def test_coefficients_match_high_precision(self, aniso):
        beta = beta_at(25e-9)
        a = series_coefficients(beta, aniso, 400)
        x = beta * HBAR * aniso.omegas
        with mpmath.workdps(50):
            for j in (1, 2, 10, 100, 400):
                prod = mpmath.mpf(1)
                for xl in x:
                    prod /= 1 - mpmath.exp(-j * mpmath.mpf(xl))
                assert a[j - 1] == pytest.approx(float(prod - 1), rel=1e-13)

    def test_half_at_25nk_matches_oracle(self, iso):
        beta = beta_at(25e-9)
        a = series_lhs(0.5, beta, iso)
        b = occupancy_oracle(0.5, beta, oracle_modes(0.5, beta, iso))
        assert a == pytest.approx(b, rel=1e-8)

    def test_domain(self, iso):
        beta = beta_at(25e-9)
        with pytest.raises(DomainError):
            series_lhs(-0.1, beta, iso)
        with pytest.raises(DomainError):
            series_lhs(upper_fugacity(beta, iso), beta, iso)

    def test_truncation_warning_and_metadata(self, iso):
        beta = beta_at(25e-9)
        with pytest.warns(TruncationWarning):
            series_lhs(1.2, beta, iso, SeriesTruncation(j_max=5))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TruncationWarning)
            _, info = series_lhs(1.2, beta, iso, SeriesTruncation(j_max=5), full_output=True)
        assert info["truncated"] and info["j_max"] == 5 and info["tail_bound"] > 0

    def test_tail_bound_is_rigorous(self, aniso):
        beta = beta_at(20e-9)
        z = 0.8 * upper_fugacity(beta, aniso)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TruncationWarning)
            part, info = series_lhs(z, beta, aniso, SeriesTruncation(j_max=30), full_output=True)
        full = series_lhs(z, beta, aniso)
        assert 0 < full - part <= info["tail_bound"]

    @settings(max_examples=25)
    @given(T=st.floats(5e-9, 60e-9), fx=st.floats(50, 250), fy=st.floats(50, 250),
           fz=st.floats(50, 250), seed=st.integers(0, 2 ** 32 - 1))
    def test_strictly_increasing(self, T, fx, fy, fz, seed):
        trap = TrapConfig.from_hz(fx, fy, fz)
        beta = beta_at(T)
        zmax = upper_fugacity(beta, trap)
        zs = np.sort(np.random.default_rng(seed).uniform(0, 0.999, 100)) * zmax
        vals = [series_lhs(z, beta, trap) for z in np.unique(zs)]
        assert np.all(np.diff(vals) > 0)
        assert vals[0] >= 0


class TestOracle:
    def test_zero(self, iso):
        assert occupancy_oracle(0.0, 1.0, single_mode(1.0)) == 0.0

    def test_single_mode(self):
        T = 25e-9
        val = occupancy_oracle(0.5, beta_at(T), single_mode(KB * T))
        assert val == pytest.approx(1 / (2 * math.e - 1), rel=1e-14)
        assert val == pytest.approx(0.2254, abs=1e-4)

    def test_pole(self):
        T = 25e-9
        with pytest.raises(PoleError):
            occupancy_oracle(math.e, beta_at(T), single_mode(KB * T))

    def test_ground_state_rejected(self, iso):
        modes = mode_energies(iso, 3 * HBAR * iso.omega_x, include_ground=True)
        with pytest.raises(DomainError):
            occupancy_oracle(0.5, 1.0, modes)

    @settings(max_examples=10)
    @given(u=st.floats(0.05, 0.99), T=st.floats(5e-9, 25e-9))
    def test_equivalence_random(self, u, T):
        trap = TrapConfig.from_hz(125)
        beta = beta_at(T)
        z = u * upper_fugacity(beta, trap)
        a = series_lhs(z, beta, trap)
        b = occupancy_oracle(z, beta, oracle_modes(z, beta, trap))
        assert a == pytest.approx(b, rel=1e-8)


class TestSolve:
    def test_golden(self, iso):
        res = solve_fugacity(5000, 25e-9, iso)
        assert res.residual <= 1e-10
        assert res.z_star == pytest.approx(Z_GOLDEN, rel=1e-12)
        assert res.mu_star == pytest.approx(math.log(res.z_star) / (HBAR * beta_at(25e-9)), rel=1e-14)
        assert 0 < res.z_star < upper_fugacity(beta_at(25e-9), iso)

    def test_golden_against_oracle_root(self, iso):
        beta = beta_at(25e-9)
        modes = oracle_modes(Z_GOLDEN, beta, iso)
        z = brentq(lambda z: occupancy_oracle(z, beta, modes) - 5000, 1.0, Z_GOLDEN * (1 + 1e-6),
                   xtol=1e-15, rtol=1e-15)
        assert z == pytest.approx(Z_GOLDEN, rel=1e-8)

    def test_tiny_n(self, iso):
        res = solve_fugacity(1e-6, 25e-9, iso)
        assert res.z_star < 1e-8
        assert res.residual <= 1e-10

    def test_monotone_in_n(self, aniso):
        assert solve_fugacity(1e4, 25e-9, aniso).z_star > solve_fugacity(1e3, 25e-9, aniso).z_star

    def test_bracket_sign_change(self, aniso):
        res = solve_fugacity(3000, 30e-9, aniso)
        beta = beta_at(30e-9)
        lo, hi = res.bracket
        assert series_lhs(math.exp(lo), beta, aniso) < 3000
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TruncationWarning)
            assert series_lhs(math.exp(hi), beta, aniso) > 3000

    def test_no_solution_with_fixed_truncation(self, iso):
        with pytest.raises(NoSolutionError, match="upper bracket"):
            solve_fugacity(5000, 25e-9, iso, SeriesTruncation(j_max=50))

    @pytest.mark.parametrize("N,T", [(0, 1e-8), (-1, 1e-8), (10, 0.0), (10, 1e-12)])
    def test_domain(self, iso, N, T):
        with pytest.raises(DomainError):
            solve_fugacity(N, T, iso)

    @settings(max_examples=15)
    @given(N=st.floats(10, 2e4), T=st.floats(5e-9, 100e-9), fx=st.floats(20, 250),
           fy=st.floats(20, 250), fz=st.floats(20, 250))
    def test_residual_property(self, N, T, fx, fy, fz):
        res = solve_fugacity(N, T, TrapConfig.from_hz(fx, fy, fz))
        assert res.residual <= 1e-10


class TestCriticalTemperature:
    def test_anisotropic(self, aniso):
        assert critical_temperature(5000, aniso) * 1e9 == pytest.approx(47.6, abs=0.2)

    def test_isotropic(self, iso):
        assert critical_temperature(5000, iso) * 1e9 == pytest.approx(96.5, abs=0.2)

    def test_zero(self, iso):
        assert critical_temperature(0, iso) == 0.0
        assert critical_temperature(1e-30, iso) < 1e-15

    @given(N=st.floats(1, 1e8), c=st.floats(0.1, 10))
    def test_scaling(self, N, c):
        trap = TrapConfig.from_hz(125, 75, 25)
        base = critical_temperature(N, trap)
        assert critical_temperature(N * c ** 3, trap) == pytest.approx(c * base, rel=1e-12)
        scaled = TrapConfig(*(c * trap.omegas))
        assert critical_temperature(N, scaled) == pytest.approx(c * base, rel=1e-12)
