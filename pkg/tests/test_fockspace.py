import math
from fractions import Fraction

import numpy as np
import pytest

from slowlight import darkstate as ds
from slowlight import fockspace as fs
from slowlight.params import PhysicalParams

XI_GRID = (0.1, 1.0, 10.0)


def params_for_xi(xi, length=10.0, omega_c=1.0, delta=0.0):
    """Coupling rescaled so the operator set matches the sector's xi."""
    return PhysicalParams(
        u=100.0, kappa=omega_c * math.sqrt(xi * length), omega_c=omega_c,
        n_1d=1.0, length=length, delta=delta, gamma=0.0, mode_area=3.0, sigma0=0.0,
    )


class TestBuildDarkState:
    def test_excitation_vacuum(self):
        s = fs.build_dark_state(5, 0, 0.7)
        assert s.amps.tolist() == [1.0]

    def test_single_pair_sector(self):
        xi = 0.7
        s = fs.build_dark_state(1, 1, xi)
        norm = math.sqrt(1 + xi)
        assert s.amps == pytest.approx([1 / norm, -math.sqrt(xi) / norm], rel=1e-14)

    def test_decoupled_probe(self):
        s = fs.build_dark_state(4, 3, 0.0)
        assert s.amps[0] == 1.0
        assert np.all(s.amps[1:] == 0.0)

    def test_normalization_and_signs(self):
        for xi in XI_GRID:
            for n in range(9):
                for m in range(9):
                    s = fs.build_dark_state(n, m, xi)
                    assert s.norm_error() < 1e-14
                    expect_sign = (-1.0) ** np.arange(s.amps.size)
                    nz = s.amps != 0
                    assert np.all(np.sign(s.amps[nz]) == expect_sign[nz])

    def test_oracle_scale_cap(self):
        with pytest.raises(ValueError, match="oracle-scale-only"):
            fs.build_dark_state(20_001, 20_001, 1.0)

    def test_squared_weights_are_rational(self):
        # term-by-term identity xi (N-m)(M-m) w_m = (m+1) w_{m+1} in exact rationals
        xi = Fraction(2, 3)
        for n in range(5):
            for m_pol in range(5):
                w = [
                    (Fraction(math.factorial(n), math.factorial(n - k))
                     * Fraction(math.factorial(m_pol), math.factorial(m_pol - k))
                     / math.factorial(k)) * xi**k
                    for k in range(min(n, m_pol) + 1)
                ]
                for k in range(len(w) - 1):
                    assert xi * (n - k) * (m_pol - k) * w[k] == (k + 1) * w[k + 1]


class TestDarkCondition:
    def test_residuals_vanish_on_dark_states(self):
        for xi in XI_GRID:
            p = params_for_xi(xi)
            for n in range(9):
                for m in range(9):
                    s = fs.build_dark_state(n, m, xi)
                    r_e, r_ds = fs.dark_condition_residual(s, p)
                    assert r_e == 0.0
                    assert r_ds < 1e-13

    def test_bare_photon_state_is_not_dark(self):
        xi = 1.0
        p = params_for_xi(xi)
        amps = np.zeros(min(3, 4) + 1)
        amps[0] = 1.0
        s = fs.FockSector(3, 4, xi, amps)
        _, r_ds = fs.dark_condition_residual(s, p)
        assert r_ds > 0.1

    def test_vacuum_sector_trivially_dark(self):
        p = params_for_xi(1.0)
        s = fs.FockSector(6, 0, 1.0, np.array([0.37]))
        assert fs.dark_condition_residual(s, p) == (0.0, 0.0)


class TestPhotonLowering:
    def test_ratio_matches_exact_recursion(self):
        for xi in XI_GRID:
            for n in range(9):
                for m in range(1, 9):
                    ratio, ortho = fs.a0_action_ratio(n, m, xi)
                    y = ds.y_exact(n, m, 1.0 / xi)
                    assert ratio == pytest.approx(y, rel=1e-12)
                    assert ortho < 1e-13

    def test_single_polariton_form(self):
        xi = 0.25
        n = 6
        ratio, _ = fs.a0_action_ratio(n, 1, xi)
        c = 1.0 / xi
        assert ratio == pytest.approx(c / (n + c), rel=1e-13)


class TestZeroEnergy:
    def test_dark_state_is_nullvector(self):
        for xi in XI_GRID:
            p = params_for_xi(xi)
            for n in range(9):
                for m in range(9):
                    assert fs.zero_energy_check(n, m, xi, p) < 1e-12

    def test_detuning_independent(self):
        xi = 0.5
        for delta in (0.0, 3.7, -12.0):
            p = params_for_xi(xi, delta=delta)
            assert fs.zero_energy_check(6, 5, xi, p) < 1e-12

    def test_perturbed_state_has_energy(self):
        xi = 0.5
        p = params_for_xi(xi)
        ham, states = fs.sector_hamiltonian(4, 4, p)
        s = fs.build_dark_state(4, 4, xi)
        vec = np.zeros(len(states))
        _, index = fs._sector_basis(4, 4)
        for m, amp in enumerate(s.amps):
            vec[index[(m, 0)]] = amp
        vec[index[(0, 0)]] += 0.1
        vec /= np.linalg.norm(vec)
        assert np.linalg.norm(ham @ vec) > 1e-3


class TestConservedNumbers:
    def test_commutators_vanish(self):
        for xi in XI_GRID:
            p = params_for_xi(xi, delta=0.9)
            cn, cm = fs.commutator_norms(8, 8, p)
            assert cn < 1e-12
            assert cm < 1e-12
