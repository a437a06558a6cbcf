import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slowlight.errors import ConfigError, ParamsError
from slowlight.params import (
    PhysicalParams,
    derived_rho,
    kappa_from_dipole,
    optical_density,
    params_from_dict,
    spectral_window,
)


def make(**over):
    base = dict(u=100.0, kappa=2.2, omega_c=3.0, n_1d=1.0, length=5000.0,
                delta=0.0, gamma=0.5, mode_area=3.0, sigma0=0.15)
    base.update(over)
    return PhysicalParams(**base)


class TestDerivedRho:
    def test_equal_scales_give_unity(self):
        p = make(kappa=3.0, omega_c=3.0, n_1d=1.0)
        assert derived_rho(p) == pytest.approx(1.0, rel=1e-15)

    def test_reference_value(self):
        # omega_c = 3 /us against kappa sqrt(n) = 2.2 /us: 9/4.84
        p = make(kappa=2.2, omega_c=3.0, n_1d=1.0)
        assert derived_rho(p) == pytest.approx(1.8595041322314048, rel=1e-14)

    def test_vanishing_drive(self):
        p = make(omega_c=1e-12)
        assert derived_rho(p) < 1e-20

    def test_coupling_off(self):
        p = make(kappa=0.0)
        with pytest.raises(ParamsError, match="coupling-off"):
            derived_rho(p)

    @given(c=st.floats(min_value=1e-3, max_value=1e3))
    @settings(max_examples=30)
    def test_invariant_under_joint_scaling(self, c):
        p = make()
        q = make(kappa=c * p.kappa, omega_c=c * p.omega_c)
        assert derived_rho(q) == pytest.approx(derived_rho(p), rel=1e-12)


class TestOpticalDensity:
    def test_one_beer_length(self):
        p = make(length=3.0 / (1.0 * 0.15))  # L = zeta
        assert optical_density(p) == pytest.approx(1.0, rel=1e-14)

    def test_nanofiber_example(self):
        p = make(length=5000.0, n_1d=1.0, mode_area=3.0, sigma0=0.15)
        assert optical_density(p) == pytest.approx(250.0, rel=1e-12)

    def test_linearity_in_density(self):
        p = make()
        assert optical_density(make(n_1d=2.0)) == pytest.approx(2 * optical_density(p), rel=1e-12)

    def test_no_absorption_data(self):
        with pytest.raises(ParamsError, match="no-absorption-data"):
            optical_density(make(sigma0=0.0))


class TestSpectralWindow:
    def test_far_detuned_small_drive_limit(self):
        p = make(omega_c=1e-9, delta=4.0)
        expect = p.kappa**2 * p.n_1d / abs(p.delta)
        assert spectral_window(p, "far_detuned") == pytest.approx(expect, rel=1e-9)

    def test_far_detuned_halves_with_detuning(self):
        w1 = spectral_window(make(delta=4.0), "far_detuned")
        w2 = spectral_window(make(delta=-8.0), "far_detuned")
        assert w2 == pytest.approx(w1 / 2, rel=1e-12)

    def test_dense_value(self):
        # s barely above 1 so the precondition holds; W -> omega_c^2/gamma
        p = make(length=20.0 * (1 + 1e-9), omega_c=0.5, gamma=0.5)
        assert spectral_window(p, "dense") == pytest.approx(0.5, rel=1e-6)

    def test_dense_requires_density(self):
        with pytest.raises(ParamsError, match="optical density"):
            spectral_window(make(length=1.0), "dense")

    def test_far_detuned_requires_detuning(self):
        with pytest.raises(ParamsError, match="delta"):
            spectral_window(make(delta=0.0), "far_detuned")

    @pytest.mark.parametrize("alpha", [0.1, 1.0, 10.0])
    def test_time_unit_rescaling(self, alpha):
        p = make(delta=4.0, length=5000.0)
        scaled = PhysicalParams(
            u=p.u / alpha, kappa=p.kappa / alpha, omega_c=p.omega_c / alpha,
            n_1d=p.n_1d, length=p.length, delta=p.delta / alpha,
            gamma=p.gamma / alpha, mode_area=p.mode_area, sigma0=p.sigma0,
        )
        for regime in ("dense", "far_detuned"):
            assert spectral_window(scaled, regime) == pytest.approx(
                spectral_window(p, regime) / alpha, rel=1e-12
            )
        assert scaled.rho == pytest.approx(p.rho, rel=1e-12)
        assert optical_density(scaled) == pytest.approx(optical_density(p), rel=1e-12)


class TestValidation:
    @pytest.mark.parametrize("field,value", [
        ("u", 0.0), ("u", -1.0), ("omega_c", 0.0), ("n_1d", -1.0),
        ("length", 0.0), ("mode_area", 0.0), ("kappa", -0.1),
        ("gamma", -0.1), ("sigma0", -0.1), ("delta", math.nan),
    ])
    def test_rejects_bad_fields(self, field, value):
        with pytest.raises(ParamsError):
            make(**{field: value})

    def test_immutable(self):
        p = make()
        with pytest.raises(Exception):
            p.u = 1.0


class TestJsonConfig:
    BASE = {
        "u": 100.0, "kappa": 2.2, "omega_c": 3.0, "n_1d": 1.0, "length": 5000.0,
        "delta": 0.0, "gamma": 0.5, "mode_area": 3.0, "sigma0": 0.15,
    }

    def test_roundtrip(self):
        p = params_from_dict(dict(self.BASE))
        assert p.kappa == 2.2

    def test_unknown_key_rejected(self):
        bad = dict(self.BASE, extra=1.0)
        with pytest.raises(ConfigError, match="unknown"):
            params_from_dict(bad)

    def test_missing_key_rejected(self):
        bad = dict(self.BASE)
        del bad["gamma"]
        with pytest.raises(ConfigError, match="missing"):
            params_from_dict(bad)

    def test_dipole_path(self):
        cfg = dict(self.BASE)
        del cfg["kappa"]
        cfg["dipole"] = {"d": 1e-29, "omega0": 2.2e15}
        p = params_from_dict(cfg)
        assert p.kappa == pytest.approx(
            kappa_from_dipole(1e-29, 2.2e15, 3.0), rel=1e-15
        )

    def test_dipole_and_kappa_conflict(self):
        cfg = dict(self.BASE)
        cfg["dipole"] = {"d": 1e-29, "omega0": 2.2e15}
        with pytest.raises(ConfigError, match="both"):
            params_from_dict(cfg)


class TestDipoleConversion:
    def test_scaling_in_dipole(self):
        assert kappa_from_dipole(2e-29, 1e15, 3.0) == pytest.approx(
            2 * kappa_from_dipole(1e-29, 1e15, 3.0), rel=1e-13
        )

    def test_scaling_in_frequency(self):
        assert kappa_from_dipole(1e-29, 4e15, 3.0) == pytest.approx(
            2 * kappa_from_dipole(1e-29, 1e15, 3.0), rel=1e-13
        )

    def test_scaling_in_area(self):
        assert kappa_from_dipole(1e-29, 1e15, 12.0) == pytest.approx(
            0.5 * kappa_from_dipole(1e-29, 1e15, 3.0), rel=1e-13
        )
