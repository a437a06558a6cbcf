"""Acceptance gate: every criterion at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one line per
criterion.  Each test also enforces its runtime budget.
"""

import functools
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from slowlight import darkstate as ds
from slowlight import dispersion as disp
from slowlight import fockspace as fs
from slowlight import propagation as prop
from slowlight.cli import main as cli_main
from slowlight.params import PhysicalParams

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"


def gate(num, budget_s, desc):
    def deco(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            t0 = time.perf_counter()
            try:
                fn(*args, **kwargs)
            except Exception:
                print(f"[criterion {num:02d}] FAIL  {desc}")
                raise
            elapsed = time.perf_counter() - t0
            print(f"[criterion {num:02d}] PASS  {desc}  ({elapsed:.2f}s / {budget_s:g}s)")
            assert elapsed < budget_s, (
                f"criterion {num}: runtime {elapsed:.2f}s exceeds the {budget_s}s budget"
            )
        return run
    return deco


def base_params(**over):
    base = dict(u=100.0, kappa=2.0, omega_c=1.0, n_1d=1.0, length=100.0,
                delta=0.0, gamma=0.0, mode_area=3.0, sigma0=0.0)
    base.update(over)
    return PhysicalParams(**base)


@gate(1, 1.0, "weak-limit group velocity matches u rho/(1+rho) to 1e-6")
def test_criterion_01_weak_limit_group_velocity():
    g = 2.2
    u = 269813.2122
    for rho in (1e-5, 1e-4, 1e-3, 1.0):
        omega_c = math.sqrt(rho) * g
        for delta in (0.0, omega_c, -omega_c):
            p = base_params(u=u, kappa=g, omega_c=omega_c, delta=delta)
            v = disp.dark_branch_group_velocity(p)
            expect = u * rho / (1.0 + rho)
            assert abs(v - expect) / expect < 1e-6, (rho, delta, v, expect)


@gate(2, 30.0, "exact ratio equals norm-sum ratio to 1e-10 for all N <= 200")
def test_criterion_02_y_oracle_equivalence():
    worst = 0.0
    for c in (0.01, 0.1, 1.0, 10.0):
        xi = 1.0 / c
        for n in range(1, 201):
            y = ds.y_curve(n, n, c)
            log_a = np.array([ds.log_norm_A(n, m, xi) for m in range(n + 1)])
            oracle = np.exp(log_a[:-1] - log_a[1:])
            worst = max(worst, float(np.max(np.abs(y - oracle) / oracle)))
    assert worst < 1e-10, worst


@gate(3, 120.0, "ratio-deviation curve: peak scale 1/N, rise at m_ratio = 1, zero at M_D = 1")
def test_criterion_03_dk_curve_reproduction():
    for rho in (1e-6, 1e-4):
        for n in (1000, 2000):
            m_ratio, _, _, d_k = ds.dk_curve(n, 2 * n, rho)
            assert d_k[0] == 0.0
            abs_dk = np.abs(d_k)
            peak = float(np.max(abs_dk))
            assert 0.2 / n <= peak <= 5.0 / n, (rho, n, peak * n)
            # the steep rise to the peak happens at m_ratio = 1: the first
            # point reaching half of the maximum sits inside the window
            half = int(np.nonzero(abs_dk >= 0.5 * peak)[0][0])
            assert abs(m_ratio[half] - 1.0) < 0.05, (rho, n, m_ratio[half])


@gate(4, 1.0, "group-velocity curves: weak start, half-speed point, saturation")
def test_criterion_04_vgr_curves():
    u = 269813.2122
    for rho in (1e-5, 1e-4, 1e-3):
        p = base_params(u=u, kappa=math.sqrt(1.0 / rho), omega_c=1.0)
        assert p.rho == pytest.approx(rho, rel=1e-12)
        x = np.linspace(0.0, 10.0, 4001)
        v = disp.vgr_quantum(x * p.n_1d, p)
        assert np.all(np.diff(v) >= 0)
        assert abs(v[0] - u * rho / (1 + rho)) <= 1e-12 * u * rho / (1 + rho)
        v_half = disp.vgr_quantum((1.0 - rho) * p.n_1d, p)
        assert abs(v_half - u / 2) <= 1e-12 * u / 2
        assert disp.vgr_quantum((1.0 + 20.0 * math.sqrt(rho)) * p.n_1d, p) > 0.99 * u


@gate(5, 1.0, "polariton-density and probe-Rabi velocity forms agree to 1e-12")
def test_criterion_05_formula_equivalence():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(10_000):
        rho = 10.0 ** rng.uniform(-5, 1)
        kappa = 10.0 ** rng.uniform(-1, 1)
        p = base_params(u=1.0, kappa=kappa, omega_c=math.sqrt(rho * kappa**2))
        j = 10.0 ** rng.uniform(-6, 2)
        v_k = disp.vgr_kuang(j, p)
        v_q = disp.vgr_quantum(disp.polariton_density_from_photon(j, p), p)
        worst = max(worst, abs(v_k - v_q) / v_k)
    assert worst < 1e-12, worst


@gate(6, 10.0, "Fock oracle: dark conditions, lowering identity, null energy, conserved numbers")
def test_criterion_06_fock_oracle():
    for xi in (0.1, 1.0, 10.0):
        length, omega_c = 10.0, 1.0
        p = base_params(kappa=omega_c * math.sqrt(xi * length), omega_c=omega_c,
                        length=length, delta=0.4)
        for n in range(9):
            for m in range(9):
                s = fs.build_dark_state(n, m, xi)
                r_e, r_ds = fs.dark_condition_residual(s, p)
                assert r_e < 1e-12 and r_ds < 1e-12, (n, m, xi)
                assert fs.zero_energy_check(n, m, xi, p) < 1e-12, (n, m, xi)
                if m >= 1:
                    ratio, ortho = fs.a0_action_ratio(n, m, xi)
                    y = ds.y_exact(n, m, 1.0 / xi)
                    assert abs(ratio - y) / y < 1e-12, (n, m, xi)
                    assert ortho < 1e-12
        cn, cm = fs.commutator_norms(8, 8, p)
        assert cn < 1e-12 and cm < 1e-12


@gate(7, 5.0, "adiabatic 2x2 model: Vieta identities, exact zero, matches 3x3 at large detuning")
def test_criterion_07_adiabatic_model():
    g = 1.0
    p = base_params(u=10.0, kappa=g, omega_c=0.5, delta=100.0 * g)
    b = (g**2 + p.omega_c**2) / p.delta
    w_sl = (g**2 + p.omega_c**2) / abs(p.delta)
    for dw in np.linspace(-3 * abs(b), 3 * abs(b), 601):
        om_p, om_m, _ = disp.adiabatic_two_level(dw, p)
        scale = max(abs(om_p), abs(om_m), abs(b), abs(dw))
        assert abs((om_p + om_m) - (b + dw)) <= 1e-12 * scale
        prod = p.omega_c**2 * dw / p.delta
        assert abs(om_p * om_m - prod) <= 1e-12 * max(abs(prod), scale * 1e-18)
    _, om_m0, _ = disp.adiabatic_two_level(0.0, p)
    assert om_m0 == 0.0
    for dw in np.linspace(-w_sl / 10, w_sl / 10, 21):
        if dw == 0.0:
            continue
        two = disp.adiabatic_dark_branch(dw, p)
        three = disp._dark_root(dw, p)
        assert abs(three - two) / abs(two) < 0.01, dw


@gate(8, 120.0, "pulse-transit experiment: weak delay ~10 us, strong undelayed, flux accounting")
def test_criterion_08_pulse_transit(tmp_path):
    out = tmp_path / "absorbing"
    assert cli_main(["propagate", "--config", str(CONFIGS / "fig4.json"),
                     "--out", str(out)]) == 0
    summary = json.loads((out / "fig4_summary.json").read_text())["cases"]

    weak, strong = summary["weak"], summary["strong"]
    assert abs(weak["delay_us"] - 10.0) <= 2.0, weak["delay_us"]
    assert 0.3 < weak["transmitted_fraction"] < 1.0, weak["transmitted_fraction"]
    assert abs(strong["delay_us"]) < 0.05 * weak["delay_us"], strong["delay_us"]
    assert 0.3 < strong["transmitted_fraction"] < 1.0, strong["transmitted_fraction"]

    def timeseries_width(path):
        lines = path.read_text().splitlines()[2:]
        data = np.array([[float(v) for v in ln.split(",")] for ln in lines])
        t = data[:, 0]
        out_w = []
        for col in (1, 2):
            w = data[:, col] / np.sum(data[:, col])
            mean = np.sum(t * w)
            out_w.append(math.sqrt(np.sum((t - mean) ** 2 * w)))
        return out_w  # [input width, output width]

    w_in, w_out = timeseries_width(out / "fig4_weak.csv")
    assert w_out > 1.02 * w_in, (w_in, w_out)  # visible broadening

    # lossless mode on the weak pulse: flux in equals flux out to 1e-6
    cfg = json.loads((CONFIGS / "fig4.json").read_text())
    cfg["solver"]["mode"] = "lossless"
    cfg["pulse"]["peak_density"] = {"weak": cfg["pulse"]["peak_density"]["weak"]}
    lossless_cfg = tmp_path / "fig4_lossless.json"
    lossless_cfg.write_text(json.dumps(cfg))
    out2 = tmp_path / "lossless"
    assert cli_main(["propagate", "--config", str(lossless_cfg), "--out", str(out2)]) == 0
    lossless = json.loads((out2 / "fig4_lossless_summary.json").read_text())["cases"]["weak"]
    assert abs(lossless["transmitted_fraction"] - 1.0) < 1e-6, lossless


@gate(9, 120.0, "conservation: lossless norm, absorbing decay, mean-field atom number and balance")
def test_criterion_09_conservation_suite():
    # lossless characteristics: norm conserved to 1e-6 before breaking
    p = base_params()
    g = prop.Grid1D(0.0, 100.0, 2048)
    st = prop.gaussian_pulse(g, 0.5, 30.0, 8.0)
    out, _, bt = prop.solve_characteristics(st, p, 2.0, boundaries="periodic")
    assert bt is None or bt > 2.0
    assert abs(out.norm() - st.norm()) < 1e-6 * st.norm()

    # absorbing: total density monotonically non-increasing
    p_abs = base_params(gamma=5.0, sigma0=0.15)
    st2 = prop.gaussian_pulse(prop.Grid1D(0.0, 100.0, 1024), 0.5, 30.0, 8.0)
    _, rec = prop.solve_advection_diffusion(st2, p_abs, 1.5)
    assert np.all(np.diff(rec.norm) <= 1e-12 * rec.norm[0])
    assert rec.norm[-1] < rec.norm[0]

    # mean-field oracle: local atom density conserved to 1e-8 and the
    # ground-state balance residual below 1e-3 n_1d in the adiabatic regime
    p_mf = base_params(u=20.0, kappa=5.0, omega_c=1.0, length=320.0, delta=0.3)
    grid = prop.Grid1D(0.0, 320.0, 1024)
    init = prop.dark_meanfield_state(grid, p_mf, 1e-3, 96.0, 24.0)
    _, mon = prop.integrate_mean_field(init, p_mf, 12.0)
    assert max(mon.atom_error) < 1e-8, max(mon.atom_error)
    assert max(mon.balance_residual) < 1e-3 * p_mf.n_1d, max(mon.balance_residual)


@gate(10, 30.0, "wave-breaking time matches the analytic first-crossing formula to 2%")
def test_criterion_10_wave_breaking():
    p = base_params(omega_c=0.5)
    center, sigma, m_mean = 60.0, 15.0, 8.0
    # independent oracle: t* = min over z of -1/v'(z) on a dense grid
    z_dense = np.linspace(0.0, 200.0, 1_000_001)
    dens = (m_mean - 1.0) / m_mean * (
        m_mean / (sigma * math.sqrt(math.pi))
    ) * np.exp(-(((z_dense - center) / sigma) ** 2))
    v = disp.vgr_quantum(dens, p)
    slope = np.gradient(v, z_dense)
    t_star = float(np.min(-1.0 / slope[slope < 0]))

    previous = None
    for nz in (2048, 8192):
        grid = prop.Grid1D(0.0, 200.0, nz)
        st = prop.gaussian_pulse(grid, m_mean, center, sigma)
        _, _, bt = prop.solve_characteristics(st, p, 10 * t_star)
        assert bt is not None
        err = abs(bt - t_star) / t_star
        assert err < 0.02, (nz, bt, t_star)
        if previous is not None:
            assert err <= previous * 1.5  # refinement does not degrade
        previous = err
