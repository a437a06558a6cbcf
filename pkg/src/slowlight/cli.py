"""Command-line entry point.

Subcommands map one-to-one onto the library modules and a JSON config file;
every output file carries a header with the tool version, the sha256 of the
config file, and the unit system.  Exit codes: 0 success, 2 config error,
3 numerical failure, 4 invariant-check failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, darkstate, dispersion, fockspace, propagation
from .errors import (
    ConfigError,
    InvariantError,
    NumericalError,
    SlowlightError,
    WaveBreakError,
)
from .params import params_from_dict, spectral_window

_TOP_KEYS = {
    "params", "seed", "output_dir",
    "dk", "vgr", "dispersion", "pulse", "solver", "fock", "meanfield",
}

_COMMANDS = {}


def command(name, *blocks):
    def wrap(fn):
        _COMMANDS[name] = (fn, blocks)
        return fn
    return wrap


class RunContext:
    """Parsed config plus output plumbing shared by all subcommands."""

    def __init__(self, config_path: Path, out_dir: Path | None, strict: bool):
        self.config_path = config_path
        raw = config_path.read_bytes()
        self.config_sha = hashlib.sha256(raw).hexdigest()
        try:
            self.cfg = json.loads(raw.decode("utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(
                f"config parse error at line {e.lineno}, column {e.colno}: {e.msg}"
            ) from None
        if not isinstance(self.cfg, dict):
            raise ConfigError("top-level config must be a JSON object")
        unknown = set(self.cfg) - _TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
        if "params" not in self.cfg:
            raise ConfigError("config must contain a 'params' object")
        self.params = params_from_dict(self.cfg["params"])
        self.seed = int(self.cfg.get("seed", 0))
        self.strict = strict
        out = out_dir or self.cfg.get("output_dir") or "."
        self.out_dir = Path(out)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.prefix = config_path.stem

    def block(self, name, defaults: dict):
        obj = self.cfg.get(name)
        if obj is None:
            obj = {}  # acceptable when every key has a default
        if not isinstance(obj, dict):
            raise ConfigError(f"'{name}' must be a JSON object")
        unknown = set(obj) - set(defaults)
        if unknown:
            raise ConfigError(f"unknown keys in '{name}': {sorted(unknown)}")
        merged = dict(defaults)
        merged.update(obj)
        missing = [k for k, v in merged.items() if v is _REQUIRED]
        if missing:
            raise ConfigError(f"missing keys in '{name}': {sorted(missing)}")
        return merged

    def header(self) -> str:
        return f"# slowlight {__version__} config_sha256={self.config_sha} units=um,us"

    def write_csv(self, name: str, columns: list[str], rows) -> Path:
        path = self.out_dir / name
        lines = [self.header(), ",".join(columns)]
        for row in rows:
            lines.append(",".join(_fmt(v) for v in row))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
        return path

    def write_json(self, name: str, obj: dict) -> Path:
        path = self.out_dir / name
        payload = {
            "tool": f"slowlight {__version__}",
            "config_sha256": self.config_sha,
            "units": "um,us",
        }
        payload.update(obj)
        path.write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        return path


_REQUIRED = object()


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _thread_map(fn, items):
    workers = int(os.environ.get("SLOWLIGHT_THREADS", "1") or "1")
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


@command("dk-curve", "dk")
def cmd_dk_curve(ctx: RunContext) -> int:
    blk = ctx.block("dk", {
        "rho": _REQUIRED,
        "n_atoms": _REQUIRED,
        "m_max_ratio": 2.0,
        "m_max": None,
    })
    pairs = [(float(r), int(n)) for r in blk["rho"] for n in blk["n_atoms"]]

    def run(pair):
        rho, n = pair
        m_max = int(blk["m_max"]) if blk["m_max"] else int(math.ceil(blk["m_max_ratio"] * n)) + 1
        m_ratio, y, k, d_k = darkstate.dk_curve(n, m_max, rho)
        return m_ratio, y, k, d_k

    results = _thread_map(run, pairs)
    summary = []
    for (rho, n), (m_ratio, y, k, d_k) in zip(pairs, results):
        name = f"dk_rho{rho:g}_N{n}.csv"
        ctx.write_csv(
            name,
            ["m_ratio", "Y_exact", "K_approx", "D_K"],
            zip(m_ratio.tolist(), y.tolist(), k.tolist(), d_k.tolist()),
        )
        i = int(np.argmax(np.abs(d_k)))
        half = np.nonzero(np.abs(d_k) >= 0.5 * abs(d_k[i]))[0]
        summary.append({
            "rho": rho,
            "n_atoms": n,
            "file": name,
            "max_abs_dk": abs(float(d_k[i])),
            "argmax_m_ratio": float(m_ratio[i]),
            "half_rise_m_ratio": float(m_ratio[half[0]]),
        })
    ctx.write_json("dk_summary.json", {"curves": summary})
    return 0


@command("vgr-curve", "vgr")
def cmd_vgr_curve(ctx: RunContext) -> int:
    blk = ctx.block("vgr", {"rho": _REQUIRED, "x_max": 10.0, "n_points": 2001})
    x = np.linspace(0.0, float(blk["x_max"]), int(blk["n_points"]))
    for rho in blk["rho"]:
        rho = float(rho)
        kappa = math.sqrt(ctx.params.omega_c**2 / (rho * ctx.params.n_1d))
        p = ctx.params.with_(kappa=kappa)
        v = dispersion.vgr_quantum(x * p.n_1d, p) / p.u
        ctx.write_csv(
            f"vgr_rho{rho:g}.csv",
            ["m_over_n", "vgr_over_u"],
            zip(x.tolist(), v.tolist()),
        )
    return 0


@command("dispersion", "dispersion")
def cmd_dispersion(ctx: RunContext) -> int:
    p = ctx.params
    g = p.coupling_g
    default_span = 3.0 * math.sqrt(g**2 + p.omega_c**2) / p.u
    blk = ctx.block("dispersion", {
        "dk_min": -default_span,
        "dk_max": default_span,
        "n_points": 801,
        "include_theta": False,
    })
    dk = np.linspace(float(blk["dk_min"]), float(blk["dk_max"]), int(blk["n_points"]))
    branches, _ = dispersion.dispersion_branches(dk, p)
    by_label = {b.label: b.omega for b in branches}
    columns = ["dk", "omega_dark", "omega_mid", "omega_upper"]
    cols = [dk, by_label["dark"], by_label["mid"], by_label["upper"]]
    if blk["include_theta"]:
        if p.delta == 0:
            raise ConfigError("include_theta requires a nonzero delta")
        _, _, theta = dispersion.adiabatic_two_level(p.u * dk, p)
        columns.append("theta")
        cols.append(np.asarray(theta))
    ctx.write_csv("dispersion.csv", columns, zip(*[c.tolist() for c in cols]))
    sidecar = {"v_gr0": dispersion.dark_branch_group_velocity(p)}
    try:
        sidecar["w_sl_dense"] = spectral_window(p, "dense")
    except SlowlightError:
        sidecar["w_sl_dense"] = None
    try:
        sidecar["w_sl_far_detuned"] = spectral_window(p, "far_detuned")
    except SlowlightError:
        sidecar["w_sl_far_detuned"] = None
    ctx.write_json("dispersion_summary.json", sidecar)
    return 0


def _pulse_cases(blk) -> dict[str, float]:
    peak = blk["peak_density"]
    if isinstance(peak, dict):
        return {str(k): float(v) for k, v in peak.items()}
    return {"pulse": float(peak)}


def _gaussian_inflow(peak_density: float, width: float, t0: float):
    amp = math.sqrt(peak_density)

    def inflow(t):
        t = np.asarray(t, dtype=float)
        out = amp * np.exp(-0.5 * ((t - t0) / width) ** 2) + 0.0j
        return out if out.ndim else complex(out)

    return inflow


def _peak_time(t: np.ndarray, series: np.ndarray) -> float:
    """Vertex of the parabola through the discrete maximum and its neighbors."""
    i = int(np.argmax(series))
    if i == 0 or i == series.size - 1:
        return float(t[i])
    y0, y1, y2 = series[i - 1], series[i], series[i + 1]
    denom = y0 - 2.0 * y1 + y2
    if denom == 0:
        return float(t[i])
    return float(t[i] - 0.5 * (t[i + 1] - t[i]) * (y2 - y0) / denom)


@command("propagate", "pulse", "solver")
def cmd_propagate(ctx: RunContext) -> int:
    pulse = ctx.block("pulse", {
        "shape": "gaussian",
        "peak_density": _REQUIRED,
        "width_us": _REQUIRED,
        "t0_us": None,
        "m_mean": None,
    })
    solver = ctx.block("solver", {
        "mode": "absorbing",
        "nz": 4096,
        "t_final_us": _REQUIRED,
        "output_every_us": None,
        "boundaries": "open",
        "max_steps": 200_000,
        "diffusion_velocity": "local",
        "snapshots": False,
        "n_snapshots": 9,
    })
    if pulse["shape"] != "gaussian":
        raise ConfigError(f"unsupported pulse shape {pulse['shape']!r}")
    if solver["mode"] not in ("lossless", "absorbing", "meanfield"):
        raise ConfigError(f"unknown solver mode {solver['mode']!r}")
    if solver["boundaries"] not in ("open", "periodic"):
        raise ConfigError(f"unknown boundaries {solver['boundaries']!r}")

    p = ctx.params
    grid = propagation.Grid1D(0.0, p.length, int(solver["nz"]))
    width = float(pulse["width_us"])
    sigma_t = width / math.sqrt(2.0)  # amplitude sigma for 1/e density half-width
    t0 = float(pulse["t0_us"]) if pulse["t0_us"] is not None else 3.5 * width
    t_final = float(solver["t_final_us"])
    out_every = solver["output_every_us"]
    out_every = float(out_every) if out_every is not None else t_final / 256

    summary = {}
    for label, peak in _pulse_cases(pulse).items():
        inflow = _gaussian_inflow(peak, sigma_t, t0)
        init = propagation.PulseState(
            grid, np.zeros(grid.nz, dtype=complex),
            m_mean=pulse["m_mean"], t=0.0,
        )
        if solver["mode"] == "lossless":
            result = _run_lossless(ctx, p, init, inflow, peak, t_final, out_every, solver, label)
        elif solver["mode"] == "absorbing":
            result = _run_absorbing(ctx, p, init, inflow, peak, t_final, out_every, solver, label)
        else:
            result = _run_meanfield_mode(ctx, p, grid, peak, width, t_final, out_every, label)
        summary[label] = result
    ctx.write_json(f"{ctx.prefix}_summary.json", {"cases": summary})
    return 0


def _run_lossless(ctx, p, init, inflow, peak, t_final, out_every, solver, label):
    if solver["boundaries"] != "open":
        raise ConfigError("lossless inflow runs require open boundaries")
    fan = propagation.build_fan(init, p, t_final, inflow=inflow)
    break_time = propagation.first_crossing_time(fan)
    if break_time is not None and break_time > t_final:
        break_time = None
    if break_time is not None and ctx.strict:
        raise WaveBreakError(f"wave-breaking at t = {break_time:g} us in strict mode")
    factor = init.fock_factor()
    t_grid = np.arange(0.0, t_final + 0.5 * out_every, out_every)
    p_in = propagation.flux_of_density(np.abs(inflow(t_grid)) ** 2, factor, p)
    # exit series directly from characteristic arrivals at z = L (exact transport)
    arr_t = fan.arrival_times(p.length)
    sel = np.isfinite(arr_t)
    if break_time is not None:
        sel &= arr_t <= break_time
    arr_t, arr_v = arr_t[sel], fan.value[sel]
    order = np.argsort(arr_t)
    arr_t, arr_v = arr_t[order], arr_v[order]
    flux_arr = propagation.flux_of_density(np.abs(arr_v) ** 2, factor, p)
    p_out = np.interp(t_grid, arr_t, flux_arr, left=0.0, right=float(flux_arr[-1]))
    ctx.write_csv(
        f"{ctx.prefix}_{label}.csv", ["t", "P_in", "P_out"],
        zip(t_grid.tolist(), p_in.tolist(), p_out.tolist()),
    )
    sent = _trapz(p_in, t_grid)
    got = _trapz(p_out, t_grid)
    return {
        "mode": "lossless",
        "peak_density": peak,
        "delay_us": _peak_time(t_grid, p_out) - _peak_time(t_grid, p_in),
        "transmitted_fraction": got / sent if sent > 0 else math.nan,
        "break_time_us": break_time,
    }


def _run_absorbing(ctx, p, init, inflow, peak, t_final, out_every, solver, label):
    snapshots = []
    take_snapshot = None
    if solver["snapshots"]:
        n_snap = int(solver["n_snapshots"])
        wanted = {round(k * t_final / max(n_snap - 1, 1), 9) for k in range(n_snap)}
        seen = set()

        def take_snapshot(t_now, psi):
            key = min(wanted, key=lambda w: abs(w - t_now))
            if abs(key - t_now) <= out_every and key not in seen:
                seen.add(key)
                snapshots.append((t_now, np.abs(psi) ** 2))

    state, rec = propagation.solve_advection_diffusion(
        init, p, t_final,
        inflow=inflow,
        inflow_peak_density=peak,
        output_every=out_every,
        max_steps=int(solver["max_steps"]),
        diffusion_velocity=solver["diffusion_velocity"],
        on_output=take_snapshot,
    )
    ctx.write_csv(
        f"{ctx.prefix}_{label}.csv", ["t", "P_in", "P_out"],
        zip(rec.t.tolist(), rec.p_in.tolist(), rec.p_out.tolist()),
    )
    factor = init.fock_factor()
    for k, (t_now, dens) in enumerate(snapshots):
        z = state.grid.centers()
        v = dispersion.vgr_quantum(factor * dens, p)
        ctx.write_csv(
            f"{ctx.prefix}_{label}_snap{k:02d}_t{t_now:g}.csv",
            ["z", "psi_sq", "v_gr"],
            zip(z.tolist(), dens.tolist(), np.asarray(v).tolist()),
        )
    sent = _trapz(rec.p_in, rec.t)
    got = _trapz(rec.p_out, rec.t)
    if got > sent * (1.0 + 1e-6):
        raise InvariantError(
            f"absorbing run emitted more than it received ({got:g} > {sent:g})"
        )
    return {
        "mode": "absorbing",
        "peak_density": peak,
        "delay_us": _peak_time(rec.t, rec.p_out) - _peak_time(rec.t, rec.p_in),
        "transmitted_fraction": got / sent if sent > 0 else math.nan,
        "break_time_us": None,
    }


def _run_meanfield_mode(ctx, p, grid, peak, width, t_final, out_every, label):
    # initial-value run: adiabatic dark pulse inside the medium, periodic box;
    # the temporal width maps to space through the weak-limit speed
    j_peak = float(
        darkstate.photon_density(peak, p.n_1d, p.photon_spin_ratio)
    )
    center = 0.25 * p.length
    sigma_z = max(width * dispersion.vgr_quantum(0.0, p), 4.0 * grid.dz)
    init = propagation.dark_meanfield_state(grid, p, j_peak, center, sigma_z)
    state, mon = propagation.integrate_mean_field(
        init, p, t_final, output_every=out_every, boundaries="periodic"
    )
    arrays = mon.as_arrays()
    ctx.write_csv(
        f"{ctx.prefix}_{label}.csv",
        ["t", "atom_error", "balance_residual", "excited_fraction", "centroid"],
        zip(
            arrays["t"].tolist(), arrays["atom_error"].tolist(),
            arrays["balance_residual"].tolist(),
            arrays["excited_fraction"].tolist(), arrays["centroid"].tolist(),
        ),
    )
    return {
        "mode": "meanfield",
        "peak_density": peak,
        "max_atom_error": float(np.max(arrays["atom_error"])),
        "max_balance_residual": float(np.max(arrays["balance_residual"])),
    }


@command("fock-verify", "fock")
def cmd_fock_verify(ctx: RunContext) -> int:
    blk = ctx.block("fock", {
        "n_max": 8,
        "m_max": 8,
        "xi": [0.1, 1.0, 10.0],
        "residual_threshold": 1e-12,
    })
    p0 = ctx.params
    thr = float(blk["residual_threshold"])
    report = []
    worst = 0.0
    for xi in blk["xi"]:
        xi = float(xi)
        # rescale kappa so the operator set is consistent with this xi
        kappa = p0.omega_c * math.sqrt(xi * p0.length)
        p = p0.with_(kappa=kappa)
        for n in range(int(blk["n_max"]) + 1):
            for m in range(int(blk["m_max"]) + 1):
                sector = fockspace.build_dark_state(n, m, xi)
                r_e, r_ds = fockspace.dark_condition_residual(sector, p)
                h_res = fockspace.zero_energy_check(n, m, xi, p)
                if m >= 1:
                    ratio, ortho = fockspace.a0_action_ratio(n, m, xi)
                    y = darkstate.y_exact(n, m, 1.0 / xi)
                    a0_err = abs(ratio - y) / y
                else:
                    ortho, a0_err = 0.0, 0.0
                worst = max(worst, r_e, r_ds, h_res, a0_err, ortho)
                report.append({
                    "sector": [n, m],
                    "xi": xi,
                    "r_e": r_e,
                    "r_ds": r_ds,
                    "a0_ratio_error": a0_err,
                    "a0_ortho_residual": ortho,
                    "h_residual": h_res,
                })
    ctx.write_json("fock_report.json", {
        "sectors": report,
        "worst_residual": worst,
        "threshold": thr,
    })
    if worst >= thr:
        raise InvariantError(f"fock-verify: worst residual {worst:g} >= {thr:g}")
    return 0


@command("meanfield-compare", "meanfield")
def cmd_meanfield_compare(ctx: RunContext) -> int:
    blk = ctx.block("meanfield", {
        "j_peak": _REQUIRED,
        "center_um": _REQUIRED,
        "sigma_um": _REQUIRED,
        "nz": 512,
        "t_final_us": _REQUIRED,
        "output_every_us": None,
    })
    p = ctx.params
    grid = propagation.Grid1D(0.0, p.length, int(blk["nz"]))
    t_final = float(blk["t_final_us"])
    out_every = blk["output_every_us"]
    out_every = float(out_every) if out_every is not None else t_final / 32
    init = propagation.dark_meanfield_state(
        grid, p, float(blk["j_peak"]), float(blk["center_um"]), float(blk["sigma_um"])
    )
    state, mon = propagation.integrate_mean_field(
        init, p, t_final, output_every=out_every, boundaries="periodic"
    )
    arrays = mon.as_arrays()
    # reduced (single-field) transport of the same initial envelope
    e_red, _, _ = propagation.solve_reduced_meanfield(
        grid, init.e_field, p, t_final, boundaries="periodic"
    )
    z = grid.centers()
    j_red = np.abs(e_red) ** 2
    centroid_red = float(np.sum(z * j_red) / np.sum(j_red))
    speed_full = (arrays["centroid"][-1] - arrays["centroid"][0]) / t_final
    speed_red = (centroid_red - arrays["centroid"][0]) / t_final
    ctx.write_csv(
        "meanfield_compare.csv",
        ["z", "j_full", "j_reduced"],
        zip(z.tolist(), (np.abs(state.e_field) ** 2).tolist(), j_red.tolist()),
    )
    ctx.write_json("meanfield_summary.json", {
        "speed_full": speed_full,
        "speed_reduced": speed_red,
        "rel_speed_error": abs(speed_full - speed_red) / abs(speed_red),
        "max_atom_error": float(np.max(arrays["atom_error"])),
        "max_balance_residual": float(np.max(arrays["balance_residual"])),
        "max_excited_fraction": float(np.max(arrays["excited_fraction"])),
    })
    return 0


def _trapz(y, x) -> float:
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(x)))


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="slowlight",
        description="Slow-light polariton simulation toolkit (units: um, us).",
    )
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=True, type=Path)
    parser.add_argument("--out", type=Path, default=None, help="output directory")
    parser.add_argument(
        "--strict", action="store_true",
        help="treat wave breaking before the output time as an error",
    )
    args = parser.parse_args(argv)
    try:
        ctx = RunContext(args.config, args.out, args.strict)
        fn, _ = _COMMANDS[args.command]
        return fn(ctx)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except InvariantError as e:
        print(f"invariant check failed: {e}", file=sys.stderr)
        return 4
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 3
    except FileNotFoundError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
