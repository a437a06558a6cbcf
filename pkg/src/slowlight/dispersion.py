"""Single-excitation spectra and closed-form group velocities.

The single-excitation block of the full Hamiltonian at wavenumber offset dk
is the real symmetric 3x3 matrix

    [[ u dk,   -g,      0   ],
     [ -g,     -delta,  -omega_c ],
     [ 0,      -omega_c, 0  ]]

in the {photon, excited, spin} basis, with g = kappa sqrt(n_1d).  At dk = 0
the vector (omega_c, 0, -g) is annihilated: the dark branch.  The module also
implements the adiabatically eliminated two-level model valid at large
one-photon detuning, and the intensity-dependent group-velocity formulas in
both the polariton-density and the probe-Rabi-frequency forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ParamsError
from .params import PhysicalParams

BRANCH_LABELS = ("dark", "mid", "upper")


def hamiltonian_3x3(dk: float, p: PhysicalParams) -> np.ndarray:
    g = p.coupling_g
    return np.array([
        [p.u * dk, -g, 0.0],
        [-g, -p.delta, -p.omega_c],
        [0.0, -p.omega_c, 0.0],
    ])


@dataclass
class DispersionBranch:
    """One tracked eigenbranch: omega(dk) with a persistent label."""

    dk_grid: np.ndarray
    omega: np.ndarray
    label: str
    theta: np.ndarray | None = None  # mixing angle, two-level model only


def dispersion_branches(dk_grid, p: PhysicalParams, min_overlap: float = 0.7):
    """Track the three branches over dk_grid by eigenvector continuity.

    Labels are assigned at the grid point closest to dk = 0 (dark = the
    branch through omega = 0, the other two ordered by eigenvalue) and
    propagated by maximal eigenvector overlap.  Overlap below ``min_overlap``
    between neighboring grid points raises instead of mislabeling.
    """
    dk_grid = np.asarray(dk_grid, dtype=float)
    if dk_grid.ndim != 1 or dk_grid.size < 2:
        raise ParamsError("dk_grid must be a 1-D array with at least 2 points")
    i0 = int(np.argmin(np.abs(dk_grid)))

    omegas = np.empty((dk_grid.size, 3))
    vecs = np.empty((dk_grid.size, 3, 3))
    anchor = _anchor_eigensystem(dk_grid[i0], p)
    for sweep in (range(i0, -1, -1), range(i0, dk_grid.size)):
        ref = anchor
        for i in sweep:
            w, v = np.linalg.eigh(hamiltonian_3x3(dk_grid[i], p))
            cols = _match_columns(ref, v, min_overlap)
            omegas[i] = w[cols]
            vecs[i] = v[:, cols]
            ref = vecs[i]
    branches = [
        DispersionBranch(dk_grid, omegas[:, k].copy(), BRANCH_LABELS[k])
        for k in range(3)
    ]
    return branches, vecs


def _anchor_eigensystem(dk0: float, p: PhysicalParams) -> np.ndarray:
    """Columns (dark, mid, upper) at the anchor point, from the dk=0 labels."""
    w, v = np.linalg.eigh(hamiltonian_3x3(dk0, p))
    g = p.coupling_g
    dark_ref = np.array([p.omega_c, 0.0, -g])
    dark_ref /= np.linalg.norm(dark_ref)
    k_dark = int(np.argmax(np.abs(dark_ref @ v)))
    others = [k for k in range(3) if k != k_dark]
    others.sort(key=lambda k: w[k])  # mid below upper
    return v[:, [k_dark, others[0], others[1]]]


def _match_columns(ref: np.ndarray, v: np.ndarray, min_overlap: float):
    overlaps = np.abs(ref.T @ v)  # (branch, new column)
    cols = []
    taken = set()
    for b in range(3):
        for c in np.argsort(overlaps[b])[::-1]:
            if c not in taken:
                break
        if overlaps[b, c] < min_overlap:
            raise NumericalError(
                f"branch tracking lost: overlap {overlaps[b, c]:.3f} < {min_overlap}; "
                "refine the dk grid"
            )
        taken.add(c)
        cols.append(int(c))
    return cols


def single_excitation_spectrum(dk: float, p: PhysicalParams, n_track: int = 129):
    """Eigenpairs of the 3x3 block at dk, labeled by continuation from dk = 0.

    Returns (omegas, vectors, labels) sorted by eigenvalue; vectors are the
    matrix columns.
    """
    if dk == 0.0:
        w, v = np.linalg.eigh(hamiltonian_3x3(0.0, p))
        cols = _match_columns(_anchor_eigensystem(0.0, p), v, 0.5)
        label_of = {cols[k]: BRANCH_LABELS[k] for k in range(3)}
        labels = [label_of[k] for k in range(3)]
        return w, v, labels
    grid = np.linspace(0.0, dk, n_track)
    branches, vecs = dispersion_branches(grid, p)
    w_last = np.array([b.omega[-1] for b in branches])
    order = np.argsort(w_last)
    labels = [branches[k].label for k in order]
    return w_last[order], vecs[-1][:, order], labels


def _dark_root(k_tilde: float, p: PhysicalParams) -> float:
    """Dark eigenvalue of the 3x3 block, polished by Newton on the cubic.

    The characteristic polynomial is
    (k - lam)(lam^2 + delta lam - omega_c^2) + g^2 lam; near dk = 0 the dark
    root is far better conditioned through the polynomial than through a
    dense eigensolve, whose absolute error floor ~ eps * ||H|| would swamp
    the O(v * h) eigenvalue shift used by the finite difference.
    """
    if k_tilde == 0.0:
        return 0.0
    g2 = p.coupling_g**2
    o2 = p.omega_c**2
    lam = k_tilde * o2 / (o2 + g2)
    for _ in range(100):
        quad = lam * lam + p.delta * lam - o2
        f = (k_tilde - lam) * quad + g2 * lam
        df = -quad + (k_tilde - lam) * (2.0 * lam + p.delta) + g2
        step = f / df
        lam -= step
        if abs(step) <= 1e-16 * abs(lam):
            break
    return lam


def dark_branch_group_velocity(p: PhysicalParams) -> float:
    """Slope of the dark branch at dk = 0 [um/us].

    Central finite difference with one Richardson level, step
    h = 1e-6 omega_c^2/(u g).  Matches the weak-field closed form
    u rho/(1 + rho) to machine precision for any detuning, since the dark
    eigenvector at dk = 0 does not involve delta.
    """
    if p.kappa <= 0:
        raise ParamsError("coupling-off: dark branch undefined for kappa = 0")
    h = 1e-6 * p.omega_c**2 / (p.u * p.coupling_g)
    f = lambda dk: _dark_root(p.u * dk, p)
    d1 = (f(h) - f(-h)) / (2.0 * h)
    d2 = (f(h / 2) - f(-h / 2)) / h
    return (4.0 * d2 - d1) / 3.0


def weak_limit_velocity(p: PhysicalParams) -> float:
    """Closed-form weak-field group velocity u rho/(1+rho) [um/us]."""
    rho = p.rho
    return p.u * rho / (1.0 + rho)


def vgr_quantum(p_s, p: PhysicalParams):
    """Intensity-dependent group velocity at polariton density P_S [um/us].

    v = (u/2) [1 + t/sqrt(t^2 + 4 rho)], t = P_S/n_1d - 1 + rho; evaluated
    through the conjugate pair for t < 0, where the direct form cancels
    catastrophically deep in the slow branch.  Monotone nondecreasing in P_S,
    always in (0, u).
    """
    rho = p.rho
    x = np.asarray(p_s, dtype=float) / p.n_1d
    t = x - 1.0 + rho
    s = np.sqrt(t * t + 4.0 * rho)
    out = np.where(t >= 0, 0.5 * p.u * (s + t) / s, 2.0 * p.u * rho / (s * (s - t)))
    if out.ndim == 0:
        return float(out)
    return out


def vgr_kuang(j, p: PhysicalParams):
    """Group velocity in terms of the photon density J (probe Rabi form).

    v = u (Op^2 + Oc^2)^2 / [(Op^2 + Oc^2)^2 + Oc^2 kappa^2 n_1d] with
    Op^2 = kappa^2 J.  Equivalent to :func:`vgr_quantum` under the map
    :func:`polariton_density_from_photon`.
    """
    w = (p.kappa**2 * np.asarray(j, dtype=float) + p.omega_c**2) ** 2
    out = p.u * w / (w + p.omega_c**2 * p.kappa**2 * p.n_1d)
    if out.ndim == 0:
        return float(out)
    return out


def polariton_density_from_photon(j, p: PhysicalParams):
    """Map photon density J to polariton density P_S [1/um].

    P_S = J (1 + kappa^2 Xi / omega_c^2) with the ground-state density
    Xi = n_1d / (1 + kappa^2 J / omega_c^2) fixed by atom-number conservation.
    """
    j = np.asarray(j, dtype=float)
    q = p.kappa**2 * j / p.omega_c**2
    xi_dens = p.n_1d / (1.0 + q)
    out = j * (1.0 + p.kappa**2 * xi_dens / p.omega_c**2)
    if out.ndim == 0:
        return float(out)
    return out


def adiabatic_two_level(domega, p: PhysicalParams):
    """Eigenfrequencies and mixing angle of the large-detuning 2x2 model.

    omega_pm = (b + dw)/2 +- sqrt((b + dw)^2/4 - omega_c^2 dw / delta) with
    b = (g^2 + omega_c^2)/delta; cot(theta) = (omega_c/g)(1 - dw/omega_plus).
    The smaller-magnitude root is computed from the Vieta product, which
    keeps omega(0) = 0 exact and avoids cancellation.
    """
    if p.delta == 0:
        raise ParamsError("adiabatic-elimination-invalid: delta = 0")
    g = p.coupling_g
    dw = np.asarray(domega, dtype=float)
    b = (g**2 + p.omega_c**2) / p.delta
    half_sum = 0.5 * (b + dw)
    prod = p.omega_c**2 * dw / p.delta
    disc = half_sum * half_sum - prod
    if np.any(disc < 0):
        raise NumericalError("two-level discriminant negative; inputs not real-symmetric")
    root = np.sqrt(disc)
    big = np.where(half_sum >= 0, half_sum + root, half_sum - root)
    big_safe = np.where(big == 0, 1.0, big)
    small = np.where(big == 0, half_sum, prod / big_safe)
    om_plus = np.maximum(big, small)
    om_minus = np.minimum(big, small)
    om_plus_safe = np.where(om_plus == 0, 1.0, om_plus)
    cot = (p.omega_c / g) * (1.0 - dw / om_plus_safe)
    theta = np.arctan2(1.0, cot)
    if om_plus.ndim == 0:
        return float(om_plus), float(om_minus), float(theta)
    return om_plus, om_minus, theta


def adiabatic_dark_branch(domega, p: PhysicalParams):
    """The two-level branch continuing through omega(0) = 0 (the dark one)."""
    om_plus, om_minus, _ = adiabatic_two_level(domega, p)
    return om_minus if p.delta > 0 else om_plus


def dark_branch_classifier(
    domega_grid,
    p: PhysicalParams,
    velocity_threshold: float = 0.5,
    overlap_threshold: float = 0.9,
    n_kappa: int = 60,
):
    """Classify the (-) branch per two-photon detuning as slow, fast or mixed.

    slow: the branch both propagates slowly, |d omega / d domega| below
    ``velocity_threshold`` (the ratio of group velocity to u), and continues
    adiabatically to the pure-photon state as kappa -> 0 with overlap above
    ``overlap_threshold``.  fast: the velocity test fails.  mixed: slow but
    not photon-continued (a frozen spin-like excitation).
    """
    if p.delta == 0:
        raise ParamsError("adiabatic-elimination-invalid: delta = 0")
    dw_grid = np.atleast_1d(np.asarray(domega_grid, dtype=float))
    scale = (p.coupling_g**2 + p.omega_c**2) / abs(p.delta)
    h = 1e-5 * scale
    labels = []
    for dw in dw_grid:
        _, minus_hi, _ = adiabatic_two_level(dw + h, p)
        _, minus_lo, _ = adiabatic_two_level(dw - h, p)
        vel_ratio = abs((minus_hi - minus_lo) / (2.0 * h))
        overlap = _photon_continuation_overlap(dw, p, n_kappa)
        if vel_ratio >= velocity_threshold:
            labels.append("fast")
        elif overlap > overlap_threshold:
            labels.append("slow")
        else:
            labels.append("mixed")
    return labels if np.ndim(domega_grid) else labels[0]


def _photon_continuation_overlap(dw: float, p: PhysicalParams, n_kappa: int) -> float:
    """Track the (-) eigenvector while kappa is scaled to 0; overlap with |1>."""
    vec = None
    for frac in np.linspace(1.0, 0.0, n_kappa):
        kappa = p.kappa * frac
        g = kappa * math.sqrt(p.n_1d)
        ham = np.array([
            [dw + g**2 / p.delta, g * p.omega_c / p.delta],
            [g * p.omega_c / p.delta, p.omega_c**2 / p.delta],
        ])
        w, v = np.linalg.eigh(ham)
        if vec is None:
            vec = v[:, 0]  # eigh sorts ascending: column 0 is the (-) branch
            continue
        k = int(np.argmax(np.abs(vec @ v)))
        vec = v[:, k]
    return abs(vec[0])
