"""Exact single-zero-mode Fock oracle for the collective dark state.

Only the zero-momentum photon mode and the zero-momentum collective atomic
modes are retained, which is the sector the dark state lives in.  The state
with N atoms and M_D excitations is a superposition over the number m of
spin-flipped atoms of basis kets |N-m>_g1 |m>_g2 |M_D-m>_phot; the module
builds it explicitly, applies the annihilation conditions, the photon
lowering identity and the zero-mode Hamiltonian, and exposes the conserved
number operators on a multi-sector box for commutator checks.

Operators are realized as explicit sparse matrices built on demand; nothing
is cached between calls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.special import gammaln

from .darkstate import log_norm_A
from .params import PhysicalParams

ORACLE_CAP = 10**4


@dataclass(frozen=True)
class FockSector:
    """Dark-sector amplitudes over the spin-flip number m = 0..min(N, M_D)."""

    n_atoms: int
    m_pol: int
    xi: float
    amps: np.ndarray

    def norm_error(self) -> float:
        return abs(float(np.sum(self.amps**2)) - 1.0)


def build_dark_state(n_atoms: int, m_pol: int, xi: float) -> FockSector:
    """Construct the normalized dark state of the (N, M_D) sector.

    Amplitude at m carries sign (-1)^m and squared weight
    xi^m N! M_D! / ((N-m)! (M_D-m)! m!) / A(N, M_D).
    """
    if n_atoms < 0 or m_pol < 0:
        raise ValueError("n_atoms and m_pol must be >= 0")
    if min(n_atoms, m_pol) > ORACLE_CAP:
        raise ValueError(f"oracle-scale-only: min(N, M_D) capped at {ORACLE_CAP}")
    if xi < 0:
        raise ValueError(f"xi must be >= 0, got {xi}")
    m_max = min(n_atoms, m_pol)
    m = np.arange(m_max + 1)
    if xi == 0.0:
        amps = np.zeros(m_max + 1)
        amps[0] = 1.0
        return FockSector(n_atoms, m_pol, xi, amps)
    log_a = log_norm_A(n_atoms, m_pol, xi)
    log_w = (
        m * math.log(xi)
        + gammaln(n_atoms + 1) - gammaln(n_atoms - m + 1)
        + gammaln(m_pol + 1) - gammaln(m_pol - m + 1)
        - gammaln(m + 1)
    )
    amps = np.where(m % 2 == 0, 1.0, -1.0) * np.exp(0.5 * (log_w - log_a))
    return FockSector(n_atoms, m_pol, xi, amps)


def dark_condition_residual(s: FockSector, p: PhysicalParams) -> tuple[float, float]:
    """Norms of the two annihilation-condition residuals (r_e, r_ds).

    r_e is the norm of the excited-state annihilator applied to the sector;
    the truncated sector carries no excited-state quanta, so it vanishes
    identically.  r_ds is the norm of
    (kappa a0 b1 / sqrt(L) + omega_c b2) |state>, which maps the sector
    (N, M_D) -> (N-1, M_D-1) and vanishes at machine precision for states
    built by :func:`build_dark_state` with xi = kappa^2/(omega_c^2 L).
    """
    r_e = 0.0
    n, m_pol = s.n_atoms, s.m_pol
    if n == 0 or m_pol == 0:
        return r_e, 0.0
    op = _ds_condition_operator(n, m_pol, p)
    return r_e, float(np.linalg.norm(op @ s.amps))


def _ds_condition_operator(n, m_pol, p):
    """Sparse map (N, M_D) -> (N-1, M_D-1) for kappa a0 b1/sqrt(L) + omega_c b2."""
    dim_src = min(n, m_pol) + 1
    dim_tgt = min(n - 1, m_pol - 1) + 1
    kappa_eff = p.kappa / math.sqrt(p.length)
    rows, cols, vals = [], [], []
    for m in range(dim_src):
        if m < dim_tgt:  # a0 b1 keeps m
            rows.append(m)
            cols.append(m)
            vals.append(kappa_eff * math.sqrt((m_pol - m) * (n - m)))
        if 1 <= m and m - 1 < dim_tgt:  # b2 lowers m
            rows.append(m - 1)
            cols.append(m)
            vals.append(p.omega_c * math.sqrt(m))
    return sparse.coo_matrix((vals, (rows, cols)), shape=(dim_tgt, dim_src)).tocsr()


def a0_action_ratio(n_atoms: int, m_pol: int, xi: float) -> tuple[float, float]:
    """Apply the zero-mode photon annihilator and project on the lower sector.

    Returns (ratio, ortho_residual): ratio = (projection/sqrt(M_D))^2, which
    equals Y(N, M_D) with c = 1/xi, and the norm of the component orthogonal
    to the lower dark state, which vanishes because the image is exactly
    parallel.
    """
    if m_pol < 1:
        raise ValueError("a0_action_ratio requires m_pol >= 1")
    upper = build_dark_state(n_atoms, m_pol, xi)
    lower = build_dark_state(n_atoms, m_pol - 1, xi)
    m = np.arange(upper.amps.size)
    image_full = upper.amps * np.sqrt(m_pol - m)  # still indexed by m
    image = image_full[: lower.amps.size]
    proj = float(np.dot(lower.amps, image))
    ortho = image - proj * lower.amps
    tail = image_full[lower.amps.size:]
    resid = math.sqrt(float(np.dot(ortho, ortho)) + float(np.dot(tail, tail)))
    return proj**2 / m_pol, resid


def _sector_basis(n_atoms, m_pol):
    """Basis (j, e) of the (N, M) sector: j spin flips, e excited atoms."""
    states = [
        (j, e)
        for j in range(min(n_atoms, m_pol) + 1)
        for e in range(min(n_atoms, m_pol) - j + 1)
    ]
    index = {st: i for i, st in enumerate(states)}
    return states, index


def sector_hamiltonian(n_atoms: int, m_pol: int, p: PhysicalParams):
    """Zero-mode Hamiltonian block of the (N, M) sector, as a sparse matrix.

    The kinetic term vanishes for the zero-momentum mode; what remains is
    -delta * e  - (kappa/sqrt(L)) (a0+ b1+ be + h.c.) - omega_c (b2+ be + h.c.)
    on the basis (j, e) with n1 = N-j-e, n_ph = M-j-e.
    """
    states, index = _sector_basis(n_atoms, m_pol)
    kappa_eff = p.kappa / math.sqrt(p.length)
    rows, cols, vals = [], [], []
    for i, (j, e) in enumerate(states):
        n1 = n_atoms - j - e
        n_ph = m_pol - j - e
        if e:
            rows.append(i)
            cols.append(i)
            vals.append(-p.delta * e)
            # a0+ b1+ be : (j, e) -> (j, e-1)
            k = index[(j, e - 1)]
            amp = -kappa_eff * math.sqrt(e * (n1 + 1) * (n_ph + 1))
            rows += [k, i]
            cols += [i, k]
            vals += [amp, amp]
            # b2+ be : (j, e) -> (j+1, e-1)
            k = index[(j + 1, e - 1)]
            amp = -p.omega_c * math.sqrt(e * (j + 1))
            rows += [k, i]
            cols += [i, k]
            vals += [amp, amp]
    dim = len(states)
    return sparse.coo_matrix((vals, (rows, cols)), shape=(dim, dim)).tocsr(), states


def zero_energy_check(n_atoms: int, m_pol: int, xi: float, p: PhysicalParams) -> float:
    """Norm of H |DS; N, M_D> in the zero-mode truncation; 0 for a dark state."""
    state = build_dark_state(n_atoms, m_pol, xi)
    ham, states = sector_hamiltonian(n_atoms, m_pol, p)
    vec = np.zeros(len(states))
    _, index = _sector_basis(n_atoms, m_pol)
    for m, amp in enumerate(state.amps):
        vec[index[(m, 0)]] = amp
    return float(np.linalg.norm(ham @ vec))


def box_operators(n_max: int, m_max: int, p: PhysicalParams):
    """H, N-hat, M-hat on the box of all sectors with N <= n_max, M <= m_max.

    Basis states are occupation tuples (n1, n2, ne, nph) with
    n1 + n2 + ne <= n_max and n2 + ne + nph <= m_max.  Every interaction term
    conserves both numbers, so the box is closed under H.
    """
    states = []
    for n2 in range(min(n_max, m_max) + 1):
        for ne in range(min(n_max, m_max) - n2 + 1):
            for n1 in range(n_max - n2 - ne + 1):
                for n_ph in range(m_max - n2 - ne + 1):
                    states.append((n1, n2, ne, n_ph))
    index = {st: i for i, st in enumerate(states)}
    dim = len(states)
    kappa_eff = p.kappa / math.sqrt(p.length)
    rows, cols, vals = [], [], []
    n_op = np.empty(dim)
    m_op = np.empty(dim)
    for i, (n1, n2, ne, n_ph) in enumerate(states):
        n_op[i] = n1 + n2 + ne
        m_op[i] = n2 + ne + n_ph
        if ne:
            rows.append(i)
            cols.append(i)
            vals.append(-p.delta * ne)
            k = index[(n1 + 1, n2, ne - 1, n_ph + 1)]
            amp = -kappa_eff * math.sqrt(ne * (n1 + 1) * (n_ph + 1))
            rows += [k, i]
            cols += [i, k]
            vals += [amp, amp]
            k = index[(n1, n2 + 1, ne - 1, n_ph)]
            amp = -p.omega_c * math.sqrt(ne * (n2 + 1))
            rows += [k, i]
            cols += [i, k]
            vals += [amp, amp]
    ham = sparse.coo_matrix((vals, (rows, cols)), shape=(dim, dim)).tocsr()
    return ham, sparse.diags(n_op).tocsr(), sparse.diags(m_op).tocsr()


def commutator_norms(n_max: int, m_max: int, p: PhysicalParams) -> tuple[float, float]:
    """Max-abs entries of [H, N-hat] and [H, M-hat] on the truncated box."""
    ham, n_op, m_op = box_operators(n_max, m_max, p)
    cn = ham @ n_op - n_op @ ham
    cm = ham @ m_op - m_op @ ham
    norm = lambda mat: float(np.max(np.abs(mat.toarray()))) if mat.nnz else 0.0
    return norm(cn), norm(cm)
