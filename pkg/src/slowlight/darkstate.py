"""Collective dark-state combinatorics, exact and approximate.

The sector with N atoms and M_D collective excitations has a normalization
sum A(N, M_D) over the number m of spin-flipped atoms.  Its successive ratio
Y(N, M_D) = A(N, M_D - 1) / A(N, M_D) is the squared photon fraction removed
by the zero-mode photon annihilator, and the closed-form ratio
K(P_S, P_Q) = J(P_S, P_Q) / P_S approximates Y at mean-field densities.

All A-sums run in the log domain with a running-maximum shift
(``np.logaddexp`` accumulation); direct-space summation overflows well below
the particle numbers needed here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import ParamsError
from .params import PhysicalParams


def log_norm_A(n_atoms: int, m_pol: int, xi: float) -> float:
    """Natural log of A(N, M_D) = sum_m [N! M_D! / ((N-m)!(M_D-m)! m!)] xi^m.

    xi = kappa^2/(omega_c^2 L) is the squared single-atom spin-flip weight.
    Every summand is strictly positive, so the streaming log-domain
    accumulation is exact up to rounding.
    """
    n_atoms, m_pol = _check_sector(n_atoms, m_pol, m_min=0)
    if xi < 0:
        raise ValueError(f"xi must be >= 0, got {xi}")
    m_max = min(n_atoms, m_pol)
    if m_max == 0 or xi == 0.0:
        return 0.0
    m = np.arange(m_max + 1)
    terms = (
        gammaln(n_atoms + 1) - gammaln(n_atoms - m + 1)
        + gammaln(m_pol + 1) - gammaln(m_pol - m + 1)
        - gammaln(m + 1) + m * math.log(xi)
    )
    return float(np.logaddexp.accumulate(terms)[-1])


@dataclass(frozen=True)
class DarkStateCoeffs:
    """Normalization data of one dark sector."""

    n_atoms: int
    m_pol: int
    xi: float
    log_norm: float

    @classmethod
    def build(cls, n_atoms: int, m_pol: int, xi: float) -> "DarkStateCoeffs":
        return cls(n_atoms, m_pol, xi, log_norm_A(n_atoms, m_pol, xi))


def y_exact(n_atoms: int, m_pol: int, c: float) -> float:
    """Exact ratio Y(N, M_D) = A(N, M_D-1)/A(N, M_D) by the diagonal recursion.

    c = omega_c^2 L / kappa^2 = 1/xi.  The recursion
    Y(N, M) = (c + (M-1) Y(N-1, M-1)) / (N + c + (M-1) Y(N-1, M-1))
    descends the diagonal until it hits one of the exact seeds
    Y(n, 1) = c/(n + c) or Y(0, m) = 1 (the atom-free sector is pure photons).
    Result lies in (0, 1].
    """
    n_atoms, m_pol = _check_sector(n_atoms, m_pol, m_min=1)
    if c < 0:
        raise ValueError(f"c must be >= 0, got {c}")
    j_max = min(m_pol - 1, n_atoms)
    if m_pol - j_max == 1:
        y = c / ((n_atoms - j_max) + c)
    else:  # descended to N = 0 before M reached 1
        y = 1.0
    for j in range(j_max - 1, -1, -1):
        t = c + (m_pol - j - 1) * y
        y = t / ((n_atoms - j) + t)
    return y


def y_curve(n_atoms: int, m_max: int, c: float) -> np.ndarray:
    """Y(N, M_D) for M_D = 1..m_max, sharing the diagonal sweeps.

    Equivalent to ``[y_exact(N, M, c) for M in 1..m_max]`` but vectorized over
    the diagonals, O(N * m_max) total work.
    """
    n_atoms, m_max = _check_sector(n_atoms, m_max, m_min=1)
    targets = np.arange(1, m_max + 1)
    val = np.ones(m_max)  # Y(0, m) seeds for targets with M_D > N
    for n in range(1, n_atoms + 1):
        m = n - n_atoms + targets  # polariton index reached on each diagonal
        seed = m == 1
        val[seed] = c / (n + c)
        upd = m >= 2
        t = c + (m[upd] - 1) * val[upd]
        val[upd] = t / (n + t)
    return val


@dataclass(frozen=True)
class DensityPair:
    """Mean-field linear densities: polaritons p_s and atoms p_q [1/um]."""

    p_s: float
    p_q: float

    def __post_init__(self):
        if not (self.p_s >= 0):
            raise ParamsError(f"p_s={self.p_s} must be >= 0")
        if not (self.p_q > 0):
            raise ParamsError(f"p_q={self.p_q} must be > 0")


def photon_density(p_s, p_q, a):
    """Photon density J(P_S, P_Q) with a = omega_c^2/kappa^2 [1/um].

    J = (P_S - P_Q - a)/2 + sqrt((P_S - P_Q - a)^2/4 + a P_S), the
    non-negative root of the quadratic constraint.  The conjugate-pair form
    is used where the half-difference is negative to avoid cancellation.
    Satisfies 0 <= J <= P_S.
    """
    p_s = np.asarray(p_s, dtype=float)
    b = p_s - p_q - a
    root = np.sqrt(0.25 * b * b + a * p_s)
    with np.errstate(invalid="ignore", divide="ignore"):
        conj = np.where(root - 0.5 * b > 0, a * p_s / (root - 0.5 * b), 0.0)
    out = np.where(b >= 0, 0.5 * b + root, conj)
    if out.ndim == 0:
        return float(out)
    return out


def photon_fraction(p_s, p_q, a):
    """Photon-to-polariton ratio K = J/P_S, in (0, 1].

    Below the threshold P_S < 1e-12 * P_Q the stable limit form
    K = a/(P_Q + a) replaces the 0/0 ratio; the two branches agree at the
    seam to better than 1e-10 relative.
    """
    p_s = np.asarray(p_s, dtype=float)
    small = p_s < 1e-12 * p_q
    safe = np.where(small, 1.0, p_s)
    ratio = photon_density(safe, p_q, a) / safe
    out = np.where(small, a / (p_q + a), ratio)
    if out.ndim == 0:
        return float(out)
    return out


def j_of(d: DensityPair, p: PhysicalParams) -> float:
    """Photon density J at the given density pair [1/um]."""
    return photon_density(d.p_s, d.p_q, p.photon_spin_ratio)


def k_of(d: DensityPair, p: PhysicalParams) -> float:
    """Photon fraction K at the given density pair, dimensionless."""
    return photon_fraction(d.p_s, d.p_q, p.photon_spin_ratio)


def dk_error(n_atoms: int, m_pol: int, p: PhysicalParams) -> float:
    """Deviation D_K = Y(N, M_D) - K((M_D-1)/L, N/L) of the closed form.

    K is scale-invariant, so it is evaluated on the box-scaled triple
    (M_D - 1, N, c of the params); at M_D = 1 both branches reduce to the
    identical expression c/(N + c) and D_K vanishes exactly.
    """
    c = p.c_box
    return y_exact(n_atoms, m_pol, c) - photon_fraction(float(m_pol - 1), float(n_atoms), c)


def dk_curve(n_atoms: int, m_max: int, rho: float):
    """Exact/approximate comparison over M_D = 1..m_max at fixed N and rho.

    rho fixes c = rho * N (atom density N/L folded into the box scale).
    Returns (m_ratio, y, k, d_k) arrays with m_ratio = (M_D - 1)/N.
    """
    if rho <= 0:
        raise ValueError(f"rho must be > 0, got {rho}")
    c = rho * n_atoms
    y = y_curve(n_atoms, m_max, c)
    m_pol = np.arange(1, m_max + 1)
    k = photon_fraction(m_pol - 1.0, float(n_atoms), c)
    return (m_pol - 1.0) / n_atoms, y, k, y - k


def _check_sector(n_atoms, m_pol, m_min: int):
    for name, val, lo in (("n_atoms", n_atoms, 0), ("m_pol", m_pol, m_min)):
        if not isinstance(val, (int, np.integer)) or isinstance(val, bool):
            raise ValueError(f"{name} must be an integer, got {val!r}")
        if val < lo:
            raise ValueError(f"sector-exhausted: {name}={val} below {lo}")
    return int(n_atoms), int(m_pol)
