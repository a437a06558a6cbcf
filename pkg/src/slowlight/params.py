"""Physical constants, unit conventions, and the validated parameter set.

Unit system: micrometers and microseconds throughout.  Frequencies, detunings
and decay rates are in 1/us, linear densities in 1/um, the atom-field coupling
``kappa`` in us^-1 um^(1/2), so that ``kappa * sqrt(n_1d)`` is a collective
Rabi-type frequency in 1/us.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import ConfigError, ParamsError

C_LIGHT_UM_PER_US = 299792.458

# SI values, used only by the dipole -> kappa convenience converter.
_HBAR_SI = 1.054571817e-34  # J s
_EPS0_SI = 8.8541878128e-12  # F / m

_FIELDS = (
    "u", "kappa", "omega_c", "n_1d", "length",
    "delta", "gamma", "mode_area", "sigma0",
)


@dataclass(frozen=True)
class PhysicalParams:
    """Experimental constants of the guided-probe three-level medium.

    u         : probe phase velocity in the guide [um/us]
    kappa     : atom-field coupling [us^-1 um^(1/2)]
    omega_c   : coupling Rabi frequency [1/us]
    n_1d      : linear atomic density [1/um]
    length    : medium length [um]
    delta     : one-photon detuning [1/us]
    gamma     : half radiative decay rate of the excited state [1/us]
    mode_area : effective probe mode area [um^2]
    sigma0    : resonant absorption cross-section [um^2]
    """

    u: float
    kappa: float
    omega_c: float
    n_1d: float
    length: float
    delta: float
    gamma: float
    mode_area: float
    sigma0: float

    def __post_init__(self):
        for name in _FIELDS:
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ParamsError(f"{name} must be a number, got {value!r}")
            if not math.isfinite(value):
                raise ParamsError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, float(value))
        positivity = {
            "u": self.u > 0, "omega_c": self.omega_c > 0, "n_1d": self.n_1d > 0,
            "length": self.length > 0, "mode_area": self.mode_area > 0,
            "kappa": self.kappa >= 0, "gamma": self.gamma >= 0,
            "sigma0": self.sigma0 >= 0,
        }
        for name, ok in positivity.items():
            if not ok:
                raise ParamsError(f"{name}={getattr(self, name)} out of range")

    # -- derived quantities ------------------------------------------------

    @property
    def rho(self) -> float:
        """Saturation ratio omega_c^2 / (kappa^2 n_1d), dimensionless."""
        if self.kappa == 0:
            raise ParamsError("coupling-off: rho undefined for kappa = 0")
        return self.omega_c**2 / (self.kappa**2 * self.n_1d)

    @property
    def coupling_g(self) -> float:
        """Collective coupling kappa*sqrt(n_1d) [1/us]."""
        return self.kappa * math.sqrt(self.n_1d)

    @property
    def photon_spin_ratio(self) -> float:
        """omega_c^2/kappa^2 [1/um]; the density scale of the photon fraction."""
        if self.kappa == 0:
            raise ParamsError("coupling-off: omega_c^2/kappa^2 undefined for kappa = 0")
        return self.omega_c**2 / self.kappa**2

    @property
    def c_box(self) -> float:
        """omega_c^2 * length / kappa^2, the dimensionless box-scale constant."""
        return self.photon_spin_ratio * self.length

    @property
    def xi(self) -> float:
        """kappa^2 / (omega_c^2 * length), reciprocal of :attr:`c_box`."""
        return self.kappa**2 / (self.omega_c**2 * self.length)

    @property
    def beer_length(self) -> float:
        """Absorption length mode_area / (n_1d * sigma0) [um]."""
        if self.sigma0 == 0:
            raise ParamsError("no-absorption-data: sigma0 = 0")
        return self.mode_area / (self.n_1d * self.sigma0)

    def with_(self, **kwargs) -> "PhysicalParams":
        return replace(self, **kwargs)


def derived_rho(p: PhysicalParams) -> float:
    """Dimensionless slow-down parameter omega_c^2/(kappa^2 n_1d)."""
    return p.rho


def optical_density(p: PhysicalParams) -> float:
    """Optical density s = length / beer_length = L n_1d sigma0 / A."""
    return p.length / p.beer_length


def spectral_window(p: PhysicalParams, regime: str) -> float:
    """Width of the slow-propagation spectral window [1/us].

    regime = "dense": omega_c^2 / (gamma sqrt(s)) for an optically dense
    medium (requires s > 1 and gamma > 0).
    regime = "far_detuned": (kappa^2 n_1d + omega_c^2) / |delta| (requires
    delta != 0).
    """
    if regime == "dense":
        if p.gamma <= 0:
            raise ParamsError("spectral_window(dense): gamma must be > 0")
        s = optical_density(p)
        if s <= 1:
            raise ParamsError(f"spectral_window(dense): optical density s={s:g} must exceed 1")
        return p.omega_c**2 / (p.gamma * math.sqrt(s))
    if regime == "far_detuned":
        if p.delta == 0:
            raise ParamsError("spectral_window(far_detuned): delta must be nonzero")
        return (p.kappa**2 * p.n_1d + p.omega_c**2) / abs(p.delta)
    raise ParamsError(f"unknown spectral-window regime {regime!r}")


def kappa_from_dipole(d_si: float, omega0_si: float, mode_area_um2: float) -> float:
    """Convert dipole data to the coupling constant.

    d_si is the transition dipole projection in C*m, omega0_si the carrier
    frequency in rad/s, mode_area_um2 the effective mode area in um^2.
    Returns kappa in us^-1 um^(1/2).
    """
    if d_si <= 0 or omega0_si <= 0 or mode_area_um2 <= 0:
        raise ParamsError("dipole conversion requires positive d, omega0, mode area")
    area_si = mode_area_um2 * 1e-12  # m^2
    kappa_si = d_si * math.sqrt(omega0_si / (2.0 * _HBAR_SI * _EPS0_SI * area_si))
    return kappa_si * 1e-3  # s^-1 m^(1/2)  ->  us^-1 um^(1/2)


def params_from_dict(obj: dict) -> PhysicalParams:
    """Build a validated parameter set from the JSON ``"params"`` object.

    The nine declared fields are required, except that ``kappa`` may be
    replaced by a ``"dipole": {"d": ..., "omega0": ...}`` block (d in C*m,
    omega0 in rad/s).  Unknown keys are a hard error.
    """
    if not isinstance(obj, dict):
        raise ConfigError("'params' must be a JSON object")
    obj = dict(obj)
    dipole = obj.pop("dipole", None)
    allowed = set(_FIELDS)
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in 'params': {sorted(unknown)}")
    if dipole is not None:
        if "kappa" in obj:
            raise ConfigError("'params' must not define both 'kappa' and 'dipole'")
        if not isinstance(dipole, dict) or set(dipole) != {"d", "omega0"}:
            raise ConfigError("'dipole' must be an object with exactly the keys 'd' and 'omega0'")
        if "mode_area" not in obj:
            raise ConfigError("'dipole' conversion requires 'mode_area'")
        obj["kappa"] = kappa_from_dipole(dipole["d"], dipole["omega0"], obj["mode_area"])
    missing = allowed - set(obj)
    if missing:
        raise ConfigError(f"missing keys in 'params': {sorted(missing)}")
    return PhysicalParams(**obj)
