"""Reservoir models, spectral densities, and derived mode constants.

All frequencies and rates are plain floats in one consistent unit system.
The bundled presets use the weak-coupling decay rate of the emitter
(4 * coupling**2 / width) as the frequency unit, so typical magnitudes
are of order one and times are measured in inverse decay rates.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyWarning, NonPhysical

__all__ = [
    "TimeGrid",
    "LorentzianModel",
    "BandGapModel",
    "TwoPseudomodeConstants",
    "lorentzian_density",
    "bandgap_density",
    "derive_two_pseudomode_constants",
]


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid of ``n_steps`` points spanning [t_start, t_end]."""

    t_start: float
    t_end: float
    n_steps: int

    def __post_init__(self) -> None:
        if not self.t_end > self.t_start:
            raise ValueError(
                f"t_end must exceed t_start, got [{self.t_start}, {self.t_end}]"
            )
        if self.n_steps < 2:
            raise ValueError(f"n_steps must be at least 2, got {self.n_steps}")

    @property
    def dt(self) -> float:
        return (self.t_end - self.t_start) / (self.n_steps - 1)

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, self.n_steps)


@dataclass(frozen=True)
class LorentzianModel:
    """Single-peak reservoir: the emitter couples to one damped mode.

    Attributes
    ----------
    omega0:
        Emitter transition frequency.
    omega_c:
        Center frequency of the reservoir peak (the mode frequency).
    gamma:
        Full width of the peak, equal to the decay rate of the mode.
    omega_coupling:
        Emitter-mode coupling strength.
    """

    omega0: float
    omega_c: float
    gamma: float
    omega_coupling: float

    def __post_init__(self) -> None:
        problems = []
        fields = (self.omega0, self.omega_c, self.gamma, self.omega_coupling)
        if not all(np.isfinite(fields)):
            problems.append(f"parameters must be finite, got {fields}")
        # gamma = 0 is the lossless limit (undamped mode, pole on the real axis)
        if not problems and not self.gamma >= 0:
            problems.append(f"mode decay rate must satisfy gamma >= 0, got gamma={self.gamma}")
        if self.omega_coupling < 0:
            problems.append(
                f"coupling must satisfy omega_coupling >= 0, got {self.omega_coupling}"
            )
        if problems:
            raise NonPhysical("; ".join(problems))

    @property
    def detuning(self) -> float:
        """Mode-emitter detuning omega_c - omega0."""
        return self.omega_c - self.omega0

    @property
    def pole(self) -> complex:
        """Resonance pole omega_c - i*gamma/2 in the lower half plane."""
        return complex(self.omega_c, -0.5 * self.gamma)

    @property
    def gamma_markov(self) -> float:
        """Weak-coupling (golden-rule) emitter decay rate 4*coupling**2/width."""
        return 4.0 * self.omega_coupling**2 / self.gamma


@dataclass(frozen=True)
class BandGapModel:
    """Band-gap reservoir: a broad positive peak minus a narrower dip.

    The dip carves out a low-density region around ``omega_c``. The
    equivalent mode picture is two coupled damped modes; when the gap is
    perfect (w1/gamma1 == w2/gamma2) the first mode stops leaking entirely.

    ``allow_nonphysical=True`` skips the sign checks on the derived decay
    rates, for exploring where the dissipative description breaks down.
    """

    omega0: float
    omega_c: float
    w1: float
    w2: float
    gamma1: float
    gamma2: float
    omega_coupling: float
    allow_nonphysical: bool = False

    def __post_init__(self) -> None:
        problems = []
        fields = (
            self.omega0,
            self.omega_c,
            self.w1,
            self.w2,
            self.gamma1,
            self.gamma2,
            self.omega_coupling,
        )
        if not all(np.isfinite(fields)):
            raise NonPhysical(f"parameters must be finite, got {fields}")
        if not (self.gamma1 > self.gamma2 > 0):
            problems.append(
                "widths must satisfy gamma1 > gamma2 > 0, got "
                f"gamma1={self.gamma1}, gamma2={self.gamma2}"
            )
        if not (self.w1 > self.w2 >= 0):
            problems.append(
                f"weights must satisfy w1 > w2 >= 0, got w1={self.w1}, w2={self.w2}"
            )
        if self.omega_coupling < 0:
            problems.append(
                f"coupling must satisfy omega_coupling >= 0, got {self.omega_coupling}"
            )
        if not problems and not self.allow_nonphysical:
            # for gamma1 > gamma2 > 0 these two signs are equivalent to the
            # density w1*L(gamma1) - w2*L(gamma2) being non-negative everywhere
            rate1 = self.w1 * self.gamma2 - self.w2 * self.gamma1
            rate2 = self.w1 * self.gamma1 - self.w2 * self.gamma2
            if rate1 < 0:
                problems.append(
                    f"w1*gamma2 - w2*gamma1 = {rate1} < 0: the density goes negative "
                    "and no valid dissipative mode pair exists"
                )
            if rate2 <= 0:
                problems.append(
                    f"w1*gamma1 - w2*gamma2 = {rate2} <= 0: the leaky mode would not decay"
                )
        if problems:
            raise NonPhysical("; ".join(problems))
        total_weight = self.w1 - self.w2
        if total_weight > 0 and abs(self.omega_coupling**2 - total_weight) > 0.01 * total_weight:
            warnings.warn(
                f"omega_coupling**2 = {self.omega_coupling**2:.6g} differs from the "
                f"integrated spectral weight w1 - w2 = {total_weight:.6g} by more "
                "than 1%; proceeding with the given coupling",
                ConsistencyWarning,
                stacklevel=2,
            )

    @property
    def detuning(self) -> float:
        return self.omega_c - self.omega0

    @property
    def is_perfect_gap(self) -> bool:
        """True when the density vanishes exactly at the center frequency."""
        return self.w1 * self.gamma2 == self.w2 * self.gamma1


@dataclass(frozen=True)
class TwoPseudomodeConstants:
    """Decay rates, intermode coupling, and poles of the two-mode reduction.

    ``gamma_p1``/``gamma_p2`` are the decay rates of the storage and leaky
    modes, ``v`` couples them, and ``pole1``/``pole2`` sit at
    omega_c - i*rate/2 in the lower half plane.
    """

    gamma_p1: float
    gamma_p2: float
    v: float
    pole1: complex
    pole2: complex


def lorentzian_density(weight: float, width: float, center: float, omega):
    """Lorentzian line shape weight*width / ((omega-center)**2 + (width/2)**2).

    The peak value is 4*weight/width at omega = center and the integral over
    all frequencies is 2*pi*weight.
    """
    if not width > 0:
        raise ValueError(f"width must be positive, got {width}")
    om = np.asarray(omega, dtype=float)
    out = weight * width / ((om - center) ** 2 + (0.5 * width) ** 2)
    return float(out) if out.ndim == 0 else out


def bandgap_density(model: BandGapModel, omega):
    """Spectral density of the band-gap model: broad peak minus narrow dip."""
    return lorentzian_density(model.w1, model.gamma1, model.omega_c, omega) - lorentzian_density(
        model.w2, model.gamma2, model.omega_c, omega
    )


def derive_two_pseudomode_constants(model: BandGapModel) -> TwoPseudomodeConstants:
    """Map band-gap spectral parameters onto the pair of coupled damped modes.

    The storage mode decays at w1*gamma2 - w2*gamma1 and the leaky mode at
    w1*gamma1 - w2*gamma2; the two are coupled with strength
    sqrt(w1*w2)*(gamma1-gamma2)/2. A perfect gap makes the first rate
    exactly zero, turning the storage mode lossless.

    Raises ``NonPhysical`` when either rate falls outside the valid domain,
    unless the model was built with ``allow_nonphysical=True``.
    """
    gamma_p1 = model.w1 * model.gamma2 - model.w2 * model.gamma1
    gamma_p2 = model.w1 * model.gamma1 - model.w2 * model.gamma2
    if not model.allow_nonphysical:
        if gamma_p1 < 0:
            raise NonPhysical(
                f"w1*gamma2 - w2*gamma1 = {gamma_p1} < 0: no valid dissipative form"
            )
        if gamma_p2 <= 0:
            raise NonPhysical(
                f"w1*gamma1 - w2*gamma2 = {gamma_p2} <= 0: no valid dissipative form"
            )
    v = float(np.sqrt(model.w1 * model.w2) * (model.gamma1 - model.gamma2) / 2.0)
    return TwoPseudomodeConstants(
        gamma_p1=gamma_p1,
        gamma_p2=gamma_p2,
        v=v,
        pole1=complex(model.omega_c, -0.5 * gamma_p1),
        pole2=complex(model.omega_c, -0.5 * gamma_p2),
    )
