"""Coupled-mode theory model of a microring photon-pair source.

A resonance is described by its wavelength and intrinsic/extrinsic quality
factors.  Energy-amplitude decay rates follow from the Q-factors as

    r = omega / (2 Q),        r_tot = r_e + r_o

and the through-port power transmission of an all-pass ring is

    T(delta) = (delta^2 + (r_o - r_e)^2) / (delta^2 + r_tot^2).

The spontaneous pair generation rate for a signal/pump/idler resonance
triplet driven with pump power P is

    I_pair = omega_p^2 beta^2 (2 r_pe / r_ptot^2)^2
             * (2 r_ie r_se) / (r_itot r_stot)
             * (r_stot + r_itot) / ((2 pi dnu_fsr)^2 + (r_stot + r_itot)^2)
             * P^2

where beta is the four-wave-mixing coefficient (units 1/J) and dnu_fsr the
free-spectral-range mismatch |nu_s + nu_i - 2 nu_p|.  With equal decay rates
across the three resonances the coupling that maximizes I_pair is
r_e = (4/3) r_o.  The classical stimulated conversion efficiency uses the
same prefactors but a different idler response:

    eta_stim = omega_p^2 beta^2 (2 r_pe / r_ptot^2)^2 (2 r_se / r_stot^2)
               * 2 r_ie / ((2 pi dnu_fsr)^2 + r_itot^2) * P^2

All frequencies are held in Hz internally; conversion to angular rates
happens only inside the rate formulas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

SPEED_OF_LIGHT = 299_792_458.0  # m/s


@dataclass(frozen=True)
class ResonanceParams:
    """One cavity resonance: wavelength (m) plus intrinsic/extrinsic Q."""

    wavelength: float
    q_intrinsic: float
    q_extrinsic: float

    def __post_init__(self) -> None:
        if not (self.wavelength > 0):
            raise ValueError(f"wavelength must be > 0, got {self.wavelength}")
        if not (self.q_intrinsic > 0):
            raise ValueError(f"q_intrinsic must be > 0, got {self.q_intrinsic}")
        if not (self.q_extrinsic > 0):
            raise ValueError(f"q_extrinsic must be > 0, got {self.q_extrinsic}")

    @property
    def frequency(self) -> float:
        return SPEED_OF_LIGHT / self.wavelength

    @property
    def omega(self) -> float:
        return 2.0 * math.pi * self.frequency

    @property
    def q_total(self) -> float:
        return 1.0 / (1.0 / self.q_intrinsic + 1.0 / self.q_extrinsic)


def decay_rates(p: ResonanceParams) -> tuple[float, float, float]:
    """Return (r_e, r_o, r_tot) in rad/s for one resonance."""
    r_e = p.omega / (2.0 * p.q_extrinsic)
    r_o = p.omega / (2.0 * p.q_intrinsic)
    return r_e, r_o, r_e + r_o


def linewidth_from_q(p: ResonanceParams) -> float:
    """FWHM linewidth in Hz: delta_nu = nu / Q_tot."""
    return p.frequency / p.q_total


def q_from_linewidth(wavelength: float, linewidth: float) -> float:
    """Total Q from a FWHM linewidth in Hz (inverse of linewidth_from_q)."""
    if not (wavelength > 0):
        raise ValueError(f"wavelength must be > 0, got {wavelength}")
    if not (linewidth > 0):
        raise ValueError(f"linewidth must be > 0, got {linewidth}")
    return (SPEED_OF_LIGHT / wavelength) / linewidth


def fsr_mismatch_from_wavelengths(lambda_s: float, lambda_p: float, lambda_i: float) -> float:
    """FSR mismatch |nu_s + nu_i - 2 nu_p| in Hz from resonance wavelengths.

    Equals |FSR_sp - FSR_pi|, the dispersion penalty entering the pair rate.
    """
    if not (lambda_s < lambda_p < lambda_i):
        raise ValueError(
            f"wavelength ordering must be signal < pump < idler, "
            f"got ({lambda_s}, {lambda_p}, {lambda_i})"
        )
    nu_s = SPEED_OF_LIGHT / lambda_s
    nu_p = SPEED_OF_LIGHT / lambda_p
    nu_i = SPEED_OF_LIGHT / lambda_i
    return abs(nu_s + nu_i - 2.0 * nu_p)


@dataclass(frozen=True)
class ResonatorTriplet:
    """Signal/pump/idler resonances of one ring plus its nonlinear strength.

    beta_fwm is the four-wave-mixing coefficient in 1/J; fsr_mismatch is the
    dispersion mismatch in Hz.  Wavelength ordering signal < pump < idler is
    enforced.
    """

    signal: ResonanceParams
    pump: ResonanceParams
    idler: ResonanceParams
    fsr_mismatch: float
    beta_fwm: float

    def __post_init__(self) -> None:
        if not (self.signal.wavelength < self.pump.wavelength < self.idler.wavelength):
            raise ValueError("resonance ordering must be lambda_s < lambda_p < lambda_i")
        if self.fsr_mismatch < 0:
            raise ValueError(f"fsr_mismatch must be >= 0, got {self.fsr_mismatch}")
        if self.beta_fwm < 0:
            raise ValueError(f"beta_fwm must be >= 0, got {self.beta_fwm}")

    @classmethod
    def from_uniform_q(
        cls,
        pump_wavelength: float,
        q_intrinsic: float,
        q_extrinsic: float,
        fsr_mismatch: float,
        beta_fwm: float,
        fsr: float = 902e9,
    ) -> "ResonatorTriplet":
        """Triplet with identical Q-factors on three resonances one FSR apart."""
        nu_p = SPEED_OF_LIGHT / pump_wavelength
        mk = lambda nu: ResonanceParams(SPEED_OF_LIGHT / nu, q_intrinsic, q_extrinsic)
        return cls(
            signal=mk(nu_p + fsr),
            pump=mk(nu_p),
            idler=mk(nu_p - fsr),
            fsr_mismatch=fsr_mismatch,
            beta_fwm=beta_fwm,
        )

    def with_beta(self, beta_fwm: float) -> "ResonatorTriplet":
        return replace(self, beta_fwm=beta_fwm)

    def resonance(self, which: str) -> ResonanceParams:
        try:
            return {"signal": self.signal, "pump": self.pump, "idler": self.idler}[which]
        except KeyError:
            raise ValueError(f"unknown resonance selector {which!r}") from None


def _pgr_coefficient(t: ResonatorTriplet) -> float:
    """Rate prefactor K such that I_pair = K * beta^2 * P^2."""
    r_se, _, r_st = decay_rates(t.signal)
    r_pe, _, r_pt = decay_rates(t.pump)
    r_ie, _, r_it = decay_rates(t.idler)
    dw = 2.0 * math.pi * t.fsr_mismatch
    return (
        t.pump.omega ** 2
        * (2.0 * r_pe / r_pt**2) ** 2
        * (2.0 * r_ie * r_se) / (r_it * r_st)
        * (r_st + r_it) / (dw**2 + (r_st + r_it) ** 2)
    )


def pair_generation_rate(t: ResonatorTriplet, pump_power: float) -> float:
    """Spontaneous pair generation rate in pairs/s for pump power in W."""
    if pump_power < 0:
        raise ValueError(f"pump_power must be >= 0, got {pump_power}")
    if t.beta_fwm == 0.0 or pump_power == 0.0:
        return 0.0
    return _pgr_coefficient(t) * t.beta_fwm**2 * pump_power**2


def stimulated_efficiency(t: ResonatorTriplet, pump_power: float) -> float:
    """Classical stimulated four-wave-mixing conversion efficiency."""
    if pump_power < 0:
        raise ValueError(f"pump_power must be >= 0, got {pump_power}")
    if t.beta_fwm == 0.0 or pump_power == 0.0:
        return 0.0
    r_se, _, r_st = decay_rates(t.signal)
    r_pe, _, r_pt = decay_rates(t.pump)
    r_ie, _, r_it = decay_rates(t.idler)
    dw = 2.0 * math.pi * t.fsr_mismatch
    return (
        t.pump.omega ** 2
        * t.beta_fwm**2
        * (2.0 * r_pe / r_pt**2) ** 2
        * (2.0 * r_se / r_st**2)
        * (2.0 * r_ie) / (dw**2 + r_it**2)
        * pump_power**2
    )


def optimal_extrinsic_rate(r_o: float) -> float:
    """Extrinsic decay rate maximizing the pair rate: r_e = (4/3) r_o."""
    if r_o < 0:
        raise ValueError(f"r_o must be >= 0, got {r_o}")
    return 4.0 * r_o / 3.0


def through_transmission(t: ResonatorTriplet, detuning: float, which: str = "pump") -> float:
    """All-pass through-port power transmission at angular detuning (rad/s)."""
    if not math.isfinite(detuning):
        raise ValueError(f"detuning must be finite, got {detuning}")
    r_e, r_o, r_tot = decay_rates(t.resonance(which))
    return (detuning**2 + (r_o - r_e) ** 2) / (detuning**2 + r_tot**2)


def drop_fraction(t: ResonatorTriplet, detuning: float, which: str = "pump") -> float:
    """Fraction of bus power dropped into the ring: 1 - T(delta)."""
    if not math.isfinite(detuning):
        raise ValueError(f"detuning must be finite, got {detuning}")
    r_e, r_o, r_tot = decay_rates(t.resonance(which))
    return 4.0 * r_e * r_o / (detuning**2 + r_tot**2)


def calibrate_beta(t: ResonatorTriplet, pgr_per_w2: float) -> float:
    """beta_fwm reproducing a target rate efficiency (pairs/s per W^2)."""
    if pgr_per_w2 <= 0:
        raise ValueError(f"pgr_per_w2 must be > 0, got {pgr_per_w2}")
    return math.sqrt(pgr_per_w2 / _pgr_coefficient(t))
