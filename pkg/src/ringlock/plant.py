"""Thermo-optic plant: tunable microrings with self-heating and crosstalk.

Each ring's resonance wavelength carries a thermal offset that relaxes with
a single time constant toward an equilibrium set by the heater drive plus
the absorbed share of the optical power dropped into the cavity:

    tau_th d(offset)/dt = eta_tune * (sum_j K_ij P_heater_j
                                      + absorption_fraction * P_dropped_i)
                          - offset

Optics are treated quasi-statically (photon lifetime is ns, tau_th is us):
the dropped power is re-evaluated algebraically from the instantaneous
detuning every step.  Pump absorption red-shifts the resonance, which is
the feedback loop responsible for thermal bistability: swept one way the
resonance is dragged along by the laser and snaps off past the peak, swept
the other way it snaps in, and in between the steady-state equation has
three roots of which the sweep history selects the outer two.

All rings are updated synchronously (drops computed from the current
offsets, then all offsets advanced), so results do not depend on ring
ordering.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ringlock.cmt import SPEED_OF_LIGHT, ResonatorTriplet, decay_rates, drop_fraction, through_transmission


@dataclass(frozen=True)
class ThermalRing:
    """Thermal and photodetection parameters of one ring.

    tuning_efficiency is the resonance red-shift per heater watt (m/W).
    absorption_fraction converts dropped optical power into equivalent
    heater power.  Responsivities are quoted per watt of dropped
    (circulating) power; see the config module for the bus-waveguide
    conversion.
    """

    cold_resonance: float
    tuning_efficiency: float
    tau_th: float
    absorption_fraction: float
    responsivity_linear: float
    responsivity_tpa: float = 0.0
    dark_current: float = 0.0

    def __post_init__(self) -> None:
        if not (self.tuning_efficiency > 0):
            raise ValueError(f"tuning_efficiency must be > 0, got {self.tuning_efficiency}")
        if not (self.tau_th > 0):
            raise ValueError(f"tau_th must be > 0, got {self.tau_th}")
        if not 0.0 <= self.absorption_fraction <= 1.0:
            raise ValueError(f"absorption_fraction must be in [0, 1], got {self.absorption_fraction}")


@dataclass(frozen=True)
class CrosstalkMatrix:
    """Thermal coupling gains: watts received at ring i per watt at ring j."""

    gains: np.ndarray

    def __post_init__(self) -> None:
        k = np.asarray(self.gains, dtype=float)
        if k.ndim != 2 or k.shape[0] != k.shape[1]:
            raise ValueError(f"gains must be square, got shape {k.shape}")
        if np.any(k < 0):
            raise ValueError("gains must be nonnegative")
        if not np.allclose(np.diag(k), 1.0):
            raise ValueError("diagonal gains must be 1")
        off = k - np.diag(np.diag(k))
        if np.any(off >= 1.0):
            raise ValueError("off-diagonal gains must be < 1")
        object.__setattr__(self, "gains", k)

    @classmethod
    def identity(cls, n: int) -> "CrosstalkMatrix":
        return cls(np.eye(n))

    @classmethod
    def uniform(cls, n: int, coupling: float, symmetric: bool = True) -> "CrosstalkMatrix":
        k = np.full((n, n), coupling)
        np.fill_diagonal(k, 1.0)
        if symmetric:
            k = (k + k.T) / 2.0
        return cls(k)

    @property
    def n(self) -> int:
        return self.gains.shape[0]


def steady_circulating_power(
    ring: ThermalRing,
    detuning: float,
    triplet: ResonatorTriplet,
    pump_power: float,
) -> float:
    """Power dropped into the cavity at a given pump detuning (W)."""
    if pump_power < 0:
        raise ValueError(f"pump_power must be >= 0, got {pump_power}")
    return drop_fraction(triplet, detuning, "pump") * pump_power


def photocurrent(ring: ThermalRing, circulating_power: float) -> float:
    """p-i-n photocurrent from the circulating-power proxy (A)."""
    if circulating_power < 0:
        raise ValueError(f"circulating_power must be >= 0, got {circulating_power}")
    return (
        ring.dark_current
        + ring.responsivity_linear * circulating_power
        + ring.responsivity_tpa * circulating_power**2
    )


@dataclass
class SweepTrace:
    wavelengths: np.ndarray
    transmission: np.ndarray
    photocurrent: np.ndarray
    offsets: np.ndarray


class Plant:
    """A bank of thermally coupled rings pumped at a common wavelength.

    crosstalk_tau > 0 lowpasses the heat received from *other* rings with
    that (slower) time constant, modelling substrate diffusion between
    sites; each ring's own heater and self-heating always act through its
    tau_th.  With crosstalk_tau = 0 the coupling is instantaneous.
    """

    def __init__(
        self,
        rings: list[ThermalRing],
        triplets: list[ResonatorTriplet],
        crosstalk: CrosstalkMatrix,
        pump_wavelength: float,
        pump_power,
        crosstalk_tau: float = 0.0,
    ):
        if len(rings) != len(triplets):
            raise ValueError("rings and triplets must have equal length")
        if crosstalk.n != len(rings):
            raise ValueError("crosstalk matrix size must match ring count")
        if crosstalk_tau < 0:
            raise ValueError(f"crosstalk_tau must be >= 0, got {crosstalk_tau}")
        self.rings = list(rings)
        self.triplets = list(triplets)
        self.crosstalk = crosstalk
        self.crosstalk_tau = float(crosstalk_tau)
        self.pump_wavelength = float(pump_wavelength)
        self.pump_power = np.broadcast_to(np.asarray(pump_power, dtype=float), (len(rings),)).copy()
        self.offsets = np.zeros(len(rings))
        self.heater_powers = np.zeros(len(rings))
        self.crosstalk_received = np.zeros(len(rings))
        self._tau = np.array([r.tau_th for r in rings])
        self._eta = np.array([r.tuning_efficiency for r in rings])
        self._absorb = np.array([r.absorption_fraction for r in rings])
        self._k_off = self.crosstalk.gains - np.eye(len(rings))
        self._cold = np.array([r.cold_resonance for r in rings])
        rates = [decay_rates(t.pump) for t in triplets]
        self._drop_num = np.array([4.0 * r_e * r_o for r_e, r_o, _ in rates])
        self._r_tot_sq = np.array([r_tot**2 for _, _, r_tot in rates])
        self._resp_lin = np.array([r.responsivity_linear for r in rings])
        self._resp_tpa = np.array([r.responsivity_tpa for r in rings])
        self._dark = np.array([r.dark_current for r in rings])

    @property
    def n_rings(self) -> int:
        return len(self.rings)

    def detunings(self) -> np.ndarray:
        """Angular detuning of the pump laser from each pump resonance (rad/s)."""
        lam_res = self._cold + self.offsets
        w_res = 2.0 * math.pi * SPEED_OF_LIGHT / lam_res
        w_laser = 2.0 * math.pi * SPEED_OF_LIGHT / self.pump_wavelength
        return w_laser - w_res

    def dropped_powers(self) -> np.ndarray:
        d = self.detunings()
        return self._drop_num / (d**2 + self._r_tot_sq) * self.pump_power

    def transmissions(self) -> np.ndarray:
        d = self.detunings()
        return np.array(
            [through_transmission(t, d[i], "pump") for i, t in enumerate(self.triplets)]
        )

    def photocurrents(self) -> np.ndarray:
        drops = self.dropped_powers()
        return self._dark + self._resp_lin * drops + self._resp_tpa * drops**2

    def step(self, heater_commands, dt: float) -> None:
        """Advance all rings by dt with the given heater powers (W)."""
        if dt <= 0:
            raise ValueError(f"dt must be > 0, got {dt}")
        if dt > self._tau.min() / 10.0:
            raise ValueError(f"dt={dt:g} exceeds tau_th/10={self._tau.min()/10:g}")
        p = np.broadcast_to(np.asarray(heater_commands, dtype=float), (self.n_rings,))
        if np.any(p < 0):
            raise ValueError("heater powers must be >= 0")
        self.heater_powers = p.copy()
        drops = self.dropped_powers()
        inflow = self._k_off @ p
        if self.crosstalk_tau > 0:
            self.crosstalk_received = self.crosstalk_received + (
                dt / self.crosstalk_tau
            ) * (inflow - self.crosstalk_received)
        else:
            self.crosstalk_received = inflow
        effective = p + self.crosstalk_received + self._absorb * drops
        target = self._eta * effective
        self.offsets = self.offsets + (dt / self._tau) * (target - self.offsets)

    def settle(self, heater_commands, dt: float, horizon: float | None = None) -> None:
        """Step until t >= horizon (default 12 tau_th) with fixed heaters."""
        if horizon is None:
            horizon = 12.0 * float(self._tau.max())
        for _ in range(int(math.ceil(horizon / dt))):
            self.step(heater_commands, dt)

    def sweep_wavelength(
        self,
        lam_start: float,
        lam_stop: float,
        rate: float,
        dt: float,
        ring: int = 0,
        record_every: int = 1,
    ) -> SweepTrace:
        """Sweep the pump wavelength at |rate| m/s and record ring readouts.

        Direction follows the sign of (lam_stop - lam_start).  For
        quasi-static traces the sweep must cross a linewidth slowly
        compared to tau_th.
        """
        if rate <= 0:
            raise ValueError(f"rate must be > 0, got {rate}")
        tri = self.triplets[ring]
        _, _, r_tot = decay_rates(tri.pump)
        lw_lambda = tri.pump.wavelength * (r_tot / math.pi) / tri.pump.frequency
        if rate * self._tau[ring] > 0.1 * lw_lambda:
            warnings.warn(
                "sweep rate is fast relative to the thermal time constant; "
                "traces will not be quasi-static",
                stacklevel=2,
            )
        n_steps = int(round(abs(lam_stop - lam_start) / (rate * dt)))
        lams = np.linspace(lam_start, lam_stop, n_steps + 1)
        heaters = self.heater_powers.copy()
        wl, tr, ph, off = [], [], [], []
        for i, lam in enumerate(lams):
            self.pump_wavelength = float(lam)
            self.step(heaters, dt)
            if i % record_every == 0:
                wl.append(lam)
                tr.append(through_transmission(tri, self.detunings()[ring], "pump"))
                ph.append(photocurrent(self.rings[ring], self.dropped_powers()[ring]))
                off.append(self.offsets[ring])
        return SweepTrace(np.array(wl), np.array(tr), np.array(ph), np.array(off))

    def steady_state_offsets(self, ring: int = 0, n_scan: int = 4000) -> list[tuple[float, bool]]:
        """All thermal equilibria of one ring at the current pump setting.

        Solves offset = eta * (K P_heater + absorb * P_drop(offset)) by a
        dense scan plus root bracketing.  Returns (offset, stable) pairs
        sorted by offset; stable means the relaxation locally converges.
        """
        r = self.rings[ring]
        tri = self.triplets[ring]
        base = float((self.crosstalk.gains @ self.heater_powers)[ring])
        pump = self.pump_power[ring]
        w_laser = 2.0 * math.pi * SPEED_OF_LIGHT / self.pump_wavelength

        def residual(x: float) -> float:
            lam_res = r.cold_resonance + x
            delta = w_laser - 2.0 * math.pi * SPEED_OF_LIGHT / lam_res
            drop = drop_fraction(tri, delta, "pump") * pump
            return x - r.tuning_efficiency * (base + r.absorption_fraction * drop)

        lo = r.tuning_efficiency * base - 1e-15
        hi = r.tuning_efficiency * (base + r.absorption_fraction * pump) + 1e-15
        xs = np.linspace(lo, hi, n_scan)
        fs = np.array([residual(x) for x in xs])
        roots = []
        for i in range(len(xs) - 1):
            if fs[i] == 0.0:
                roots.append(xs[i])
            elif fs[i] * fs[i + 1] < 0:
                roots.append(brentq(residual, xs[i], xs[i + 1], xtol=1e-18))
        eps = (hi - lo) / n_scan * 1e-3
        out = []
        for x in roots:
            slope = (residual(x + eps) - residual(x - eps)) / (2 * eps)
            out.append((x, slope > 0))
        return out


def hysteresis_width(
    wavelengths: np.ndarray,
    forward_transmission: np.ndarray,
    reverse_transmission: np.ndarray,
    threshold: float = 0.02,
) -> float:
    """Wavelength measure over which forward/reverse traces disagree (m).

    Both traces must be sampled on the same ascending wavelength grid (flip
    the reverse trace before calling).  Zero when the sweeps coincide to
    within the threshold everywhere.
    """
    if not (len(wavelengths) == len(forward_transmission) == len(reverse_transmission)):
        raise ValueError("traces must share one wavelength grid")
    dlam = np.diff(wavelengths)
    differs = np.abs(forward_transmission - reverse_transmission)[:-1] > threshold
    return float(np.sum(dlam[differs]))
