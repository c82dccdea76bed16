"""Cycle-accurate pulse-density heater DAC model.

A first-order delta-sigma modulator turns an N-bit code into a 1-bit pulse
stream: the accumulator adds the code every clock and the carry-out is the
pulse.  Over any window of 2^N cycles the pulse count equals the code
exactly, which guarantees a monotonic code-to-mean-power transfer.

The switching output stage is a low-side switch in series with the heater:
closing the switch (a 1-bit) pulls the heater node down and energizes the
heater, opening it lets the node charge back to the supply through the
heater itself.  Node time constants are

    tau_rise = r_heater * c_parasitic          (switch open, node rising)
    tau_fall = (r_switch || r_heater) * c_parasitic   (switch closed)

and the instantaneous heater power is (v_ddh - v_node)^2 / r_heater.  With
r_switch << r_heater the node falls much faster than it rises, so each
pulse gains a slow tail of extra dissipation after the switch opens.  The
net surplus per switching event pushes the transfer curve above the ideal
line, most strongly near midcode where switching activity peaks, and more
so at higher clock rates.

The microring responds only to the thermally lowpassed power; the residual
ripple after that filter sets the effective resolution

    ER = log2(p_fullscale / sigma_ripple_worst_case).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter


@dataclass
class DeltaSigmaState:
    """Accumulator state of a first-order delta-sigma modulator."""

    acc_bits: int = 10
    accumulator: int = 0
    code: int = 0

    def __post_init__(self) -> None:
        if self.acc_bits < 1:
            raise ValueError(f"acc_bits must be >= 1, got {self.acc_bits}")
        if not 0 <= self.accumulator < 2**self.acc_bits:
            raise ValueError(f"accumulator {self.accumulator} out of range for {self.acc_bits} bits")
        if not 0 <= self.code <= 2**self.acc_bits - 1:
            raise ValueError(f"code {self.code} out of range for {self.acc_bits} bits")


def ds_step(state: DeltaSigmaState, code: int) -> tuple[DeltaSigmaState, int]:
    """Advance the modulator one clock; returns (new state, output pulse)."""
    modulus = 2**state.acc_bits
    if not 0 <= code < modulus:
        raise ValueError(f"code {code} out of range for {state.acc_bits} bits")
    total = state.accumulator + code
    pulse = 1 if total >= modulus else 0
    return DeltaSigmaState(state.acc_bits, total % modulus, code), pulse


def ds_pulses(code: int, n_cycles: int, acc_bits: int = 10, accumulator: int = 0) -> np.ndarray:
    """Pulse train for a constant code, as a uint8 array of length n_cycles.

    Uses the closed form of the accumulator recursion
    (pulse_t = floor((acc0 + code t) / 2^N) - floor((acc0 + code (t-1)) / 2^N))
    and matches an explicit ds_step loop bit for bit.
    """
    modulus = 2**acc_bits
    if not 0 <= code < modulus:
        raise ValueError(f"code {code} out of range for {acc_bits} bits")
    t = np.arange(n_cycles + 1, dtype=np.int64)
    carries = (accumulator + code * t) // modulus
    return np.diff(carries).astype(np.uint8)


@dataclass(frozen=True)
class SwitchStage:
    """Switching output stage driving a resistive heater."""

    r_heater: float
    r_switch: float
    c_parasitic: float
    v_ddh: float
    f_clk: float

    def __post_init__(self) -> None:
        for name in ("r_heater", "v_ddh", "f_clk"):
            if not (getattr(self, name) > 0):
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        # zero switch resistance or parasitic capacitance = ideal switching
        for name in ("r_switch", "c_parasitic"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")

    @property
    def tau_rise(self) -> float:
        return self.r_heater * self.c_parasitic

    @property
    def tau_fall(self) -> float:
        if self.r_switch == 0:
            return 0.0
        parallel = self.r_switch * self.r_heater / (self.r_switch + self.r_heater)
        return parallel * self.c_parasitic

    @property
    def p_fullscale(self) -> float:
        return self.v_ddh**2 / self.r_heater


def _segment(v0: float, target: float, tau: float, h: float, v_ddh: float) -> tuple[float, float]:
    """Node relaxation over one interval: (mean of (v_ddh - v)^2, end voltage)."""
    if tau <= 0.0:
        return (v_ddh - target) ** 2, target
    d0 = v0 - target
    e1 = math.exp(-h / tau)
    dv = v_ddh - target
    # mean of (dv - d0 e^{-t/tau})^2 over [0, h]
    mean = dv**2 - 2.0 * dv * d0 * (tau / h) * (1.0 - e1) + d0**2 * (tau / (2.0 * h)) * (1.0 - e1**2)
    return mean, target + d0 * e1


def switched_power_waveform(bits, stage: SwitchStage, oversample: int = 16) -> np.ndarray:
    """Instantaneous heater power, oversample points per clock cycle.

    Each sample is the exact average of the power over its sub-interval, so
    the slow post-pulse dissipation tail is accounted for even when the RC
    time constants are far below the sample spacing.  The node starts at
    v_ddh (heater off).
    """
    if oversample < 4:
        raise ValueError(f"oversample must be >= 4, got {oversample}")
    bits = np.asarray(bits, dtype=np.uint8)
    h = 1.0 / (stage.f_clk * oversample)
    out = np.empty(bits.size * oversample)
    v = stage.v_ddh
    k = 0
    for b in bits:
        if b:
            target, tau = 0.0, stage.tau_fall
        else:
            target, tau = stage.v_ddh, stage.tau_rise
        for _ in range(oversample):
            mean, v = _segment(v, target, tau, h, stage.v_ddh)
            out[k] = mean / stage.r_heater
            k += 1
    return out


def mean_power_transfer(stage: SwitchStage, acc_bits: int = 10, codes=None) -> np.ndarray:
    """Per-code mean heater power in periodic steady state.

    Propagates the node voltage through two full modulator periods with
    exact per-cycle energy integrals and averages the second period.
    Vectorized across codes.
    """
    modulus = 2**acc_bits
    if codes is None:
        codes = np.arange(modulus)
    codes = np.asarray(codes, dtype=np.int64)
    n = 2 * modulus
    t = np.arange(n + 1, dtype=np.int64)
    carries = (codes[:, None] * t[None, :]) // modulus
    bits = np.diff(carries, axis=1).astype(bool)

    h = 1.0 / stage.f_clk
    v_ddh = stage.v_ddh
    tau_r, tau_f = stage.tau_rise, stage.tau_fall
    er1 = math.exp(-h / tau_r) if tau_r > 0 else 0.0
    ef1 = math.exp(-h / tau_f) if tau_f > 0 else 0.0

    v = np.full(codes.shape, v_ddh)
    acc = np.zeros(codes.shape)
    for i in range(n):
        on = bits[:, i]
        target = np.where(on, 0.0, v_ddh)
        tau = np.where(on, tau_f, tau_r)
        e1 = np.where(on, ef1, er1)
        d0 = v - target
        dv = v_ddh - target
        with np.errstate(invalid="ignore"):
            mean = np.where(
                tau > 0,
                dv**2 - 2 * dv * d0 * (tau / h) * (1 - e1) + d0**2 * (tau / (2 * h)) * (1 - e1**2),
                dv**2,
            )
        v = target + d0 * e1
        if i >= modulus:
            acc += mean
    return acc / (modulus * stage.r_heater)


def thermal_lowpass(power_samples, tau_th: float, dt: float, y0: float = 0.0) -> np.ndarray:
    """First-order thermal filter y' = y + (dt/tau_th)(x - y); DC gain 1."""
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if tau_th <= 0:
        raise ValueError(f"tau_th must be > 0, got {tau_th}")
    if dt >= tau_th:
        warnings.warn(
            f"dt={dt:g} >= tau_th={tau_th:g}; the discrete filter is a poor "
            "approximation at this step size",
            stacklevel=2,
        )
    x = np.asarray(power_samples, dtype=float)
    a = dt / tau_th
    zi = np.array([(1.0 - a) * y0])
    y, _ = lfilter([a], [1.0, -(1.0 - a)], x, zi=zi)
    return y


def effective_resolution(
    f_clk: float,
    tau_th: float,
    acc_bits: int = 10,
    p_fullscale: float = 1.0,
    chunk: int = 128,
) -> tuple[float, np.ndarray]:
    """Effective resolution in bits plus the per-code ripple array.

    Drives an ideal switching stage (the RC asymmetry is excluded from this
    analysis) through the thermal lowpass for every code, discards the
    first 10 tau_th of output, and takes the RMS deviation from the mean in
    periodic steady state.  ER = log2(p_fullscale / max sigma) with the
    maximum over interior codes only: code 0 idles constant and the top
    code pins the full-scale endpoint, so both are left out of the
    worst-case search.
    """
    modulus = 2**acc_bits
    dt = 1.0 / f_clk
    n_meas = int(max(modulus, math.ceil(20.0 * tau_th * f_clk)))
    n_settle = int(math.ceil(10.0 * tau_th * f_clk))
    n = n_settle + n_meas
    a = dt / tau_th
    sigma = np.zeros(modulus)
    t = np.arange(n + 1, dtype=np.int64)
    for lo in range(1, modulus - 1, chunk):
        codes = np.arange(lo, min(lo + chunk, modulus - 1), dtype=np.int64)
        carries = (codes[:, None] * t[None, :]) // modulus
        bits = np.diff(carries, axis=1).astype(float) * p_fullscale
        zi = (1.0 - a) * bits.mean(axis=1, keepdims=True)
        y, _ = lfilter([a], [1.0, -(1.0 - a)], bits, axis=1, zi=zi)
        tail = y[:, n_settle:]
        sigma[codes] = tail.std(axis=1)
    er = math.log2(p_fullscale / sigma[1 : modulus - 1].max())
    return er, sigma


def inl_dnl(transfer) -> tuple[np.ndarray, np.ndarray]:
    """Endpoint-fit INL and DNL of a per-code transfer curve, in LSB.

    The line through the first and last codes defines the ideal LSB.
    INL_k = (y_k - line_k) / LSB; DNL_k = (y_{k+1} - y_k) / LSB - 1.
    The transfer is monotonic iff min(DNL) > -1.
    """
    y = np.asarray(transfer, dtype=float)
    if y.size < 4:
        raise ValueError(f"need at least 4 codes, got {y.size}")
    lsb = (y[-1] - y[0]) / (y.size - 1)
    if lsb == 0:
        raise ValueError("degenerate transfer: endpoints are equal")
    line = y[0] + lsb * np.arange(y.size)
    inl = (y - line) / lsb
    dnl = np.diff(y) / lsb - 1.0
    return inl, dnl
