"""Photocurrent sensing chain: programmable TIA, offset IDACs, SAR ADC.

The transimpedance gain is set by four binary-weighted feedback resistors
(50/100/200/400 kOhm) that can be individually engaged; engaged resistances
add, giving 50 kOhm to 750 kOhm.  Offset IDACs push or pull current at the
TIA input: the sense-arm IDAC opposes photocurrent (it lowers the ADC code,
opening up range), the reference arm adds with it.  The amplifier output
saturates softly toward the rails; the saturating map is odd around
midrail with unit small-signal gain and a single sharpness parameter.  A
9-bit ADC quantizes the result, and an on-chip accumulator averages blocks
of 512 codes (31.25 MHz raw sampling -> ~61 kHz updates).

Calibration sweeps the sense-arm IDAC with the ring dark and picks the
operating point maximizing range x response, where range is the headroom
between the dark code and full scale and response is the code change per
IDAC step injected at the input as a photocurrent proxy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

GAIN_RESISTORS = (50e3, 100e3, 200e3, 400e3)


class CalibrationError(RuntimeError):
    """Raised when an AFE calibration scan cannot find a usable point."""


@dataclass(frozen=True)
class AfeConfig:
    """Frontend configuration and operating point."""

    gain_bits: int = 0b0100  # 200 kOhm
    idac_sense: float = 0.0
    idac_ref: float = 0.0
    supply: float = 1.0
    adc_bits: int = 9
    sample_rate: float = 31.25e6
    averaging: int = 512
    softclip_sharpness: float | None = 4.0
    idac_lsb: float = 100e-9
    idac_codes: int = 64
    noise_sigma_codes: float = 0.0

    def __post_init__(self) -> None:
        if not 0 < self.gain_bits < 16:
            raise ValueError(f"gain_bits must engage at least one resistor, got {self.gain_bits:#06b}")
        if self.supply <= 0:
            raise ValueError(f"supply must be > 0, got {self.supply}")
        if self.averaging < 1:
            raise ValueError(f"averaging must be >= 1, got {self.averaging}")

    @property
    def max_code(self) -> int:
        return 2**self.adc_bits - 1

    @property
    def midrail_code(self) -> int:
        """ADC code at zero input current with zero offsets."""
        return 2 ** (self.adc_bits - 1)

    @property
    def lsb_volts(self) -> float:
        return self.supply / 2**self.adc_bits

    @property
    def update_rate(self) -> float:
        return self.sample_rate / self.averaging


def tia_gain(gain_bits: int) -> float:
    """Feedback resistance in Ohm for a 4-bit gain setting (resistors add)."""
    if not 0 < gain_bits < 16:
        raise ValueError(f"gain_bits must engage at least one resistor, got {gain_bits}")
    return sum(r for i, r in enumerate(GAIN_RESISTORS) if gain_bits & (1 << i))


def _softclip(x, half_swing: float, sharpness: float | None):
    if sharpness is None:
        return np.clip(x, -half_swing, half_swing)
    p = sharpness
    return half_swing * x / (half_swing**p + np.abs(x) ** p) ** (1.0 / p)


def adc_read(photocurrent, cfg: AfeConfig):
    """Quantize a photocurrent (A) to an ADC code; accepts arrays.

    Increasing photocurrent always produces a larger code; output saturates
    at 0 and full scale.
    """
    i = np.asarray(photocurrent, dtype=float)
    if not np.all(np.isfinite(i)):
        raise ValueError("photocurrent must be finite")
    gain = tia_gain(cfg.gain_bits)
    x = gain * (i - cfg.idac_sense + cfg.idac_ref)
    v = cfg.supply / 2.0 + _softclip(x, cfg.supply / 2.0, cfg.softclip_sharpness)
    code = np.clip(np.floor(v / cfg.lsb_volts), 0, cfg.max_code).astype(int)
    return int(code) if code.ndim == 0 else code


def averaged_read(photocurrent_trace, cfg: AfeConfig, rng=None) -> np.ndarray:
    """Block means of raw codes, one value per `averaging` input samples.

    The trace must be sampled at cfg.sample_rate and cover at least one
    block.  Optional rng adds Gaussian code noise of cfg.noise_sigma_codes
    to each raw sample before averaging.
    """
    trace = np.asarray(photocurrent_trace, dtype=float)
    n_blocks = trace.size // cfg.averaging
    if n_blocks == 0:
        raise ValueError(f"trace of {trace.size} samples is shorter than one {cfg.averaging}-sample block")
    codes = adc_read(trace[: n_blocks * cfg.averaging], cfg).astype(float)
    if rng is not None and cfg.noise_sigma_codes > 0:
        codes = codes + rng.normal(0.0, cfg.noise_sigma_codes, codes.size)
        codes = np.clip(np.rint(codes), 0, cfg.max_code)
    return codes.reshape(n_blocks, cfg.averaging).mean(axis=1)


@dataclass(frozen=True)
class CalibrationResult:
    idac_code: int
    idac_current: float
    dark_code: int
    code_range: int
    response: float
    figure_of_merit: float
    scan_idac_codes: np.ndarray
    scan_adc_codes: np.ndarray
    scan_fom: np.ndarray


def afe_calibrate(dark_current: float, cfg: AfeConfig) -> CalibrationResult:
    """Choose the sense-IDAC operating point maximizing range x response.

    Must run with the ring detuned from the pump so that only dark current
    flows.  Response is probed by injecting one IDAC LSB of extra input
    current as a photocurrent stand-in.  Ties break toward larger range.
    """
    idac_codes = np.arange(cfg.idac_codes)
    adc_codes = np.empty(cfg.idac_codes, dtype=int)
    responses = np.empty(cfg.idac_codes)
    for k in idac_codes:
        probe = replace(cfg, idac_sense=k * cfg.idac_lsb)
        c0 = adc_read(dark_current, probe)
        c1 = adc_read(dark_current + cfg.idac_lsb, probe)
        adc_codes[k] = c0
        responses[k] = abs(c1 - c0)
    if not np.any(responses > 0):
        raise CalibrationError("all scan points saturated: no photocurrent response anywhere")
    ranges = cfg.max_code - adc_codes
    fom = ranges.astype(float) * responses
    best_fom = fom.max()
    candidates = np.flatnonzero(fom == best_fom)
    best = candidates[np.argmax(ranges[candidates])]
    return CalibrationResult(
        idac_code=int(best),
        idac_current=float(best * cfg.idac_lsb),
        dark_code=int(adc_codes[best]),
        code_range=int(ranges[best]),
        response=float(responses[best]),
        figure_of_merit=float(best_fom),
        scan_idac_codes=idac_codes,
        scan_adc_codes=adc_codes,
        scan_fom=fom,
    )


def apply_calibration(cfg: AfeConfig, result: CalibrationResult) -> AfeConfig:
    return replace(cfg, idac_sense=result.idac_current)
