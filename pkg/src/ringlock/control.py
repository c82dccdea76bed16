"""Three-stage lock controller for holding a ring at a photocurrent setpoint.

Stage 1 (CALIBRATE_SWEEP) walks the heater DAC from full scale down to
zero, recording the minimum (dark) and maximum (peak) averaged ADC codes.
Stage 2 (REINITIALIZE) jumps back to the hot state so the resonance sits on
the controllable side of the bistability, then a new downward walk
(APPROACH) stops as soon as the photocurrent starts rising.  Stage 3
(REGULATE) runs a proportional-integral loop on the error between the
setpoint (a configured fraction of the dark-to-peak span) and the reading.
Inside a small deadband the output is held constant so the DAC code does
not dither.  Increasing heater power moves the resonance away from the
pump on the approach side (photocurrent falls), so the PI output is
inverted; gains are quoted positive.

A reading that stays below dark + a configured margin for several
consecutive updates signals a lost lock.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace


class StateError(RuntimeError):
    """Controller driven into a stage its state does not support."""


class Stage(enum.Enum):
    CALIBRATE_SWEEP = "calibrate_sweep"
    REINITIALIZE = "reinitialize"
    APPROACH = "approach"
    REGULATE = "regulate"
    LOST_LOCK = "lost_lock"


@dataclass(frozen=True)
class LockConfig:
    target_fraction: float = 0.95
    deadband: float = 2.0
    kp: float = 0.15
    ki: float = 0.3
    sweep_step: int = 8
    max_step: int = 8
    update_rate: float = 10.0
    dac_bits: int = 10
    approach_fraction: float = 0.25
    lost_lock_fraction: float = 0.10
    lost_lock_updates: int = 5
    reinit_settle_updates: int = 2

    def __post_init__(self) -> None:
        if not 0.0 < self.target_fraction < 1.0:
            raise ValueError(f"target_fraction must be in (0, 1), got {self.target_fraction}")
        if self.deadband < 1.0:
            raise ValueError(f"deadband must be >= 1 code, got {self.deadband}")
        if self.kp < 0 or self.ki < 0:
            raise ValueError("gains must be >= 0")
        if self.sweep_step < 1:
            raise ValueError(f"sweep_step must be >= 1, got {self.sweep_step}")
        if self.max_step < 1:
            raise ValueError(f"max_step must be >= 1, got {self.max_step}")

    @property
    def dac_max(self) -> int:
        return 2**self.dac_bits - 1


def setpoint_code(dark: float, maximum: float, target_fraction: float) -> int:
    """ADC code a given fraction of the way from dark to peak."""
    if maximum <= dark:
        raise ValueError(f"calibration invalid: max {maximum} <= dark {dark}")
    return int(round(dark + target_fraction * (maximum - dark)))


@dataclass(frozen=True)
class LockState:
    stage: Stage
    dac_code: int
    dark_code: float | None = None
    max_code: float | None = None
    setpoint: int | None = None
    integrator: float = 0.0
    base_dac: int = 0
    prev_error: float = 0.0
    lost_count: int = 0
    settle_count: int = 0

    @classmethod
    def initial(cls, cfg: LockConfig) -> "LockState":
        return cls(stage=Stage.CALIBRATE_SWEEP, dac_code=cfg.dac_max)

    @property
    def span(self) -> float:
        if self.dark_code is None or self.max_code is None:
            raise StateError("span requested before calibration")
        return self.max_code - self.dark_code


def controller_step(state: LockState, adc_reading: float, cfg: LockConfig) -> tuple[LockState, int]:
    """Consume one averaged ADC reading, return (new state, DAC command).

    The reading must correspond to the DAC code in `state`; the returned
    command takes effect before the next reading.  Pure function of its
    arguments, so identical traces give identical commands.
    """
    if state.stage is Stage.CALIBRATE_SWEEP:
        dark = adc_reading if state.dark_code is None else min(state.dark_code, adc_reading)
        peak = adc_reading if state.max_code is None else max(state.max_code, adc_reading)
        if state.dac_code == 0:
            if peak <= dark:
                raise StateError("calibration sweep saw no photocurrent peak")
            new = replace(
                state,
                stage=Stage.REINITIALIZE,
                dac_code=cfg.dac_max,
                dark_code=dark,
                max_code=peak,
                setpoint=setpoint_code(dark, peak, cfg.target_fraction),
                settle_count=cfg.reinit_settle_updates,
            )
            return new, new.dac_code
        new = replace(state, dac_code=max(0, state.dac_code - cfg.sweep_step), dark_code=dark, max_code=peak)
        return new, new.dac_code

    if state.stage is Stage.REINITIALIZE:
        if state.settle_count > 1:
            new = replace(state, settle_count=state.settle_count - 1)
        else:
            new = replace(state, stage=Stage.APPROACH)
        return new, new.dac_code

    if state.stage is Stage.APPROACH:
        if state.dark_code is None or state.max_code is None:
            raise StateError("approach entered without calibration")
        if adc_reading > state.dark_code + cfg.approach_fraction * state.span:
            new = replace(
                state,
                stage=Stage.REGULATE,
                integrator=0.0,
                base_dac=state.dac_code,
                prev_error=0.0,
                lost_count=0,
            )
            return new, new.dac_code
        if state.dac_code == 0:
            return replace(state, stage=Stage.LOST_LOCK), 0
        new = replace(state, dac_code=max(0, state.dac_code - cfg.sweep_step))
        return new, new.dac_code

    if state.stage is Stage.REGULATE:
        if state.setpoint is None:
            raise StateError("regulate entered without calibration")
        error = state.setpoint - adc_reading
        lost = adc_reading < state.dark_code + cfg.lost_lock_fraction * state.span
        lost_count = state.lost_count + 1 if lost else 0
        if lost_count >= cfg.lost_lock_updates:
            return replace(state, stage=Stage.LOST_LOCK, lost_count=lost_count), state.dac_code
        if abs(error) <= cfg.deadband:
            return replace(state, lost_count=lost_count, prev_error=error), state.dac_code
        # velocity-form PI: the DAC code is the accumulated state, so a
        # per-update step clamp bounds transients without integrator windup.
        # Photocurrent falls as heater power rises on the approach side,
        # hence the sign inversion.
        delta = cfg.kp * (error - state.prev_error) + cfg.ki * error
        delta = min(max(delta, -float(cfg.max_step)), float(cfg.max_step))
        raw = min(max(state.dac_code - delta, 0.0), float(cfg.dac_max))
        new = replace(
            state,
            integrator=state.integrator + cfg.ki * error,
            prev_error=error,
            lost_count=lost_count,
            dac_code=int(round(raw)),
        )
        return new, new.dac_code

    if state.stage is Stage.LOST_LOCK:
        return state, state.dac_code

    raise StateError(f"unknown stage {state.stage}")
