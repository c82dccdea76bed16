"""Configuration-driven experiment runner.

Each scenario builds its models from one validated config document, runs a
deterministic simulation for a given seed, and writes plot-ready CSV files
plus a run_meta.json echo of the effective configuration.  Closed-loop
runs compress time: the controller dwell between updates is simulated for
long enough that the thermal state settles (the physical update period is
orders of magnitude longer than the thermal time constant), and the
compression factor is recorded in the metadata.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ringlock import config as cfgmod
from ringlock.afe import AfeConfig, afe_calibrate, apply_calibration, averaged_read
from ringlock.cmt import drop_fraction, pair_generation_rate
from ringlock.control import LockConfig, LockState, Stage, controller_step
from ringlock.dac import effective_resolution, inl_dnl, mean_power_transfer
from ringlock.photons import (
    LossBudget,
    car_and_pgr,
    de_embed,
    fit_peak,
    g2_zero,
    simulate_timestamps,
    start_stop_histogram,
)
from ringlock.plant import Plant, ThermalRing, hysteresis_width


class ScenarioError(RuntimeError):
    """Simulation failed to reach the state a scenario requires."""


class FitError(RuntimeError):
    """Peak fitting failed where a scenario requires a converged fit."""


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{value:.10g}"


def write_csv(path: Path, header: list[str], rows: list[list]) -> Path:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def _write_meta(out: Path, cfg: dict, seed: int, extra: dict | None = None) -> None:
    meta = {"config": cfg, "seed": seed}
    if extra:
        meta.update(extra)
    (out / "run_meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True))


# ------------------------------------------------------------ closed loop

@dataclass
class LoopRecord:
    update: list[int] = field(default_factory=list)
    dac_codes: list[np.ndarray] = field(default_factory=list)
    reading: list[float] = field(default_factory=list)
    transmission: list[float] = field(default_factory=list)
    stage: list[str] = field(default_factory=list)


class LockSimulation:
    """One controlled ring (plus passive neighbours) behind the AFE and PI loop."""

    def __init__(
        self,
        cfg: dict,
        pump_power: float,
        n_rings: int = 1,
        controlled: int = 0,
        seed: int = 0,
    ):
        self.cfg = cfg
        self.controlled = controlled
        self.rng = np.random.default_rng(seed)
        self.triplet = cfgmod.build_triplet(cfg)
        ring = cfgmod.build_thermal_ring(cfg, self.triplet.pump.wavelength)
        self.lock_cfg = cfgmod.build_lock_config(cfg)
        self.dt = cfg["plant"]["dt_us"] * 1e-6
        self.steps_per_update = cfg["controller"]["plant_steps_per_update"]
        xt_tau = cfg["plant"]["crosstalk_tau_updates"] * self.steps_per_update * self.dt
        pump_wavelength = self.triplet.pump.wavelength + cfg["plant"]["pump_offset_nm"] * 1e-9
        self.plant = Plant(
            rings=[ring] * n_rings,
            triplets=[self.triplet] * n_rings,
            crosstalk=cfgmod.build_crosstalk(cfg, n_rings),
            pump_wavelength=pump_wavelength,
            pump_power=pump_power,
            crosstalk_tau=xt_tau,
        )
        self.afe = self._calibrate_afe(cfgmod.build_afe(cfg))
        self.state = LockState.initial(self.lock_cfg)
        self.dac_codes = np.zeros(n_rings, dtype=int)
        self.dac_codes[controlled] = self.state.dac_code
        self.updates_run = 0

    def _calibrate_afe(self, afe: AfeConfig) -> AfeConfig:
        # scan runs against the cold, far-detuned ring: dark current only
        dark = self.plant.photocurrents()[self.controlled]
        self._calibrated_gain = afe.gain_bits
        return apply_calibration(afe, afe_calibrate(dark, afe))

    @property
    def time_compression(self) -> float:
        dwell = self.steps_per_update * self.dt
        return (1.0 / self.lock_cfg.update_rate) / dwell

    def heater_powers(self) -> np.ndarray:
        return np.array([cfgmod.heater_power_from_code(c, self.cfg) for c in self.dac_codes])

    def _measure(self) -> float:
        current = self.plant.photocurrents()[self.controlled]
        trace = np.full(self.afe.averaging, current)
        return float(averaged_read(trace, self.afe, rng=self.rng)[0])

    def run(
        self,
        n_updates: int,
        aggressor_codes=None,
        feedback: bool = True,
        record: LoopRecord | None = None,
    ) -> LoopRecord:
        """Advance the loop; aggressor_codes(update_index) sets neighbour DACs."""
        if self.afe.gain_bits != self._calibrated_gain:
            raise ScenarioError("AFE gain changed since calibration; re-run afe_calibrate")
        rec = record if record is not None else LoopRecord()
        for k in range(n_updates):
            if aggressor_codes is not None:
                codes = aggressor_codes(self.updates_run)
                for idx, code in codes.items():
                    self.dac_codes[idx] = code
            powers = self.heater_powers()
            for _ in range(self.steps_per_update):
                self.plant.step(powers, self.dt)
            reading = self._measure()
            if feedback:
                self.state, dac = controller_step(self.state, reading, self.lock_cfg)
                self.dac_codes[self.controlled] = dac
            rec.update.append(self.updates_run)
            rec.dac_codes.append(self.dac_codes.copy())
            rec.reading.append(reading)
            rec.transmission.append(float(self.plant.transmissions()[self.controlled]))
            rec.stage.append(self.state.stage.value)
            self.updates_run += 1
        return rec

    def require_locked(self) -> None:
        if self.state.stage is not Stage.REGULATE:
            raise ScenarioError(f"controller did not reach regulation (stage {self.state.stage.value})")

    def drop_rel(self) -> float:
        """Dropped power at the present operating point relative to on-resonance."""
        d = self.plant.detunings()[self.controlled]
        on_peak = drop_fraction(self.triplet, 0.0, "pump")
        return drop_fraction(self.triplet, d, "pump") / on_peak


# --------------------------------------------------------- photon helper

def analyze_photon_point(
    cfg: dict,
    triplet,
    pump_power: float,
    drop_rel: float,
    duration: float,
    seed,
) -> dict:
    """Generate and analyze photon streams for one locked operating point."""
    ph = cfg["photons"]
    pair_rate = pair_generation_rate(triplet, pump_power) * drop_rel**2
    channels = cfgmod.build_channels(cfg, pump_power)
    ts = simulate_timestamps(
        pair_rate,
        duration,
        idler=channels["idler"],
        signal_1=channels["signal_1"],
        signal_2=channels["signal_2"],
        splitter_ratio=ph["splitter_ratio"],
        pair_dt_sigma=ph["pair_dt_sigma_ps"] * 1e-12,
        seed=seed,
    )
    delay = ph["channel_delay_ns"] * 1e-9
    span = ph["histogram_span_ns"] * 1e-9
    window = ph["coincidence_window_ps"] * 1e-12
    s1 = ts.signal_1 + delay
    s2 = ts.signal_2 + delay
    merged = np.sort(np.concatenate([s1, s2]))
    hist_s1 = start_stop_histogram(ts.idler, s1, span, integration_time=duration)
    hist_merged = start_stop_histogram(ts.idler, merged, span, integration_time=duration)
    fit = fit_peak(hist_s1)
    fit_merged = fit_peak(hist_merged)
    result = {
        "pair_rate_onchip": pair_rate,
        "histogram_s1": hist_s1,
        "fit": fit,
        "converged": fit.converged and fit_merged.converged,
    }
    if fit.converged:
        result["car_s1"] = car_and_pgr(hist_s1, fit, window)
    if fit_merged.converged:
        car_m = car_and_pgr(hist_merged, fit_merged, window)
        result["car_merged"] = car_m
        eta_i = channels["idler"].efficiency
        eta_s_eff = ph["splitter_ratio"] * channels["signal_1"].efficiency + (
            1.0 - ph["splitter_ratio"]
        ) * channels["signal_2"].efficiency
        budget = LossBudget(eta_idler=eta_i, eta_signal_effective=eta_s_eff, n_signal_channels=1)
        result["pgr_deembedded"] = de_embed(car_m.pair_rate, budget)
    result["g2"] = g2_zero(ts.idler, s1, s2, window)
    return result


# -------------------------------------------------------------- scenarios

def run_hysteresis(cfg: dict, out_dir: str | Path, seed: int | None = None) -> dict:
    """Forward/reverse pump-wavelength sweeps over a pump-power ladder."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seed = cfg["seed"] if seed is None else seed
    sc = cfg["hysteresis"]
    triplet = cfgmod.build_triplet(cfg)
    lam0 = triplet.pump.wavelength
    span = sc["span_nm"] * 1e-9
    rate = sc["rate_pm_per_ms"] * 1e-12 / 1e-3
    dt = cfg["plant"]["dt_us"] * 1e-6
    files = []
    widths = []
    for power_dbm in sc["powers_dbm"]:
        power = cfgmod.dbm_to_watts(power_dbm)
        ring = cfgmod.build_thermal_ring(cfg, lam0)

        def fresh(start_wavelength):
            # each direction starts from the cold thermal equilibrium at its
            # own end of the span, as a real laser sweep does
            plant = Plant([ring], [triplet], cfgmod.build_crosstalk(cfg, 1),
                          start_wavelength, power)
            plant.settle(0.0, dt)
            return plant

        fwd = fresh(lam0 - span / 2).sweep_wavelength(
            lam0 - span / 2, lam0 + span / 2, rate, dt, record_every=sc["record_every"])
        rev = fresh(lam0 + span / 2).sweep_wavelength(
            lam0 + span / 2, lam0 - span / 2, rate, dt, record_every=sc["record_every"])
        width = hysteresis_width(fwd.wavelengths, fwd.transmission, rev.transmission[::-1])
        widths.append((power_dbm, width))
        rows = [
            [lam * 1e9, tf, pf * 1e6, lam_r * 1e9, tr, pr * 1e6]
            for lam, tf, pf, lam_r, tr, pr in zip(
                fwd.wavelengths, fwd.transmission, fwd.photocurrent * 1.0,
                rev.wavelengths, rev.transmission, rev.photocurrent * 1.0,
            )
        ]
        files.append(
            write_csv(
                out / f"hysteresis_{power_dbm:+.1f}dBm.csv",
                [
                    "fwd_wavelength_nm", "fwd_transmission", "fwd_photocurrent_uA",
                    "rev_wavelength_nm", "rev_transmission", "rev_photocurrent_uA",
                ],
                rows,
            )
        )
    files.append(
        write_csv(
            out / "hysteresis_widths.csv",
            ["pump_power_dbm", "hysteresis_width_pm"],
            [[p, w * 1e12] for p, w in widths],
        )
    )
    _write_meta(out, cfg, seed)
    return {"files": files, "widths": {p: w for p, w in widths}}


def _loop_csv_rows(rec: LoopRecord, n_rings: int):
    rows = []
    for i in range(len(rec.update)):
        rows.append([rec.update[i], *rec.dac_codes[i], rec.reading[i], rec.transmission[i], rec.stage[i]])
    header = ["update", *[f"dac_ring{j}" for j in range(n_rings)], "avg_adc_code", "pump_transmission", "stage"]
    return header, rows


def run_lock_with_aggressor(cfg: dict, out_dir: str | Path, seed: int | None = None) -> dict:
    """Closed-loop lock under a max-amplitude square-wave thermal aggressor.

    The run is repeated with the feedback frozen at the locked DAC code to
    show the uncontrolled snap-off.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seed = cfg["seed"] if seed is None else seed
    sc = cfg["lock_aggressor"]
    power = cfgmod.dbm_to_watts(sc["pump_power_dbm"])
    dac_max = 2 ** cfg["dac"]["acc_bits"] - 1
    period = sc["aggressor_period_updates"]
    n_dist = period * sc["aggressor_cycles"]

    def aggressor_idle(_):
        return {1: dac_max}

    def aggressor_square(start):
        def schedule(k):
            phase = ((k - start) % period) < period // 2
            return {1: 0 if phase else dac_max}
        return schedule

    results = {}
    for label, feedback in (("feedback_on", True), ("feedback_off", False)):
        sim = LockSimulation(cfg, power, n_rings=2, controlled=0, seed=seed)
        rec = sim.run(sc["lock_updates"], aggressor_codes=aggressor_idle)
        sim.require_locked()
        lock_start = sim.updates_run
        rec = sim.run(n_dist, aggressor_codes=aggressor_square(lock_start), feedback=feedback, record=rec)
        header, rows = _loop_csv_rows(rec, 2)
        write_csv(out / f"lock_{label}.csv", header, rows)
        results[label] = {"record": rec, "lock_start": lock_start, "setpoint": sim.state.setpoint,
                          "dark": sim.state.dark_code, "span": sim.state.span, "sim": sim}

    sim_on = results["feedback_on"]["sim"]
    photon = analyze_photon_point(
        cfg, sim_on.triplet, power, sim_on.drop_rel(), sc["photon_integration_s"],
        seed=np.random.SeedSequence(seed).spawn(1)[0],
    )
    if not photon["converged"]:
        raise FitError("coincidence fit failed at the locked operating point")
    car = photon["car_s1"]
    write_csv(
        out / "locked_statistics.csv",
        ["car", "detected_rate_s1_hz", "pgr_onchip_model_hz", "pgr_deembedded_hz", "g2"],
        [[car.car, car.pair_rate, photon["pair_rate_onchip"], photon["pgr_deembedded"], photon["g2"]]],
    )
    _write_meta(out, cfg, seed, {"time_compression": sim_on.time_compression})
    return {"runs": results, "photon": photon}


def run_multiring(cfg: dict, out_dir: str | Path, seed: int | None = None) -> dict:
    """One ring locked while the others replay its DAC waveform, staggered."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seed = cfg["seed"] if seed is None else seed
    sc = cfg["multiring"]
    n = sc["n_rings"]
    ctl = sc["controlled_ring"]
    power = cfgmod.dbm_to_watts(sc["pump_power_dbm"])

    sim = LockSimulation(cfg, power, n_rings=n, controlled=ctl, seed=seed)
    lock_updates = cfg["lock_aggressor"]["lock_updates"]
    rec = sim.run(lock_updates)
    sim.require_locked()
    waveform = np.array([codes[ctl] for codes in rec.dac_codes])
    others = [j for j in range(n) if j != ctl]
    stagger = sc["stagger_updates"]
    start = sim.updates_run

    def schedule(k):
        codes = {}
        for rank, j in enumerate(others):
            t0 = start + rank * stagger
            if k >= t0:
                idx = min(k - t0, waveform.size - 1)
                codes[j] = int(waveform[idx])
        return codes

    total = len(others) * stagger + waveform.size
    rec = sim.run(total, aggressor_codes=schedule, record=rec)
    sim.require_locked()
    header, rows = _loop_csv_rows(rec, n)
    files = [write_csv(out / "multiring_timeseries.csv", header, rows)]

    # segment statistics over the stagger phase at the realized lock points
    readings = np.array(rec.reading[start:])
    span_updates = readings.size
    seg_bounds = np.linspace(0, span_updates, sc["n_segments"] + 1, dtype=int)
    seeds = np.random.SeedSequence(seed).spawn(sc["n_segments"])
    segment_rows = []
    rates = []
    for si in range(sc["n_segments"]):
        lo, hi = seg_bounds[si], seg_bounds[si + 1]
        mean_reading = readings[lo:hi].mean()
        # the calibrated dark..max span maps the averaged code onto the
        # dropped-power fraction at this segment's operating point
        drop_rel = min(max((mean_reading - sim.state.dark_code) / sim.state.span, 0.0), 1.0)
        photon = analyze_photon_point(
            cfg, sim.triplet, power, drop_rel, sc["segment_integration_s"], seed=seeds[si]
        )
        if not photon["converged"]:
            raise FitError(f"coincidence fit failed in segment {si}")
        car = photon["car_s1"]
        rates.append(car.pair_rate)
        segment_rows.append([si, mean_reading, drop_rel, car.pair_rate, car.car, photon["g2"]])
    files.append(
        write_csv(
            out / "multiring_segments.csv",
            ["segment", "mean_adc_code", "drop_rel", "detected_rate_s1_hz", "car", "g2"],
            segment_rows,
        )
    )
    rates = np.array(rates)
    rsd = float(rates.std() / rates.mean())
    _write_meta(out, cfg, seed, {"time_compression": sim.time_compression, "pgr_rsd": rsd})
    return {"record": rec, "rates": rates, "rsd": rsd, "files": files}


def run_power_ladder(cfg: dict, out_dir: str | Path, seed: int | None = None) -> dict:
    """Lock and collect pair statistics across a pump-power ladder."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seed = cfg["seed"] if seed is None else seed
    sc = cfg["power_ladder"]
    powers = sorted(sc["powers_dbm"])
    seeds = np.random.SeedSequence(seed).spawn(len(powers))
    rows = []
    points = []
    for i, power_dbm in enumerate(powers):
        power = cfgmod.dbm_to_watts(power_dbm)
        sim = LockSimulation(cfg, power, n_rings=1, seed=seed + i)
        sim.run(cfg["lock_aggressor"]["lock_updates"])
        sim.require_locked()
        duration = sc["low_power_integration_s"] if i == 0 else sc["integration_s"]
        photon = analyze_photon_point(cfg, sim.triplet, power, sim.drop_rel(), duration, seed=seeds[i])
        point = {"power_dbm": power_dbm, "power_w": power, **photon}
        points.append(point)
        if photon["converged"]:
            car = photon["car_s1"]
            rows.append(
                [
                    power_dbm, power * 1e3, photon["pair_rate_onchip"], car.pair_rate,
                    photon["car_merged"].pair_rate, photon["pgr_deembedded"],
                    car.car, photon["g2"], photon["fit"].sigma * 1e12, 1,
                ]
            )
        else:
            rows.append([power_dbm, power * 1e3, photon["pair_rate_onchip"],
                         float("nan"), float("nan"), float("nan"), float("nan"),
                         photon["g2"], float("nan"), 0])
    files = [
        write_csv(
            out / "power_ladder.csv",
            [
                "power_dbm", "power_mw", "pgr_onchip_model_hz", "detected_rate_s1_hz",
                "detected_rate_merged_hz", "pgr_deembedded_hz", "car", "g2",
                "fit_sigma_ps", "fit_converged",
            ],
            rows,
        )
    ]
    _write_meta(out, cfg, seed)
    return {"points": points, "files": files}


def variability_report(cfg: dict, out_dir: str | Path, seed: int | None = None) -> dict:
    """Predicted pair rates and parameter spreads for a die-measurement table."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seed = cfg["seed"] if seed is None else seed
    table = cfg["variability"]["table"]
    rows = cfgmod.load_die_rows(None if table == "bundled" else table)
    coeffs = np.array([pair_generation_rate(r.triplet(1.0), 1.0) for r in rows])
    measured = np.array([r.pgr_per_w2 for r in rows])
    beta_sq = float(coeffs @ measured / (coeffs @ coeffs))
    beta_global = math.sqrt(beta_sq)
    predicted = coeffs * beta_sq
    residuals = (predicted - measured) / measured

    csv_rows = [
        [r.label, r.lambda_s * 1e9, r.lambda_p * 1e9, r.lambda_i * 1e9,
         r.dnu_fsr / 1e9, measured[i] / 1e12, predicted[i] / 1e12, residuals[i]]
        for i, r in enumerate(rows)
    ]
    files = [
        write_csv(
            out / "variability_predictions.csv",
            ["site", "lambda_s_nm", "lambda_p_nm", "lambda_i_nm", "dnu_fsr_ghz",
             "pgr_measured_mhz_mw2", "pgr_predicted_mhz_mw2", "rel_residual"],
            csv_rows,
        )
    ]

    columns = {
        "lambda_s_nm": [r.lambda_s * 1e9 for r in rows],
        "lambda_p_nm": [r.lambda_p * 1e9 for r in rows],
        "lambda_i_nm": [r.lambda_i * 1e9 for r in rows],
        "dnu_fsr_ghz": [r.dnu_fsr / 1e9 for r in rows],
        "pgr_mhz_mw2": [m / 1e12 for m in measured],
    }
    dies = [r.die for r in rows]
    spread_rows = []
    spreads = {}
    for name, values in columns.items():
        intra, inter = [], []
        for i in range(len(values)):
            for j in range(i + 1, len(values)):
                delta = abs(values[i] - values[j])
                (intra if dies[i] == dies[j] else inter).append(delta)
        stats = {
            "best_intra_die": min(intra) if intra else 0.0,
            "worst_intra_die": max(intra) if intra else 0.0,
            "best_die_die": min(inter) if inter else 0.0,
            "worst_die_die": max(inter) if inter else 0.0,
        }
        spreads[name] = stats
        spread_rows.append([name, *stats.values()])
    files.append(
        write_csv(
            out / "variability_spreads.csv",
            ["column", "best_intra_die", "worst_intra_die", "best_die_die", "worst_die_die"],
            spread_rows,
        )
    )
    _write_meta(out, cfg, seed, {"beta_global": beta_global})
    return {
        "beta_global": beta_global,
        "residuals": residuals,
        "median_abs_residual": float(np.median(np.abs(residuals))),
        "spreads": spreads,
        "files": files,
    }


def dac_characterize(cfg: dict, out_dir: str | Path, seed: int | None = None) -> dict:
    """Effective-resolution grid and INL/DNL curves as CSV."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seed = cfg["seed"] if seed is None else seed
    sc = cfg["dac_characterize"]
    acc_bits = sc["er_acc_bits"]
    stage0 = cfgmod.build_switch_stage(cfg)
    p_fs = stage0.p_fullscale

    er_rows = []
    sigma_rows = []
    er_table = {}
    for f_mhz in sc["f_clk_mhz"]:
        for tau_us in sc["tau_th_us"]:
            er, sigma = effective_resolution(f_mhz * 1e6, tau_us * 1e-6, acc_bits, p_fs)
            er_table[(f_mhz, tau_us)] = er
            er_rows.append([f_mhz, tau_us, er])
            for code in range(sigma.size):
                sigma_rows.append([f_mhz, tau_us, code, sigma[code]])
    files = [
        write_csv(out / "dac_er_grid.csv", ["f_clk_mhz", "tau_th_us", "effective_resolution_bits"], er_rows),
        write_csv(out / "dac_sigma_ripple.csv", ["f_clk_mhz", "tau_th_us", "code", "sigma_ripple_w"], sigma_rows),
    ]

    inl_rows = []
    inl_by_f = {}
    for f_mhz in sc["inl_f_clk_mhz"]:
        stage = cfgmod.build_switch_stage(cfgmod._deep_merge(cfg, {"dac": {"f_clk_mhz": f_mhz}}))
        transfer = mean_power_transfer(stage, acc_bits)
        inl, dnl = inl_dnl(transfer)
        inl_by_f[f_mhz] = (inl, dnl)
        for code in range(transfer.size):
            inl_rows.append([f_mhz, code, transfer[code], inl[code], dnl[code] if code < dnl.size else float("nan")])
    files.append(
        write_csv(out / "dac_inl_dnl.csv", ["f_clk_mhz", "code", "mean_power_w", "inl_lsb", "dnl_lsb"], inl_rows)
    )
    _write_meta(out, cfg, seed)
    return {"er": er_table, "inl": inl_by_f, "files": files}


SCENARIOS = {
    "hysteresis": run_hysteresis,
    "lock-aggressor": run_lock_with_aggressor,
    "multiring": run_multiring,
    "power-ladder": run_power_ladder,
    "variability": variability_report,
    "dac-characterize": dac_characterize,
}
