import numpy as np
import pytest

from ringlock.dac import (
    DeltaSigmaState,
    SwitchStage,
    ds_pulses,
    ds_step,
    effective_resolution,
    inl_dnl,
    mean_power_transfer,
    switched_power_waveform,
    thermal_lowpass,
)

STAGE = SwitchStage(r_heater=331.4, r_switch=30.0, c_parasitic=100e-15, v_ddh=1.3, f_clk=500e6)


def ideal_stage(f_clk=500e6):
    return SwitchStage(r_heater=331.4, r_switch=0.0, c_parasitic=0.0, v_ddh=1.3, f_clk=f_clk)


class TestDeltaSigma:
    def test_half_scale_alternates(self):
        state = DeltaSigmaState(acc_bits=4)
        pulses = []
        for _ in range(8):
            state, p = ds_step(state, 8)
            pulses.append(p)
        assert pulses == [0, 1, 0, 1, 0, 1, 0, 1]

    def test_zero_code_stays_silent(self):
        assert not ds_pulses(0, 64, acc_bits=4).any()

    def test_step_loop_matches_closed_form(self):
        for code in (1, 3, 7, 11, 15):
            state = DeltaSigmaState(acc_bits=4)
            pulses = []
            for _ in range(48):
                state, p = ds_step(state, code)
                pulses.append(p)
            np.testing.assert_array_equal(pulses, ds_pulses(code, 48, acc_bits=4))

    def test_code_three_gives_three_pulses_per_period(self):
        assert int(ds_pulses(3, 16, acc_bits=4).sum()) == 3

    def test_pulse_density_exact_for_every_code_and_window(self):
        rng = np.random.default_rng(0)
        for nbits in (4, 6, 8):
            n = 2**nbits
            for code in range(n):
                start = int(rng.integers(0, n))
                bits = ds_pulses(code, start + n, acc_bits=nbits)
                assert int(bits[start:].sum()) == code

    def test_out_of_range_code_rejected(self):
        state = DeltaSigmaState(acc_bits=4)
        with pytest.raises(ValueError):
            ds_step(state, 16)
        with pytest.raises(ValueError):
            ds_pulses(-1, 8, acc_bits=4)


class TestSwitchedWaveform:
    def test_ideal_stage_reproduces_bit_pattern(self):
        bits = np.array([1, 0, 1, 1, 0], dtype=np.uint8)
        wave = switched_power_waveform(bits, ideal_stage(), oversample=4)
        p_on = ideal_stage().p_fullscale
        expected = np.repeat(bits.astype(float), 4) * p_on
        np.testing.assert_allclose(wave, expected, rtol=1e-9)

    def test_all_ones_settles_to_full_scale(self):
        wave = switched_power_waveform(np.ones(64, dtype=np.uint8), STAGE, oversample=16)
        assert wave[-1] == pytest.approx(STAGE.p_fullscale, rel=1e-9)
        settle_samples = int(5 * STAGE.tau_fall * STAGE.f_clk * 16) + 1
        assert wave[settle_samples] == pytest.approx(STAGE.p_fullscale, rel=0.02)

    def test_midcode_mean_power_above_ideal_line(self):
        # slow post-pulse dissipation tail adds energy at every switching
        # event, lifting the transfer most where activity peaks (midcode)
        transfer = mean_power_transfer(STAGE, acc_bits=8)
        ideal = np.arange(256) / 256 * STAGE.p_fullscale
        mid = slice(96, 160)
        assert (transfer[mid] > ideal[mid]).all()

    def test_oversample_minimum_enforced(self):
        with pytest.raises(ValueError):
            switched_power_waveform([1, 0], STAGE, oversample=2)

    def test_transfer_matches_waveform_mean(self):
        code, nbits = 37, 6
        transfer = mean_power_transfer(STAGE, acc_bits=nbits, codes=[code])
        bits = ds_pulses(code, 3 * 2**nbits, acc_bits=nbits)
        wave = switched_power_waveform(bits, STAGE, oversample=8)
        steady = wave[wave.size // 3 :]
        assert transfer[0] == pytest.approx(steady.mean(), rel=1e-6)


class TestThermalLowpass:
    def test_constant_input_converges_to_dc(self):
        y = thermal_lowpass(np.full(5000, 2.5), tau_th=10e-6, dt=1e-7)
        assert y[-1] == pytest.approx(2.5, rel=1e-9)

    def test_step_response_time_constant(self):
        tau = 10e-6
        dt = tau / 100
        y = thermal_lowpass(np.ones(200), tau, dt)
        assert y[99] == pytest.approx(1 - np.exp(-1.0), rel=0.01)

    def test_square_wave_ripple_matches_triangle_formula(self):
        # 50 % square wave with f >> 1/(2 pi tau): mean +- X/(8 f tau),
        # i.e. peak-to-peak X/(4 f tau), from the triangle-wave limit
        tau = 500e-6
        f_sq = 10e3
        dt = 1e-6
        period = int(1 / (f_sq * dt))
        x = np.tile(np.repeat([1.0, 0.0], period // 2), 400)
        y = thermal_lowpass(x, tau, dt, y0=0.5)
        tail = y[-4 * period :]
        ripple_pp = tail.max() - tail.min()
        assert ripple_pp == pytest.approx(1.0 / (4 * f_sq * tau), rel=0.05)
        assert tail.mean() == pytest.approx(0.5, rel=0.01)

    def test_invalid_dt_rejected(self):
        with pytest.raises(ValueError):
            thermal_lowpass([1.0], 1e-6, 0.0)

    def test_marginal_dt_warns(self):
        with pytest.warns(UserWarning):
            thermal_lowpass([1.0, 1.0], 1e-6, 2e-6)


class TestEffectiveResolution:
    def test_mean_filtered_power_is_exact_pulse_density(self):
        # average over whole periods once the start-up transient (decay
        # e^{-t/tau}) is beneath the target precision
        nbits = 8
        tau, f_clk = 2e-6, 500e6
        a_dt = 1.0 / f_clk
        for code in (1, 37, 128, 200, 255):
            bits = ds_pulses(code, 140 * 2**nbits, acc_bits=nbits).astype(float)
            y = thermal_lowpass(bits, tau, a_dt, y0=code / 2**nbits)
            steady = y[-40 * 2**nbits :]
            assert steady.mean() == pytest.approx(code / 2**nbits, rel=1e-9, abs=1e-12)

    def test_reference_point_and_endpoints(self):
        er, sigma = effective_resolution(500e6, 500e-9, acc_bits=10)
        assert er == pytest.approx(10.0, abs=1.0)
        assert sigma[0] == 0.0
        assert sigma.size == 1024

    def test_monotone_in_tau_and_clock(self):
        taus = [0.5e-6, 2.7e-6, 10e-6]
        clocks = [125e6, 250e6, 500e6]
        grid = {
            (f, t): effective_resolution(f, t, acc_bits=8)[0]
            for f in clocks
            for t in taus
        }
        for f in clocks:
            ers = [grid[(f, t)] for t in taus]
            assert ers == sorted(ers)
        for t in taus:
            ers = [grid[(f, t)] for f in clocks]
            assert ers == sorted(ers)


class TestInlDnl:
    def test_perfectly_linear_transfer(self):
        inl, dnl = inl_dnl(np.linspace(0.0, 5.1e-3, 64))
        np.testing.assert_allclose(inl, 0.0, atol=1e-9)
        np.testing.assert_allclose(dnl, 0.0, atol=1e-9)

    def test_repeated_value_flags_dnl_minus_one(self):
        y = np.linspace(0.0, 1.0, 32)
        y[10] = y[9]
        inl, dnl = inl_dnl(y)
        assert dnl[9] == pytest.approx(-1.0, abs=1e-9)

    def test_too_few_codes_rejected(self):
        with pytest.raises(ValueError):
            inl_dnl([0.0, 1.0, 2.0])

    def test_clock_rate_strengthens_nonlinearity(self):
        stage_fast = STAGE
        stage_slow = SwitchStage(331.4, 30.0, 100e-15, 1.3, 125e6)
        inl_fast, dnl_fast = inl_dnl(mean_power_transfer(stage_fast, acc_bits=8))
        inl_slow, dnl_slow = inl_dnl(mean_power_transfer(stage_slow, acc_bits=8))
        assert np.abs(inl_fast).max() > np.abs(inl_slow).max()
        assert dnl_fast.min() > -1.0
        assert dnl_slow.min() > -1.0
