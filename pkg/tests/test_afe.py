import numpy as np
import pytest

from ringlock.afe import (
    AfeConfig,
    CalibrationError,
    adc_read,
    afe_calibrate,
    apply_calibration,
    averaged_read,
    tia_gain,
)


class TestTiaGain:
    def test_single_resistor_settings(self):
        assert tia_gain(0b0001) == 50e3
        assert tia_gain(0b1000) == 400e3

    def test_all_engaged_gives_maximum(self):
        assert tia_gain(0b1111) == 750e3

    def test_additive_composition(self):
        assert tia_gain(0b0110) == 300e3

    def test_no_resistor_rejected(self):
        with pytest.raises(ValueError):
            tia_gain(0)
        with pytest.raises(ValueError):
            AfeConfig(gain_bits=0)


class TestAdcRead:
    def test_zero_current_reads_midrail(self):
        cfg = AfeConfig()
        assert adc_read(0.0, cfg) == cfg.midrail_code == 256

    def test_saturation_at_full_scale(self):
        cfg = AfeConfig()
        assert adc_read(1.0, cfg) == 511
        assert adc_read(-1.0, cfg) == 0

    def test_linear_region_slope(self):
        # least-squares secant over the middle third of the code range,
        # where the soft clip deviates from unit slope by well under 2 %
        cfg = AfeConfig(gain_bits=0b0100, idac_sense=0.4e-6)
        gain = tia_gain(cfg.gain_bits)
        currents = np.linspace(-0.35e-6, 0.35e-6, 600) + 0.4e-6
        codes = adc_read(currents, cfg).astype(float)
        middle = (codes > 511 / 3) & (codes < 2 * 511 / 3)
        slope = np.polyfit(currents[middle], codes[middle], 1)[0]
        assert slope == pytest.approx(gain / cfg.lsb_volts, rel=0.02)

    def test_monotone_for_every_gain(self):
        currents = np.linspace(-5e-6, 20e-6, 4000)
        for gain_bits in range(1, 16):
            cfg = AfeConfig(gain_bits=gain_bits)
            codes = adc_read(currents, cfg)
            assert (np.diff(codes) >= 0).all()
            assert codes.min() >= 0 and codes.max() <= 511

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            adc_read(float("nan"), AfeConfig())


class TestAveragedRead:
    def test_constant_input_passes_through(self):
        cfg = AfeConfig()
        out = averaged_read(np.full(512, 0.2e-6), cfg)
        assert out.size == 1
        assert out[0] == adc_read(0.2e-6, cfg)

    def test_update_rate(self):
        cfg = AfeConfig()
        assert cfg.update_rate == pytest.approx(61.04e3, rel=1e-3)

    def test_noise_averages_down_by_sqrt_n(self):
        cfg = AfeConfig(noise_sigma_codes=4.0)
        rng = np.random.default_rng(5)
        n_blocks = 10_000
        out = averaged_read(np.full(512 * n_blocks, 0.2e-6), cfg, rng=rng)
        assert out.std() == pytest.approx(4.0 / np.sqrt(512), rel=0.1)

    def test_short_trace_rejected(self):
        with pytest.raises(ValueError):
            averaged_read(np.zeros(100), AfeConfig())


class TestCalibration:
    def test_linear_afe_maximizes_range(self):
        # IDAC step aligned to exactly 16 ADC codes so the response really
        # is constant; the best point is then the lowest zero-light code
        cfg = AfeConfig(gain_bits=0b0100, softclip_sharpness=None,
                        idac_lsb=1.5625e-7, idac_codes=32)
        result = afe_calibrate(5e-9, cfg)
        responding = result.scan_fom > 0
        dark_codes = result.scan_adc_codes[responding]
        assert result.dark_code == dark_codes.min()

    def test_soft_clip_picks_point_below_midscale(self):
        cfg = AfeConfig(gain_bits=0b0100, softclip_sharpness=2.0)
        result = afe_calibrate(5e-9, cfg)
        assert result.dark_code < cfg.midrail_code
        brute_best = int(np.argmax(result.scan_fom))
        assert result.figure_of_merit == result.scan_fom[brute_best]

    def test_idempotent(self):
        cfg = AfeConfig(gain_bits=0b0100)
        r1 = afe_calibrate(5e-9, cfg)
        r2 = afe_calibrate(5e-9, cfg)
        assert r1.idac_code == r2.idac_code

    def test_applied_calibration_shifts_operating_point(self):
        cfg = AfeConfig(gain_bits=0b0100)
        result = afe_calibrate(5e-9, cfg)
        cal = apply_calibration(cfg, result)
        assert adc_read(5e-9, cal) == result.dark_code

    def test_saturated_scan_fails(self):
        # a dark current far beyond the IDAC authority rails every point
        cfg = AfeConfig(gain_bits=0b1111)
        with pytest.raises(CalibrationError):
            afe_calibrate(1.0, cfg)
