import json

import pytest

from ringlock import config as cfgmod
from ringlock.cmt import pair_generation_rate
from ringlock.config import ConfigError


class TestLoadAndValidate:
    def test_defaults_are_valid(self):
        cfg = cfgmod.load_config()
        assert cfg["schema_version"] == cfgmod.SCHEMA_VERSION

    def test_user_file_merges_over_defaults(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"plant": {"tau_th_us": 5.0}, "seed": 7}))
        cfg = cfgmod.load_config(path)
        assert cfg["plant"]["tau_th_us"] == 5.0
        assert cfg["plant"]["tuning_nm_per_mw"] == 0.1216  # default retained
        assert cfg["seed"] == 7

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"plnt": {"tau_th_us": 5.0}}))
        with pytest.raises(ConfigError):
            cfgmod.load_config(path)

    def test_bad_value_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"plant": {"absorption_fraction": 1.5}}))
        with pytest.raises(ConfigError):
            cfgmod.load_config(path)

    def test_malformed_json_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            cfgmod.load_config(path)

    def test_set_by_path(self):
        cfg = cfgmod.load_config()
        cfg2 = cfgmod.set_by_path(cfg, "controller.kp", 0.5)
        assert cfg2["controller"]["kp"] == 0.5
        assert cfg["controller"]["kp"] != 0.5  # original untouched

    def test_set_by_unknown_path_rejected(self):
        with pytest.raises(ConfigError):
            cfgmod.set_by_path(cfgmod.load_config(), "controller.nope", 1)


class TestDieTable:
    def test_bundled_rows(self):
        rows = cfgmod.load_die_rows()
        assert len(rows) == 12
        b9 = rows[0]
        assert b9.label == "B9-System"
        assert b9.lambda_p == pytest.approx(1552.50e-9)
        assert b9.pgr_per_w2 == pytest.approx(3.29e12)

    def test_malformed_table_rejected(self, tmp_path):
        path = tmp_path / "rows.csv"
        path.write_text("die,site\nB9,System\n")
        with pytest.raises(ConfigError):
            cfgmod.load_die_rows(path)


class TestBuilders:
    def test_calibrated_beta_reproduces_target(self):
        cfg = cfgmod.load_config()
        beta = cfgmod.calibrated_beta(cfg)
        b = cfg["beta_calibration"]
        from ringlock.cmt import ResonatorTriplet

        triplet = ResonatorTriplet.from_uniform_q(
            b["pump_wavelength_nm"] * 1e-9, b["q_intrinsic"], b["q_extrinsic"],
            b["fsr_mismatch_ghz"] * 1e9, beta, b["fsr_ghz"] * 1e9,
        )
        per_mw2 = pair_generation_rate(triplet, 1e-3) / 1e-3**2 * 1e-6
        assert per_mw2 * 1e6 == pytest.approx(5.19e12, rel=1e-9)

    def test_triplet_from_table_row(self):
        cfg = cfgmod.load_config()
        t = cfgmod.build_triplet(cfg)
        assert t.pump.wavelength == pytest.approx(1552.50e-9)
        assert t.fsr_mismatch == pytest.approx(1.42e9)

    def test_unknown_table_row_rejected(self):
        cfg = cfgmod.load_config(overrides={"triplet": {"table_row": "Z9-System"}})
        with pytest.raises(ConfigError):
            cfgmod.build_triplet(cfg)

    def test_heater_power_from_code(self):
        cfg = cfgmod.load_config()
        p_fs = cfg["dac"]["v_ddh"] ** 2 / cfg["dac"]["r_heater_ohm"]
        assert cfgmod.heater_power_from_code(0, cfg) == 0.0
        assert cfgmod.heater_power_from_code(512, cfg) == pytest.approx(p_fs / 2)

    def test_channels_scale_background_with_power(self):
        cfg = cfgmod.load_config()
        ref = cfgmod.dbm_to_watts(cfg["photons"]["noise_ref_power_dbm"])
        ch_ref = cfgmod.build_channels(cfg, ref)
        ch_low = cfgmod.build_channels(cfg, ref / 10)
        expo = cfg["photons"]["noise_power_exponent"]
        ratio = ch_low["idler"].noise_singles_rate / ch_ref["idler"].noise_singles_rate
        assert ratio == pytest.approx(10**-expo, rel=1e-9)
