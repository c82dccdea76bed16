import numpy as np
import pytest

from ringlock import tagio
from ringlock.photons import CoincidenceHistogram, simulate_timestamps, PhotonChannelModel


def test_timestamp_round_trip(tmp_path):
    ch = PhotonChannelModel(efficiency=0.8, jitter_sigma=50e-12)
    ts = simulate_timestamps(1e4, 0.5, ch, ch, ch, seed=1)
    channels = {"idler": ts.idler, "signal_1": ts.signal_1, "signal_2": ts.signal_2}
    sidecar = tagio.write_timestamps(tmp_path / "run", channels)
    back = tagio.read_timestamps(sidecar)
    assert set(back) == set(channels)
    for name in channels:
        # storage quantizes to 1 ps
        np.testing.assert_allclose(back[name], channels[name], atol=0.51e-12)


def test_timestamps_quantized_to_picoseconds(tmp_path):
    sidecar = tagio.write_timestamps(tmp_path / "q", {"a": np.array([1.0000000000004])})
    back = tagio.read_timestamps(sidecar)
    assert back["a"][0] == pytest.approx(1.0, abs=1e-15)


def test_sidecar_count_mismatch_detected(tmp_path):
    sidecar = tagio.write_timestamps(tmp_path / "bad", {"a": np.array([1.0, 2.0])})
    (tmp_path / "bad.a.bin").write_bytes(b"\x00" * 8)
    with pytest.raises(ValueError):
        tagio.read_timestamps(sidecar)


def test_histogram_csv_round_trip(tmp_path):
    h = CoincidenceHistogram(1e-12, 0.0, np.arange(50), integration_time=2.0)
    path = tmp_path / "hist.csv"
    tagio.histogram_to_csv(h, path)
    first_line = path.read_text().splitlines()[0]
    assert first_line == "bin_center_ps,counts"
    back = tagio.histogram_from_csv(path, integration_time=2.0)
    np.testing.assert_array_equal(back.counts, h.counts)
    assert back.bin_width == pytest.approx(h.bin_width, rel=1e-9)
