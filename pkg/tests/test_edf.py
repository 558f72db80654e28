import numpy as np
import pytest

from eegtda import ParseError, Recording, UnsupportedFormatError, read_edf, write_edf


def _field(text, width):
    return str(text).encode("ascii").ljust(width)


def _raw_edf(
    labels=("sig0", "sig1"),
    n_records=1,
    spr=(128, 128),
    pmin="-100",
    pmax="100",
    duration="1",
    reserved="",
    data=None,
):
    n = len(labels)
    head = b"".join(
        [
            _field("0", 8),
            _field("X", 80),
            _field("X", 80),
            _field("01.01.00", 8),
            _field("00.00.00", 8),
            _field(256 + 256 * n, 8),
            _field(reserved, 44),
            _field(n_records, 8),
            _field(duration, 8),
            _field(n, 4),
        ]
    )
    sig = b"".join(_field(lb, 16) for lb in labels)
    sig += b"".join(_field("", 80) for _ in range(n))
    sig += b"".join(_field("uV", 8) for _ in range(n))
    sig += b"".join(_field(pmin, 8) for _ in range(n))
    sig += b"".join(_field(pmax, 8) for _ in range(n))
    sig += b"".join(_field(-32768, 8) for _ in range(n))
    sig += b"".join(_field(32767, 8) for _ in range(n))
    sig += b"".join(_field("", 80) for _ in range(n))
    sig += b"".join(_field(s, 8) for s in spr)
    sig += b"".join(_field("", 32) for _ in range(n))
    if data is None:
        data = np.zeros(n_records * sum(spr), dtype="<i2").tobytes()
    return head + sig + data


def test_writer_reader_roundtrip_within_quantization(tmp_path):
    rng = np.random.default_rng(3)
    rec = Recording(
        channels=["c1", "c2", "c3"],
        samples=50.0 * rng.standard_normal((3, 256)),
        rate=128.0,
        source_id="trip",
    )
    p = tmp_path / "trip.edf"
    write_edf(p, rec)
    back = read_edf(p)
    assert back.channels == rec.channels
    assert back.rate == rec.rate
    assert back.source_id == "trip"
    for i in range(3):
        lo, hi = rec.samples[i].min(), rec.samples[i].max()
        step = (hi - lo) / (32767 - (-32768))
        err = np.abs(back.samples[i] - rec.samples[i]).max()
        assert err <= step * 1.01


def test_zero_records_rejected(tmp_path):
    p = tmp_path / "zero.edf"
    p.write_bytes(_raw_edf(n_records=0))
    with pytest.raises(ParseError, match="at least 2"):
        read_edf(p)


def test_stored_zero_maps_to_range_midpoint(tmp_path):
    # (0 - (-32768)) * 200/65535 - 100 = 100/65535 above zero
    p = tmp_path / "mid.edf"
    p.write_bytes(_raw_edf())
    rec = read_edf(p)
    expected = 32768 * 200.0 / 65535.0 - 100.0
    assert expected == pytest.approx(0.00152593, abs=1e-6)
    assert np.allclose(rec.samples, expected, atol=1e-12)
    assert rec.rate == 128.0


def test_truncated_record_names_index(tmp_path):
    full = _raw_edf(n_records=2, data=np.zeros(512, dtype="<i2").tobytes())
    p = tmp_path / "trunc.edf"
    p.write_bytes(full[:-100])
    with pytest.raises(ParseError, match="record 1"):
        read_edf(p)


def test_discontinuous_edfplus_rejected(tmp_path):
    p = tmp_path / "d.edf"
    p.write_bytes(_raw_edf(reserved="EDF+D"))
    with pytest.raises(UnsupportedFormatError, match="discontinuous"):
        read_edf(p)


def test_mixed_sampling_rates_rejected(tmp_path):
    p = tmp_path / "mixed.edf"
    p.write_bytes(
        _raw_edf(spr=(128, 64), data=np.zeros(192, dtype="<i2").tobytes())
    )
    with pytest.raises(UnsupportedFormatError, match="mixed"):
        read_edf(p)


def test_annotation_signal_dropped(tmp_path):
    p = tmp_path / "ann.edf"
    p.write_bytes(_raw_edf(labels=("sig0", "EDF Annotations")))
    rec = read_edf(p)
    assert rec.channels == ["sig0"]
    assert rec.samples.shape == (1, 128)


def test_bad_record_count_reports_byte_offset(tmp_path):
    raw = bytearray(_raw_edf())
    raw[236:244] = b"oops    "
    p = tmp_path / "bad.edf"
    p.write_bytes(bytes(raw))
    with pytest.raises(ParseError, match="236"):
        read_edf(p)


def test_header_byte_count_mismatch(tmp_path):
    raw = bytearray(_raw_edf())
    raw[184:192] = _field(999, 8)
    p = tmp_path / "hdr.edf"
    p.write_bytes(bytes(raw))
    with pytest.raises(ParseError, match="header byte count"):
        read_edf(p)


def test_short_file_rejected(tmp_path):
    p = tmp_path / "short.edf"
    p.write_bytes(b"0".ljust(100))
    with pytest.raises(ParseError, match="256"):
        read_edf(p)


def test_non_integral_rate_roundtrip(tmp_path):
    # 2.5 Hz cannot use 1 s records; the writer must find another duration
    rec = Recording(
        channels=["a"],
        samples=np.linspace(-1.0, 1.0, 25)[None, :],
        rate=2.5,
        source_id="slow",
    )
    p = tmp_path / "slow.edf"
    write_edf(p, rec)
    back = read_edf(p)
    assert back.rate == pytest.approx(2.5)
    assert back.n_samples == 25


def test_constant_signal_roundtrip(tmp_path):
    # degenerate physical range must be widened, not crash
    rec = Recording(
        channels=["flat"], samples=np.full((1, 64), 7.25), rate=64.0
    )
    p = tmp_path / "flat.edf"
    write_edf(p, rec)
    back = read_edf(p)
    assert np.abs(back.samples - 7.25).max() < 1e-3
