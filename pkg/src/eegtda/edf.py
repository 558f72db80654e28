"""EDF reader and writer.

Plain EDF only: 256-byte ASCII header, 256 ASCII bytes per signal, then
data records of 16-bit little-endian two's-complement samples. EDF+
continuous files read fine (annotation signals are dropped); discontinuous
files are rejected.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ParseError, UnsupportedFormatError
from .recording import Recording

ANNOTATION_LABELS = {"EDF Annotations", "BDF Annotations"}
DIG_MIN = -32768
DIG_MAX = 32767


def _ascii_field(raw: bytes, off: int, length: int, name: str, path) -> str:
    chunk = raw[off : off + length]
    if len(chunk) < length:
        raise ParseError(f"{path}: header truncated at byte {off} ({name})")
    try:
        return chunk.decode("ascii").strip()
    except UnicodeDecodeError:
        raise ParseError(f"{path}: non-ASCII {name} at byte {off}") from None


def _int_field(raw, off, length, name, path) -> int:
    s = _ascii_field(raw, off, length, name, path)
    try:
        return int(s)
    except ValueError:
        raise ParseError(f"{path}: invalid {name} at byte {off}: {s!r}") from None


def _float_field(raw, off, length, name, path) -> float:
    s = _ascii_field(raw, off, length, name, path)
    try:
        return float(s)
    except ValueError:
        raise ParseError(f"{path}: invalid {name} at byte {off}: {s!r}") from None


def read_edf(path) -> Recording:
    """Parse an EDF file into a Recording.

    Annotation signals are dropped. All remaining signals must share one
    sampling rate, otherwise the file is rejected as unsupported.
    """
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < 256:
        raise ParseError(f"{path}: file shorter than the 256-byte header")

    reserved = _ascii_field(raw, 192, 44, "reserved", path)
    if reserved.startswith("EDF+D"):
        raise UnsupportedFormatError(f"{path}: discontinuous EDF+ is not supported")

    header_bytes = _int_field(raw, 184, 8, "header byte count", path)
    n_records = _int_field(raw, 236, 8, "record count", path)
    duration = _float_field(raw, 244, 8, "record duration", path)
    n_signals = _int_field(raw, 252, 4, "signal count", path)
    if n_signals <= 0:
        raise ParseError(f"{path}: signal count must be positive, got {n_signals}")
    if duration <= 0:
        raise ParseError(f"{path}: record duration must be positive, got {duration}")
    expect_header = 256 + 256 * n_signals
    if header_bytes != expect_header:
        raise ParseError(
            f"{path}: header byte count {header_bytes} at byte 184 does not match "
            f"{expect_header} for {n_signals} signals"
        )
    if len(raw) < expect_header:
        raise ParseError(f"{path}: header truncated at byte {len(raw)}")

    # per-signal header arrays are stored field-major, 256 bytes per signal
    def sig_field(base, width, idx):
        return 256 + base * n_signals + width * idx

    labels, pmins, pmaxs, dmins, dmaxs, sprs = [], [], [], [], [], []
    for i in range(n_signals):
        labels.append(_ascii_field(raw, sig_field(0, 16, i), 16, "signal label", path))
        pmins.append(_float_field(raw, sig_field(104, 8, i), 8, "physical min", path))
        pmaxs.append(_float_field(raw, sig_field(112, 8, i), 8, "physical max", path))
        dmins.append(_int_field(raw, sig_field(120, 8, i), 8, "digital min", path))
        dmaxs.append(_int_field(raw, sig_field(128, 8, i), 8, "digital max", path))
        sprs.append(_int_field(raw, sig_field(216, 8, i), 8, "samples per record", path))

    keep = [i for i in range(n_signals) if labels[i] not in ANNOTATION_LABELS]
    if not keep:
        raise UnsupportedFormatError(f"{path}: no data signals (annotations only)")
    rates = {sprs[i] for i in keep}
    if len(rates) != 1:
        raise UnsupportedFormatError(
            f"{path}: mixed sampling rates {sorted(sprs[i] / duration for i in keep)}"
        )
    spr = rates.pop()
    if spr <= 0:
        raise ParseError(f"{path}: non-positive samples per record")
    rate = spr / duration

    rec_len = sum(sprs)  # samples per record across all signals
    data = np.frombuffer(raw, dtype="<i2", offset=expect_header)
    if n_records < 0:
        # -1 means unknown; infer from file size
        n_records = data.size // rec_len
    if data.size < n_records * rec_len:
        bad = data.size // rec_len
        raise ParseError(f"{path}: data record {bad} is truncated")
    total = n_records * spr
    if total < 2:
        raise ParseError(
            f"{path}: {n_records} records of {spr} samples give {total} samples, "
            "need at least 2"
        )

    data = data[: n_records * rec_len].reshape(n_records, rec_len)
    offsets = np.cumsum([0] + sprs)
    samples = np.empty((len(keep), total))
    out_labels = []
    for row, i in enumerate(keep):
        dig = data[:, offsets[i] : offsets[i + 1]].reshape(-1).astype(np.float64)
        dmin, dmax = dmins[i], dmaxs[i]
        if dmax == dmin:
            raise ParseError(f"{path}: signal {i} has zero digital range")
        scale = (pmaxs[i] - pmins[i]) / (dmax - dmin)
        samples[row] = (dig - dmin) * scale + pmins[i]
        out_labels.append(labels[i])

    return Recording(
        channels=out_labels, samples=samples, rate=rate, source_id=path.stem
    )


def _format8(v: float) -> str:
    """Shortest ASCII decimal for an 8-character EDF numeric field."""
    for prec in range(7, 0, -1):
        s = f"{v:.{prec}g}"
        if len(s) <= 8 and "e" not in s and "E" not in s:
            return s
    s = f"{v:.1e}"
    if len(s) > 8:
        raise UnsupportedFormatError(f"value {v} does not fit an 8-char EDF field")
    return s


def _record_layout(rate: float, total: int) -> tuple[int, str]:
    """Pick (samples_per_record, duration_ascii) dividing the data exactly."""
    candidates = []
    if abs(rate - round(rate)) < 1e-12:
        candidates.append((int(round(rate)), "1"))
    for dur in (2, 4, 8, 10, 0.5, 0.25, 0.125, 0.1, 0.0625, 0.05, 0.03125, 0.01):
        spr = rate * dur
        if abs(spr - round(spr)) < 1e-9 and round(spr) >= 1:
            candidates.append((int(round(spr)), _format8(float(dur))))
    # last resort: one record holding everything
    candidates.append((total, _format8(total / rate)))
    for spr, dur_s in candidates:
        if spr <= 0 or total % spr:
            continue
        if abs(float(dur_s) * rate - spr) > 1e-9:
            continue
        return spr, dur_s
    raise UnsupportedFormatError(
        f"cannot express rate {rate} Hz / {total} samples as EDF records"
    )


def write_edf(path, rec: Recording) -> None:
    """Write a Recording as plain EDF.

    Physical ranges are taken per signal from the data; the quantization
    uses the header values as re-parsed from their own 8-character ASCII
    form, so reading the file back reproduces amplitudes within one
    quantization step.
    """
    path = Path(path)
    spr, dur_s = _record_layout(rec.rate, rec.n_samples)
    n_records = rec.n_samples // spr
    n_signals = rec.n_channels

    pmins, pmaxs = [], []
    for i in range(n_signals):
        lo = float(rec.samples[i].min())
        hi = float(rec.samples[i].max())
        if hi <= lo:
            hi = lo + 1.0
        # use the values as they will be read back, not the exact ones
        lo_s, hi_s = _format8(lo), _format8(hi)
        lo_p, hi_p = float(lo_s), float(hi_s)
        if hi_p <= lo_p or lo_p > lo or hi_p < hi:
            # rounding collapsed or clipped the range; widen and reformat
            span = max(hi - lo, abs(lo), abs(hi), 1.0)
            lo_s, hi_s = _format8(lo - 0.01 * span), _format8(hi + 0.01 * span)
            lo_p, hi_p = float(lo_s), float(hi_s)
        if hi_p <= lo_p:
            raise UnsupportedFormatError(
                f"signal {i}: physical range [{lo}, {hi}] not representable"
            )
        pmins.append((lo_p, lo_s))
        pmaxs.append((hi_p, hi_s))

    def field(text, width):
        b = str(text).encode("ascii")
        if len(b) > width:
            raise UnsupportedFormatError(f"field {text!r} exceeds {width} ASCII bytes")
        return b.ljust(width)

    head = b"".join(
        [
            field("0", 8),
            field("X X X X", 80),
            field(f"Startdate X {rec.source_id}"[:80], 80),
            field("01.01.00", 8),
            field("00.00.00", 8),
            field(256 + 256 * n_signals, 8),
            field("", 44),
            field(n_records, 8),
            field(dur_s, 8),
            field(n_signals, 4),
        ]
    )
    sig = b"".join(field(c[:16], 16) for c in rec.channels)
    sig += b"".join(field("", 80) for _ in range(n_signals))
    sig += b"".join(field("uV", 8) for _ in range(n_signals))
    sig += b"".join(field(s, 8) for _, s in pmins)
    sig += b"".join(field(s, 8) for _, s in pmaxs)
    sig += b"".join(field(DIG_MIN, 8) for _ in range(n_signals))
    sig += b"".join(field(DIG_MAX, 8) for _ in range(n_signals))
    sig += b"".join(field("", 80) for _ in range(n_signals))
    sig += b"".join(field(spr, 8) for _ in range(n_signals))
    sig += b"".join(field("", 32) for _ in range(n_signals))

    dig = np.empty((n_signals, rec.n_samples), dtype="<i2")
    for i in range(n_signals):
        lo, hi = pmins[i][0], pmaxs[i][0]
        scale = (DIG_MAX - DIG_MIN) / (hi - lo)
        q = np.rint((rec.samples[i] - lo) * scale + DIG_MIN)
        dig[i] = np.clip(q, DIG_MIN, DIG_MAX).astype("<i2")

    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(sig)
        for r in range(n_records):
            for i in range(n_signals):
                fh.write(dig[i, r * spr : (r + 1) * spr].tobytes())
