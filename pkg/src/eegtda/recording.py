"""Core signal containers: recordings and labeled one-second segments."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DataError, RangeError


class Label(Enum):
    IED = "IED"
    BACKGROUND = "BACKGROUND"
    UNLABELED = "UNLABELED"


@dataclass(frozen=True, eq=False)
class Recording:
    """Multichannel time series.

    Parameters
    ----------
    channels : list of str
        Channel labels, one per row of ``samples``.
    samples : ndarray, shape (C, T)
        Amplitudes in microvolts (or whatever unit the source used;
        units are passed through unchanged).
    rate : float
        Sampling rate in Hz.
    source_id : str
        Identifier used to reference segments back to their origin.
    """

    channels: list[str]
    samples: np.ndarray
    rate: float
    source_id: str = "recording"

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", samples)
        if samples.ndim != 2:
            raise DataError("samples must be a 2-D channel-by-time matrix")
        if len(self.channels) != samples.shape[0]:
            raise DataError(
                f"{len(self.channels)} channel labels for {samples.shape[0]} rows"
            )
        if self.rate <= 0:
            raise DataError(f"sampling rate must be positive, got {self.rate}")
        if samples.shape[1] < 2:
            raise DataError(f"need at least 2 samples, got {samples.shape[1]}")
        if not np.all(np.isfinite(samples)):
            raise DataError("samples contain non-finite values")

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]


@dataclass(frozen=True, eq=False)
class Segment:
    """One fixed-length window cut from a recording."""

    source_id: str
    start_sample: int
    data: np.ndarray  # M x W
    rate: float
    label: Label = Label.UNLABELED

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        object.__setattr__(self, "data", data)
        if not np.all(np.isfinite(data)):
            raise DataError("segment data contains non-finite values")

    @property
    def window(self) -> int:
        return self.data.shape[1]

    @property
    def ref(self) -> str:
        """Stable reference string used by the store and the CLI."""
        return f"{self.source_id}:{self.start_sample}"


def segment(
    rec: Recording,
    window_seconds: float = 1.0,
    labels: list[tuple[int, Label]] | None = None,
) -> list[Segment]:
    """Cut windows out of a recording.

    With ``labels`` given, cuts one window per (start_sample, label) entry.
    Without labels, tiles the recording with floor(T / W) non-overlapping
    unlabeled windows starting at sample 0.

    Raises
    ------
    RangeError
        If a labeled window extends past the end of the recording.
    """
    if window_seconds <= 0:
        raise RangeError(f"window_seconds must be positive, got {window_seconds}")
    w = int(round(rec.rate * window_seconds))
    if w < 2:
        raise RangeError(f"window of {w} samples is too short")

    out = []
    if labels is None:
        for k in range(rec.n_samples // w):
            out.append(
                Segment(
                    source_id=rec.source_id,
                    start_sample=k * w,
                    data=rec.samples[:, k * w : (k + 1) * w],
                    rate=rec.rate,
                )
            )
        return out

    for start, lab in labels:
        start = int(start)
        if start < 0 or start + w > rec.n_samples:
            raise RangeError(
                f"window [{start}, {start + w}) exceeds recording of "
                f"{rec.n_samples} samples (start_sample={start})"
            )
        if isinstance(lab, str):
            lab = Label(lab)
        out.append(
            Segment(
                source_id=rec.source_id,
                start_sample=start,
                data=rec.samples[:, start : start + w],
                rate=rec.rate,
                label=lab,
            )
        )
    return out
