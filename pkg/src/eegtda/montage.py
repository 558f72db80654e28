"""Montage transforms: linear re-referencing of EEG channels.

A montage is data, not code: a JSON file listing output channels, each a
sparse weighted sum of input channels by label. Three montages ship with
the package (bipolar, average, cz_reference) over a 28-electrode 10-20
layout; users may point the CLI at their own files.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError, ParseError
from .recording import Recording

BUILTIN_MONTAGES = ("bipolar", "average", "cz_reference")


@dataclass(frozen=True)
class Montage:
    """Sparse linear map from input channel labels to output channels."""

    name: str
    out_labels: list[str]
    rows: list[dict[str, float]]  # parallel to out_labels

    def __post_init__(self):
        if len(self.out_labels) != len(self.rows):
            raise ConfigError("montage output labels and weight rows differ in length")
        for lab, row in zip(self.out_labels, self.rows):
            if not row or all(w == 0 for w in row.values()):
                raise ConfigError(f"montage row {lab!r} has no nonzero weight")

    @property
    def n_out(self) -> int:
        return len(self.out_labels)

    def weight_matrix(self, channels: list[str]) -> np.ndarray:
        """Materialize the M x C weight matrix against a channel list.

        Raises
        ------
        ConfigError
            If a referenced input label is missing from ``channels``.
        """
        index = {c: i for i, c in enumerate(channels)}
        w = np.zeros((len(self.rows), len(channels)))
        for r, (lab, row) in enumerate(zip(self.out_labels, self.rows)):
            for in_label, weight in row.items():
                if in_label not in index:
                    raise ConfigError(
                        f"montage {self.name!r}: channel {in_label!r} (needed by "
                        f"output {lab!r}) not present in the recording"
                    )
                w[r, index[in_label]] = weight
        return w


def load_montage(path) -> Montage:
    """Load a montage from a JSON file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError:
        raise ConfigError(f"montage file {path} is not readable") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid montage JSON: {exc}") from None
    return _from_doc(doc, str(path))


def builtin_montage(name: str) -> Montage:
    """Load one of the montages shipped with the package."""
    if name not in BUILTIN_MONTAGES:
        raise ConfigError(
            f"unknown montage {name!r}; built-ins are {', '.join(BUILTIN_MONTAGES)}"
        )
    text = resources.files("eegtda").joinpath(f"montages/{name}.json").read_text("utf-8")
    return _from_doc(json.loads(text), f"builtin:{name}")


def montage_text(name_or_path: str) -> str:
    """Raw montage file content, used for config hashing."""
    if name_or_path in BUILTIN_MONTAGES:
        return resources.files("eegtda").joinpath(
            f"montages/{name_or_path}.json"
        ).read_text("utf-8")
    try:
        return Path(name_or_path).read_text(encoding="utf-8")
    except OSError:
        raise ConfigError(
            f"montage {name_or_path!r} is neither a built-in "
            f"({', '.join(BUILTIN_MONTAGES)}) nor a readable file"
        ) from None


def get_montage(name_or_path: str) -> Montage:
    """Resolve a built-in montage name or a path to a montage file."""
    if name_or_path in BUILTIN_MONTAGES:
        return builtin_montage(name_or_path)
    return load_montage(name_or_path)


def _from_doc(doc, where: str) -> Montage:
    try:
        name = doc["name"]
        entries = doc["channels"]
        out_labels = [e["label"] for e in entries]
        rows = [
            {str(k): float(v) for k, v in e["weights"].items()} for e in entries
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{where}: malformed montage document: {exc}") from None
    return Montage(name=str(name), out_labels=out_labels, rows=rows)


def apply_montage(rec: Recording, mon: Montage) -> Recording:
    """Re-reference a recording through a montage.

    Output samples are ``weights @ input samples``; the sampling rate and
    source id carry over.
    """
    w = mon.weight_matrix(rec.channels)
    return Recording(
        channels=list(mon.out_labels),
        samples=w @ rec.samples,
        rate=rec.rate,
        source_id=rec.source_id,
    )
