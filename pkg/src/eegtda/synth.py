"""Synthetic multichannel recordings with known ground truth.

Three source systems: a 2-D harmonic oscillator (exactly linear dynamics),
the Rossler system (two linear equations plus one nonlinear, the loop
structure the topology stage is meant to detect), and plain Gaussian
noise. Sources are integrated with fixed-step RK4 at eight times the
target rate, decimated by striding, mixed into M channels by a seeded
full-rank random map, and optionally buried in channel noise at a given
SNR. Everything is a pure function of the spec, so reruns are
byte-identical.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.signal import lfilter

from .errors import ConfigError, GenerationError
from .montage import builtin_montage, apply_montage
from .recording import Label, Recording, Segment, segment as cut_segments

OVERSAMPLE = 8

# the 28-electrode layout the built-in montages are defined over
STANDARD_ELECTRODES = [
    "Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8", "FT9", "FT10",
    "T7", "C3", "Cz", "C4", "T8", "TP9", "TP10",
    "P7", "P3", "Pz", "P4", "P8", "P9", "P10",
    "O1", "Oz", "O2", "F9", "F10",
]


class System(Enum):
    HARMONIC = "HARMONIC"
    ROSSLER = "ROSSLER"
    NOISE = "NOISE"


_DIM = {System.HARMONIC: 2, System.ROSSLER: 3, System.NOISE: 0}

_DEFAULTS = {
    System.HARMONIC: {"time_scale": 1.0},
    System.ROSSLER: {
        "a": 0.2, "b": 0.2, "c": 5.7, "time_scale": 15.0, "jitter": 0.5,
    },
    System.NOISE: {"sigma": 1.0},
}


@dataclass(frozen=True)
class SynthSpec:
    system: System
    duration: float  # seconds
    rate: float = 128.0
    channels: int = 2
    mixing_seed: int | None = None  # None = identity map (channels == dim)
    snr_db: float | None = None
    seed: int = 0  # initial conditions and noise
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.rate <= 0 or self.duration <= 0:
            raise ConfigError("rate and duration must be positive")
        if self.channels < _DIM[self.system]:
            raise ConfigError(
                f"{self.system.value} needs at least {_DIM[self.system]} channels"
            )
        if self.snr_db is not None and not math.isfinite(self.snr_db):
            raise ConfigError("snr_db must be finite when given")
        unknown = set(self.params) - set(_DEFAULTS[self.system])
        if unknown:
            raise ConfigError(
                f"unknown {self.system.value} parameters: {sorted(unknown)}"
            )

    def param(self, name: str) -> float:
        return float(self.params.get(name, _DEFAULTS[self.system][name]))


def _integrate(spec: SynthSpec, n_out: int) -> np.ndarray:
    """RK4 at OVERSAMPLE x rate, strided down to n_out rows of the source."""
    h = 1.0 / (OVERSAMPLE * spec.rate)
    steps = n_out * OVERSAMPLE
    ts = spec.param("time_scale")

    if spec.system is System.HARMONIC:
        x, y = 0.0, 1.0

        def step_fn(x, y, _z):
            return ts * y, ts * -x, 0.0

        state = (x, y, 0.0)
        dim = 2
    else:
        a, b, c = spec.param("a"), spec.param("b"), spec.param("c")
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([spec.seed, 11])))
        j = spec.param("jitter")
        u = rng.uniform(-j, j, size=3)
        state = (0.1 + u[0], 0.1 + u[1], 0.1 + abs(u[2]))

        def step_fn(x, y, z):
            return ts * (-y - z), ts * (x + a * y), ts * (b + z * (x - c))

        dim = 3

    out = np.empty((n_out, dim))
    x, y, z = state
    for k in range(steps):
        k1x, k1y, k1z = step_fn(x, y, z)
        k2x, k2y, k2z = step_fn(x + 0.5 * h * k1x, y + 0.5 * h * k1y, z + 0.5 * h * k1z)
        k3x, k3y, k3z = step_fn(x + 0.5 * h * k2x, y + 0.5 * h * k2y, z + 0.5 * h * k2z)
        k4x, k4y, k4z = step_fn(x + h * k3x, y + h * k3y, z + h * k3z)
        x += h * (k1x + 2.0 * k2x + 2.0 * k3x + k4x) / 6.0
        y += h * (k1y + 2.0 * k2y + 2.0 * k3y + k4y) / 6.0
        z += h * (k1z + 2.0 * k2z + 2.0 * k3z + k4z) / 6.0
        if not (abs(x) < 1e12 and abs(y) < 1e12 and abs(z) < 1e12):
            raise GenerationError(
                f"non-finite or diverging state at integrator step {k}"
            )
        if (k + 1) % OVERSAMPLE == 0:
            row = (k + 1) // OVERSAMPLE - 1
            out[row, 0] = x
            out[row, 1] = y
            if dim == 3:
                out[row, 2] = z
    return out


def _mixing_map(spec: SynthSpec, dim: int) -> np.ndarray:
    if spec.mixing_seed is None:
        if spec.channels != dim:
            raise ConfigError(
                f"identity mixing needs channels == {dim}, got {spec.channels}"
            )
        return np.eye(dim)
    rng = np.random.Generator(np.random.PCG64(spec.mixing_seed))
    for _ in range(16):
        mix = rng.standard_normal((spec.channels, dim))
        if np.linalg.matrix_rank(mix) == dim:
            return mix
    raise GenerationError("could not draw a full-rank mixing map")  # pragma: no cover


def generate(spec: SynthSpec) -> tuple[Recording, np.ndarray]:
    """Synthesize a recording; also returns the decimated source trajectory."""
    n_out = int(round(spec.duration * spec.rate))
    if n_out < 2:
        raise ConfigError("duration too short for the sampling rate")

    if spec.system is System.NOISE:
        sigma = spec.param("sigma")
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([spec.seed, 7])))
        samples = sigma * rng.standard_normal((spec.channels, n_out))
        ground = np.empty((n_out, 0))
    else:
        ground = _integrate(spec, n_out)
        mix = _mixing_map(spec, ground.shape[1])
        samples = mix @ ground.T
        if spec.snr_db is not None:
            rng = np.random.Generator(
                np.random.PCG64(np.random.SeedSequence([spec.seed, 7]))
            )
            power = samples.var(axis=1, keepdims=True)
            noise_std = np.sqrt(power * 10.0 ** (-spec.snr_db / 10.0))
            samples = samples + noise_std * rng.standard_normal(samples.shape)

    channels = [f"ch{i}" for i in range(spec.channels)]
    rec = Recording(
        channels=channels, samples=samples, rate=spec.rate, source_id="synth"
    )
    return rec, ground


# corpus construction constants: burn-in long enough to land on the
# attractor, positive-class SNR gentle enough that DyCA finds the loop
BURN_SECONDS = 2.0
POSITIVE_SNR_DB = 15.0
AR_COEFF = 0.9


# the labeled window starts after burn-in
CORPUS_START = int(BURN_SECONDS * 128)


def _positive_recording(index: int, master_seed: int) -> Recording:
    spec = SynthSpec(
        system=System.ROSSLER,
        duration=BURN_SECONDS + 1.0,
        rate=128.0,
        channels=28,
        mixing_seed=_child_seed(master_seed, index, 0),
        snr_db=POSITIVE_SNR_DB,
        seed=_child_seed(master_seed, index, 1),
    )
    rec, _ = generate(spec)
    return Recording(
        channels=STANDARD_ELECTRODES,
        samples=rec.samples,
        rate=rec.rate,
        source_id=f"synth-pos-{index:04d}",
    )


def _negative_recording(index: int, master_seed: int) -> Recording:
    rng = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence([master_seed, index, 2]))
    )
    white = rng.standard_normal((28, 384))
    smooth = lfilter([1.0], [1.0, -AR_COEFF], white, axis=1)
    return Recording(
        channels=STANDARD_ELECTRODES,
        samples=smooth,
        rate=128.0,
        source_id=f"synth-neg-{index:04d}",
    )


def _child_seed(master: int, index: int, salt: int) -> int:
    seq = np.random.SeedSequence([master, index, salt])
    return int(seq.generate_state(1, np.uint64)[0])


def corpus_recordings(
    n_pos: int, n_neg: int, seed: int = 0
) -> list[tuple[Recording, Label]]:
    """The raw 28-electrode recordings behind make_corpus, with labels.

    Each is 3 s at 128 Hz; the labeled window is [CORPUS_START,
    CORPUS_START + 128). Exporting these as CSVs and re-ingesting them
    through the average montage reproduces make_corpus exactly.
    """
    if n_pos < 1 or n_neg < 1:
        raise ConfigError("need at least one segment per class")
    out = [(_positive_recording(i, seed), Label.IED) for i in range(n_pos)]
    out += [(_negative_recording(i, seed), Label.BACKGROUND) for i in range(n_neg)]
    return out


def make_corpus(n_pos: int, n_neg: int, seed: int = 0) -> list[Segment]:
    """Labeled demo corpus: Rossler-driven positives, filtered-noise negatives.

    All segments are 1 s at 128 Hz with 27 average-montage channels.
    Per-segment seeds derive from the master seed, so any (n_pos, n_neg,
    seed) triple names one fixed corpus.
    """
    montage = builtin_montage("average")
    segments = []
    for rec, label in corpus_recordings(n_pos, n_neg, seed):
        monted = apply_montage(rec, montage)
        segments.append(cut_segments(monted, 1.0, [(CORPUS_START, label)])[0])
    return segments


def export_corpus(n_pos: int, n_neg: int, seed: int, out_dir) -> tuple[list, str]:
    """Write the corpus recordings as CSVs plus a label file.

    Returns (csv paths, label file path). The files feed straight into
    the normal ingestion path.
    """
    from pathlib import Path

    from .csvio import write_csv, write_labels

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    rows = []
    for rec, label in corpus_recordings(n_pos, n_neg, seed):
        path = out / f"{rec.source_id}.csv"
        write_csv(path, rec)
        paths.append(path)
        rows.append((rec.source_id, CORPUS_START, label))
    label_path = out / "labels.csv"
    write_labels(label_path, rows)
    return paths, str(label_path)
