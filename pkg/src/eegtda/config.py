"""Pipeline configuration: defaults, JSON loading, flag overrides, hashing.

Every knob has a default, so an empty config file (or none at all) names a
complete, runnable pipeline. The resolved configuration is hashed and the
hash stamped into every artifact the store writes; output location and
worker count are excluded from the hash because they cannot change
numeric results. The montage participates through its file *content*, so
editing a montage invalidates downstream artifacts even if the name stays
the same.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass

from .errors import ConfigError
from .montage import montage_text

OUTPUT_ENV_VAR = "EEGTDA_OUT"
FEATURE_SCHEMA = 1


@dataclass(frozen=True)
class PipelineConfig:
    montage: str = "average"  # builtin name or path to a montage JSON
    method: str = "dyca"  # "dyca" or "pca"
    n: int = 3  # trajectory dimension
    m: int = 2  # DyCA eigenvector count (ignored for pca)
    eig_threshold: float | None = None  # when set, m comes from the spectrum
    window_seconds: float = 1.0
    csv_rate: float = 128.0  # sampling rate assumed for CSV inputs
    max_length: float | None = None  # Rips cutoff; None = per-segment diameter
    landscape_levels: int = 2
    feature_schema: int = FEATURE_SCHEMA
    svm_c: tuple = (0.1, 1.0, 10.0, 100.0)
    svm_kernels: tuple = ("LINEAR", "RBF")
    svm_gammas: tuple = ()  # empty = 1/(n_features*var) plus {0.01, 0.1}
    split_fraction: float = 0.85
    folds: int = 5
    seed: int = 0
    output_dir: str = "eegtda-out"
    workers: int = 0  # 0 = logical CPU count

    def __post_init__(self):
        if self.method not in ("dyca", "pca"):
            raise ConfigError(f"unknown reduction method {self.method!r}")
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        if self.method == "dyca" and self.eig_threshold is None:
            if self.m < 1 or not (0 <= self.n - self.m <= self.m):
                raise ConfigError("need m >= 1 and 0 <= n - m <= m")
        if self.window_seconds <= 0 or self.csv_rate <= 0:
            raise ConfigError("window_seconds and csv_rate must be positive")
        if self.max_length is not None and self.max_length <= 0:
            raise ConfigError("max_length must be positive when given")
        if self.landscape_levels < 1:
            raise ConfigError("landscape_levels must be >= 1")
        if self.feature_schema != FEATURE_SCHEMA:
            raise ConfigError(
                f"unsupported feature schema {self.feature_schema} "
                f"(this build writes schema {FEATURE_SCHEMA})"
            )
        if not self.svm_c or any(c <= 0 for c in self.svm_c):
            raise ConfigError("svm_c must be a nonempty list of positive values")
        bad = [k for k in self.svm_kernels if k not in ("LINEAR", "RBF")]
        if bad or not self.svm_kernels:
            raise ConfigError(f"svm_kernels must draw from LINEAR/RBF, got {bad}")
        if any(g <= 0 for g in self.svm_gammas):
            raise ConfigError("svm_gammas must be positive")
        if not 0.0 < self.split_fraction < 1.0:
            raise ConfigError("split_fraction must be in (0, 1)")
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")
        if self.workers < 0:
            raise ConfigError("workers must be >= 0")

    def resolved(self) -> dict:
        """Full key -> value mapping, lists for tuples (JSON-friendly)."""
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out

    def effective_workers(self) -> int:
        return self.workers if self.workers > 0 else (os.cpu_count() or 1)


_TUPLE_KEYS = ("svm_c", "svm_kernels", "svm_gammas")
_FIELD_NAMES = tuple(f.name for f in dataclasses.fields(PipelineConfig))


def _coerce(values: dict) -> dict:
    out = dict(values)
    for key in _TUPLE_KEYS:
        if key in out:
            v = out[key]
            if not isinstance(v, (list, tuple)):
                raise ConfigError(f"{key} must be a list")
            out[key] = tuple(v)
    return out


def load_config(path=None, overrides: dict | None = None) -> PipelineConfig:
    """Build a config from an optional JSON file plus explicit overrides.

    Precedence, lowest to highest: built-in defaults, file values, the
    overrides mapping (CLI flags), then the EEGTDA_OUT environment
    variable for the output directory only.
    """
    values: dict = {}
    if path is not None:
        try:
            text = open(path, "r", encoding="utf-8").read()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        try:
            loaded = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
        values.update(loaded)
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    unknown = sorted(set(values) - set(_FIELD_NAMES))
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    env_out = os.environ.get(OUTPUT_ENV_VAR)
    if env_out:
        values["output_dir"] = env_out
    try:
        return PipelineConfig(**_coerce(values))
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def config_hash(cfg: PipelineConfig) -> str:
    """Hash of everything that can change numeric results.

    output_dir and workers are excluded; the montage contributes the
    sha256 of its file content rather than its name.
    """
    payload = cfg.resolved()
    del payload["output_dir"]
    del payload["workers"]
    payload["montage_sha256"] = hashlib.sha256(
        montage_text(cfg.montage).encode("utf-8")
    ).hexdigest()
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()
