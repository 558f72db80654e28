"""On-disk artifact store shared by the pipeline stages.

Layout under one root directory:

    manifest.json             resolved config, its hash, completed stages
    inputs/                   synth-generated corpus CSVs (optional)
    segments/index.csv        ref -> file/label/rate bookkeeping
    segments/seg-NNNNNN.csv   one CSV per segment, instants x channels
    trajectories/seg-NNNNNN.csv   t plus one column per trajectory dimension
    trajectories/eigenvalues.csv  per-segment reduction spectrum
    diagrams/seg-NNNNNN.csv   dim,birth,death (death may be inf)
    landscapes/seg-NNNNNN.csv dim,level,t,value vertices
    features.csv              ref,label plus the 40 feature columns
    model.json / report.json / report.txt

Every CSV starts with a `# config_hash=<hex>` line and every JSON carries
a config_hash entry; readers refuse files whose hash differs from the
config in force, which is what keeps mixed-config pipelines from quietly
combining stale artifacts. All floats are written with repr so reruns
are byte-identical and parsing is lossless.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, NotFoundError, ParseError, StoreHashError
from .features import FEATURE_NAMES, FeatureVector, N_FEATURES
from .homology import PersistenceDiagram
from .landscape import PersistenceLandscape
from .recording import Label, Segment

STORE_FORMAT = "eegtda-store-1"
STAGE_ORDER = ("ingest", "reduce", "topo", "features", "train", "eval")

_HASH_PREFIX = "# config_hash="


@dataclass(frozen=True)
class StoreEntry:
    """One segment's bookkeeping row from segments/index.csv."""

    ref: str
    file: str
    label: Label
    rate: float
    start_sample: int
    source_id: str


def _write_rows(path: Path, chash: str, header, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    path.write_text(_HASH_PREFIX + chash + "\n" + buf.getvalue(), encoding="utf-8")


def _read_rows(path: Path, chash: str) -> tuple[list, list]:
    """Returns (header, rows) after validating the hash line."""
    if not path.exists():
        raise NotFoundError(f"{path} not found")
    text = path.read_text(encoding="utf-8")
    first, _, rest = text.partition("\n")
    if not first.startswith(_HASH_PREFIX):
        raise ParseError(f"{path}: missing config-hash line")
    found = first[len(_HASH_PREFIX):].strip()
    if found != chash:
        raise StoreHashError(
            f"{path} was written under config hash {found[:12]}.., the current "
            f"config hashes to {chash[:12]}..; rerun the producing stage "
            "(pass --force to rebuild)"
        )
    reader = csv.reader(io.StringIO(rest))
    header = next(reader, None)
    if header is None:
        raise ParseError(f"{path}: empty artifact")
    return header, list(reader)


class Store:
    def __init__(self, root):
        self.root = Path(root)
        self.inputs_dir = self.root / "inputs"
        self.segments_dir = self.root / "segments"
        self.trajectories_dir = self.root / "trajectories"
        self.diagrams_dir = self.root / "diagrams"
        self.landscapes_dir = self.root / "landscapes"
        self.manifest_path = self.root / "manifest.json"
        self.index_path = self.segments_dir / "index.csv"
        self.eigenvalues_path = self.trajectories_dir / "eigenvalues.csv"
        self.features_path = self.root / "features.csv"
        self.model_path = self.root / "model.json"
        self.report_json_path = self.root / "report.json"
        self.report_txt_path = self.root / "report.txt"

    # -- manifest ---------------------------------------------------------

    def read_manifest(self) -> dict | None:
        if not self.manifest_path.exists():
            return None
        try:
            doc = json.loads(self.manifest_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ParseError(f"{self.manifest_path}: invalid JSON: {exc}") from None
        if doc.get("format") != STORE_FORMAT:
            raise ParseError(
                f"{self.manifest_path}: unknown store format {doc.get('format')!r}"
            )
        return doc

    def write_manifest(self, doc: dict) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        doc = dict(doc, format=STORE_FORMAT)
        self.manifest_path.write_text(
            json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8"
        )

    def clear_downstream(self, stage: str) -> None:
        """Delete artifacts of every stage after `stage` (manifest untouched)."""
        start = STAGE_ORDER.index(stage)
        for later in STAGE_ORDER[start + 1:]:
            for path in self._stage_paths(later):
                if path.is_dir():
                    for f in sorted(path.glob("*.csv")):
                        f.unlink()
                elif path.exists():
                    path.unlink()

    def _stage_paths(self, stage: str) -> list[Path]:
        return {
            "ingest": [self.segments_dir],
            "reduce": [self.trajectories_dir],
            "topo": [self.diagrams_dir, self.landscapes_dir],
            "features": [self.features_path],
            "train": [self.model_path],
            "eval": [self.report_json_path, self.report_txt_path],
        }[stage]

    # -- segments ---------------------------------------------------------

    def write_segments(self, segments: list[Segment], chash: str) -> list[StoreEntry]:
        refs = [s.ref for s in segments]
        if len(set(refs)) != len(refs):
            dupe = sorted(r for r in set(refs) if refs.count(r) > 1)[0]
            raise DataError(f"duplicate segment ref {dupe!r}")
        self.segments_dir.mkdir(parents=True, exist_ok=True)
        for stale in sorted(self.segments_dir.glob("*.csv")):
            stale.unlink()
        ordered = sorted(segments, key=lambda s: s.ref)
        entries = []
        for k, seg in enumerate(ordered):
            fname = f"seg-{k:06d}.csv"
            channels = [f"ch{i}" for i in range(seg.data.shape[0])]
            rows = [
                [repr(float(v)) for v in seg.data[:, t]]
                for t in range(seg.data.shape[1])
            ]
            _write_rows(self.segments_dir / fname, chash, channels, rows)
            entries.append(
                StoreEntry(
                    ref=seg.ref,
                    file=fname,
                    label=seg.label,
                    rate=float(seg.rate),
                    start_sample=int(seg.start_sample),
                    source_id=seg.source_id,
                )
            )
        _write_rows(
            self.index_path,
            chash,
            ["ref", "file", "label", "rate", "start_sample", "source_id"],
            [
                [e.ref, e.file, e.label.value, repr(e.rate), e.start_sample, e.source_id]
                for e in entries
            ],
        )
        return entries

    def load_index(self, chash: str) -> list[StoreEntry]:
        header, rows = _read_rows(self.index_path, chash)
        if header != ["ref", "file", "label", "rate", "start_sample", "source_id"]:
            raise ParseError(f"{self.index_path}: unexpected columns {header}")
        out = []
        for row in rows:
            ref, fname, label, rate, start, source = row
            out.append(
                StoreEntry(
                    ref=ref,
                    file=fname,
                    label=Label(label),
                    rate=float(rate),
                    start_sample=int(start),
                    source_id=source,
                )
            )
        return out

    def load_segment(self, entry: StoreEntry, chash: str) -> Segment:
        header, rows = _read_rows(self.segments_dir / entry.file, chash)
        data = np.array([[float(v) for v in row] for row in rows]).T
        if data.shape[0] != len(header):
            raise ParseError(f"{entry.file}: ragged segment data")
        return Segment(
            source_id=entry.source_id,
            start_sample=entry.start_sample,
            data=data,
            rate=entry.rate,
            label=entry.label,
        )

    # -- trajectories -----------------------------------------------------

    def write_trajectory(self, entry: StoreEntry, points: np.ndarray, chash: str):
        self.trajectories_dir.mkdir(parents=True, exist_ok=True)
        w, n = points.shape
        header = ["t"] + [f"x{i + 1}" for i in range(n)]
        rows = [
            [repr(t / entry.rate)] + [repr(float(v)) for v in points[t]]
            for t in range(w)
        ]
        _write_rows(self.trajectories_dir / entry.file, chash, header, rows)

    def load_trajectory(self, entry: StoreEntry, chash: str) -> np.ndarray:
        header, rows = _read_rows(self.trajectories_dir / entry.file, chash)
        if not header or header[0] != "t":
            raise ParseError(f"{entry.file}: expected a trajectory file")
        return np.array([[float(v) for v in row[1:]] for row in rows])

    def write_eigenvalues(self, rows, chash: str) -> None:
        """rows: iterable of (ref, index, eigenvalue, selected)."""
        self.trajectories_dir.mkdir(parents=True, exist_ok=True)
        _write_rows(
            self.eigenvalues_path,
            chash,
            ["ref", "index", "eigenvalue", "selected"],
            [[r, i, repr(float(v)), int(s)] for r, i, v, s in rows],
        )

    # -- diagrams and landscapes -------------------------------------------

    def write_diagram(self, entry: StoreEntry, dgm: PersistenceDiagram, chash: str):
        self.diagrams_dir.mkdir(parents=True, exist_ok=True)
        rows = [[d, repr(float(b)), repr(float(dth))] for d, b, dth in dgm.pairs]
        _write_rows(self.diagrams_dir / entry.file, chash, ["dim", "birth", "death"], rows)

    def load_diagram(self, entry: StoreEntry, chash: str) -> PersistenceDiagram:
        header, rows = _read_rows(self.diagrams_dir / entry.file, chash)
        if header != ["dim", "birth", "death"]:
            raise ParseError(f"{entry.file}: expected a diagram file")
        pairs = tuple((int(d), float(b), float(dth)) for d, b, dth in rows)
        return PersistenceDiagram(pairs=pairs)

    def write_landscapes(
        self, entry: StoreEntry, scapes: dict[int, PersistenceLandscape], chash: str
    ):
        self.landscapes_dir.mkdir(parents=True, exist_ok=True)
        rows = []
        for dim in sorted(scapes):
            for lvl, verts in enumerate(scapes[dim].levels, start=1):
                for t, v in verts:
                    rows.append([dim, lvl, repr(float(t)), repr(float(v))])
        _write_rows(
            self.landscapes_dir / entry.file, chash, ["dim", "level", "t", "value"], rows
        )

    def load_landscapes(
        self, entry: StoreEntry, chash: str
    ) -> dict[int, PersistenceLandscape]:
        header, rows = _read_rows(self.landscapes_dir / entry.file, chash)
        if header != ["dim", "level", "t", "value"]:
            raise ParseError(f"{entry.file}: expected a landscape file")
        by_dim: dict[int, dict[int, list]] = {0: {}, 1: {}}
        for d, lvl, t, v in rows:
            by_dim.setdefault(int(d), {}).setdefault(int(lvl), []).append(
                (float(t), float(v))
            )
        out = {}
        for dim, levels in by_dim.items():
            if levels and sorted(levels) != list(range(1, max(levels) + 1)):
                raise ParseError(f"{entry.file}: level numbering has gaps")
            out[dim] = PersistenceLandscape(
                levels=tuple(tuple(levels[k]) for k in sorted(levels))
            )
        return out

    # -- features ---------------------------------------------------------

    def write_features(self, vectors: list[FeatureVector], chash: str) -> None:
        header = ["ref", "label"] + list(FEATURE_NAMES)
        rows = [
            [fv.segment_ref, fv.label.value] + [repr(float(v)) for v in fv.values]
            for fv in vectors
        ]
        _write_rows(self.features_path, chash, header, rows)

    def load_features(self, chash: str):
        """Returns (refs, labels, X) with X of shape (n_segments, 40)."""
        header, rows = _read_rows(self.features_path, chash)
        if header != ["ref", "label"] + list(FEATURE_NAMES):
            raise ParseError(f"{self.features_path}: feature columns do not match "
                             "this build's schema")
        refs = [r[0] for r in rows]
        labels = [Label(r[1]) for r in rows]
        x = np.array([[float(v) for v in r[2:]] for r in rows])
        if x.size and x.shape[1] != N_FEATURES:
            raise ParseError(f"{self.features_path}: wrong feature count")
        return refs, labels, x
