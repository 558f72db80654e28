"""Stage functions tying ingestion, reduction, topology, features, and the
classifier together over an on-disk store.

Stage gating: ingest (re)defines the store and stamps the manifest with
the current config hash; every later stage refuses to run if the store
was built under a different hash, skips itself when its outputs already
exist for the same hash, and recomputes under --force. Rerunning a stage
clears everything downstream of it first, so a store never mixes
configurations.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .config import PipelineConfig, config_hash
from .csvio import read_csv, read_labels
from .dimred import correlations, dyca, pca
from .edf import read_edf
from .errors import ConfigError, NotFoundError, StoreHashError
from .features import extract_features
from .homology import build_filtration, persistence
from .landscape import build_landscape
from .montage import apply_montage, get_montage
from .recording import Label, segment as cut_segments
from .store import STAGE_ORDER, Store
from .svm import (
    LINEAR,
    KernelSpec,
    cross_validate,
    evaluate,
    load_model,
    save_model,
    train_svc,
)
from . import synth

_PREREQ = {stage: STAGE_ORDER[i - 1] for i, stage in enumerate(STAGE_ORDER) if i > 0}


def _gate(store: Store, chash: str, stage: str, force: bool) -> dict | None:
    """Manifest checks shared by every stage after ingest.

    Returns the manifest when the stage should run, None when its outputs
    are already current and it can be skipped.
    """
    manifest = store.read_manifest()
    if manifest is None:
        raise NotFoundError(f"{store.root} has no manifest; run ingest first")
    if manifest["config_hash"] != chash:
        raise StoreHashError(
            f"store {store.root} was built under config hash "
            f"{manifest['config_hash'][:12]}.., the current config hashes to "
            f"{chash[:12]}..; re-run ingest (or run-all) with --force to "
            "rebuild, or restore the original config"
        )
    prereq = _PREREQ[stage]
    if prereq not in manifest["stages"]:
        raise NotFoundError(f"stage {stage!r} needs {prereq!r} to run first")
    if stage in manifest["stages"] and not force:
        return None
    return manifest


def _finish(store: Store, manifest: dict, stage: str, info: dict) -> None:
    manifest["stages"][stage] = info
    for later in STAGE_ORDER[STAGE_ORDER.index(stage) + 1:]:
        manifest["stages"].pop(later, None)
    store.write_manifest(manifest)


def stage_synth(store: Store, cfg: PipelineConfig, n_pos: int, n_neg: int):
    """Write the synthetic corpus as ingestible CSVs under the store root."""
    paths, label_path = synth.export_corpus(n_pos, n_neg, cfg.seed, store.inputs_dir)
    return [str(p) for p in paths], label_path


def stage_ingest(
    store: Store,
    cfg: PipelineConfig,
    inputs: list,
    labels_path=None,
    force: bool = False,
) -> int:
    """Read recordings, apply the montage, cut segments, write the store."""
    chash = config_hash(cfg)
    manifest = store.read_manifest()
    if manifest is not None and manifest["config_hash"] != chash and not force:
        raise StoreHashError(
            f"store {store.root} holds artifacts from config hash "
            f"{manifest['config_hash'][:12]}.., the current config hashes to "
            f"{chash[:12]}..; pass --force to re-ingest and discard them"
        )
    if not inputs:
        raise ConfigError("ingest needs at least one input file")

    label_map: dict[str, list] = {}
    if labels_path is not None:
        for sid, start, label in read_labels(labels_path):
            label_map.setdefault(sid, []).append((start, label))

    montage = get_montage(cfg.montage)
    segments = []
    for path in inputs:
        path = Path(path)
        if path.suffix.lower() == ".edf":
            rec = read_edf(path)
        else:
            rec = read_csv(path, rate=cfg.csv_rate)
        rec = apply_montage(rec, montage)
        marks = label_map.get(rec.source_id)
        segments.extend(cut_segments(rec, cfg.window_seconds, marks))

    store.clear_downstream("ingest")
    entries = store.write_segments(segments, chash)
    store.write_manifest(
        {
            "config": cfg.resolved(),
            "config_hash": chash,
            "stages": {"ingest": {"segments": len(entries)}},
        }
    )
    return len(entries)


def stage_reduce(store: Store, cfg: PipelineConfig, force: bool = False):
    chash = config_hash(cfg)
    manifest = _gate(store, chash, "reduce", force)
    if manifest is None:
        return None
    store.clear_downstream("ingest")
    entries = store.load_index(chash)
    eig_rows = []
    for e in entries:
        seg = store.load_segment(e, chash)
        if cfg.method == "dyca":
            res = dyca(seg.data, seg.rate, cfg.n, cfg.m, cfg.eig_threshold)
            points = res.trajectory.points
            evals = res.eigenvalues
            n_sel = res.m
        else:
            points = pca(seg.data, cfg.n, seg.rate).points
            c0 = correlations(seg.data, seg.rate).C0
            evals = np.linalg.eigvalsh(c0)[::-1]
            n_sel = cfg.n
        store.write_trajectory(e, points, chash)
        for i, v in enumerate(evals):
            eig_rows.append((e.ref, i, float(v), i < n_sel))
    store.write_eigenvalues(eig_rows, chash)
    _finish(store, manifest, "reduce", {"segments": len(entries)})
    return len(entries)


def stage_topo(store: Store, cfg: PipelineConfig, force: bool = False):
    chash = config_hash(cfg)
    manifest = _gate(store, chash, "topo", force)
    if manifest is None:
        return None
    store.clear_downstream("reduce")
    entries = store.load_index(chash)

    def one(entry):
        points = store.load_trajectory(entry, chash)
        dgm = persistence(build_filtration(points, cfg.max_length))
        scapes = {
            d: build_landscape(dgm, d, cfg.landscape_levels) for d in (0, 1)
        }
        return dgm, scapes

    with ThreadPoolExecutor(max_workers=cfg.effective_workers()) as pool:
        results = list(pool.map(one, entries))
    for entry, (dgm, scapes) in zip(entries, results):
        store.write_diagram(entry, dgm, chash)
        store.write_landscapes(entry, scapes, chash)
    _finish(store, manifest, "topo", {"segments": len(entries)})
    return len(entries)


def stage_features(store: Store, cfg: PipelineConfig, force: bool = False):
    chash = config_hash(cfg)
    manifest = _gate(store, chash, "features", force)
    if manifest is None:
        return None
    store.clear_downstream("topo")
    entries = store.load_index(chash)
    vectors = []
    for e in entries:
        dgm = store.load_diagram(e, chash)
        scapes = store.load_landscapes(e, chash)
        vectors.append(
            extract_features(dgm, scapes, segment_ref=e.ref, label=e.label)
        )
    store.write_features(vectors, chash)
    _finish(store, manifest, "features", {"segments": len(vectors)})
    return len(vectors)


def _labels_to_y(labels) -> np.ndarray:
    return np.array(
        [1.0 if lb is Label.IED else -1.0 if lb is Label.BACKGROUND else 0.0
         for lb in labels]
    )


def split_indices(y: np.ndarray, fraction: float, seed: int):
    """Deterministic stratified train/eval split over labeled rows.

    Returns (train_idx, eval_idx), each sorted. Rows with y == 0
    (unlabeled) land in neither.
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 5])))
    train, hold = [], []
    for cls in (-1.0, 1.0):
        idx = np.flatnonzero(y == cls)
        rng_order = rng.permutation(len(idx))
        idx = idx[rng_order]
        k = int(round(fraction * len(idx)))
        train.extend(idx[:k])
        hold.extend(idx[k:])
    return np.array(sorted(train), dtype=int), np.array(sorted(hold), dtype=int)


def _grid_from_config(cfg: PipelineConfig, x: np.ndarray):
    cells = []
    if "LINEAR" in cfg.svm_kernels:
        cells.extend((LINEAR, float(c)) for c in cfg.svm_c)
    if "RBF" in cfg.svm_kernels:
        if cfg.svm_gammas:
            gammas = sorted(float(g) for g in cfg.svm_gammas)
        else:
            var = float(np.mean(np.var(x, axis=0)))
            gammas = sorted({1.0 / (x.shape[1] * var), 0.01, 0.1}) if var > 0 else [
                0.01, 0.1]
        cells.extend(
            (KernelSpec("rbf", g), float(c)) for c in cfg.svm_c for g in gammas
        )
    return cells


def _training_matrix(store: Store, cfg: PipelineConfig, chash: str):
    refs, labels, x = store.load_features(chash)
    y = _labels_to_y(labels)
    labeled = y != 0.0
    if len(set(y[labeled])) < 2:
        raise ConfigError(
            "training needs both classes; the feature matrix has "
            f"{sorted(set(int(v) for v in y[labeled]))}"
        )
    return refs, y, x


def stage_train(store: Store, cfg: PipelineConfig, force: bool = False):
    chash = config_hash(cfg)
    manifest = _gate(store, chash, "train", force)
    if manifest is None:
        return None
    store.clear_downstream("features")
    _, y, x = _training_matrix(store, cfg, chash)
    train_idx, _ = split_indices(y, cfg.split_fraction, cfg.seed)
    x_tr, y_tr = x[train_idx], y[train_idx]
    grid = _grid_from_config(cfg, x_tr)
    (best_kernel, best_c), cells = cross_validate(
        x_tr, y_tr, grid=grid, folds=cfg.folds, seed=cfg.seed
    )
    model = train_svc(x_tr, y_tr, kernel=best_kernel, c=best_c, seed=cfg.seed)
    train_acc = evaluate(model, x_tr, y_tr).accuracy
    save_model(model, store.model_path, extra={"config_hash": chash})
    info = {
        "best_c": best_c,
        "best_kernel": best_kernel.label(),
        "cv_accuracy": max(c.mean_accuracy for c in cells),
        "train_accuracy": train_acc,
        "train_count": int(len(train_idx)),
        "converged": model.converged,
        "grid": [
            {"kernel": c.kernel.label(), "c": c.c, "mean_accuracy": c.mean_accuracy}
            for c in cells
        ],
    }
    _finish(store, manifest, "train", info)
    return info


def stage_eval(store: Store, cfg: PipelineConfig, force: bool = False):
    chash = config_hash(cfg)
    manifest = _gate(store, chash, "eval", force)
    if manifest is None:
        return None
    store.clear_downstream("train")
    model_doc = json.loads(store.model_path.read_text(encoding="utf-8"))
    if model_doc.get("config_hash") != chash:
        raise StoreHashError(
            f"{store.model_path} was trained under another config; "
            "re-run train (--force to rebuild)"
        )
    model = load_model(store.model_path)
    _, y, x = _training_matrix(store, cfg, chash)
    _, eval_idx = split_indices(y, cfg.split_fraction, cfg.seed)
    report = evaluate(model, x[eval_idx], y[eval_idx])
    train_info = manifest["stages"].get("train", {})
    doc = {
        "config_hash": chash,
        "accuracy": report.accuracy,
        "confusion": [list(map(int, row)) for row in report.confusion],
        "count": report.count,
        "train_accuracy": train_info.get("train_accuracy"),
        "cv_accuracy": train_info.get("cv_accuracy"),
        "best_kernel": train_info.get("best_kernel"),
        "best_c": train_info.get("best_c"),
    }
    store.report_json_path.write_text(
        json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8"
    )
    store.report_txt_path.write_text(_render_report(doc), encoding="utf-8")
    _finish(
        store, manifest, "eval",
        {"accuracy": report.accuracy, "count": report.count},
    )
    return doc


def _render_report(doc: dict) -> str:
    (tn, fp), (fn, tp) = doc["confusion"]
    lines = [
        "evaluation on held-out split",
        f"  accuracy: {doc['accuracy']:.4f} on {doc['count']} segments",
        f"  model: {doc['best_kernel']} C={doc['best_c']}",
        f"  train accuracy: {doc['train_accuracy']:.4f}"
        if doc.get("train_accuracy") is not None else "  train accuracy: n/a",
        "",
        "confusion matrix (rows = true class)",
        "                 pred background  pred ied",
        f"  background     {tn:15d}  {fp:8d}",
        f"  ied            {fn:15d}  {tp:8d}",
        "",
        f"config hash: {doc['config_hash']}",
        "",
    ]
    return "\n".join(lines)


def plot_data(store: Store, cfg: PipelineConfig, ref: str, out_dir=None):
    """Export one segment's trajectory and H1 landscape for plotting.

    Trajectory rows are (t, x1..xn); landscape rows are (level, t, value).
    """
    chash = config_hash(cfg)
    entries = store.load_index(chash)
    match = [e for e in entries if e.ref == ref]
    if not match:
        raise NotFoundError(f"segment {ref!r} is not in the store index")
    entry = match[0]
    out = Path(out_dir) if out_dir is not None else store.root
    out.mkdir(parents=True, exist_ok=True)
    stem = entry.file[:-4]

    points = store.load_trajectory(entry, chash)
    traj_path = out / f"plot-{stem}-trajectory.csv"
    header = ["t"] + [f"x{i + 1}" for i in range(points.shape[1])]
    lines = [",".join(header)]
    for t in range(points.shape[0]):
        lines.append(
            ",".join([repr(t / entry.rate)] + [repr(float(v)) for v in points[t]])
        )
    traj_path.write_text(
        f"# config_hash={chash}\n" + "\n".join(lines) + "\n", encoding="utf-8"
    )

    scapes = store.load_landscapes(entry, chash)
    ls_path = out / f"plot-{stem}-landscape.csv"
    lines = ["level,t,value"]
    for lvl, verts in enumerate(scapes[1].levels, start=1):
        for t, v in verts:
            lines.append(f"{lvl},{repr(float(t))},{repr(float(v))}")
    ls_path.write_text(
        f"# config_hash={chash}\n" + "\n".join(lines) + "\n", encoding="utf-8"
    )
    return traj_path, ls_path


def run_all(
    store: Store,
    cfg: PipelineConfig,
    inputs: list | None = None,
    labels_path=None,
    n_pos: int = 0,
    n_neg: int = 0,
    force: bool = False,
):
    """Chain every stage; synthesize a corpus first when counts are given."""
    if inputs is None:
        if n_pos < 1 or n_neg < 1:
            raise ConfigError("run-all needs input files or corpus counts")
        inputs, labels_path = stage_synth(store, cfg, n_pos, n_neg)
    counts = {"ingest": stage_ingest(store, cfg, inputs, labels_path, force=True)}
    for name, fn in (
        ("reduce", stage_reduce), ("topo", stage_topo), ("features", stage_features),
    ):
        counts[name] = fn(store, cfg, force=force)
    stage_train(store, cfg, force=force)
    doc = stage_eval(store, cfg, force=force)
    counts["accuracy"] = doc["accuracy"]
    return counts
