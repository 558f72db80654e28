"""End-to-end tests for the config layer, the artifact store, and the CLI.

The pipeline is driven the way a user drives it, through cli.main() on
temporary directories. One small synthetic corpus store (8 positive and
8 negative recordings) is built once for the whole module and treated as
read-only; tests that mutate a store work on a copy of it.
"""
import io
import json
import shutil
from contextlib import redirect_stdout
from pathlib import Path

import numpy as np
import pytest

from eegtda import Label, Recording, STANDARD_ELECTRODES
from eegtda.cli import main
from eegtda.config import OUTPUT_ENV_VAR, PipelineConfig, config_hash, load_config
from eegtda.edf import write_edf
from eegtda.errors import ConfigError
from eegtda.store import STAGE_ORDER, STORE_FORMAT, Store
from eegtda.synth import CORPUS_START

N_POS = 8
N_NEG = 8
SKIP_SUFFIX = "outputs are current, skipped (--force recomputes)"


def run_cli(*argv):
    """Run the CLI in-process, returning (exit_code, stdout_text)."""
    buf = io.StringIO()
    with redirect_stdout(buf):
        rc = main([str(a) for a in argv])
    return rc, buf.getvalue()


def read_error(capsys):
    """Parse the JSON error object the CLI prints to stderr."""
    err = capsys.readouterr().err
    return json.loads(err)


def store_hash(root) -> str:
    manifest = Store(root).read_manifest()
    return manifest["config_hash"]


@pytest.fixture(scope="module")
def corpus_store(tmp_path_factory):
    """A complete run-all store over the 8+8 synthetic corpus."""
    root = tmp_path_factory.mktemp("corpus-store")
    rc, out = run_cli(
        "run-all", "--out", root, "--n-pos", N_POS, "--n-neg", N_NEG
    )
    assert rc == 0
    return root, out


@pytest.fixture()
def store_copy(corpus_store, tmp_path):
    root, _ = corpus_store
    copy = tmp_path / "store"
    shutil.copytree(root, copy)
    return copy


class TestConfig:
    def test_defaults(self):
        cfg = load_config()
        assert cfg.montage == "average"
        assert cfg.method == "dyca"
        assert (cfg.n, cfg.m) == (3, 2)
        assert cfg.window_seconds == 1.0
        assert cfg.landscape_levels == 2
        assert cfg.split_fraction == 0.85
        assert cfg.folds == 5
        assert cfg.seed == 0

    def test_file_then_flag_precedence(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"n": 4, "m": 2, "seed": 9}))
        cfg = load_config(path, overrides={"n": 3})
        assert cfg.n == 3  # flag beats file
        assert cfg.seed == 9  # file beats default

    def test_none_overrides_are_ignored(self, tmp_path):
        # argparse hands in None for every flag the user did not pass
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"seed": 9}))
        cfg = load_config(path, overrides={"seed": None, "folds": None})
        assert cfg.seed == 9
        assert cfg.folds == 5

    def test_env_wins_for_output_dir(self, monkeypatch):
        monkeypatch.setenv(OUTPUT_ENV_VAR, "/env/dir")
        cfg = load_config(overrides={"output_dir": "/flag/dir"})
        assert cfg.output_dir == "/env/dir"
        monkeypatch.delenv(OUTPUT_ENV_VAR)
        assert load_config(overrides={"output_dir": "/flag/dir"}).output_dir == "/flag/dir"

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"frobnicate": 1}))
        with pytest.raises(ConfigError, match="unknown config keys.*frobnicate"):
            load_config(path)

    def test_invalid_json_rejected(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError, match="not valid JSON"):
            load_config(path)

    def test_tuple_keys_coerced_from_json(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"svm_c": [1, 10], "svm_kernels": ["LINEAR"]}))
        cfg = load_config(path)
        assert cfg.svm_c == (1.0, 10.0)
        assert cfg.svm_kernels == ("LINEAR",)

    def test_hash_ignores_output_dir_and_workers(self):
        a = load_config(overrides={"output_dir": "/a", "workers": 1})
        b = load_config(overrides={"output_dir": "/b", "workers": 7})
        assert config_hash(a) == config_hash(b)

    def test_hash_tracks_numeric_settings(self):
        base = config_hash(load_config())
        assert config_hash(load_config(overrides={"seed": 1})) != base
        assert config_hash(load_config(overrides={"montage": "cz_reference"})) != base
        assert config_hash(load_config(overrides={"n": 3, "m": 3})) != base

    def test_hash_is_stable(self):
        assert config_hash(load_config()) == config_hash(PipelineConfig())


class TestRunAll:
    def test_exit_and_messages(self, corpus_store):
        _, out = corpus_store
        assert f"run-all: {N_POS + N_NEG} segments, eval accuracy " in out
        # the held-out report is echoed after the summary line
        assert "evaluation on held-out split" in out
        assert "confusion matrix (rows = true class)" in out

    def test_store_layout(self, corpus_store):
        root, _ = corpus_store
        n = N_POS + N_NEG
        assert (root / "manifest.json").exists()
        assert (root / "segments" / "index.csv").exists()
        assert len(list((root / "segments").glob("seg-*.csv"))) == n
        assert len(list((root / "trajectories").glob("seg-*.csv"))) == n
        assert (root / "trajectories" / "eigenvalues.csv").exists()
        assert len(list((root / "diagrams").glob("seg-*.csv"))) == n
        assert len(list((root / "landscapes").glob("seg-*.csv"))) == n
        for name in ("features.csv", "model.json", "report.json", "report.txt"):
            assert (root / name).exists()

    def test_manifest(self, corpus_store):
        root, _ = corpus_store
        manifest = Store(root).read_manifest()
        assert manifest["format"] == STORE_FORMAT
        assert set(manifest["stages"]) == set(STAGE_ORDER)
        assert manifest["config"]["montage"] == "average"
        expected = config_hash(load_config(overrides={"output_dir": str(root)}))
        assert manifest["config_hash"] == expected

    def test_every_artifact_carries_the_hash(self, corpus_store):
        root, _ = corpus_store
        chash = store_hash(root)
        checked = 0
        for path in sorted(root.rglob("*.csv")):
            if path.is_relative_to(root / "inputs"):
                continue  # raw ingestible corpus files, not artifacts
            first = path.read_text(encoding="utf-8").splitlines()[0]
            assert first == f"# config_hash={chash}", path.name
            checked += 1
        assert checked == 4 * (N_POS + N_NEG) + 3

    def test_index_contents(self, corpus_store):
        root, _ = corpus_store
        entries = Store(root).load_index(store_hash(root))
        assert len(entries) == N_POS + N_NEG
        labels = [e.label for e in entries]
        assert labels.count(Label.IED) == N_POS
        assert labels.count(Label.BACKGROUND) == N_NEG
        assert len({e.ref for e in entries}) == len(entries)
        assert all(e.start_sample == CORPUS_START for e in entries)
        assert all(e.rate == 128.0 for e in entries)

    def test_trajectories_are_three_dimensional(self, corpus_store):
        root, _ = corpus_store
        store = Store(root)
        chash = store_hash(root)
        entry = store.load_index(chash)[0]
        points = store.load_trajectory(entry, chash)
        assert points.shape == (128, 3)
        assert np.all(np.isfinite(points))

    def test_feature_matrix(self, corpus_store):
        root, _ = corpus_store
        refs, labels, x = Store(root).load_features(store_hash(root))
        assert x.shape == (N_POS + N_NEG, 40)
        assert np.all(np.isfinite(x))
        assert len(refs) == len(labels) == len(x)

    def test_report_invariants(self, corpus_store):
        root, _ = corpus_store
        doc = json.loads((root / "report.json").read_text())
        assert 0.0 <= doc["accuracy"] <= 1.0
        confusion = np.array(doc["confusion"])
        assert confusion.shape == (2, 2)
        assert confusion.sum() == doc["count"]
        # 15% of each class held out: one positive and one negative here
        assert doc["count"] == 2
        assert doc["config_hash"] == store_hash(root)
        text = (root / "report.txt").read_text()
        assert f"config hash: {doc['config_hash']}" in text
        assert "pred background" in text and "pred ied" in text

    def test_run_all_is_reproducible(self, corpus_store, tmp_path):
        root, _ = corpus_store
        again = tmp_path / "again"
        rc, _ = run_cli(
            "run-all", "--out", again, "--n-pos", N_POS, "--n-neg", N_NEG
        )
        assert rc == 0
        for name in ("features.csv", "model.json", "report.json"):
            assert (again / name).read_bytes() == (root / name).read_bytes()

    def test_run_all_from_input_files_matches_synth_path(
        self, corpus_store, tmp_path
    ):
        # the corpus CSVs run-all wrote are themselves ingestible; feeding
        # them back must reproduce the store built from counts exactly
        root, _ = corpus_store
        inputs = sorted(p for p in (root / "inputs").glob("*.csv")
                        if p.name != "labels.csv")
        assert len(inputs) == N_POS + N_NEG
        out = tmp_path / "from-files"
        rc, _ = run_cli(
            "run-all", *inputs, "--labels", root / "inputs" / "labels.csv",
            "--out", out,
        )
        assert rc == 0
        assert (out / "features.csv").read_bytes() == (root / "features.csv").read_bytes()
        assert (out / "model.json").read_bytes() == (root / "model.json").read_bytes()

    def test_run_all_needs_inputs_or_counts(self, tmp_path, capsys):
        rc, _ = run_cli("run-all", "--out", tmp_path / "empty")
        assert rc == 1
        err = read_error(capsys)
        assert err["error"] == "config"
        assert "input files or corpus counts" in err["message"]


class TestSkipAndForce:
    def test_stages_skip_when_current(self, store_copy):
        for stage in ("reduce", "topo", "features", "train", "eval"):
            rc, out = run_cli(stage, "--out", store_copy)
            assert rc == 0
            assert out == f"{stage}: {SKIP_SUFFIX}\n"

    def test_force_invalidates_downstream_then_rebuilds_identically(
        self, store_copy
    ):
        before = {
            name: (store_copy / name).read_bytes()
            for name in ("features.csv", "model.json", "report.json")
        }
        rc, out = run_cli("reduce", "--out", store_copy, "--force")
        assert rc == 0
        assert out == f"reduce: {N_POS + N_NEG} segments\n"
        # downstream artifacts were cleared with their manifest entries
        manifest = Store(store_copy).read_manifest()
        assert set(manifest["stages"]) == {"ingest", "reduce"}
        assert not (store_copy / "features.csv").exists()
        for stage in ("topo", "features", "train", "eval"):
            rc, _ = run_cli(stage, "--out", store_copy)
            assert rc == 0
        for name, data in before.items():
            assert (store_copy / name).read_bytes() == data

    def test_train_prints_selection(self, store_copy):
        rc, out = run_cli("train", "--out", store_copy, "--force")
        assert rc == 0
        assert out.startswith("train: ")
        assert " C=" in out and "cv_accuracy=" in out and "train_accuracy=" in out

    def test_eval_prints_the_report(self, store_copy):
        rc, out = run_cli("eval", "--out", store_copy, "--force")
        assert rc == 0
        assert out == (store_copy / "report.txt").read_text(encoding="utf-8")


class TestHashGuards:
    def test_stage_under_changed_config_is_refused(self, store_copy, capsys):
        rc, _ = run_cli("reduce", "--out", store_copy, "--montage", "cz_reference")
        assert rc == 1
        err = read_error(capsys)
        assert err["error"] == "store-hash"
        assert "was built under config hash" in err["message"]
        assert "--force" in err["message"]

    def test_ingest_refuses_changed_config_without_force(
        self, corpus_store, store_copy, capsys
    ):
        root, _ = corpus_store
        inputs = sorted(p for p in (root / "inputs").glob("*.csv")
                        if p.name != "labels.csv")
        rc, _ = run_cli("ingest", inputs[0], "--out", store_copy, "--seed", 1)
        assert rc == 1
        assert read_error(capsys)["error"] == "store-hash"
        rc, out = run_cli(
            "ingest", inputs[0], "--out", store_copy, "--seed", 1, "--force"
        )
        assert rc == 0
        # unlabeled ingest tiles the 3 s recording into 3 windows
        assert out == f"ingest: 3 segments into {store_copy}\n"

    def test_tampered_artifact_is_refused(self, store_copy, capsys):
        target = store_copy / "trajectories" / "seg-000000.csv"
        lines = target.read_text(encoding="utf-8").splitlines(keepends=True)
        lines[0] = "# config_hash=" + "f" * 64 + "\n"
        target.write_text("".join(lines), encoding="utf-8")
        rc, _ = run_cli("topo", "--out", store_copy, "--force")
        assert rc == 1
        err = read_error(capsys)
        assert err["error"] == "store-hash"
        assert "seg-000000.csv" in err["message"]

    def test_missing_hash_line_is_a_parse_error(self, store_copy, capsys):
        target = store_copy / "segments" / "index.csv"
        lines = target.read_text(encoding="utf-8").splitlines(keepends=True)
        target.write_text("".join(lines[1:]), encoding="utf-8")
        rc, _ = run_cli("reduce", "--out", store_copy, "--force")
        assert rc == 1
        assert read_error(capsys)["error"] == "parse"

    def test_eval_checks_the_model_provenance(self, store_copy, capsys):
        doc = json.loads((store_copy / "model.json").read_text())
        doc["config_hash"] = "0" * 64
        (store_copy / "model.json").write_text(json.dumps(doc))
        rc, _ = run_cli("eval", "--out", store_copy, "--force")
        assert rc == 1
        err = read_error(capsys)
        assert err["error"] == "store-hash"
        assert "trained under another config" in err["message"]

    def test_feature_schema_is_checked(self, store_copy, capsys):
        target = store_copy / "features.csv"
        text = target.read_text(encoding="utf-8")
        target.write_text(text.replace("h0_count", "h0_cnt", 1), encoding="utf-8")
        rc, _ = run_cli("train", "--out", store_copy, "--force")
        assert rc == 1
        err = read_error(capsys)
        assert err["error"] == "parse"
        assert "feature columns" in err["message"]


class TestCommands:
    def test_synth_writes_ingestible_corpus(self, tmp_path):
        rc, out = run_cli("synth", "--out", tmp_path, "--n-pos", 2, "--n-neg", 1)
        assert rc == 0
        assert out.startswith("synth: wrote 3 recordings and ")
        inputs = tmp_path / "inputs"
        names = sorted(p.name for p in inputs.glob("*.csv"))
        assert names == [
            "labels.csv", "synth-neg-0000.csv",
            "synth-pos-0000.csv", "synth-pos-0001.csv",
        ]
        rows = (inputs / "labels.csv").read_text().splitlines()
        assert rows[0] == "source_id,start_sample,label"
        assert len(rows) == 4
        assert all(f",{CORPUS_START}," in r for r in rows[1:])

    def test_ingest_csv_with_labels(self, tmp_path):
        run_cli("synth", "--out", tmp_path / "raw", "--n-pos", 2, "--n-neg", 1)
        inputs = sorted(p for p in (tmp_path / "raw" / "inputs").glob("*.csv")
                        if p.name != "labels.csv")
        out = tmp_path / "store"
        rc, text = run_cli(
            "ingest", *inputs,
            "--labels", tmp_path / "raw" / "inputs" / "labels.csv",
            "--out", out,
        )
        assert rc == 0
        assert text == f"ingest: 3 segments into {out}\n"
        entries = Store(out).load_index(store_hash(out))
        assert [e.label for e in entries].count(Label.IED) == 2

    def test_ingest_edf_tiles_unlabeled_recordings(self, tmp_path):
        rng = np.random.Generator(np.random.PCG64(0))
        rec = Recording(
            channels=list(STANDARD_ELECTRODES),
            samples=rng.normal(size=(28, 1280)),
            rate=128.0,
            source_id="clinic-01",
        )
        path = tmp_path / "clinic-01.edf"
        write_edf(path, rec)
        out = tmp_path / "store"
        rc, text = run_cli("ingest", path, "--out", out)
        assert rc == 0
        assert text == f"ingest: 10 segments into {out}\n"
        entries = Store(out).load_index(store_hash(out))
        assert all(e.label is Label.UNLABELED for e in entries)
        assert sorted(e.start_sample for e in entries) == [
            128 * k for k in range(10)
        ]
        assert all(e.source_id == "clinic-01" for e in entries)

    def test_ingest_reports_missing_electrode(self, tmp_path, capsys):
        path = tmp_path / "tiny.csv"
        path.write_text("foo,bar,baz\n" + "0.1,0.2,0.3\n" * 200)
        rc, _ = run_cli("ingest", path, "--out", tmp_path / "store")
        assert rc == 1
        err = read_error(capsys)
        assert err["error"] == "config"
        assert "not present in the recording" in err["message"]

    def test_stage_without_store_is_not_found(self, tmp_path, capsys):
        rc, _ = run_cli("reduce", "--out", tmp_path / "nowhere")
        assert rc == 1
        err = read_error(capsys)
        assert err["error"] == "not-found"
        assert "run ingest first" in err["message"]

    def test_unknown_config_key_via_file(self, tmp_path, capsys):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"frobnicate": 1}))
        rc, _ = run_cli("synth", "--config", path, "--out", tmp_path,
                        "--n-pos", 1, "--n-neg", 1)
        assert rc == 1
        assert read_error(capsys)["error"] == "config"

    def test_output_dir_from_environment(self, store_copy, monkeypatch):
        monkeypatch.setenv(OUTPUT_ENV_VAR, str(store_copy))
        rc, out = run_cli("features")  # no --out anywhere
        assert rc == 0
        assert out == f"features: {SKIP_SUFFIX}\n"

    def test_plot_data(self, corpus_store, tmp_path):
        root, _ = corpus_store
        cfg = load_config(overrides={"output_dir": str(root)})
        ref = f"synth-pos-0000:{CORPUS_START}"
        rc, out = run_cli(
            "plot-data", "--out", root, "--ref", ref, "--plot-out", tmp_path
        )
        assert rc == 0
        assert out.startswith("plot-data: wrote ")
        traj_path, ls_path = out.split()[2], out.split()[4]
        traj_lines = Path(traj_path).read_text().splitlines()
        assert traj_lines[0] == f"# config_hash={config_hash(cfg)}"
        assert traj_lines[1] == "t,x1,x2,x3"
        assert len(traj_lines) == 2 + 128
        t, x1, x2, x3 = (float(v) for v in traj_lines[2].split(","))
        assert t == 0.0
        ls_lines = Path(ls_path).read_text().splitlines()
        assert ls_lines[1] == "level,t,value"
        body = [line.split(",") for line in ls_lines[2:]]
        assert body  # the seizure-like segment has nonempty H1
        levels = {int(r[0]) for r in body}
        assert levels <= {1, 2} and 1 in levels
        assert all(float(r[2]) >= 0.0 for r in body)

    def test_plot_data_unknown_ref(self, corpus_store, capsys):
        root, _ = corpus_store
        rc, _ = run_cli("plot-data", "--out", root, "--ref", "nope:0")
        assert rc == 1
        err = read_error(capsys)
        assert err["error"] == "not-found"
        assert "nope:0" in err["message"]
