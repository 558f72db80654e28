import json

import numpy as np
import pytest

from eegtda import (
    BUILTIN_MONTAGES,
    ConfigError,
    Montage,
    Recording,
    apply_montage,
    builtin_montage,
    get_montage,
    load_montage,
)
from eegtda.montage import montage_text
from eegtda.synth import STANDARD_ELECTRODES


def _rec28(seed=0, t=64):
    rng = np.random.default_rng(seed)
    return Recording(
        channels=list(STANDARD_ELECTRODES),
        samples=rng.standard_normal((28, t)),
        rate=128.0,
    )


def test_three_channel_average_reference():
    mon = Montage(
        name="avg3",
        out_labels=("a", "b", "c"),
        rows=(
            {"a": 2 / 3, "b": -1 / 3, "c": -1 / 3},
            {"b": 2 / 3, "a": -1 / 3, "c": -1 / 3},
            {"c": 2 / 3, "a": -1 / 3, "b": -1 / 3},
        ),
    )
    rec = Recording(
        channels=["a", "b", "c"],
        samples=np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]),
        rate=1.0,
    )
    out = apply_montage(rec, mon)
    assert np.allclose(out.samples[:, 0], [-1.0, 0.0, 1.0])


def test_cz_reference_subtracts_cz():
    rec = _rec28()
    cz = rec.samples[rec.channels.index("Cz")]
    out = apply_montage(rec, builtin_montage("cz_reference"))
    assert len(out.channels) == 27
    assert all(label.endswith("-Cz") and label != "Cz-Cz" for label in out.channels)
    for row, label in enumerate(out.channels):
        src = rec.samples[rec.channels.index(label[: -len("-Cz")])]
        assert np.allclose(out.samples[row], src - cz)


def test_bipolar_pair_difference():
    rec = _rec28()
    rec.samples[:] = 0.0
    rec.samples[rec.channels.index("Fp1")] = 4.0
    rec.samples[rec.channels.index("F3")] = 1.0
    out = apply_montage(rec, builtin_montage("bipolar"))
    assert "Fp1-F3" in out.channels
    assert np.allclose(out.samples[out.channels.index("Fp1-F3")], 3.0)


def test_builtin_channel_counts():
    assert set(BUILTIN_MONTAGES) == {"bipolar", "average", "cz_reference"}
    assert len(builtin_montage("bipolar").out_labels) == 28
    assert len(builtin_montage("average").out_labels) == 27
    assert len(builtin_montage("cz_reference").out_labels) == 27


def test_apply_montage_is_linear():
    rng = np.random.default_rng(7)
    mon = builtin_montage("average")
    r1, r2 = _rec28(1), _rec28(2)
    a, b = 2.5, -0.75
    combo = Recording(
        channels=r1.channels,
        samples=a * r1.samples + b * r2.samples,
        rate=r1.rate,
    )
    lhs = apply_montage(combo, mon).samples
    rhs = a * apply_montage(r1, mon).samples + b * apply_montage(r2, mon).samples
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_average_montage_outputs_sum_to_zero():
    out = apply_montage(_rec28(3), builtin_montage("average"))
    scale = np.abs(out.samples).max()
    assert np.abs(out.samples.sum(axis=0)).max() < 1e-9 * max(scale, 1.0)


def test_average_montage_weights():
    mon = builtin_montage("average")
    w = mon.weight_matrix(list(STANDARD_ELECTRODES))
    assert w.shape == (27, 28)
    assert np.allclose(w.sum(axis=1), 0.0, atol=1e-12)
    cz = STANDARD_ELECTRODES.index("Cz")
    assert np.allclose(w[:, cz], 0.0)  # average reference excludes Cz
    for row, label in enumerate(mon.out_labels):
        electrode = label[: -len("-avg")]
        assert w[row, STANDARD_ELECTRODES.index(electrode)] == pytest.approx(26 / 27)


def test_missing_channel_names_label():
    rec = Recording(
        channels=["Fp1", "Fp2"], samples=np.zeros((2, 4)), rate=1.0
    )
    with pytest.raises(ConfigError, match="F7"):
        apply_montage(rec, builtin_montage("bipolar"))


def test_montage_rejects_zero_row():
    with pytest.raises(ConfigError):
        Montage(name="bad", out_labels=("x",), rows=({"a": 0.0},))


def test_load_montage_from_path_matches_builtin(tmp_path):
    text = montage_text("bipolar")
    p = tmp_path / "custom.json"
    p.write_text(text)
    assert load_montage(p).out_labels == builtin_montage("bipolar").out_labels
    assert get_montage(str(p)).name == get_montage("bipolar").name
    json.loads(text)  # the raw text is valid JSON


def test_unknown_montage_name():
    with pytest.raises(ConfigError):
        get_montage("laplacian")
