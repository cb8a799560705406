import json

import numpy as np
import pytest

from ced.cli import main
from ced.config import FeatureConfig, save_config
from ced.model import StudentModel
from ced.store import open_store

# Small-clip mask geometry for the CLI fixtures.
CLI_CFG = FeatureConfig(max_time_mask=8, max_freq_mask=16)


@pytest.fixture
def corpus_dir(tmp_path, tone_corpus):
    return tone_corpus.root


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "features.cfg"
    save_config(CLI_CFG, str(path))
    return path


def run_extract(tmp_path, corpus_dir, config_path, **overrides):
    out = tmp_path / "out"
    args = [
        "extract",
        "--corpus", str(corpus_dir),
        "--out", str(out),
        "--config", str(config_path),
        "--top-k", str(overrides.get("top_k", 3)),
        "--stored-epochs", str(overrides.get("stored_epochs", 2)),
        "--classes", str(overrides.get("classes", 10)),
        "--seed", str(overrides.get("seed", 0)),
        "--teacher-seed", str(overrides.get("teacher_seed", 0)),
    ]
    code = main(args)
    return code, out


def test_extract_writes_store_of_the_expected_size(tmp_path, corpus_dir, config_path):
    code, out = run_extract(tmp_path, corpus_dir, config_path)
    assert code == 0
    store = out / "logits.ced"
    # 8 samples x 2 epochs, record size 4*3+4
    assert store.stat().st_size == 24 + 16 * 16
    assert (out / "manifest.json").exists()
    assert (out / "feature_config.txt").exists()
    header = open_store(store).header
    assert (header.num_samples, header.top_k, header.stored_epochs) == (8, 3, 2)


def test_extract_rejects_top_k_above_classes_with_usage_exit(tmp_path, corpus_dir, config_path):
    code, _ = run_extract(tmp_path, corpus_dir, config_path, top_k=11, classes=10)
    assert code == 2


def test_extract_reruns_byte_identical(tmp_path, corpus_dir, config_path):
    _, out_a = run_extract(tmp_path / "a", corpus_dir, config_path, seed=5)
    _, out_b = run_extract(tmp_path / "b", corpus_dir, config_path, seed=5)
    assert (out_a / "logits.ced").read_bytes() == (out_b / "logits.ced").read_bytes()
    assert (out_a / "logits.ced.written").read_bytes() == (out_b / "logits.ced.written").read_bytes()
    assert (out_a / "logits.ced.digests").read_bytes() == (out_b / "logits.ced.digests").read_bytes()


def test_train_produces_model_and_history(tmp_path, corpus_dir, config_path):
    _, out = run_extract(tmp_path, corpus_dir, config_path)
    train_out = tmp_path / "train"
    code = main([
        "train",
        "--store", str(out / "logits.ced"),
        "--corpus", str(corpus_dir),
        "--out", str(train_out),
        "--epochs", "3",
        "--batch-size", "4",
        "--seed", "1",
    ])
    assert code == 0
    model = StudentModel.load(train_out / "model.bin")
    assert model.num_classes == 10
    lines = (train_out / "loss_history.csv").read_text().strip().splitlines()
    assert lines[0] == "step,lr,loss"
    assert len(lines) == 1 + 3 * 2  # header + epochs * ceil(8/4)


def test_train_zero_epochs_equals_initialization(tmp_path, corpus_dir, config_path):
    _, out = run_extract(tmp_path, corpus_dir, config_path)
    train_out = tmp_path / "train0"
    code = main([
        "train", "--store", str(out / "logits.ced"), "--corpus", str(corpus_dir),
        "--out", str(train_out), "--epochs", "0",
    ])
    assert code == 0
    trained = StudentModel.load(train_out / "model.bin")
    fresh = StudentModel(10, CLI_CFG.num_mel_bands)
    assert np.array_equal(trained.weights, fresh.weights)
    assert np.array_equal(trained.bias, fresh.bias)
    assert not trained.norm_fitted


def test_train_refuses_a_tampered_config(tmp_path, corpus_dir, config_path):
    _, out = run_extract(tmp_path, corpus_dir, config_path)
    other_cfg = tmp_path / "other.cfg"
    save_config(FeatureConfig(max_time_mask=9, max_freq_mask=16), str(other_cfg))
    code = main([
        "train", "--store", str(out / "logits.ced"), "--corpus", str(corpus_dir),
        "--out", str(tmp_path / "t"), "--epochs", "1", "--config", str(other_cfg),
    ])
    assert code == 2


def test_inspect_reports_record_cost_and_comparison(tmp_path, corpus_dir, config_path, capsys):
    _, out = run_extract(tmp_path, corpus_dir, config_path, top_k=3)
    code = main(["inspect", "--store", str(out / "logits.ced")])
    assert code == 0
    text = capsys.readouterr().out
    assert "bytes/record     16" in text
    assert "naive float32" in text and "dense float16" in text


def test_inspect_json_fields(tmp_path, corpus_dir, config_path, capsys):
    _, out = run_extract(tmp_path, corpus_dir, config_path)
    capsys.readouterr()  # drop the extract banner
    assert main(["inspect", "--store", str(out / "logits.ced"), "--json"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["bytes_per_record"] == 16
    assert report["num_samples"] == 8


def test_inspect_comparison_table_at_published_scale(tmp_path, capsys):
    from ced.store import StoreHeader, create_store

    path = tmp_path / "big.ced"
    create_store(path, StoreHeader(num_samples=21_155, num_classes=527, top_k=20, stored_epochs=1)).finalize()
    assert main(["inspect", "--store", str(path)]) == 0
    text = capsys.readouterr().out
    assert "bytes/record     84" in text
    assert "1.8 MB" in text  # top-k epoch cost
    assert "44594740" in text and "42.5 MiB" in text  # naive float32 epoch cost


def test_inspect_rejects_truncated_store(tmp_path, corpus_dir, config_path, capsys):
    _, out = run_extract(tmp_path, corpus_dir, config_path)
    store = out / "logits.ced"
    store.write_bytes(store.read_bytes()[:-3])
    assert main(["inspect", "--store", str(store)]) == 1
    assert "corrupt" in capsys.readouterr().err


def test_verify_passes_on_untouched_store(tmp_path, corpus_dir, config_path, capsys):
    _, out = run_extract(tmp_path, corpus_dir, config_path)
    code = main(["verify", "--store", str(out / "logits.ced"), "--corpus", str(corpus_dir)])
    assert code == 0
    assert "PASS" in capsys.readouterr().out


def test_verify_flags_the_flipped_byte(tmp_path, corpus_dir, config_path, capsys):
    _, out = run_extract(tmp_path, corpus_dir, config_path)
    store = out / "logits.ced"
    header = open_store(store).header
    slot = 1 * header.num_samples + 4  # sample 4, epoch 1
    raw = bytearray(store.read_bytes())
    raw[24 + slot * header.record_size] ^= 0x01
    store.write_bytes(bytes(raw))
    code = main(["verify", "--store", str(store), "--corpus", str(corpus_dir)])
    assert code == 1
    text = capsys.readouterr().out
    assert "sample=4 epoch=1" in text


def test_verify_detects_replaced_corpus_audio(tmp_path, corpus_dir, config_path, capsys):
    _, out = run_extract(tmp_path, corpus_dir, config_path)
    from ced.audio import write_wav

    write_wav(str(corpus_dir / "clip_00002.wav"), np.zeros(3200), 16000)
    code = main(["verify", "--store", str(out / "logits.ced"), "--corpus", str(corpus_dir)])
    assert code == 1
    assert "sample=2" in capsys.readouterr().out


def test_replay_dumps_bit_identical_npy_and_record_json(tmp_path, corpus_dir, config_path):
    _, out = run_extract(tmp_path, corpus_dir, config_path)
    slots = tmp_path / "slots.txt"
    slots.write_text("0 0\n3 1\n")
    dump_a = tmp_path / "dump_a"
    dump_b = tmp_path / "dump_b"
    for dump in (dump_a, dump_b):
        code = main([
            "replay", "--store", str(out / "logits.ced"), "--corpus", str(corpus_dir),
            "--slots", str(slots), "--out-dir", str(dump),
        ])
        assert code == 0
    for name in ("spec_000000_0000.npy", "target_000003_0001.npy", "record_000000_0000.json"):
        assert (dump_a / name).read_bytes() == (dump_b / name).read_bytes()
    spec = np.load(dump_a / "spec_000000_0000.npy")
    assert spec.shape[0] == CLI_CFG.num_mel_bands
    record = json.loads((dump_a / "record_000000_0000.json").read_text())
    target = np.load(dump_a / "target_000000_0000.npy")
    assert len(record["indices"]) == 3
    nonzero = {i for i, v in enumerate(target) if v != 0.0}
    assert nonzero <= set(record["indices"])


def test_replay_requires_slot_arguments(tmp_path, corpus_dir, config_path):
    _, out = run_extract(tmp_path, corpus_dir, config_path)
    code = main([
        "replay", "--store", str(out / "logits.ced"), "--corpus", str(corpus_dir),
        "--out-dir", str(tmp_path / "d"),
    ])
    assert code == 2


def test_missing_corpus_is_a_runtime_failure(tmp_path, config_path):
    code = main([
        "extract", "--corpus", str(tmp_path / "nowhere"), "--out", str(tmp_path / "o"),
        "--config", str(config_path),
    ])
    assert code == 1
