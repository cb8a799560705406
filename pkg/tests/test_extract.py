import numpy as np
import pytest

from ced.config import FeatureConfig, config_hash
from ced.extract import (
    ConfigMismatchError,
    StoreMeta,
    check_config_hash,
    extract_logits,
    read_digests,
    verify_store,
)
from ced.features import replay_augmented
from ced.store import open_store
from ced.teacher import TeacherEnsemble, teacher_predict
from ced.store import compress_topk

CFG = FeatureConfig(max_time_mask=8, max_freq_mask=16)


def make_teacher(num_classes=10, seed=0):
    return TeacherEnsemble(num_classes=num_classes, feature_dim=CFG.num_mel_bands, seed=seed)


def test_extract_fills_every_slot_and_sizes_the_file(tmp_path, tone_corpus):
    teacher = make_teacher()
    store_path = tmp_path / "logits.ced"
    header = extract_logits(tone_corpus, teacher, CFG, top_k=3, stored_epochs=2, store_path=store_path)
    assert header.slot_count == 16
    assert store_path.stat().st_size == 24 + 16 * 16
    reader = open_store(store_path)
    for epoch in range(2):
        for sample in range(len(tone_corpus)):
            rec = reader.read_record(sample, epoch)
            assert rec.values.size == 3


def test_extraction_is_byte_identical_across_runs(tmp_path, tone_corpus):
    for name in ("a", "b"):
        extract_logits(
            tone_corpus,
            make_teacher(),
            CFG,
            top_k=4,
            stored_epochs=2,
            store_path=tmp_path / f"{name}.ced",
            seed=7,
        )
    assert (tmp_path / "a.ced").read_bytes() == (tmp_path / "b.ced").read_bytes()
    assert (tmp_path / "a.ced.digests").read_bytes() == (tmp_path / "b.ced.digests").read_bytes()


def test_threaded_extraction_matches_serial(tmp_path, tone_corpus):
    extract_logits(tone_corpus, make_teacher(), CFG, 4, 2, tmp_path / "serial.ced", seed=1, threads=1)
    extract_logits(tone_corpus, make_teacher(), CFG, 4, 2, tmp_path / "pool.ced", seed=1, threads=4)
    assert (tmp_path / "serial.ced").read_bytes() == (tmp_path / "pool.ced").read_bytes()


def test_records_match_a_manual_recomputation(tmp_path, tone_corpus):
    teacher = make_teacher(seed=5)
    store_path = tmp_path / "logits.ced"
    extract_logits(tone_corpus, teacher, CFG, top_k=5, stored_epochs=1, store_path=store_path, seed=3)
    reader = open_store(store_path)
    for sample in range(len(tone_corpus)):
        rec = reader.read_record(sample, 0)
        spec = replay_augmented(sample, rec.seed, tone_corpus, CFG)
        values, indices = compress_topk(teacher_predict(spec, teacher), 5)
        assert np.array_equal(rec.indices, indices)
        assert np.array_equal(rec.values.astype(np.float16), values.astype(np.float16))


def test_meta_records_the_config_hash(tmp_path, tone_corpus):
    store_path = tmp_path / "logits.ced"
    extract_logits(tone_corpus, make_teacher(), CFG, 3, 1, store_path)
    meta = StoreMeta.read(store_path)
    assert meta.config_hash == config_hash(CFG)
    check_config_hash(store_path, CFG)  # must not raise
    with pytest.raises(ConfigMismatchError):
        check_config_hash(store_path, FeatureConfig())


def test_digest_file_has_one_row_per_slot(tmp_path, tone_corpus):
    store_path = tmp_path / "logits.ced"
    extract_logits(tone_corpus, make_teacher(), CFG, 3, 3, store_path)
    digests = read_digests(store_path)
    assert len(digests) == 3 * len(tone_corpus)
    assert all(len(d) == 64 for d in digests)


def test_verify_passes_on_an_untouched_store(tmp_path, tone_corpus):
    teacher = make_teacher(seed=2)
    store_path = tmp_path / "logits.ced"
    extract_logits(tone_corpus, teacher, CFG, 4, 2, store_path, seed=9)
    report = verify_store(open_store(store_path), tone_corpus, teacher, CFG)
    assert report.passed
    assert len(report.checked) == 16


def test_verify_flags_exactly_the_tampered_slot(tmp_path, tone_corpus):
    teacher = make_teacher(seed=2)
    store_path = tmp_path / "logits.ced"
    header = extract_logits(tone_corpus, teacher, CFG, 4, 2, store_path, seed=9)
    # Flip one byte inside the record for (sample 3, epoch 1).
    slot = 1 * header.num_samples + 3
    offset = 24 + slot * header.record_size + 2
    raw = bytearray(store_path.read_bytes())
    raw[offset] ^= 0x55
    store_path.write_bytes(bytes(raw))
    report = verify_store(open_store(store_path), tone_corpus, teacher, CFG)
    assert not report.passed
    assert {(f.sample_id, f.epoch) for f in report.failures} == {(3, 1)}


def test_verify_detects_a_replaced_corpus_file(tmp_path, tone_corpus):
    teacher = make_teacher(seed=2)
    store_path = tmp_path / "logits.ced"
    extract_logits(tone_corpus, teacher, CFG, 4, 1, store_path, seed=9)
    victim = tone_corpus.path(0)
    from ced.audio import write_wav

    rng = np.random.default_rng(99)
    write_wav(str(victim), rng.normal(0, 0.1, 3200), tone_corpus.sample_rate)
    tone_corpus._cache.clear()
    report = verify_store(open_store(store_path), tone_corpus, teacher, CFG)
    failed_samples = {f.sample_id for f in report.failures}
    assert failed_samples == {0}


def test_verify_subset_sampling_is_seeded(tmp_path, tone_corpus):
    teacher = make_teacher()
    store_path = tmp_path / "logits.ced"
    extract_logits(tone_corpus, teacher, CFG, 3, 2, store_path)
    reader = open_store(store_path)
    a = verify_store(reader, tone_corpus, teacher, CFG, sample_count=5, seed=1)
    b = verify_store(reader, tone_corpus, teacher, CFG, sample_count=5, seed=1)
    assert a.checked == b.checked
    assert len(a.checked) == 5
