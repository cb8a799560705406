import numpy as np
import pytest

from ced.model import ModelFormatError, StudentModel
from ced.teacher import FEATURE_SCALE, FEATURE_SHIFT, TeacherEnsemble, sigmoid, teacher_predict


def test_sigmoid_matches_definition_and_is_stable():
    z = np.array([-800.0, -5.0, 0.0, 5.0, 800.0])
    p = sigmoid(z)
    assert p[2] == 0.5
    assert np.allclose(p[1:4], 1.0 / (1.0 + np.exp(-z[1:4])))
    assert 0.0 <= p[0] < 1e-300 or p[0] == 0.0
    assert p[4] == 1.0


def test_singleton_ensemble_equals_member_sigmoid():
    teacher = TeacherEnsemble(num_classes=6, feature_dim=4, num_members=1, seed=3)
    pooled = np.linspace(-12.0, -2.0, 4)
    standardized = (pooled - FEATURE_SHIFT) / FEATURE_SCALE
    expected = sigmoid(teacher.member_weights[0] @ standardized + teacher.member_bias[0])
    assert np.allclose(teacher.predict_from_features(pooled), expected, atol=1e-15)


def test_mirrored_members_average_to_one_half():
    teacher = TeacherEnsemble(num_classes=5, feature_dim=3, num_members=2, seed=0)
    teacher.member_weights[1] = -teacher.member_weights[0]
    teacher.member_bias[1] = -teacher.member_bias[0]
    pooled = np.array([-9.0, -4.0, -1.0])
    probs = teacher.predict_from_features(pooled)
    assert np.allclose(probs, 0.5, atol=1e-12)


def test_ensemble_equals_bruteforce_member_average():
    teacher = TeacherEnsemble(num_classes=8, feature_dim=5, num_members=5, seed=11)
    rng = np.random.default_rng(0)
    pooled = rng.uniform(-15.0, 0.0, 5)
    standardized = (pooled - FEATURE_SHIFT) / FEATURE_SCALE
    members = [
        sigmoid(teacher.member_weights[m] @ standardized + teacher.member_bias[m])
        for m in range(5)
    ]
    assert np.allclose(teacher.predict_from_features(pooled), np.mean(members, axis=0), atol=1e-12)


def test_teacher_is_deterministic_given_its_seed():
    a = TeacherEnsemble(num_classes=4, feature_dim=6, seed=42)
    b = TeacherEnsemble(num_classes=4, feature_dim=6, seed=42)
    assert np.array_equal(a.member_weights, b.member_weights)
    assert np.array_equal(a.member_bias, b.member_bias)


def test_teacher_predict_pools_over_time():
    teacher = TeacherEnsemble(num_classes=3, feature_dim=4, seed=1)
    spec = np.random.default_rng(2).uniform(-20, 0, size=(4, 9))
    direct = teacher.predict_from_features(spec.mean(axis=1))
    assert np.allclose(teacher_predict(spec, teacher), direct)


def test_teacher_predict_rejects_wrong_band_count():
    teacher = TeacherEnsemble(num_classes=3, feature_dim=4, seed=1)
    with pytest.raises(ValueError):
        teacher_predict(np.zeros((5, 9)), teacher)


def test_teacher_outputs_lie_in_unit_interval():
    teacher = TeacherEnsemble(num_classes=16, feature_dim=64, seed=9)
    rng = np.random.default_rng(1)
    pooled = rng.uniform(-23.0, 0.0, size=(32, 64))
    probs = teacher.predict_from_features(pooled)
    assert np.all(probs >= 0.0) and np.all(probs <= 1.0)


# --- student model ---------------------------------------------------------


def test_student_forward_outputs_probabilities():
    student = StudentModel(num_classes=5, feature_dim=8)
    student.fit_input_norm(np.random.default_rng(0).uniform(-10, 0, size=(20, 8)))
    spec = np.random.default_rng(1).uniform(-10, 0, size=(8, 12))
    probs = student.predict_proba(spec)
    assert probs.shape == (5,)
    assert np.all((probs > 0.0) & (probs < 1.0))
    assert np.allclose(probs, 0.5)  # zero-initialized affine map


def test_input_norm_standardizes_the_fitting_rows():
    rng = np.random.default_rng(3)
    rows = rng.normal(-6.0, 2.5, size=(200, 4))
    student = StudentModel(num_classes=2, feature_dim=4)
    student.fit_input_norm(rows)
    normalized = student.normalize(rows)
    assert np.allclose(normalized.mean(axis=0), 0.0, atol=1e-12)
    assert np.allclose(normalized.std(axis=0), 1.0, atol=1e-2)


def test_model_save_load_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    student = StudentModel(num_classes=3, feature_dim=4)
    student.weights[:] = rng.normal(size=(3, 4))
    student.bias[:] = rng.normal(size=3)
    student.fit_input_norm(rng.normal(size=(10, 4)))
    path = tmp_path / "model.bin"
    student.save(path)
    loaded = StudentModel.load(path)
    assert np.array_equal(loaded.weights, student.weights)
    assert np.array_equal(loaded.bias, student.bias)
    assert np.array_equal(loaded.norm_mean, student.norm_mean)
    assert np.array_equal(loaded.norm_var, student.norm_var)
    assert loaded.norm_fitted


def test_model_file_bytes_are_deterministic(tmp_path):
    student = StudentModel(num_classes=3, feature_dim=4)
    student.save(tmp_path / "a.bin")
    student.save(tmp_path / "b.bin")
    assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()


def test_model_load_rejects_corruption(tmp_path):
    student = StudentModel(num_classes=3, feature_dim=4)
    path = tmp_path / "model.bin"
    student.save(path)
    raw = bytearray(path.read_bytes())
    raw[0] ^= 0xFF
    path.write_bytes(bytes(raw))
    with pytest.raises(ModelFormatError):
        StudentModel.load(path)
    path.write_bytes(student_bytes_truncated(student, path))
    with pytest.raises(ModelFormatError):
        StudentModel.load(path)


def student_bytes_truncated(student, path):
    student.save(path)
    return path.read_bytes()[:-8]
