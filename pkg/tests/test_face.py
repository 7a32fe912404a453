import numpy as np
import pytest

from sevfuse.face import (
    CANONICAL_COLUMNS,
    FaceFrameTable,
    aggregate_face,
    extract_face_feature,
    parse_face_csv,
    smooth_au_columns,
)


def write_csv(path, header, rows):
    lines = [", ".join(header)]
    lines += [", ".join(str(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


def full_schema_fixture(tmp_path, n_frames=4, seed=0):
    rng = np.random.default_rng(seed)
    header = ["frame", "timestamp", "confidence", "success", *CANONICAL_COLUMNS]
    rows = []
    for i in range(n_frames):
        rows.append([i, i / 30.0, 0.98, 1, *np.round(rng.standard_normal(len(CANONICAL_COLUMNS)), 4)])
    return write_csv(tmp_path / "face.csv", header, rows)


class TestParseFaceCsv:
    def test_column_recovered_exactly(self, tmp_path):
        path = write_csv(tmp_path / "f.csv", ["success", "AU01_r"], [[1, 1], [1, 2], [1, 3]])
        table = parse_face_csv(path)
        assert table.columns == ["AU01_r"]
        assert np.array_equal(table.values[:, 0], [1.0, 2.0, 3.0])

    def test_success_zero_dropped(self, tmp_path):
        path = write_csv(tmp_path / "f.csv", ["success", "AU01_r"], [[1, 1], [0, 2], [1, 3]])
        table = parse_face_csv(path)
        assert table.n_frames == 2
        assert np.array_equal(table.values[:, 0], [1.0, 3.0])

    def test_real_schema_49_columns(self, tmp_path):
        table = parse_face_csv(full_schema_fixture(tmp_path))
        assert len(CANONICAL_COLUMNS) == 49
        assert table.columns == list(CANONICAL_COLUMNS)
        assert table.missing == []

    def test_unreadable_is_absent_signal(self, tmp_path):
        assert parse_face_csv(tmp_path / "missing.csv") is None

    def test_unrecognized_columns_absent(self, tmp_path):
        path = write_csv(tmp_path / "f.csv", ["foo", "bar"], [[1, 2]])
        assert parse_face_csv(path) is None

    def test_missing_columns_recorded(self, tmp_path):
        path = write_csv(tmp_path / "f.csv", ["gaze_0_x", "pose_Tx"], [[0.1, 4.0]])
        table = parse_face_csv(path)
        assert table.columns == ["gaze_0_x", "pose_Tx"]
        assert set(table.missing) == set(CANONICAL_COLUMNS) - {"gaze_0_x", "pose_Tx"}


class TestAggregateFace:
    def test_constant_table_std_zero(self):
        table = FaceFrameTable(columns=["AU01_r", "AU02_r"], values=np.full((6, 2), 1.5))
        vec = aggregate_face(table).vector
        assert np.allclose(vec[:2], 1.5)
        assert np.allclose(vec[2:], 0.0)

    def test_vector_length_512(self, tmp_path):
        feat = aggregate_face(parse_face_csv(full_schema_fixture(tmp_path)))
        assert feat.vector.shape == (512,)

    def test_hand_table_against_oracle(self):
        rng = np.random.default_rng(3)
        values = rng.standard_normal((4, 2))
        table = FaceFrameTable(columns=["gaze_0_x", "pose_Tx"], values=values)
        vec = aggregate_face(table).vector
        for c in range(2):
            col = values[:, c]
            assert vec[c] == pytest.approx(col.sum() / 4, abs=1e-15)
            assert vec[2 + c] == pytest.approx(
                np.sqrt(((col - col.mean()) ** 2).mean()), abs=1e-12)
        assert np.array_equal(vec[4:], np.zeros(508))

    def test_zero_frames_absent(self):
        table = FaceFrameTable(columns=["AU01_r"], values=np.zeros((0, 1)))
        feat = aggregate_face(table)
        assert not feat.present and np.array_equal(feat.vector, np.zeros(512))

    def test_none_absent(self):
        assert not aggregate_face(None).present


class TestInvariants:
    def test_frame_permutation_invariance(self, tmp_path):
        table = parse_face_csv(full_schema_fixture(tmp_path, n_frames=30))
        base = aggregate_face(table).vector
        perm = np.random.default_rng(4).permutation(30)
        shuffled = FaceFrameTable(columns=table.columns, values=table.values[perm])
        assert np.array_equal(aggregate_face(shuffled).vector, base)

    def test_padding_never_aliases(self, tmp_path):
        table = parse_face_csv(full_schema_fixture(tmp_path))
        vec = aggregate_face(table).vector
        n_cols = len(table.columns)
        assert (vec[2 * n_cols:] == 0).all()

    def test_success_filter_equals_prefiltered_oracle(self, tmp_path):
        rng = np.random.default_rng(5)
        vals = np.round(rng.standard_normal((10, 1)), 4)
        success = [1, 0, 1, 1, 0, 1, 1, 1, 0, 1]
        path = write_csv(tmp_path / "f.csv", ["success", "AU01_r"],
                         [[s, v[0]] for s, v in zip(success, vals)])
        direct = aggregate_face(parse_face_csv(path)).vector
        kept = vals[np.array(success) == 1]
        oracle = aggregate_face(FaceFrameTable(columns=["AU01_r"], values=kept)).vector
        assert np.array_equal(direct, oracle)


class TestSmoothing:
    def test_smoothing_only_touches_intensity_columns(self):
        values = np.array([[0.0, 0.0], [10.0, 10.0], [0.0, 0.0]])
        table = FaceFrameTable(columns=["AU01_r", "gaze_0_x"], values=values)
        sm = smooth_au_columns(table, window=3)
        assert np.allclose(sm.values[:, 0], [5.0, 10.0 / 3.0, 5.0])
        assert np.array_equal(sm.values[:, 1], values[:, 1])

    def test_window_one_is_identity(self):
        values = np.random.default_rng(6).standard_normal((5, 2))
        table = FaceFrameTable(columns=["AU01_r", "AU02_r"], values=values)
        assert np.array_equal(smooth_au_columns(table, window=1).values, values)

    def test_extract_with_smoothing(self, tmp_path):
        path = full_schema_fixture(tmp_path, n_frames=12)
        raw = extract_face_feature(path, smooth_window=1)
        smoothed = extract_face_feature(path, smooth_window=5)
        assert raw.present and smoothed.present
        assert not np.array_equal(raw.vector, smoothed.vector)
