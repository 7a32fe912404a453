import string

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sevfuse.corpus import (
    ConfigError,
    Corpus,
    build_label_maps,
    clean_transcript,
    map_dep_class,
    map_ptsd_class,
    scan_participants,
)


class TestSeverityBanding:
    @pytest.mark.parametrize("total,expected", [
        (0, 0), (4, 0), (5, 1), (9, 1), (10, 2), (14, 2), (15, 3), (19, 3), (20, 4), (24, 4),
    ])
    def test_dep_bands(self, total, expected):
        assert map_dep_class(total) == expected

    @pytest.mark.parametrize("total,expected", [
        (0, 0), (20, 0), (21, 1), (40, 1), (41, 2), (80, 2),
    ])
    def test_ptsd_bands(self, total, expected):
        assert map_ptsd_class(total) == expected

    @pytest.mark.parametrize("fn,bad", [
        (map_dep_class, -1), (map_dep_class, 25), (map_ptsd_class, -1), (map_ptsd_class, 81),
    ])
    def test_out_of_range(self, fn, bad):
        with pytest.raises(ValueError):
            fn(bad)

    @given(st.integers(min_value=0, max_value=23))
    def test_dep_banding_monotone_step(self, t):
        step = map_dep_class(t + 1) - map_dep_class(t)
        assert step in (0, 1)

    @given(st.integers(min_value=0, max_value=79))
    def test_ptsd_banding_monotone_step(self, t):
        step = map_ptsd_class(t + 1) - map_ptsd_class(t)
        assert step in (0, 1)


class TestScanParticipants:
    def test_suffix_filter(self, tmp_path):
        for name in ("300_P", "301_P", "notes"):
            (tmp_path / name).mkdir()
        records = scan_participants([tmp_path])
        assert [r.id for r in records] == ["300", "301"]

    def test_empty_root(self, tmp_path):
        assert scan_participants([tmp_path]) == []

    def test_many_folders_sorted(self, tmp_path):
        # Reverse creation order; the scan must normalize to sorted ids.
        names = [f"{i:03d}_P" for i in range(100, 589)]
        for name in reversed(names):
            (tmp_path / name).mkdir()
        records = scan_participants([tmp_path])
        assert len(records) == 489
        assert [r.id for r in records] == sorted(n[:-2] for n in names)

    def test_idempotent(self, tmp_path):
        for name in ("302_P", "310_P"):
            d = tmp_path / name
            d.mkdir()
            (d / f"{name[:-2]}_AUDIO.wav").write_bytes(b"")
        first = scan_participants([tmp_path])
        second = scan_participants([tmp_path])
        assert [(r.id, r.audio_path) for r in first] == [(r.id, r.audio_path) for r in second]

    def test_modality_discovery(self, tmp_path):
        d = tmp_path / "300_P"
        d.mkdir()
        (d / "300_AUDIO.wav").write_bytes(b"")
        (d / "300_TRANSCRIPT.csv").write_text("start_time\tstop_time\tspeaker\tvalue\n")
        (d / "300_OpenFace_features.csv").write_text("frame\n")
        (d / "300.emb.f32le").write_bytes(b"")
        rec = scan_participants([tmp_path])[0]
        assert rec.audio_path.name == "300_AUDIO.wav"
        assert rec.transcript_path.name == "300_TRANSCRIPT.csv"
        assert rec.face_csv_path.name == "300_OpenFace_features.csv"
        assert rec.text_embedding_path.name == "300.emb.f32le"

    def test_malformed_folder_retained(self, tmp_path):
        (tmp_path / "400_P").mkdir()
        rec = scan_participants([tmp_path])[0]
        assert rec.audio_path is None and rec.transcript_path is None

    def test_missing_root_fatal(self, tmp_path):
        with pytest.raises(ConfigError):
            scan_participants([tmp_path / "nope"])

    def test_labels_fill_and_sentinels(self, tmp_path):
        (tmp_path / "300_P").mkdir()
        (tmp_path / "301_P").mkdir()
        meta = tmp_path / "meta.csv"
        meta.write_text("Participant_ID,PHQ_8Total,PCL total\n300,12,45\n")
        maps = build_label_maps([meta])
        records = scan_participants([tmp_path], [Corpus.DAICWOZ], maps)
        full = records[0]
        assert (full.phq8_total, full.dep_class) == (12, 2)
        assert (full.pcl_total, full.ptsd_class) == (45, 2)
        missing = records[1]
        assert missing.dep_class == -1 and not missing.has_labels()


class TestLabelMaps:
    def test_direct_severity_class_accepted(self, tmp_path):
        meta = tmp_path / "meta.csv"
        meta.write_text("Participant_ID;PHQ_8Total;PTSD severity\n300;3;2\n")
        maps = build_label_maps([meta])
        total, cls = maps.ptsd_class_for("300")
        assert total == -1 and cls == 2

    def test_multiple_files_merge(self, tmp_path):
        a = tmp_path / "a.csv"
        a.write_text("Participant_ID,PCL total\n300,10\n")
        b = tmp_path / "b.csv"
        b.write_text("Participant_ID,PHQ_8Total\n300,20\n")
        maps = build_label_maps([a, b])
        assert maps.dep_class_for("300") == (20, 4)
        assert maps.ptsd_class_for("300") == (10, 0)

    def test_missing_file_fatal(self, tmp_path):
        with pytest.raises(ConfigError):
            build_label_maps([tmp_path / "none.csv"])


DAIC_TRANSCRIPT = (
    "start_time\tstop_time\tspeaker\tvalue\n"
    "0.0\t1.0\tEllie\thow are you\n"
    "1.0\t2.0\tParticipant\tI'm, uh, fine\n"
)


class TestCleanTranscript:
    def test_patient_turn_normalized(self):
        assert clean_transcript(DAIC_TRANSCRIPT) == "im uh fine"

    def test_all_interviewer(self):
        raw = "start_time\tstop_time\tspeaker\tvalue\n0\t1\tEllie\thello there\n"
        assert clean_transcript(raw) == ""

    def test_turn_order_preserved(self):
        raw = "start_time\tstop_time\tspeaker\tvalue\n" + "".join(
            f"{i}\t{i + 1}\tParticipant\t{a} {b}\n"
            for i, (a, b) in enumerate([("one", "two"), ("three", "four"), ("five", "six")])
        )
        assert clean_transcript(raw) == "one two three four five six"

    def test_plain_text_passthrough(self):
        assert clean_transcript("Hello, World!") == "hello world"

    def test_edaic_layout_without_speaker(self):
        raw = "Start_Time,End_Time,Text,Confidence\n0,1,Feeling okay today,0.9\n"
        assert clean_transcript(raw) == "feeling okay today"

    def test_annotation_tags_dropped(self):
        raw = "start_time\tstop_time\tspeaker\tvalue\n0\t1\tParticipant\t<sync> good [laughter]\n"
        assert clean_transcript(raw) == "good"

    @given(st.text(alphabet=string.printable, max_size=300))
    def test_output_charset(self, raw):
        cleaned = clean_transcript(raw)
        assert all(c in "abcdefghijklmnopqrstuvwxyz0123456789 " for c in cleaned)
        assert "  " not in cleaned
