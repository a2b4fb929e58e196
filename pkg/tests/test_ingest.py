"""Tests for the on-disk formats"""

import json

import numpy as np
import pytest

import skillgauge as sg
from skillgauge import ingest
from skillgauge.models import profile_for_task


def _write_lines(path, lines):
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path


@pytest.mark.ingest
class TestPgm:
    """Test binary PGM reading and writing"""

    def test_16bit_is_big_endian(self, temp_directory):
        """Test that samples are stored most significant byte first"""
        values = np.array([[1, 256], [65535, 0]], dtype=np.uint16)
        path = ingest.write_pgm(temp_directory / "a.pgm", values)
        data = path.read_bytes()
        assert data.startswith(b"P5\n2 2\n65535\n")
        assert data[-8:] == bytes([0, 1, 1, 0, 255, 255, 0, 0])

        read, maxval = ingest.read_pgm(path)
        assert maxval == 65535
        np.testing.assert_array_equal(read, values)

    def test_header_comments_are_skipped(self, temp_directory):
        """Test a header with a comment line"""
        path = temp_directory / "c.pgm"
        path.write_bytes(b"P5\n# written by a sensor\n2 1\n65535\n" + bytes([0, 7, 3, 232]))
        values, _ = ingest.read_pgm(path)
        assert values.tolist() == [[7, 1000]]

    def test_8bit_read(self, temp_directory):
        """Test reading an 8-bit raster"""
        path = ingest.write_pgm(temp_directory / "g.pgm", np.array([[0, 255]], dtype=np.uint8), maxval=255)
        values, maxval = ingest.read_pgm(path)
        assert maxval == 255
        assert values.tolist() == [[0, 255]]

    @pytest.mark.error_handling
    def test_wrong_magic(self, temp_directory):
        """Test that ASCII PGM is rejected"""
        path = temp_directory / "ascii.pgm"
        path.write_bytes(b"P2\n1 1\n255\n7\n")
        with pytest.raises(sg.FormatError, match="not a binary PGM"):
            ingest.read_pgm(path)

    @pytest.mark.error_handling
    def test_truncated_raster(self, temp_directory):
        """Test a raster shorter than the header promises"""
        path = temp_directory / "short.pgm"
        path.write_bytes(b"P5\n2 2\n65535\n" + bytes(6))
        with pytest.raises(sg.FormatError, match="raster bytes"):
            ingest.read_pgm(path)


@pytest.mark.ingest
class TestDepthSequence:
    """Test depth sequence loading"""

    def test_three_frames_round_trip(self, temp_directory, make_frames):
        """Test that indices 0, 1, 2 come back in order"""
        frames = make_frames(3, depth=1234)
        ingest.write_depth_sequence(temp_directory, frames, depth_scale=0.001, fps=15.0)
        seq = ingest.load_depth_sequence(temp_directory)
        assert seq.indices == (0, 1, 2)
        assert seq.meta.fps == 15.0
        assert not seq.meta.fps_assumed
        assert int(seq[2].values[0, 0]) == 1234
        assert seq[2].timestamp == pytest.approx(2 / 15.0)

    def test_frames_are_read_only(self, temp_directory, make_frames):
        """Test that loaded rasters cannot be modified"""
        ingest.write_depth_sequence(temp_directory, make_frames(1))
        seq = ingest.load_depth_sequence(temp_directory)
        with pytest.raises(ValueError):
            seq[0].values[0, 0] = 1

    def test_missing_index_raises_gap_error(self, temp_directory, make_frames):
        """Test that files for 0 and 2 only report index 1 missing"""
        ingest.write_depth_sequence(temp_directory, make_frames(3))
        (temp_directory / "frame_000001.pgm").unlink()
        with pytest.raises(sg.GapError) as info:
            ingest.load_depth_sequence(temp_directory)
        assert info.value.missing == (1,)

    def test_8bit_frame_is_format_error(self, temp_directory, make_frames):
        """Test that maxval 255 is rejected for depth"""
        ingest.write_depth_sequence(temp_directory, make_frames(1))
        ingest.write_pgm(
            temp_directory / "frame_000000.pgm", np.zeros((24, 32), dtype=np.uint8), maxval=255
        )
        with pytest.raises(sg.FormatError, match="maxval 255"):
            ingest.load_depth_sequence(temp_directory)

    def test_dimension_mismatch(self, temp_directory, make_frames):
        """Test that frames must match meta dimensions"""
        ingest.write_depth_sequence(temp_directory, make_frames(1))
        ingest.write_pgm(temp_directory / "frame_000000.pgm", np.zeros((10, 10), dtype=np.uint16))
        with pytest.raises(sg.FormatError, match="does not match"):
            ingest.load_depth_sequence(temp_directory)

    def test_missing_fps_is_assumed(self, temp_directory, make_frames):
        """Test that meta without fps falls back to 30 and is flagged"""
        ingest.write_depth_sequence(temp_directory, make_frames(2), fps=None)
        meta = json.loads((temp_directory / "meta.json").read_text())
        assert "fps" not in meta
        seq = ingest.load_depth_sequence(temp_directory)
        assert seq.meta.fps == 30.0
        assert seq.meta.fps_assumed

    def test_unrelated_files_are_ignored(self, temp_directory, make_frames):
        """Test that only frame_%06d.pgm files count"""
        ingest.write_depth_sequence(temp_directory, make_frames(2))
        (temp_directory / "notes.txt").write_text("hello")
        (temp_directory / "frame_1.pgm").write_bytes(b"junk")
        assert len(ingest.load_depth_sequence(temp_directory)) == 2

    def test_empty_directory(self, temp_directory):
        """Test a directory with meta but no frames"""
        (temp_directory / "meta.json").write_text(
            json.dumps({"width": 2, "height": 2, "fps": 30, "depth_scale": 0.001})
        )
        with pytest.raises(sg.FormatError, match="no frame"):
            ingest.load_depth_sequence(temp_directory)


@pytest.mark.ingest
class TestIntrinsics:
    """Test intrinsics files"""

    def test_round_trip(self, temp_directory, vga_intrinsics):
        """Test writing and reading intrinsics"""
        path = ingest.write_intrinsics(temp_directory / "intrinsics.json", vga_intrinsics)
        assert ingest.load_intrinsics(path) == vga_intrinsics

    @pytest.mark.error_handling
    def test_missing_field(self, temp_directory):
        """Test that every field is required"""
        path = temp_directory / "intrinsics.json"
        path.write_text(json.dumps({"fx": 1, "fy": 1, "cx": 0}))
        with pytest.raises(sg.FormatError, match="cy"):
            ingest.load_intrinsics(path)

    @pytest.mark.error_handling
    def test_malformed_json(self, temp_directory):
        """Test that broken JSON is a parse error"""
        path = temp_directory / "intrinsics.json"
        path.write_text("{fx: 1")
        with pytest.raises(sg.ParseError):
            ingest.load_intrinsics(path)

    @pytest.mark.error_handling
    def test_non_positive_focal_length(self, temp_directory):
        """Test that fx must be positive"""
        path = temp_directory / "intrinsics.json"
        path.write_text(json.dumps({"fx": 0, "fy": 1, "cx": 0, "cy": 0, "depth_scale": 0.001}))
        with pytest.raises(sg.ValidationError, match="focal"):
            ingest.load_intrinsics(path)


@pytest.mark.ingest
class TestDetections:
    """Test detection JSON Lines parsing"""

    def test_single_left_hand(self, temp_directory):
        """Test one Left Hand box with confidence"""
        path = _write_lines(
            temp_directory / "d.jsonl",
            ['{"frame": 0, "detections": [{"class": "Left Hand", "confidence": 0.9, "bbox": [0, 0, 10, 10]}]}'],
        )
        dets = ingest.load_detections(path)
        assert len(dets) == 1
        (det,) = dets.for_frame(0)
        assert det.class_id is sg.ObjectClass.LEFT_HAND
        assert det.confidence == 0.9
        assert det.box == sg.BoundingBox(0, 0, 10, 10)
        assert not dets.ground_truth

    def test_ground_truth_has_no_confidence(self, temp_directory):
        """Test that files without confidence are ground truth"""
        path = _write_lines(
            temp_directory / "gt.jsonl",
            ['{"frame": 3, "detections": [{"class": "Scissors", "bbox": [1, 1, 2, 2]}]}', ""],
        )
        dets = ingest.load_detections(path)
        assert dets.ground_truth
        assert dets.frames == (3,)
        assert dets.for_frame(3)[0].score == 1.0

    def test_lines_for_one_frame_are_merged(self, temp_directory):
        """Test that repeated frame lines accumulate"""
        path = _write_lines(
            temp_directory / "d.jsonl",
            [
                '{"frame": 1, "detections": [{"class": "Left Hand", "confidence": 0.5, "bbox": [0, 0, 1, 1]}]}',
                '{"frame": 1, "detections": [{"class": "RightHand", "confidence": 0.6, "bbox": [0, 0, 1, 1]}]}',
                '{"frame": 0, "detections": []}',
            ],
        )
        dets = ingest.load_detections(path)
        assert [d.class_id for d in dets.for_frame(1)] == [sg.ObjectClass.LEFT_HAND, sg.ObjectClass.RIGHT_HAND]
        assert dets.frames == (0, 1)

    def test_dump_then_load(self, temp_directory, box_detection):
        """Test that dumped detections load back equal"""
        original = sg.DetectionSet.from_detections(
            [
                box_detection(0, (0.5, 1.25, 10.0, 12.0)),
                box_detection(2, (3.0, 4.0, 5.0, 6.0), sg.ObjectClass.NEEDLE_DRIVER, 0.333),
            ]
        )
        path = ingest.dump_detections(temp_directory / "d.jsonl", original)
        assert list(ingest.load_detections(path)) == list(original)

    def test_dump_as_ground_truth(self, temp_directory, box_detection):
        """Test that ground-truth dumps drop the confidences"""
        predictions = sg.DetectionSet.from_detections(
            [box_detection(0, (0.5, 1.25, 10.0, 12.0)), box_detection(1, (3.0, 4.0, 5.0, 6.0))]
        )
        path = ingest.dump_detections(temp_directory / "gt.jsonl", predictions, ground_truth=True)
        assert "confidence" not in path.read_text()
        loaded = ingest.load_detections(path)
        assert loaded.ground_truth
        assert [d.box for d in loaded] == [d.box for d in predictions]
        assert all(d.confidence is None for d in loaded)

    @pytest.mark.error_handling
    def test_inverted_box(self, temp_directory):
        """Test that x_min >= x_max is a validation error"""
        path = _write_lines(
            temp_directory / "d.jsonl",
            ['{"frame": 0, "detections": [{"class": "Left Hand", "confidence": 0.9, "bbox": [10, 0, 0, 10]}]}'],
        )
        with pytest.raises(sg.ValidationError, match="inverted"):
            ingest.load_detections(path)

    @pytest.mark.error_handling
    def test_unknown_class(self, temp_directory):
        """Test that an unknown class names the line"""
        path = _write_lines(
            temp_directory / "d.jsonl",
            [
                '{"frame": 0, "detections": []}',
                '{"frame": 1, "detections": [{"class": "Scalpel", "confidence": 0.9, "bbox": [0, 0, 1, 1]}]}',
            ],
        )
        with pytest.raises(sg.ParseError, match="Scalpel") as info:
            ingest.load_detections(path)
        assert info.value.line == 2

    @pytest.mark.error_handling
    def test_malformed_line(self, temp_directory):
        """Test that broken JSON reports its line number"""
        path = _write_lines(temp_directory / "d.jsonl", ['{"frame": 0, "detections": []}', "{oops"])
        with pytest.raises(sg.ParseError, match=r"d\.jsonl:2"):
            ingest.load_detections(path)

    @pytest.mark.error_handling
    @pytest.mark.parametrize(
        "line",
        [
            '{"detections": []}',
            '{"frame": -1, "detections": []}',
            '{"frame": 0, "detections": [{"class": "Left Hand", "bbox": [0, 0, 1]}]}',
            '{"frame": 0, "detections": [{"class": "Left Hand", "bbox": [0, 0, 1, 1], "confidence": "high"}]}',
            '{"frame": 0, "detections": {"class": "Left Hand"}}',
        ],
    )
    def test_bad_records(self, temp_directory, line):
        """Test structurally invalid records"""
        path = _write_lines(temp_directory / "d.jsonl", [line])
        with pytest.raises(sg.ParseError):
            ingest.load_detections(path)

    @pytest.mark.error_handling
    def test_confidence_out_of_range(self, temp_directory):
        """Test that confidence must lie in [0, 1]"""
        path = _write_lines(
            temp_directory / "d.jsonl",
            ['{"frame": 0, "detections": [{"class": "Left Hand", "confidence": 1.5, "bbox": [0, 0, 1, 1]}]}'],
        )
        with pytest.raises(sg.ValidationError, match="confidence"):
            ingest.load_detections(path)


@pytest.mark.ingest
class TestLabels:
    """Test gesture label files"""

    def test_suture_pad_labels(self, temp_directory):
        """Test G0, G0, G1 under the suture-pad profile"""
        path = _write_lines(temp_directory / "l.txt", ["G0", "G0", "G1"])
        labels = ingest.load_labels(path, sg.TaskProfile.SUTURE_PAD)
        assert list(labels) == [sg.GestureLabel.G0, sg.GestureLabel.G0, sg.GestureLabel.G1]

    def test_g7_accepted_by_fascia(self, temp_directory):
        """Test that hand tie is part of the fascia catalog"""
        path = _write_lines(temp_directory / "l.txt", ["G7"])
        assert ingest.load_labels(path, sg.TaskProfile.FASCIA)[0] is sg.GestureLabel.G7

    def test_trailing_blank_lines_are_ignored(self, temp_directory):
        """Test trailing newlines at the end of a label file"""
        path = temp_directory / "l.txt"
        path.write_text("G1\nG2\n\n\n")
        assert len(ingest.load_labels(path)) == 2

    @pytest.mark.error_handling
    def test_g7_rejected_by_suture_pad(self, temp_directory):
        """Test that the suture pad has no hand tie"""
        path = _write_lines(temp_directory / "l.txt", ["G0", "G7"])
        with pytest.raises(sg.ProfileError, match="G7"):
            ingest.load_labels(path, sg.TaskProfile.SUTURE_PAD)

    @pytest.mark.error_handling
    def test_unknown_token(self, temp_directory):
        """Test that G9 is a parse error"""
        path = _write_lines(temp_directory / "l.txt", ["G0", "G9"])
        with pytest.raises(sg.ParseError, match="G9") as info:
            ingest.load_labels(path)
        assert info.value.line == 2

    @pytest.mark.error_handling
    def test_empty_file(self, temp_directory):
        """Test that an empty label file is invalid"""
        path = temp_directory / "l.txt"
        path.write_text("")
        with pytest.raises(sg.ValidationError, match="empty"):
            ingest.load_labels(path)

    def test_profile_for_task(self):
        """Test the simulator behind each task id"""
        for task in ("simple", "horizontal_mattress", "vertical_mattress", "running"):
            assert profile_for_task(task) is sg.TaskProfile.SUTURE_PAD
        assert profile_for_task("fascia") is sg.TaskProfile.FASCIA
        assert profile_for_task("knot_board") is sg.TaskProfile.SUTURE_PAD
        assert sg.TaskProfile.FASCIA.allows(sg.GestureLabel.G7)
        assert not sg.TaskProfile.SUTURE_PAD.allows(sg.GestureLabel.G7)

    def test_meta_without_fps(self, temp_directory):
        """Test the assumed frame rate"""
        path = temp_directory / "meta.json"
        path.write_text(json.dumps({"width": 4, "height": 3, "depth_scale": 0.001}))
        meta = ingest.load_meta(path)
        assert (meta.fps, meta.fps_assumed) == (30.0, True)
        path.write_text(json.dumps({"width": 4, "height": 3, "depth_scale": 0.001, "fps": 15}))
        assert ingest.load_meta(path).fps == 15.0


@pytest.mark.ingest
class TestManifest:
    """Test group manifests"""

    def test_relative_paths_resolve(self, participant_dir):
        """Test that entry paths resolve against the manifest directory"""
        root = participant_dir.parent
        path = root / "manifest.json"
        path.write_text(
            json.dumps(
                [
                    {
                        "participant": "P01",
                        "group": "expert",
                        "task": "fascia",
                        "depth": "P01/depth",
                        "detections": "P01/detections.jsonl",
                    }
                ]
            )
        )
        manifest = ingest.load_manifest(path)
        (entry,) = manifest
        assert entry.group is sg.Group.EXPERT
        assert entry.depth_dir == root / "P01" / "depth"
        assert entry.task_profile is sg.TaskProfile.FASCIA
        assert manifest.tasks == ("fascia",)

    def test_write_then_load(self, temp_directory):
        """Test that a written manifest loads back"""
        entries = [
            sg.ManifestEntry("R01", sg.Group.RESIDENT, "simple"),
            sg.ManifestEntry("E01", sg.Group.EXPERT, "simple", profile=sg.TaskProfile.FASCIA),
        ]
        path = ingest.write_manifest(temp_directory / "m.json", entries)
        loaded = ingest.load_manifest(path)
        assert [e.participant_id for e in loaded] == ["R01", "E01"]
        assert loaded.entries[1].profile is sg.TaskProfile.FASCIA

    @pytest.mark.error_handling
    def test_duplicate_participant(self, temp_directory):
        """Test that a participant appears once per task and group"""
        path = temp_directory / "m.json"
        item = {"participant": "E01", "group": "Expert", "task": "simple"}
        path.write_text(json.dumps([item, item]))
        with pytest.raises(sg.ValidationError, match="duplicate"):
            ingest.load_manifest(path)

    @pytest.mark.error_handling
    def test_missing_path(self, temp_directory):
        """Test that referenced paths must exist unless checks are off"""
        path = temp_directory / "m.json"
        path.write_text(json.dumps([{"participant": "E01", "group": "Expert", "task": "t", "depth": "nowhere"}]))
        with pytest.raises(sg.ValidationError, match="does not exist"):
            ingest.load_manifest(path)
        assert len(ingest.load_manifest(path, check_paths=False)) == 1

    @pytest.mark.error_handling
    @pytest.mark.parametrize(
        "payload, error",
        [
            ({"participant": "E01"}, sg.ParseError),
            ([{"participant": "E01", "group": "Novice", "task": "t"}], sg.ValidationError),
            ([{"participant": "", "group": "Expert", "task": "t"}], sg.ValidationError),
            ([7], sg.ParseError),
        ],
    )
    def test_bad_entries(self, temp_directory, payload, error):
        """Test malformed manifests"""
        path = temp_directory / "m.json"
        path.write_text(json.dumps(payload))
        with pytest.raises(error):
            ingest.load_manifest(path)


@pytest.mark.ingest
class TestGroupValues:
    """Test expert/resident value files"""

    def test_load(self, temp_directory):
        """Test a well-formed values file"""
        path = temp_directory / "v.json"
        path.write_text(json.dumps({"expert": [1, 2.5], "resident": [3]}))
        assert ingest.load_group_values(path) == ([1.0, 2.5], [3.0])

    @pytest.mark.error_handling
    @pytest.mark.parametrize(
        "payload",
        [[1, 2], {"expert": [1]}, {"expert": [1, "x"], "resident": [2]}, {"expert": 1, "resident": [2]}],
    )
    def test_bad_shape(self, temp_directory, payload):
        """Test that only two numeric lists are accepted"""
        path = temp_directory / "v.json"
        path.write_text(json.dumps(payload))
        with pytest.raises(sg.ParseError):
            ingest.load_group_values(path)
