"""
Pytest configuration and fixtures for skillgauge tests.

This module provides common fixtures and configuration for all test modules.
"""

import json
import shutil
import tempfile
from pathlib import Path

import numpy as np
import pytest

import skillgauge as sg
from skillgauge.ingest import dump_detections, write_depth_sequence, write_intrinsics, write_labels
from skillgauge.synthetic import CohortOptions, generate_cohort


@pytest.fixture
def temp_directory():
    """Create a temporary directory for testing."""
    temp_dir = tempfile.mkdtemp()
    yield Path(temp_dir)

    # Cleanup
    shutil.rmtree(temp_dir, ignore_errors=True)


@pytest.fixture
def rng():
    """Seeded generator for property loops."""
    return np.random.default_rng(20240917)


@pytest.fixture
def vga_intrinsics():
    """640x480 camera with the principal point at the image center."""
    return sg.CameraIntrinsics(fx=500.0, fy=500.0, cx=320.0, cy=240.0, depth_scale=0.001)


@pytest.fixture
def small_intrinsics():
    """Intrinsics matching the 32x24 frames built by ``make_frames``."""
    return sg.CameraIntrinsics(fx=40.0, fy=40.0, cx=16.0, cy=12.0, depth_scale=0.001)


@pytest.fixture
def make_frames():
    """Build DepthFrames of a constant depth, 32x24 pixels."""

    def _make(count, depth=1000, width=32, height=24):
        return [
            sg.DepthFrame(index=i, values=np.full((height, width), depth, dtype=np.uint16))
            for i in range(count)
        ]

    return _make


@pytest.fixture
def make_trajectory():
    """Build a left-hand Trajectory3D from points; frames default to 0..n-1."""

    def _make(points, frames=None, gaps=(), hand=sg.ObjectClass.LEFT_HAND):
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        if frames is None:
            frames = np.arange(len(points))
        return sg.Trajectory3D(hand, np.asarray(frames, dtype=np.int64), points, tuple(gaps))

    return _make


@pytest.fixture
def box_detection():
    """Detection factory with a default confidence of 0.9."""

    def _make(frame, box, class_id=sg.ObjectClass.LEFT_HAND, confidence=0.9):
        return sg.Detection(frame, class_id, sg.BoundingBox(*box), confidence)

    return _make


@pytest.fixture
def participant_dir(temp_directory, small_intrinsics):
    """A single participant recording on disk: 4 frames, both hands, labels."""
    root = temp_directory / "P01"
    frames = [np.full((24, 32), 1000, dtype=np.uint16) for _ in range(4)]
    write_depth_sequence(root / "depth", frames, depth_scale=0.001, fps=30.0)
    dets = []
    for t in range(4):
        dets.append(sg.Detection(t, sg.ObjectClass.LEFT_HAND, sg.BoundingBox(4 + t, 8, 8 + t, 12), 0.9))
        dets.append(sg.Detection(t, sg.ObjectClass.RIGHT_HAND, sg.BoundingBox(20, 8, 24, 12), 0.9))
    dump_detections(root / "detections.jsonl", sg.DetectionSet.from_detections(dets))
    write_labels(root / "labels.txt", [sg.GestureLabel.G0, sg.GestureLabel.G0, sg.GestureLabel.G1, sg.GestureLabel.G1])
    write_intrinsics(temp_directory / "intrinsics.json", small_intrinsics)
    return root


@pytest.fixture(scope="session")
def cohort_manifest(tmp_path_factory):
    """Synthetic cohort of 4 experts and 8 residents (shared, read-only)."""
    root = tmp_path_factory.mktemp("cohort")
    return generate_cohort(root, CohortOptions())


@pytest.fixture(scope="session")
def g1_cohort_manifest(tmp_path_factory):
    """Cohort whose groups differ only while performing G1."""
    root = tmp_path_factory.mktemp("cohort_g1")
    return generate_cohort(root, CohortOptions(differ_only=sg.GestureLabel.G1, dropout_frames=()))


# Pytest markers for organizing tests
def pytest_configure(config):
    """Configure pytest markers."""
    for name, help_text in (
        ("unit", "mark test as a unit test"),
        ("integration", "mark test as an integration test"),
        ("slow", "mark test as slow running"),
        ("benchmark", "mark test as a benchmark test"),
        ("error_handling", "mark test as error handling test"),
        ("edge_case", "mark test as edge case test"),
        ("ingest", "mark test as file-format related"),
        ("geometry", "mark test as deprojection/trajectory related"),
        ("motion", "mark test as path-length related"),
        ("detection", "mark test as detection-evaluation related"),
        ("segmentation", "mark test as segmentation-evaluation related"),
        ("stats", "mark test as statistics related"),
        ("viz", "mark test as visualization related"),
        ("cli", "mark test as command-line related"),
    ):
        config.addinivalue_line("markers", f"{name}: {help_text}")


# Custom assertions for better test readability
class SkillGaugeAssertions:
    """Custom assertions for skillgauge testing."""

    @staticmethod
    def assert_percent(value):
        """Assert a score is a percentage."""
        assert 0.0 <= value <= 100.0, f"{value} is not a percentage"

    @staticmethod
    def assert_report(path, command):
        """Assert a report file exists, parses and names its command."""
        path = Path(path)
        assert path.is_file()
        text = path.read_text(encoding="utf-8")
        assert text.endswith("\n")
        data = json.loads(text)
        assert data["command"] == command
        assert data["schema_version"] == 1
        assert data["tool_version"] == sg.__version__
        return data


@pytest.fixture
def assertions():
    """Provide custom assertions for tests."""
    return SkillGaugeAssertions()

