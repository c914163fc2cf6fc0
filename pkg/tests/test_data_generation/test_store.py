import json

import numpy as np
import pytest

from src.dataset.pts import (
    export_pts_sidecars,
    format_pts,
    import_pts_directory,
    landmark_box,
    parse_pts,
    read_pts,
    write_pts,
)
from src.dataset.store import DatasetStore, ManifestError, read_manifest, write_manifest
from src.models.annotation import ManifestStyle, Split


class TestManifestIO:
    def test_round_trip(self, sample_manifest, tmp_path):
        path = write_manifest(sample_manifest, tmp_path / "m" / "manifest.json")
        back = read_manifest(path)
        assert back == sample_manifest
        assert back.root == tmp_path / "m"
        assert back.image_path(back.records[0]) == tmp_path / "m" / "images" / "train_00000.png"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ManifestError, match="not found"):
            read_manifest(tmp_path / "nope.json")

    def test_bad_json(self, tmp_path):
        (tmp_path / "manifest.json").write_text("{not json")
        with pytest.raises(ManifestError, match="not valid JSON"):
            read_manifest(tmp_path / "manifest.json")

    def test_missing_field_is_named(self, sample_manifest, tmp_path):
        payload = sample_manifest.model_dump(mode="json")
        del payload["records"][0]["box"]
        (tmp_path / "manifest.json").write_text(json.dumps(payload))
        with pytest.raises(ManifestError, match="records.0.box"):
            read_manifest(tmp_path / "manifest.json")

    def test_mixed_landmark_counts_rejected(self, sample_manifest, tmp_path):
        payload = sample_manifest.model_dump(mode="json")
        payload["num_landmarks"] = 4
        (tmp_path / "manifest.json").write_text(json.dumps(payload))
        with pytest.raises(ManifestError, match="K=4"):
            read_manifest(tmp_path / "manifest.json")


class TestDatasetStore:
    def test_layout(self, tmp_path):
        store = DatasetStore(tmp_path)
        assert store.manifest_dir("gray", "test") == tmp_path / "gray" / "test"
        assert store.manifest_dir(ManifestStyle.SYNTHETIC_MIXED, Split.TRAIN) == tmp_path / "original" / "train"

    def test_write_then_read(self, sample_manifest, tmp_path):
        store = DatasetStore(tmp_path)
        assert not store.exists("original", "train")
        store.write(sample_manifest)
        assert store.exists("original", "train")
        assert store.read("original", "train") == sample_manifest
        assert store.list_manifests() == [("original", "train")]

    def test_manifest_info(self, sample_manifest, tmp_path):
        store = DatasetStore(tmp_path)
        store.write(sample_manifest)
        info = store.get_manifest_info("original", "train")
        assert info == {
            "name": "sample",
            "style": "original",
            "split": "train",
            "num_landmarks": 5,
            "record_count": 1,
        }

    def test_manifest_info_missing_is_empty(self, tmp_path):
        assert DatasetStore(tmp_path).get_manifest_info("light", "test") == {}


class TestPts:
    def test_parse(self):
        text = "version: 1\nn_points: 2\n{\n1.5 2.0\n3 4\n}\n"
        np.testing.assert_array_equal(parse_pts(text), [[1.5, 2.0], [3.0, 4.0]])

    def test_write_then_read(self, tmp_path):
        points = np.array([[0.1, 0.2], [10.25, 7.0], [3.0, 1e-3]])
        write_pts(points, tmp_path / "a.pts")
        np.testing.assert_array_equal(read_pts(tmp_path / "a.pts"), points)

    def test_format_header(self):
        assert format_pts(np.zeros((3, 2))).splitlines()[:3] == ["version: 1", "n_points: 3", "{"]

    def test_count_mismatch(self):
        with pytest.raises(ManifestError, match="declares 3 points"):
            parse_pts("version: 1\nn_points: 3\n{\n1 2\n}\n")

    def test_missing_header(self):
        with pytest.raises(ManifestError, match="n_points"):
            parse_pts("{\n1 2\n}\n")

    def test_malformed_coordinate(self):
        with pytest.raises(ManifestError, match="malformed"):
            parse_pts("n_points: 1\n{\n1 x\n}\n")


def _annotated_dir(tmp_path, sidecars):
    for stem, points in sidecars.items():
        (tmp_path / f"{stem}.png").write_bytes(b"")
        if points is not None:
            write_pts(np.asarray(points, dtype=np.float64), tmp_path / f"{stem}.pts")
    return tmp_path


class TestPtsImport:
    def test_builds_manifest_from_sidecars(self, tmp_path):
        image_dir = _annotated_dir(
            tmp_path, {"b": [[10, 20], [30, 40], [20, 60]], "a": [[1, 1], [5, 9], [3, 4]]}
        )
        manifest = import_pts_directory(image_dir, "real", "test", margin=0.0)
        assert [r.record_id for r in manifest.records] == ["a", "b"]
        assert manifest.split == Split.TEST
        assert manifest.style == ManifestStyle.ORIGINAL
        assert manifest.num_landmarks == 3
        assert manifest.records[1].box == (10.0, 20.0, 30.0, 60.0)
        assert manifest.image_path(manifest.records[0]) == image_dir / "a.png"
        assert read_manifest(image_dir / "manifest.json") == manifest

    def test_images_without_sidecar_are_skipped(self, tmp_path, caplog):
        image_dir = _annotated_dir(tmp_path, {"a": [[1, 1], [5, 9]], "lonely": None})
        manifest = import_pts_directory(image_dir, "real")
        assert len(manifest) == 1
        assert "lonely.png" in caplog.text

    def test_mixed_landmark_counts_fail(self, tmp_path):
        image_dir = _annotated_dir(tmp_path, {"a": [[1, 1], [5, 9]], "b": [[1, 1], [5, 9], [2, 2]]})
        with pytest.raises(ManifestError, match="b.pts has 3 landmarks"):
            import_pts_directory(image_dir, "real")

    def test_no_annotated_images_fails(self, tmp_path):
        with pytest.raises(ManifestError, match="No images"):
            import_pts_directory(_annotated_dir(tmp_path, {"a": None}), "real")

    def test_collinear_landmarks_still_get_a_box(self):
        x1, y1, x2, y2 = landmark_box(np.array([[3.0, 5.0], [9.0, 5.0]]), margin=0.0)
        assert (x1, x2) == (3.0, 9.0)
        assert y1 < 5.0 < y2

    def test_export_writes_sidecars_next_to_images(self, sample_manifest, tmp_path):
        write_manifest(sample_manifest, tmp_path / "manifest.json")
        paths = export_pts_sidecars(sample_manifest)
        assert paths == [tmp_path / "images" / "train_00000.pts"]
        np.testing.assert_array_equal(read_pts(paths[0]), sample_manifest.records[0].annotation.as_array())
