import pytest

from src.flows.verify_env import verify_env_setup
from src.utils.utils import atomic_write_text, derive_seed, get_worker_count, make_rng, sha256_tree


class TestSeeds:
    def test_derived_seed_is_stable(self):
        assert derive_seed(0, "discover") == derive_seed(0, "discover")
        assert derive_seed(0, "discover") != derive_seed(1, "discover")
        assert derive_seed(0, "discover") != derive_seed(0, "train-gan")
        assert 0 <= derive_seed(7, "x") < 2**32

    def test_named_rng(self):
        assert make_rng(3, "a").integers(1 << 30) == make_rng(3, "a").integers(1 << 30)


class TestWorkerCount:
    def test_env_value(self, monkeypatch):
        monkeypatch.setenv("SANLITE_THREADS", "3")
        assert get_worker_count() == 3

    @pytest.mark.parametrize("raw", ["zero", "0", "-2"])
    def test_bad_values(self, monkeypatch, raw):
        monkeypatch.setenv("SANLITE_THREADS", raw)
        with pytest.raises(EnvironmentError, match="SANLITE_THREADS"):
            get_worker_count()

    def test_unset_uses_default(self, monkeypatch):
        monkeypatch.delenv("SANLITE_THREADS", raising=False)
        assert get_worker_count(default=2) == 2


class TestFiles:
    def test_tree_hash_tracks_content_and_names(self, tmp_path):
        atomic_write_text(tmp_path / "a" / "x.txt", "1")
        atomic_write_text(tmp_path / "a" / "y.txt", "2")
        first = sha256_tree(tmp_path / "a")
        (tmp_path / "a" / "y.txt").rename(tmp_path / "a" / "z.txt")
        assert sha256_tree(tmp_path / "a") != first

    def test_atomic_write_leaves_no_temp_files(self, tmp_path):
        atomic_write_text(tmp_path / "out.json", "{}")
        assert [p.name for p in tmp_path.iterdir()] == ["out.json"]


class TestVerifyEnv:
    def test_reports_workers(self, monkeypatch, capsys):
        monkeypatch.setenv("SANLITE_THREADS", "2")
        assert verify_env_setup() == 2
        assert "✅ Required packages importable" in capsys.readouterr().out

    def test_bad_worker_setting(self, monkeypatch, capsys):
        monkeypatch.setenv("SANLITE_THREADS", "many")
        with pytest.raises(EnvironmentError):
            verify_env_setup()
        assert "💡" in capsys.readouterr().out
