import numpy as np
import pytest

from coho import autodiff as ad
from coho.checkpoint import (file_hash, load_checkpoint, save_checkpoint)
from coho.errors import CompatibilityError, ParseError


def make_params(rng):
    return {"a.W": ad.Tensor(rng.standard_normal((3, 4)).astype(np.float32),
                             requires_grad=True),
            "a.b": ad.Tensor(np.zeros(4, np.float32), requires_grad=True)}


class TestCheckpoint:
    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        params = make_params(rng)
        path = tmp_path / "m.ckpt"
        save_checkpoint(path, "bvae", {"D_q": 4}, params, extras={"seed": 0})
        manifest, loaded = load_checkpoint(path, "bvae")
        assert manifest["hyperparameters"] == {"D_q": 4}
        assert manifest["extras"] == {"seed": 0}
        for k in params:
            assert np.array_equal(loaded[k].data, params[k].data)
            assert loaded[k].requires_grad

    def test_wrong_kind_rejected(self, tmp_path):
        path = tmp_path / "m.ckpt"
        save_checkpoint(path, "bvae", {}, make_params(np.random.default_rng(0)))
        with pytest.raises(CompatibilityError):
            load_checkpoint(path, "gmae")

    def test_not_a_checkpoint(self, tmp_path):
        path = tmp_path / "junk.ckpt"
        path.write_bytes(b"hello world")
        with pytest.raises(ParseError):
            load_checkpoint(path)

    def test_file_hash_changes_with_content(self, tmp_path):
        p1 = tmp_path / "a.ckpt"
        p2 = tmp_path / "b.ckpt"
        rng = np.random.default_rng(1)
        save_checkpoint(p1, "bvae", {}, make_params(rng))
        save_checkpoint(p2, "bvae", {}, make_params(rng))
        assert file_hash(p1) != file_hash(p2)
        assert file_hash(p1) == file_hash(p1)

    def test_deterministic_bytes_for_same_params(self, tmp_path):
        params = make_params(np.random.default_rng(2))
        p1 = tmp_path / "a.ckpt"
        p2 = tmp_path / "b.ckpt"
        save_checkpoint(p1, "bvae", {"x": 1}, params)
        save_checkpoint(p2, "bvae", {"x": 1}, params)
        assert file_hash(p1) == file_hash(p2)
