"""样本缓存"""
import json

import numpy as np
import pytest

from database.sample_cache import HEADER, MAGIC, SampleCache, decode_sample, encode_sample
from models.ensemble import EnsembleConfig, Sample
from services.sampler import run_chains
from utils.exceptions import CacheCorruptionError


@pytest.fixture
def config(quadratic):
    return EnsembleConfig(beta=2.0, N=8, potential=quadratic)


def test_encoding_layout():
    sample = Sample(np.array([-1.0, 0.5, 2.0]), 3, 1, 4)
    data = encode_sample(sample, 2.0)
    assert data[:8] == MAGIC
    assert len(data) == HEADER.size + 3 * 8
    beta, decoded = decode_sample(data, 3, 1, 4)
    assert beta == 2.0
    np.testing.assert_array_equal(decoded.lambdas, sample.lambdas)


def test_decode_rejects_bad_magic():
    data = bytearray(encode_sample(Sample(np.array([0.0, 1.0]), 0, 0, 0), 1.0))
    data[:8] = b"NOTMAGIC"
    with pytest.raises(CacheCorruptionError):
        decode_sample(bytes(data), 0, 0, 0)


def test_decode_rejects_truncated_file():
    data = encode_sample(Sample(np.array([0.0, 1.0]), 0, 0, 0), 1.0)
    with pytest.raises(CacheCorruptionError):
        decode_sample(data[:-4], 0, 0, 0)


def test_store_and_load(tmp_path, config):
    cache = SampleCache(tmp_path)
    sample_set = run_chains(config, 2, 5, seed=9, cache=cache)
    directory = cache.path_for(config, 2, 5, 9)
    assert (directory / "meta.json").exists()
    assert len(list(directory.glob("*.bin"))) == 10

    loaded = cache.load(config, 2, 5, 9)
    np.testing.assert_array_equal(loaded.matrix(), sample_set.matrix())
    assert [s.sweep_index for s in loaded.samples] == [s.sweep_index for s in sample_set.samples]
    meta = json.loads((directory / "meta.json").read_text(encoding="utf-8"))
    assert meta["seed"] == 9


def test_cache_miss_for_other_seed(tmp_path, config):
    cache = SampleCache(tmp_path)
    run_chains(config, 1, 3, seed=1, cache=cache)
    assert cache.load(config, 1, 3, 2) is None
    assert cache.key(config, 1, 3, 1) != cache.key(config, 1, 3, 2)


def test_cache_hit_skips_sampling(tmp_path, config, monkeypatch):
    import services.sampler.chains as chains

    cache = SampleCache(tmp_path)
    first = run_chains(config, 2, 4, seed=5, cache=cache)

    def fail(*args, **kwargs):
        raise AssertionError("不应重新采样")

    monkeypatch.setattr(chains, "_run_one_chain", fail)
    second = run_chains(config, 2, 4, seed=5, cache=cache)
    np.testing.assert_array_equal(first.matrix(), second.matrix())


def test_corrupted_cache_file(tmp_path, config):
    cache = SampleCache(tmp_path)
    run_chains(config, 1, 2, seed=3, cache=cache)
    path = cache.path_for(config, 1, 2, 3) / "0_0.bin"
    data = bytearray(path.read_bytes())
    data[0:8] = b"XXXXXXXX"
    path.write_bytes(bytes(data))
    with pytest.raises(CacheCorruptionError):
        cache.load(config, 1, 2, 3)
