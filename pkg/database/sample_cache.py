"""
样本缓存
目录结构：{key}/{chain}_{index}.bin 与 {key}/meta.json
二进制格式：8 字节 "LGSAMP01"，小端 u32 N，f64 beta，N 个小端 f64 特征值
"""
import hashlib
import json
import struct
from pathlib import Path
from typing import Optional, Union

import numpy as np

from models.ensemble import EnsembleConfig, Sample, SampleSet
from utils.exceptions import CacheCorruptionError
from utils.logger import get_logger

logger = get_logger(__name__)

MAGIC = b"LGSAMP01"
HEADER = struct.Struct("<8sId")


def encode_sample(sample: Sample, beta: float) -> bytes:
    """按缓存格式编码一个样本"""
    lambdas = np.asarray(sample.lambdas, dtype="<f8")
    return HEADER.pack(MAGIC, len(lambdas), float(beta)) + lambdas.tobytes()


def decode_sample(data: bytes, seed: int, chain_id: int, sweep_index: int) -> "tuple[float, Sample]":
    """
    解码缓存文件

    Returns:
        (beta, Sample)
    """
    if len(data) < HEADER.size:
        raise CacheCorruptionError(f"缓存文件过短: {len(data)} 字节")
    magic, n, beta = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CacheCorruptionError(f"缓存文件头错误: {magic!r}")
    expected = HEADER.size + 8 * n
    if len(data) != expected:
        raise CacheCorruptionError(f"缓存文件长度 {len(data)} 与 N={n} 不符（应为 {expected}）")
    lambdas = np.frombuffer(data, dtype="<f8", count=n, offset=HEADER.size).astype(float)
    return beta, Sample(lambdas, seed, chain_id, sweep_index)


class SampleCache:
    """按 (config, 链数, 样本数, seed) 缓存 SampleSet"""

    def __init__(self, root: Union[str, Path]):
        self.root = Path(root)

    @staticmethod
    def key(config: EnsembleConfig, n_chains: int, n_samples: int, seed: int) -> str:
        payload = json.dumps(
            {
                "config": json.loads(config.canonical_json()),
                "chains": int(n_chains),
                "samples": int(n_samples),
                "seed": int(seed),
            },
            sort_keys=True,
            separators=(",", ":"),
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def path_for(self, config: EnsembleConfig, n_chains: int, n_samples: int, seed: int) -> Path:
        return self.root / self.key(config, n_chains, n_samples, seed)

    def load(self, config: EnsembleConfig, n_chains: int, n_samples: int, seed: int) -> Optional[SampleSet]:
        """
        读取缓存

        Returns:
            SampleSet；未命中返回 None
        """
        directory = self.path_for(config, n_chains, n_samples, seed)
        meta_path = directory / "meta.json"
        if not meta_path.exists():
            logger.debug(f"缓存未命中: {directory.name[:12]}")
            return None

        try:
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise CacheCorruptionError(f"meta.json 无法解析: {e}") from e

        samples = []
        for entry in meta.get("samples", []):
            path = directory / f"{entry['chain_id']}_{entry['index']}.bin"
            if not path.exists():
                raise CacheCorruptionError(f"缺少缓存文件: {path}")
            beta, sample = decode_sample(path.read_bytes(), int(meta["seed"]), entry["chain_id"], entry["sweep_index"])
            if beta != config.beta or sample.N != config.N:
                raise CacheCorruptionError(f"缓存文件 {path.name} 的 beta/N 与配置不符")
            samples.append(sample)

        if len(samples) != n_chains * n_samples:
            raise CacheCorruptionError(f"缓存样本数 {len(samples)} 与期望 {n_chains * n_samples} 不符")

        logger.info(f"缓存命中: {directory} ({len(samples)} 个样本)")
        return SampleSet(
            config=config,
            samples=samples,
            rng_stream_ids=list(meta.get("rng_stream_ids", [])),
            diagnostics=dict(meta.get("diagnostics", {})),
        )

    def store(self, sample_set: SampleSet, n_chains: int, n_samples: int, seed: int) -> Path:
        """写入缓存，返回目录"""
        config = sample_set.config
        directory = self.path_for(config, n_chains, n_samples, seed)
        directory.mkdir(parents=True, exist_ok=True)

        entries = []
        counters: dict = {}
        for sample in sample_set.samples:
            index = counters.get(sample.chain_id, 0)
            counters[sample.chain_id] = index + 1
            (directory / f"{sample.chain_id}_{index}.bin").write_bytes(encode_sample(sample, config.beta))
            entries.append({"chain_id": sample.chain_id, "index": index, "sweep_index": sample.sweep_index})

        meta = {
            "config": json.loads(config.canonical_json()),
            "seed": int(seed),
            "chains": int(n_chains),
            "samples_per_chain": int(n_samples),
            "rng_stream_ids": list(sample_set.rng_stream_ids),
            "diagnostics": sample_set.diagnostics,
            "samples": entries,
        }
        # meta.json 最后写入，作为缓存完整的标志
        (directory / "meta.json").write_text(json.dumps(meta, indent=2, ensure_ascii=False), encoding="utf-8")
        logger.info(f"样本已缓存: {directory}")
        return directory
