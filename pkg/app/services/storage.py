"""
Record storage - swappable backends for run batches
Supports: File (default, one text file per batch), In-Memory (tests)

Both backends share one line-oriented text codec, so a batch stored in
memory is byte-identical to the file written for it.
"""

import fnmatch
import logging
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from app.core.exceptions import ConfigurationError
from app.core.harness import EpisodeEnd, PairingMode, RunBatch, RunRecord

logger = logging.getLogger(__name__)

FORMAT_HEADER = "# rleval-records v1"
RECORD_SUFFIX = ".records"


# ========== Text codec ==========

def _floats(values) -> str:
    return ",".join(repr(float(v)) for v in values)


def _parse_floats(line: str) -> np.ndarray:
    line = line.strip()
    if not line:
        return np.empty(0)
    return np.array([float(v) for v in line.split(",")], dtype=float)


def encode_batch(batch: RunBatch) -> str:
    """Serialize a batch to the canonical text format"""
    lines = [
        FORMAT_HEADER,
        f"# fingerprint: {batch.fingerprint}",
        f"# env: {batch.env_id}",
        f"# algorithm: {batch.algorithm}",
        f"# base_seed: {batch.base_seed}",
        f"# pairing: {PairingMode(batch.pairing).value}",
        f"# step_budget: {batch.step_budget}",
        f"# n_runs: {len(batch.records)}",
    ]
    for record in batch.records:
        lines.append(
            f"@run {record.run_index} env_seed={record.env_seed} "
            f"agent_seed={record.agent_seed} episodes={record.episode_count}"
        )
        lines.append("@episodes " + ",".join(
            f"{start}:{EpisodeEnd(end).value}"
            for start, end in zip(record.episode_starts, record.episode_ends)
        ))
        lines.append(_floats(record.per_step_return))
        if record.eval_steps is not None:
            lines.append("@eval " + ",".join(str(int(s)) for s in record.eval_steps))
            lines.append(_floats(record.eval_returns))
    return "\n".join(lines) + "\n"


def decode_batch(text: str) -> RunBatch:
    """
    Parse the canonical text format

    Raises:
        ConfigurationError: not a record file, or a malformed one
    """
    lines = text.splitlines()
    if not lines or lines[0].strip() != FORMAT_HEADER:
        raise ConfigurationError("not an rleval record file")

    header: Dict[str, str] = {}
    i = 1
    while i < len(lines) and lines[i].startswith("#"):
        key, _, value = lines[i][1:].partition(":")
        header[key.strip()] = value.strip()
        i += 1

    try:
        fingerprint = header["fingerprint"]
        pairing = PairingMode(header["pairing"])
        base_seed = int(header["base_seed"])
        step_budget = int(header["step_budget"])
        n_runs = int(header["n_runs"])
    except (KeyError, ValueError) as e:
        raise ConfigurationError(f"record file header is incomplete or invalid: {e}")

    records: List[RunRecord] = []
    while i < len(lines):
        if not lines[i].startswith("@run "):
            raise ConfigurationError(f"expected @run at line {i + 1}")
        fields = lines[i].split()
        attrs = dict(f.split("=", 1) for f in fields[2:])
        episodes = lines[i + 1].split(" ", 1)[1] if " " in lines[i + 1] else ""
        starts, ends = [], []
        for item in filter(None, episodes.split(",")):
            start, kind = item.split(":")
            starts.append(int(start))
            ends.append(EpisodeEnd(kind))
        record = RunRecord(
            per_step_return=_parse_floats(lines[i + 2]),
            episode_starts=np.asarray(starts, dtype=np.int64),
            episode_ends=ends,
            run_index=int(fields[1]),
            base_seed=base_seed,
            pairing=pairing,
            env_seed=attrs["env_seed"],
            agent_seed=attrs["agent_seed"],
            fingerprint=fingerprint,
        )
        i += 3
        if i < len(lines) and lines[i].startswith("@eval"):
            steps = lines[i][len("@eval"):].strip()
            record.eval_steps = np.array([int(s) for s in steps.split(",")] if steps else [], dtype=np.int64)
            record.eval_returns = _parse_floats(lines[i + 1])
            i += 2
        if record.step_budget != step_budget:
            raise ConfigurationError(f"run {record.run_index} has {record.step_budget} steps, expected {step_budget}")
        records.append(record)

    if len(records) != n_runs:
        raise ConfigurationError(f"record file declares {n_runs} runs but holds {len(records)}")

    return RunBatch(
        fingerprint=fingerprint,
        env_id=header.get("env", ""),
        algorithm=header.get("algorithm", ""),
        base_seed=base_seed,
        pairing=pairing,
        step_budget=step_budget,
        records=records,
    )


# ========== Backends ==========

class BaseRecordStore(ABC):
    """
    Abstract record store

    Keys name batches (e.g. "esarsa-<fingerprint>"); values are RunBatch.
    """

    @abstractmethod
    def save(self, key: str, batch: RunBatch) -> str:
        """Store a batch and return where it went"""
        pass

    @abstractmethod
    def load(self, key: str) -> RunBatch:
        """
        Raises:
            KeyError: no batch under key
        """
        pass

    @abstractmethod
    def exists(self, key: str) -> bool:
        pass

    @abstractmethod
    def delete(self, key: str) -> bool:
        pass

    @abstractmethod
    def keys(self, pattern: str = "*") -> List[str]:
        """Keys matching a shell-style pattern, sorted"""
        pass


class InMemoryRecordStore(BaseRecordStore):
    """
    In-memory store for testing

    WARNING: data is lost when the process exits
    """

    def __init__(self):
        self._store: Dict[str, str] = {}

    def save(self, key: str, batch: RunBatch) -> str:
        self._store[key] = encode_batch(batch)
        return f"memory://{key}"

    def load(self, key: str) -> RunBatch:
        if key not in self._store:
            raise KeyError(key)
        return decode_batch(self._store[key])

    def text(self, key: str) -> str:
        return self._store[key]

    def exists(self, key: str) -> bool:
        return key in self._store

    def delete(self, key: str) -> bool:
        return self._store.pop(key, None) is not None

    def keys(self, pattern: str = "*") -> List[str]:
        return sorted(k for k in self._store if fnmatch.fnmatch(k, pattern))


class FileRecordStore(BaseRecordStore):
    """Directory of <key>.records files"""

    def __init__(self, root: str):
        self.root = Path(root)
        try:
            self.root.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ConfigurationError(f"cannot create output directory {self.root}: {e}")

    def path(self, key: str) -> Path:
        return self.root / f"{key}{RECORD_SUFFIX}"

    def save(self, key: str, batch: RunBatch) -> str:
        path = self.path(key)
        try:
            path.write_text(encode_batch(batch), encoding="utf-8")
        except OSError as e:
            raise ConfigurationError(f"cannot write {path}: {e}")
        logger.info(f"Saved {len(batch)} runs to {path}")
        return str(path)

    def load(self, key: str) -> RunBatch:
        path = self.path(key)
        if not path.exists():
            raise KeyError(key)
        return decode_batch(path.read_text(encoding="utf-8"))

    def exists(self, key: str) -> bool:
        return self.path(key).exists()

    def delete(self, key: str) -> bool:
        path = self.path(key)
        if path.exists():
            path.unlink()
            return True
        return False

    def keys(self, pattern: str = "*") -> List[str]:
        return sorted(
            p.name[:-len(RECORD_SUFFIX)]
            for p in self.root.glob(f"*{RECORD_SUFFIX}")
            if fnmatch.fnmatch(p.name[:-len(RECORD_SUFFIX)], pattern)
        )


def load_batch_file(path: str) -> RunBatch:
    """Read one record file by path"""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(f"cannot read {path}: {e}")
    return decode_batch(text)


class RecordStoreFactory:
    """Factory for creating record stores"""

    @staticmethod
    def create_store(storage_type: str, config: Optional[Dict[str, Any]] = None) -> BaseRecordStore:
        """
        Create a record store

        Args:
            storage_type: 'file' or 'memory'
            config: {'root': <directory>} for the file store

        Returns:
            Initialized store
        """
        config = config or {}
        if storage_type == "memory":
            return InMemoryRecordStore()
        elif storage_type == "file":
            return FileRecordStore(config.get("root", "results"))
        else:
            raise ConfigurationError(f"Unknown storage type: {storage_type}")
