"""Append-only sample cache keyed by (spec hash, input hash, seed, count).

Batches are stored as ``.npy`` files next to a JSON-lines index that records
each file's SHA-256. Writers take an advisory ``fcntl`` lock on the index.
"""

from __future__ import annotations

import contextlib
import fcntl
import hashlib
import io
import json
import os
from pathlib import Path

import numpy as np

from .mechanisms import MechanismSpec, Sampler, _seed_words, input_digest, sample_batch


class IntegrityError(RuntimeError):
    pass


def _seed_tag(seed) -> str:
    return "-".join(str(w) for w in _seed_words(seed))


def _encode(arr: np.ndarray) -> bytes:
    buf = io.BytesIO()
    np.save(buf, np.ascontiguousarray(arr), allow_pickle=False)
    return buf.getvalue()


class SampleCache:
    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.index_path = self.root / "index.jsonl"
        self.index_path.touch(exist_ok=True)

    @contextlib.contextmanager
    def _locked(self, exclusive: bool):
        with open(self.index_path, "a+") as fh:
            fcntl.flock(fh, fcntl.LOCK_EX if exclusive else fcntl.LOCK_SH)
            try:
                yield fh
            finally:
                fcntl.flock(fh, fcntl.LOCK_UN)

    def _read_index(self) -> dict[str, str]:
        out: dict[str, str] = {}
        for line in self.index_path.read_text().splitlines():
            if not line.strip():
                continue
            rec = json.loads(line)
            prev = out.get(rec["key"])
            if prev is not None and prev != rec["sha256"]:
                raise IntegrityError(f"index lists two contents for {rec['key']}")
            out[rec["key"]] = rec["sha256"]
        return out

    @staticmethod
    def key(spec: MechanismSpec, x, n: int, seed) -> str:
        return f"{spec.digest()}/{input_digest(x)}/{_seed_tag(seed)}_{int(n)}"

    def path(self, key: str) -> Path:
        return self.root / (key + ".npy")

    def read(self, key: str) -> np.ndarray | None:
        with self._locked(False):
            expected = self._read_index().get(key)
        p = self.path(key)
        if expected is None:
            if p.exists():
                raise IntegrityError(f"{p} is not in the cache index")
            return None
        if not p.exists():
            raise IntegrityError(f"{p} is indexed but missing")
        data = p.read_bytes()
        if hashlib.sha256(data).hexdigest() != expected:
            raise IntegrityError(f"{p} does not match its recorded checksum")
        return np.load(io.BytesIO(data), allow_pickle=False)

    def write(self, key: str, arr: np.ndarray) -> Path:
        data = _encode(arr)
        digest = hashlib.sha256(data).hexdigest()
        p = self.path(key)
        with self._locked(True) as fh:
            known = self._read_index().get(key)
            if known is not None:
                if known != digest:
                    raise IntegrityError(f"cache collision for {key}: stored content differs")
                if not p.exists() or hashlib.sha256(p.read_bytes()).hexdigest() != known:
                    raise IntegrityError(f"{p} does not match its recorded checksum")
                return p
            p.parent.mkdir(parents=True, exist_ok=True)
            tmp = p.with_suffix(".tmp")
            tmp.write_bytes(data)
            os.replace(tmp, p)
            fh.write(json.dumps({"key": key, "sha256": digest, "bytes": len(data)}, sort_keys=True) + "\n")
            fh.flush()
        return p

    def get_or_draw(self, spec: MechanismSpec, x, n: int, seed) -> np.ndarray:
        key = self.key(spec, x, n, seed)
        arr = self.read(key)
        if arr is None:
            arr = sample_batch(spec, x, n, seed)
            self.write(key, arr)
        return arr

    def sampler(self, spec: MechanismSpec) -> Sampler:
        """A blackbox handle whose draws go through the cache."""
        frozen = MechanismSpec.from_dict(spec.to_dict())
        return Sampler(lambda x, n, seed: self.get_or_draw(frozen, x, n, seed), frozen.input_dim, frozen.digest())
