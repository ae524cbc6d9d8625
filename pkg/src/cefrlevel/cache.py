"""On-disk cache of transformed feature matrices.

Entries are keyed by the pipeline fingerprint and a hash of the essays, so a
changed layout or changed data never hits a stale entry.
"""

from __future__ import annotations

import hashlib
import io
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .util import atomic_write_bytes


def dataset_hash(essays) -> str:
    h = hashlib.sha256()
    for e in essays:
        for part in (e.id, e.text):
            b = part.encode("utf-8")
            h.update(len(b).to_bytes(8, "little"))
            h.update(b)
    return h.hexdigest()


class FeatureCache:
    def __init__(self, directory):
        self.directory = Path(directory)

    def path(self, fingerprint: str, essays) -> Path:
        return self.directory / f"{fingerprint[:16]}-{dataset_hash(essays)[:16]}.npz"

    def get(self, fingerprint: str, essays) -> sp.csr_matrix | None:
        p = self.path(fingerprint, essays)
        if not p.exists():
            return None
        try:
            return sp.load_npz(p).tocsr()
        except (OSError, ValueError):
            return None  # unreadable entry is treated as a miss

    def put(self, fingerprint: str, essays, X) -> None:
        buf = io.BytesIO()
        sp.save_npz(buf, sp.csr_matrix(X, dtype=np.float64), compressed=True)
        atomic_write_bytes(self.path(fingerprint, essays), buf.getvalue())
