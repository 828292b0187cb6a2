"""Versioned binary checkpoints for MPS states.

NPZ container with explicitly little-endian arrays plus a JSON metadata
record (format version, chain order, accumulated truncation error), so
checkpoints are portable across platforms.
"""

from __future__ import annotations

import json

import numpy as np

from .state import MpsState

FORMAT_VERSION = 1


def save_checkpoint(path, mps: MpsState, extra: dict | None = None) -> None:
    meta = {
        "format": "rydsim-mps",
        "version": FORMAT_VERSION,
        "n_sites": mps.n_sites,
        "center": mps.center,
        "truncation_error": mps.truncation_error,
        "chi_max": mps.chi_max,
        "byteorder": "little",
        "extra": extra or {},
    }
    arrays = {f"tensor_{k:04d}": np.ascontiguousarray(t, dtype="<c16")
              for k, t in enumerate(mps.tensors)}
    arrays["chain_to_site"] = mps.chain_to_site.astype("<i8")
    arrays["meta"] = np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)
    np.savez(path, **arrays)


def load_checkpoint(path) -> tuple[MpsState, dict]:
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"].tobytes()).decode())
        if meta.get("format") != "rydsim-mps":
            raise ValueError(f"{path} is not an MPS checkpoint")
        if meta.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint version {meta.get('version')}")
        tensors = [data[f"tensor_{k:04d}"].astype(np.complex128)
                   for k in range(meta["n_sites"])]
        chain_to_site = data["chain_to_site"].astype(np.int64)
    mps = MpsState(tensors, chain_to_site, center=meta.get("center"),
                   truncation_error=meta.get("truncation_error", 0.0),
                   chi_max=meta.get("chi_max"))
    return mps, meta.get("extra", {})
