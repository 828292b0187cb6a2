"""Snapshot generation from quantum states and the detection-error channel.

A snapshot is one projective occupation measurement: an N-bit string in
lattice site order, bit 1 = Rydberg.  Snapshot files carry one JSON header
line followed by one ASCII 0/1 line per shot.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exact import QuantumState
from .mps.state import MpsState
from .seeding import rng


@dataclass(frozen=True)
class Snapshot:
    """Single measurement outcome plus shot metadata."""

    bits: np.ndarray
    lattice: str
    seed: int | None = None
    t_off: float | None = None


@dataclass
class SnapshotSet:
    """Homogeneous collection of snapshots; the currency between engines,
    Monte Carlo and the analysis code."""

    bits: np.ndarray              # (n_shots, N) uint8
    lattice: str
    provenance: dict = field(default_factory=dict)
    t_off: float | None = None

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=np.uint8)
        if self.bits.ndim != 2:
            raise ValueError("snapshot array must be (n_shots, n_sites)")

    def __len__(self) -> int:
        return self.bits.shape[0]

    @property
    def n_sites(self) -> int:
        return self.bits.shape[1]

    def __getitem__(self, k: int) -> Snapshot:
        return Snapshot(self.bits[k], self.lattice, t_off=self.t_off)

    def extend(self, other: "SnapshotSet") -> "SnapshotSet":
        if other.lattice != self.lattice:
            raise ValueError("snapshot sets reference different lattices")
        return SnapshotSet(np.concatenate([self.bits, other.bits]),
                           self.lattice, self.provenance, self.t_off)


def sample_mps(mps: MpsState, n_samples: int, seed: int,
               lattice_label: str = "", return_probabilities: bool = False):
    """Statistically independent snapshots of an MPS wavefunction.

    Implements the sequential collapse: per chain site, form the diagonal of
    the single-site reduced density matrix (p_g, p_e), draw r in [0, 1],
    project onto g if r < p_g else e, and renormalise by the selected
    probability.  Each snapshot occurs with probability |<snapshot|psi>|^2
    (``return_probabilities=True`` also returns the per-shot products of the
    selected probabilities).
    """
    norm = mps.norm()
    if abs(norm - 1.0) > 1e-6:
        raise ValueError(f"MPS norm {norm} deviates from 1")
    mps.canonicalize(0)
    n = mps.n_sites
    mats = [t.reshape(t.shape[0], -1) for t in mps.tensors]
    g = rng(seed)
    raw = g.random((n_samples, n))
    bits = np.zeros((n_samples, n), dtype=np.uint8)
    probs = np.ones(n_samples)
    for shot in range(n_samples):
        w = np.ones(1, dtype=complex)
        for k in range(n):
            a = (w @ mats[k]).reshape(2, -1)
            p_g = float(np.real(np.vdot(a[0], a[0])))
            p_e = float(np.real(np.vdot(a[1], a[1])))
            total = p_g + p_e
            sel = 0 if raw[shot, k] < p_g / total else 1
            p_sel = (p_g if sel == 0 else p_e) / total
            probs[shot] *= p_sel
            w = a[sel] / np.sqrt(p_sel * total)
            bits[shot, mps.chain_to_site[k]] = sel
    out = SnapshotSet(bits, lattice_label, {"engine": "mps-collapse",
                                            "seed": seed})
    if return_probabilities:
        return out, probs
    return out


def sample_dense(state: QuantumState, n_samples: int, seed: int) -> SnapshotSet:
    """Inverse-CDF sampling of the exact |amplitude|^2 distribution (N <= 20)."""
    n = state.n_sites
    if n > 20:
        raise ValueError("dense sampling capped at 20 sites")
    probs = state.probabilities()
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    g = rng(seed)
    draws = np.searchsorted(cdf, g.random(n_samples), side="right")
    bits = ((draws[:, None] >> np.arange(n)) & 1).astype(np.uint8)
    return SnapshotSet(bits, state.lattice.label,
                       {"engine": "dense-sample", "seed": seed})


def apply_detection_errors(snapshots: SnapshotSet, epsilon: float,
                           epsilon_prime: float, seed: int) -> SnapshotSet:
    """i.i.d. per-site readout channel: 0 -> 1 with probability epsilon
    (false positive), 1 -> 0 with probability epsilon_prime (false negative).
    """
    if not (0 <= epsilon <= 1 and 0 <= epsilon_prime <= 1):
        raise ValueError("detection error rates must lie in [0, 1]")
    bits = snapshots.bits
    r = rng(seed).random(bits.shape)
    flip = np.where(bits == 0, r < epsilon, r < epsilon_prime)
    out = bits ^ flip.astype(np.uint8)
    prov = dict(snapshots.provenance)
    prov["detection_errors"] = {"epsilon": epsilon,
                                "epsilon_prime": epsilon_prime, "seed": seed}
    return SnapshotSet(out, snapshots.lattice, prov, snapshots.t_off)


def save_snapshots(path, snapshots: SnapshotSet) -> None:
    header = {
        "format": "rydsim-snapshots",
        "version": 1,
        "lattice": snapshots.lattice,
        "n_sites": snapshots.n_sites,
        "n_shots": len(snapshots),
        "t_off_us": snapshots.t_off,
        "provenance": snapshots.provenance,
    }
    with open(path, "w") as fh:
        fh.write(json.dumps(header) + "\n")
        for row in snapshots.bits:
            fh.write("".join("1" if b else "0" for b in row) + "\n")


def load_snapshots(path) -> SnapshotSet:
    with open(path) as fh:
        header = json.loads(fh.readline())
        if header.get("format") != "rydsim-snapshots":
            raise ValueError(f"{path} is not a snapshot file")
        rows = []
        for line in fh:
            line = line.strip()
            if line:
                rows.append([1 if c == "1" else 0 for c in line])
    bits = np.array(rows, dtype=np.uint8)
    if bits.size and bits.shape[1] != header["n_sites"]:
        raise ValueError("snapshot width disagrees with header")
    return SnapshotSet(bits, header.get("lattice", ""),
                       header.get("provenance", {}), header.get("t_off_us"))
