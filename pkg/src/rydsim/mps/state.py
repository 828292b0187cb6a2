"""Matrix product state with an orthogonality centre.

Tensor layout: ``A[k]`` has indices (left bond, physical, right bond) with
physical basis (0 = ground, 1 = Rydberg).  Chain position k corresponds to
lattice site ``chain_to_site[k]``; the public observable API takes lattice
site indices.
"""

from __future__ import annotations

import numpy as np

_N_OP = np.array([[0.0, 0.0], [0.0, 1.0]])


class MpsState:
    """MPS wavefunction plus bookkeeping (centre, accumulated truncation)."""

    def __init__(self, tensors, chain_to_site=None, center=None,
                 truncation_error=0.0, chi_max=None):
        self.tensors = list(tensors)
        n = len(self.tensors)
        if chain_to_site is None:
            chain_to_site = np.arange(n)
        self.chain_to_site = np.asarray(chain_to_site, dtype=int)
        self.site_to_chain = np.argsort(self.chain_to_site)
        self.center = center
        self.truncation_error = truncation_error
        self.chi_max = chi_max

    # -- construction -----------------------------------------------------

    @classmethod
    def product_state(cls, n_sites: int, bits=None, chain_to_site=None,
                      chi_max=None) -> "MpsState":
        """|b_0 ... b_{N-1}> as a chi=1 chain (default all ground)."""
        if bits is None:
            bits = np.zeros(n_sites, dtype=int)
        c2s = np.arange(n_sites) if chain_to_site is None else np.asarray(chain_to_site)
        tensors = []
        for k in range(n_sites):
            a = np.zeros((1, 2, 1), dtype=complex)
            a[0, int(bits[c2s[k]]), 0] = 1.0
            tensors.append(a)
        return cls(tensors, c2s, center=0, chi_max=chi_max)

    # -- basic properties ---------------------------------------------------

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    def bond_dims(self) -> np.ndarray:
        """Interior bond dimensions (length N-1)."""
        return np.array([t.shape[2] for t in self.tensors[:-1]], dtype=int)

    def norm(self) -> float:
        e = np.ones((1, 1), dtype=complex)
        for a in self.tensors:
            e = self._plain_transfer(e, a)
        return float(np.sqrt(np.real(e[0, 0])))

    # -- canonical form -----------------------------------------------------

    def canonicalize(self, center: int = 0) -> "MpsState":
        """Move the orthogonality centre via QR sweeps (in place)."""
        n = self.n_sites
        if not (0 <= center < n):
            raise ValueError("centre out of range")
        start_left = 0 if self.center is None else min(self.center, center)
        for k in range(start_left, center):
            a = self.tensors[k]
            dl, d, dr = a.shape
            q, r = np.linalg.qr(a.reshape(dl * d, dr))
            self.tensors[k] = q.reshape(dl, d, -1)
            self.tensors[k + 1] = np.tensordot(r, self.tensors[k + 1], axes=(1, 0))
        start_right = n - 1 if self.center is None else max(self.center, center)
        for k in range(start_right, center, -1):
            a = self.tensors[k]
            dl, d, dr = a.shape
            q, r = np.linalg.qr(a.reshape(dl, d * dr).conj().T)
            self.tensors[k] = q.conj().T.reshape(-1, d, dr)
            self.tensors[k - 1] = np.tensordot(self.tensors[k - 1], r.conj().T,
                                               axes=(2, 0))
        self.center = center
        return self

    def check_orthonormal(self, tol: float = 1e-8) -> bool:
        """Verify the canonical-form flag against the tensors."""
        if self.center is None:
            return False
        for k in range(self.center):
            a = self.tensors[k]
            g = np.tensordot(a.conj(), a, axes=([0, 1], [0, 1]))
            if np.abs(g - np.eye(a.shape[2])).max() > tol:
                return False
        for k in range(self.n_sites - 1, self.center, -1):
            a = self.tensors[k]
            g = np.tensordot(a, a.conj(), axes=([1, 2], [1, 2]))
            if np.abs(g - np.eye(a.shape[0])).max() > tol:
                return False
        return True

    def schmidt_values(self, bond: int) -> np.ndarray:
        """Schmidt spectrum across ``bond`` (between chain sites bond, bond+1)."""
        if not (0 <= bond < self.n_sites - 1):
            raise ValueError("bond out of range")
        self.canonicalize(bond)
        a = self.tensors[bond]
        dl, d, dr = a.shape
        s = np.linalg.svd(a.reshape(dl * d, dr), compute_uv=False)
        return s

    def entanglement_entropy(self, bond: int) -> float:
        """Von Neumann entropy -sum lambda^2 ln lambda^2 at ``bond`` (nats)."""
        lam2 = self.schmidt_values(bond) ** 2
        lam2 = lam2[lam2 > 1e-30]
        lam2 = lam2 / lam2.sum()
        return float(-np.sum(lam2 * np.log(lam2)))

    # -- overlaps and dense conversion ---------------------------------------

    def overlap(self, other: "MpsState") -> complex:
        """<self|other> (both in the same chain order)."""
        e = np.ones((1, 1), dtype=complex)
        for a, b in zip(self.tensors, other.tensors):
            t = np.tensordot(e, b, axes=(0, 0))          # (bra_l, p, r_ket)
            e = np.tensordot(a.conj(), t, axes=([0, 1], [0, 1])).T
        return complex(e[0, 0])

    def to_dense(self) -> np.ndarray:
        """Dense amplitude vector indexed by site bits (site 0 = LSB)."""
        n = self.n_sites
        if n > 20:
            raise ValueError("dense conversion limited to 20 sites")
        amp = self.tensors[0][0]                     # (p0, r)
        for a in self.tensors[1:]:
            amp = np.tensordot(amp, a, axes=(-1, 0))
        amp = amp[..., 0]                            # axes in chain order
        amp = np.moveaxis(amp, range(n), [self.chain_to_site[k] for k in range(n)])
        return np.ascontiguousarray(amp.transpose(range(n - 1, -1, -1))).reshape(-1)

    # -- expectation values ---------------------------------------------------

    def _plain_transfer(self, e, a):
        t = np.tensordot(e, a, axes=(0, 0))          # (bra_l, p, r)
        return np.tensordot(a.conj(), t, axes=([0, 1], [0, 1])).T

    def _op_transfer(self, e, a, op):
        t = np.tensordot(e, a, axes=(0, 0))          # (bra_l, p, r)
        t = np.tensordot(op, t, axes=(1, 1))         # (p', bra_l, r)
        return np.tensordot(a.conj(), t, axes=([0, 1], [1, 0])).T

    def site_densities(self) -> np.ndarray:
        """<n_i> for every lattice site (exact contraction)."""
        self.canonicalize(0)
        n = self.n_sites
        out_chain = np.zeros(n)
        e = np.ones((1, 1), dtype=complex)
        for k in range(n):
            a = self.tensors[k]
            closed = self._op_transfer(e, a, _N_OP)
            out_chain[k] = np.real(np.trace(closed))
            e = self._plain_transfer(e, a)
        out = np.zeros(n)
        out[self.chain_to_site] = out_chain
        return out

    def pair_density(self, site_i: int, site_j: int) -> float:
        """<n_i n_j> for lattice sites i != j."""
        if site_i == site_j:
            raise ValueError("sites must differ")
        self.canonicalize(0)
        ki, kj = sorted((self.site_to_chain[site_i], self.site_to_chain[site_j]))
        e = np.ones((1, 1), dtype=complex)
        for k in range(ki):
            e = self._plain_transfer(e, self.tensors[k])
        e = self._op_transfer(e, self.tensors[ki], _N_OP)
        for k in range(ki + 1, kj):
            e = self._plain_transfer(e, self.tensors[k])
        closed = self._op_transfer(e, self.tensors[kj], _N_OP)
        return float(np.real(np.trace(closed)))

    def pair_density_rows(self, sources=None) -> dict:
        """{(i, j): <n_i n_j>} for all lattice pairs with i < j (one pass per
        source chain position, O(N^2 chi^3) total)."""
        self.canonicalize(0)
        n = self.n_sites
        out = {}
        e_plain = np.ones((1, 1), dtype=complex)
        wanted = None if sources is None else set(sources)
        for ki in range(n - 1):
            a = self.tensors[ki]
            site_i = int(self.chain_to_site[ki])
            if wanted is None or site_i in wanted:
                e = self._op_transfer(e_plain, a, _N_OP)
                for kj in range(ki + 1, n):
                    b = self.tensors[kj]
                    closed = self._op_transfer(e, b, _N_OP)
                    site_j = int(self.chain_to_site[kj])
                    out[tuple(sorted((site_i, site_j)))] = float(np.real(np.trace(closed)))
                    if kj < n - 1:
                        e = self._plain_transfer(e, b)
            e_plain = self._plain_transfer(e_plain, a)
        return out

    def weighted_count_distribution(self, weights) -> tuple[np.ndarray, np.ndarray]:
        """Exact distribution of the integer observable sum_i w_i n_i.

        Evaluates the characteristic function on a phase grid by diagonal
        transfer contractions and inverts it with a discrete Fourier sum.
        Returns (values, probabilities).
        """
        w = np.asarray(weights, dtype=int)
        if len(w) != self.n_sites:
            raise ValueError("one integer weight per site required")
        self.canonicalize(0)
        lo = int(np.minimum(w, 0).sum())
        hi = int(np.maximum(w, 0).sum())
        m = hi - lo + 1
        thetas = 2.0 * np.pi * np.arange(m) / m
        g = np.empty(m, dtype=complex)
        for t_idx, theta in enumerate(thetas):
            e = np.ones((1, 1), dtype=complex)
            for k in range(self.n_sites):
                wk = w[self.chain_to_site[k]]
                op = np.diag([1.0, np.exp(1j * theta * wk)])
                e = self._op_transfer(e, self.tensors[k], op)
            g[t_idx] = np.trace(e)
        values = np.arange(lo, hi + 1)
        probs = np.real(np.exp(-1j * np.outer(values, thetas)) @ g) / m
        probs = np.clip(probs, 0.0, None)
        return values, probs
