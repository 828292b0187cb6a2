"""Matrix product operator for density-density couplings plus drive fields.

The interaction part is compiled once as a finite-state automaton over the
chain: besides the usual "ready" and "done" states, every chain position l
with a coupling partner further right keeps one open channel carrying n_l
until its last partner is passed.  The one-site drive term
(Omega_i/2) sigma_x - delta_i n_i occupies the ready->done slot and can be
rewritten in place as the sweep advances (``set_fields``), leaving the
interaction structure untouched.

MPO tensor layout: W[k] has indices (w_left, w_right, s_out, s_in); energies
are angular frequencies (rad/us).
"""

from __future__ import annotations

import numpy as np

_ID = np.eye(2)
_N = np.array([[0.0, 0.0], [0.0, 1.0]])
_SX = np.array([[0.0, 1.0], [1.0, 0.0]])


class HamiltonianOperator:
    """Automaton MPO for sum_{i<j} U_ij n_i n_j + per-site field terms."""

    def __init__(self, n_sites: int, pairs_chain, u_rad_per_us,
                 chain_to_site=None):
        self.n = n_sites
        self.chain_to_site = (np.arange(n_sites) if chain_to_site is None
                              else np.asarray(chain_to_site, dtype=int))
        self.site_to_chain = np.argsort(self.chain_to_site)
        coup = {}
        for (p, q), u in zip(pairs_chain, u_rad_per_us):
            p, q = (int(p), int(q)) if p < q else (int(q), int(p))
            coup[(p, q)] = coup.get((p, q), 0.0) + float(u)
        last_partner = np.full(n_sites, -1)
        for (p, q) in coup:
            last_partner[p] = max(last_partner[p], q)
        # open channels alive on the bond right of position b
        open_channels = []
        for b in range(n_sites - 1):
            open_channels.append([l for l in range(b + 1)
                                  if last_partner[l] > b])
        self._open = open_channels
        self._coup = coup
        self.tensors = []
        self._field_slot = []
        for k in range(n_sites):
            left = [] if k == 0 else open_channels[k - 1]
            right = [] if k == n_sites - 1 else open_channels[k]
            dl = 1 if k == 0 else 2 + len(left)
            dr = 1 if k == n_sites - 1 else 2 + len(right)
            w = np.zeros((dl, dr, 2, 2))
            ready_row = 0
            done_col = 0 if k == n_sites - 1 else 1
            # identity flows
            if k < n_sites - 1:
                w[ready_row, 0] += _ID                # ready -> ready
            if k > 0 and k < n_sites - 1:
                w[1, 1] += _ID                        # done -> done
            if k > 0 and k == n_sites - 1:
                w[1, 0] += _ID                        # done -> terminal
            # open a channel at its source
            for c_out, l in enumerate(right):
                if l == k:
                    w[ready_row, 2 + c_out] += _N
            # carry channels and close couplings
            for c_in, l in enumerate(left):
                u = coup.get((l, k))
                if u is not None:
                    w[2 + c_in, done_col] += u * _N   # channel -> done
                if k < n_sites - 1 and l in right:
                    c_out = right.index(l)
                    w[2 + c_in, 2 + c_out] += _ID     # channel continues
            self.tensors.append(w.astype(complex))
            self._field_slot.append((ready_row, done_col))
        self.set_fields(np.zeros(n_sites), np.zeros(n_sites))

    @property
    def bond_dims(self) -> np.ndarray:
        return np.array([t.shape[1] for t in self.tensors[:-1]], dtype=int)

    def set_fields(self, omega_rad_per_us, delta_rad_per_us):
        """Write (Omega_i/2) sigma_x - delta_i n into the field slots.

        Inputs are per-LATTICE-SITE arrays in rad/us; scalar broadcast allowed.
        """
        omega = np.broadcast_to(np.asarray(omega_rad_per_us, dtype=float),
                                (self.n,))
        delta = np.broadcast_to(np.asarray(delta_rad_per_us, dtype=float),
                                (self.n,))
        for k in range(self.n):
            site = self.chain_to_site[k]
            row, col = self._field_slot[k]
            self.tensors[k][row, col] = 0.5 * omega[site] * _SX - delta[site] * _N

    def to_dense(self) -> np.ndarray:
        """Reconstruct the full 2^N x 2^N matrix, site-bit index convention
        (site 0 = least significant).  Test use, N <= 12."""
        n = self.n
        if n > 12:
            raise ValueError("dense MPO reconstruction capped at 12 sites")
        block = self.tensors[0][0]                    # (wr, s, s')
        for w in self.tensors[1:]:
            block = np.tensordot(block, w, axes=(0, 0))
            # (s0, s0', ..., wr, s, s') -> move wr to front
            block = np.moveaxis(block, -3, 0)
        # drop the trivial terminal bond; indices: (s_c0, s_c0', s_c1, ...)
        mat = block[0]
        out_axes = list(range(0, 2 * n, 2))
        in_axes = list(range(1, 2 * n, 2))
        mat = np.transpose(mat, out_axes + in_axes)   # chain order
        # reorder chain -> site, MSB-first layout for C-order ravel
        chain_of_site = self.site_to_chain
        order_out = [int(chain_of_site[s]) for s in range(n - 1, -1, -1)]
        order_in = [n + int(chain_of_site[s]) for s in range(n - 1, -1, -1)]
        mat = np.transpose(mat, order_out + order_in)
        return mat.reshape(1 << n, 1 << n)

    def expectation(self, mps) -> float:
        """<psi|H|psi> by a full sandwich contraction."""
        e = np.ones((1, 1, 1), dtype=complex)         # (ket, w, bra)
        for a, w in zip(mps.tensors, self.tensors):
            t = np.tensordot(e, a, axes=(0, 0))       # (w, bra, p, r)
            t = np.tensordot(t, w, axes=([0, 2], [0, 3]))   # (bra, r, wr, p_out)
            e = np.tensordot(t, a.conj(), axes=([0, 3], [0, 1]))  # (r, wr, bra_r)
        return float(np.real(e[0, 0, 0]))
