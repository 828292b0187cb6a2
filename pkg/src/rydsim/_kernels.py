"""Numba hot loops: dense Hamiltonian matvec and Metropolis sweeps."""

from __future__ import annotations

import numpy as np
from numba import njit


# Single-threaded on purpose: callers parallelise over trajectories and
# disorder instances; thread pools would fight BLAS on small hosts.
@njit(fastmath=True, cache=True)
def h_matvec(psi, diag, coeff, f, out):
    """out = diag * psi + coeff * sum_i f_i sigma_x^i psi (bit-flip gather)."""
    n_bits = f.shape[0]
    for s in range(psi.shape[0]):
        acc = diag[s] * psi[s]
        for i in range(n_bits):
            acc += coeff * f[i] * psi[s ^ (1 << i)]
        out[s] = acc


@njit(cache=True)
def metropolis_sweeps(bits, indptr, indices, coupling, delta, beta,
                      n_sweeps, measure_every, sub_sign, norm,
                      energy0, raw_uniform, raw_sites,
                      out_energy, out_m, collect, out_bits):
    """Single-spin-flip Metropolis on H = sum U_ij n_i n_j - sum delta_i n_i.

    ``raw_uniform`` and ``raw_sites`` are pre-drawn random streams of length
    n_sweeps * N (acceptance draws and proposal sites).  ``sub_sign`` carries
    the order-parameter weight of each site (+1/-1 on the square sublattices;
    the triangular complex order parameter is handled by the caller from
    stored configurations).  Measurements append the running energy and the
    signed order parameter every ``measure_every`` sweeps; configurations are
    stored when ``collect`` is true.  Returns the final running energy.
    """
    n = bits.shape[0]
    energy = energy0
    m_signed = 0.0
    for i in range(n):
        if bits[i]:
            m_signed += sub_sign[i]
    k = 0
    n_meas = 0
    for sweep in range(n_sweeps):
        for step in range(n):
            site = raw_sites[k]
            # energy change of flipping `site`
            de = 0.0
            for p in range(indptr[site], indptr[site + 1]):
                if bits[indices[p]]:
                    de += coupling[p]
            de -= delta[site]
            if bits[site]:
                de = -de
            if de <= 0.0 or raw_uniform[k] < np.exp(-beta * de):
                energy += de
                if bits[site]:
                    bits[site] = 0
                    m_signed -= sub_sign[site]
                else:
                    bits[site] = 1
                    m_signed += sub_sign[site]
            k += 1
        if (sweep + 1) % measure_every == 0:
            out_energy[n_meas] = energy
            out_m[n_meas] = m_signed / norm
            if collect:
                for i in range(n):
                    out_bits[n_meas, i] = bits[i]
            n_meas += 1
    return energy
