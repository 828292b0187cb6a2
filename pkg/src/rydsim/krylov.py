"""Lanczos approximation of exp(scale * A) @ v for Hermitian A."""

from __future__ import annotations

import numpy as np
from scipy.linalg import eigh_tridiagonal


class KrylovError(RuntimeError):
    pass


def expm_krylov(matvec, v: np.ndarray, scale: complex, tol: float = 1e-10,
                m_max: int = 40, reorth: bool = False) -> np.ndarray:
    """exp(scale * A) @ v with A Hermitian, via a Lanczos subspace.

    Iterates until the standard a-posteriori residual estimate
    beta_m * |last component of exp(scale T_m) e_1| drops below ``tol``
    relative to ||v||.  The subspaces stay small here (m <~ 10 for the step
    sizes in use), so the plain three-term recurrence is accurate;
    ``reorth=True`` adds full reorthogonalisation for ill-conditioned cases.
    """
    norm_v = np.linalg.norm(v)
    if norm_v == 0:
        return v.copy()
    basis = [v / norm_v]
    alphas: list[float] = []
    betas: list[float] = []
    u = np.array([1.0 + 0j])
    for j in range(m_max):
        w = matvec(basis[j])
        alpha = float(np.real(np.vdot(basis[j], w)))
        w = w - alpha * basis[j]
        if j > 0:
            w = w - betas[j - 1] * basis[j - 1]
        if reorth:
            for q in basis:
                w = w - np.vdot(q, w) * q
        beta = float(np.linalg.norm(w))
        alphas.append(alpha)

        evals, evecs = eigh_tridiagonal(np.array(alphas), np.array(betas))
        u = evecs @ (np.exp(scale * evals) * evecs[0].conj())
        if beta < 1e-14 * norm_v:          # happy breakdown: subspace exact
            break
        err = abs(beta * u[-1])
        if err < tol:
            break
        betas.append(beta)
        basis.append(w / beta)
    else:
        raise KrylovError(f"Lanczos did not reach tol={tol} in {m_max} steps "
                          f"(residual ~ {err:.2e})")
    out = np.zeros_like(v)
    for coeff, q in zip(u, basis):
        out += coeff * q
    return norm_v * out
