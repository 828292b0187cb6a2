"""Boustrophedon mapping of 2D clusters onto the 1D tensor chain."""

from __future__ import annotations

import numpy as np


def snake_order(lattice) -> np.ndarray:
    """Chain permutation: ``order[k]`` is the lattice site at chain position k.

    Sites are grouped into rows of constant second integer coordinate and
    traversed row by row, alternating direction, so consecutive chain
    neighbours within a row are lattice nearest neighbours.  Works unchanged
    for the variable-width rows of hexagonal clusters.
    """
    coords = lattice.coords
    rows = np.unique(coords[:, 1])
    order = []
    for r, n in enumerate(rows):
        idx = np.nonzero(coords[:, 1] == n)[0]
        idx = idx[np.argsort(coords[idx, 0])]
        if r % 2:
            idx = idx[::-1]
        order.extend(idx.tolist())
    return np.array(order, dtype=int)
