"""Forward differences on node grids, with zero extension past the last node."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

__all__ = ["forward_differences", "gradient_magnitude", "difference_operator"]


def forward_differences(u: np.ndarray, h: float) -> np.ndarray:
    """Stack of forward differences, one array per axis, shape ``(ndim, *u.shape)``."""
    u = np.asarray(u, dtype=float)
    out = np.empty((u.ndim,) + u.shape)
    for ax in range(u.ndim):
        nxt = np.zeros_like(u)
        src = [slice(None)] * u.ndim
        dst = [slice(None)] * u.ndim
        src[ax] = slice(1, None)
        dst[ax] = slice(None, -1)
        nxt[tuple(dst)] = u[tuple(src)]
        out[ax] = (nxt - u) / h
    return out


def gradient_magnitude(u: np.ndarray, h: float) -> np.ndarray:
    """Euclidean magnitude of the forward-difference gradient at every node."""
    d = forward_differences(u, h)
    return np.sqrt(np.sum(d * d, axis=0))


def difference_operator(shape: tuple, h: float) -> sp.csr_matrix:
    """Sparse matrix of :func:`forward_differences` acting on ``u.ravel()``.

    Rows are ordered axis-major: all differences along axis 0, then axis 1.
    """
    blocks = []
    for ax in range(len(shape)):
        factors = []
        for a, m in enumerate(shape):
            if a == ax:
                factors.append(sp.diags([-np.ones(m), np.ones(m - 1)], [0, 1], shape=(m, m)))
            else:
                factors.append(sp.identity(m))
        K = factors[0]
        for fct in factors[1:]:
            K = sp.kron(K, fct)
        blocks.append(K)
    return (sp.vstack(blocks) / h).tocsr()
