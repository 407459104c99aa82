"""Small linear-algebra helpers shared across the package."""

import numpy as np


def dagger(m):
    """Conjugate transpose of the last two axes."""
    return np.conjugate(np.swapaxes(m, -1, -2))


def herm_defect(m):
    """Max-abs deviation of a matrix from self-adjointness."""
    return float(np.max(np.abs(m - dagger(m)))) if m.size else 0.0


def min_eig_herm(m):
    """Smallest eigenvalue of a (numerically) Hermitian matrix."""
    if m.size == 0:
        return 0.0
    return float(np.linalg.eigvalsh(0.5 * (m + dagger(m)))[0])


def is_psd(m, tol=1e-10):
    return min_eig_herm(m) >= -tol


def opnorm(m):
    """Operator (spectral) norm; 0 for empty matrices."""
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


def maxabs(a):
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def block_diag(blocks):
    """Assemble a block-diagonal complex matrix from square blocks."""
    sizes = [b.shape[0] for b in blocks]
    n = sum(sizes)
    out = np.zeros((n, n), dtype=complex)
    ofs = 0
    for b in blocks:
        k = b.shape[0]
        out[ofs:ofs + k, ofs:ofs + k] = b
        ofs += k
    return out


def split_blocks(m, sizes):
    """Inverse of :func:`block_diag`: cut the diagonal blocks back out."""
    out = []
    ofs = 0
    for k in sizes:
        out.append(m[ofs:ofs + k, ofs:ofs + k].copy())
        ofs += k
    return out


def kron_all(mats):
    out = np.array([[1.0 + 0j]])
    for m in mats:
        out = np.kron(out, m)
    return out


def lstsq_minnorm(a, b, rcond=1e-12):
    """Minimal-norm least-squares solution with relative singular-value cutoff."""
    x, _, _, _ = np.linalg.lstsq(a, b, rcond=rcond)
    return x


def numerical_rank(a, rtol=1e-10):
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))
