"""Dense complex linear algebra used throughout the package.

Operators are plain complex ``numpy`` arrays. The tensor-product convention
is row-major everywhere: the composite index of ``(i, k)`` in ``a (x) b`` is
``i * dim(b) + k``.
"""
from __future__ import annotations

import functools
from pathlib import Path

import numpy as np

from .errors import DimensionError, NotHermitianError

HERMITIAN_RTOL = 1e-12

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)


def as_operator(a) -> np.ndarray:
    """Return ``a`` as a square complex matrix or raise."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"operator must be square, got shape {a.shape}")
    return a


def is_hermitian(h, rtol: float = HERMITIAN_RTOL) -> bool:
    h = as_operator(h)
    scale = max(np.linalg.norm(h), 1.0)
    return bool(np.linalg.norm(h - h.conj().T) <= rtol * scale)


def require_hermitian(h, name: str = "operator") -> np.ndarray:
    h = as_operator(h)
    if not is_hermitian(h):
        err = np.linalg.norm(h - h.conj().T)
        raise NotHermitianError(f"{name} is not Hermitian (||H - H^dag||_F = {err:.3e})")
    return h


def is_unitary(u, rtol: float = HERMITIAN_RTOL) -> bool:
    u = as_operator(u)
    d = u.shape[0]
    return bool(np.linalg.norm(u.conj().T @ u - np.eye(d)) <= rtol * np.sqrt(d))


def kron(*ops) -> np.ndarray:
    """Kronecker product of one or more operators (row-major blocks)."""
    if not ops:
        raise ValueError("kron needs at least one operand")
    return functools.reduce(np.kron, [np.asarray(op, dtype=complex) for op in ops])


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def partial_trace_env(rho, d_s: int, d_e: int) -> np.ndarray:
    """Trace out the environment factor of a ``d_s * d_e`` operator.

    ``result[i, j] = sum_k rho[i*d_e + k, j*d_e + k]``.
    """
    rho = as_operator(rho)
    if rho.shape[0] != d_s * d_e:
        raise DimensionError(
            f"partial trace expected dim {d_s}*{d_e} = {d_s * d_e}, got {rho.shape[0]}"
        )
    return np.trace(rho.reshape(d_s, d_e, d_s, d_e), axis1=1, axis2=3)


def partial_trace_pure(psi, d_s: int, d_e: int) -> np.ndarray:
    """Reduced system state of pure state(s) ``psi`` without forming ``|psi><psi|``.

    ``psi`` may be a single vector or a stack of shape ``(n, d_s * d_e)``.
    """
    psi = np.asarray(psi, dtype=complex)
    if psi.shape[-1] != d_s * d_e:
        raise DimensionError(
            f"partial trace expected dim {d_s}*{d_e} = {d_s * d_e}, got {psi.shape[-1]}"
        )
    m = psi.reshape(psi.shape[:-1] + (d_s, d_e))
    return np.einsum("...ik,...jk->...ij", m, m.conj())


def _fix_phase(vecs: np.ndarray, atol: float = 1e-12) -> np.ndarray:
    # first component with |v_i| > atol made real-positive
    out = vecs.copy()
    for k in range(out.shape[1]):
        col = out[:, k]
        idx = int(np.argmax(np.abs(col) > atol))
        c = col[idx]
        if abs(c) > 0:
            out[:, k] = col * (abs(c) / c)
    return out


def herm_eig(h, tie_tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Eigenvalues come back ascending. Each eigenvector has its first nonzero
    component made real-positive; within a group of tied eigenvalues the
    vectors are ordered by the position of that first nonzero component.

    Returns
    -------
    eigenvalues : (d,) float array
    eigenvectors : (d, d) complex array, one eigenvector per column
    """
    h = require_hermitian(h, "herm_eig input")
    h = 0.5 * (h + h.conj().T)
    w, v = np.linalg.eigh(h)
    v = _fix_phase(v)
    scale = tie_tol * max(1.0, float(np.max(np.abs(w))) if w.size else 1.0)
    order = []
    start = 0
    while start < len(w):
        stop = start + 1
        while stop < len(w) and w[stop] - w[start] <= scale:
            stop += 1
        group = list(range(start, stop))
        if len(group) > 1:
            lead = [int(np.argmax(np.abs(v[:, k]) > 1e-12)) for k in group]
            group = [g for _, g in sorted(zip(lead, group))]
        order.extend(group)
        start = stop
    return w[order], v[:, order]


def evolve_unitary(h, t: float) -> np.ndarray:
    """``exp(-i h t)`` via the eigendecomposition of ``h`` (hbar = 1)."""
    w, v = herm_eig(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def hermitian_basis(d: int) -> list[np.ndarray]:
    """Hilbert-Schmidt orthonormal Hermitian basis of ``d x d`` matrices.

    Order: ``I/sqrt(d)``; then for each ``j < k`` the symmetric and the
    antisymmetric generalized Gell-Mann matrices; then the ``d - 1`` diagonal
    ones. All scaled by ``1/sqrt(2)`` so that ``tr(G_i G_j) = delta_ij``.
    For ``d = 2`` this is ``(I, X, Y, Z) / sqrt(2)``.
    """
    if d < 1:
        raise ValueError("dimension must be >= 1")
    basis = [np.eye(d, dtype=complex) / np.sqrt(d)]
    s = 1 / np.sqrt(2)
    for j in range(d):
        for k in range(j + 1, d):
            sym = np.zeros((d, d), dtype=complex)
            sym[j, k] = sym[k, j] = s
            anti = np.zeros((d, d), dtype=complex)
            anti[j, k] = -1j * s
            anti[k, j] = 1j * s
            basis += [sym, anti]
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1.0
        diag[l] = -l
        basis.append(np.diag(diag / np.sqrt(l * (l + 1))).astype(complex))
    return basis


def hermitian_coords(e) -> np.ndarray:
    """Real coefficients ``tr(G_i e)`` of ``e`` in :func:`hermitian_basis`.

    Computed in O(d^2) without building the basis, so it scales to large
    environment dimensions. ``e`` is assumed Hermitian.
    """
    e = as_operator(e)
    d = e.shape[0]
    diag = e.diagonal().real
    out = np.empty(d * d)
    out[0] = diag.sum() / np.sqrt(d)
    j, k = np.triu_indices(d, 1)
    upper = e[j, k]
    npair = len(j)
    out[1 : 1 + 2 * npair : 2] = np.sqrt(2) * upper.real
    out[2 : 2 + 2 * npair : 2] = -np.sqrt(2) * upper.imag
    l = np.arange(1, d)
    csum = np.cumsum(diag)[:-1]
    out[1 + 2 * npair :] = (csum - l * diag[1:]) / np.sqrt(l * (l + 1))
    return out


def from_hermitian_coords(c, d: int) -> np.ndarray:
    """Inverse of :func:`hermitian_coords`."""
    c = np.asarray(c, dtype=float)
    if c.shape != (d * d,):
        raise DimensionError(f"expected {d * d} coefficients, got {c.shape}")
    e = np.zeros((d, d), dtype=complex)
    j, k = np.triu_indices(d, 1)
    npair = len(j)
    upper = (c[1 : 1 + 2 * npair : 2] - 1j * c[2 : 2 + 2 * npair : 2]) / np.sqrt(2)
    e[j, k] = upper
    e[k, j] = upper.conj()
    cd = c[1 + 2 * npair :]
    l = np.arange(1, d)
    norm = np.sqrt(l * (l + 1))
    diag = np.full(d, c[0] / np.sqrt(d))
    # D_l has +1/norm on entries < l and -l/norm on entry l
    tail = np.concatenate([np.cumsum((cd / norm)[::-1])[::-1], [0.0]])
    diag += tail
    diag[1:] -= l * cd / norm
    e[np.diag_indices(d)] = diag
    return e


def joint_eigenspaces(ops, d: int, tol: float = 1e-9) -> list[tuple[np.ndarray, tuple[float, ...]]]:
    """Simultaneously diagonalize a family of commuting Hermitian operators.

    Refines the eigenspaces of the first operator by each following one.
    Returns ``(isometry, joint_eigenvalues)`` pairs sorted ascending by the
    eigenvalue tuple (lexicographic, entries within ``tol`` compare equal).
    With an empty family the whole space is one block.
    """
    blocks = [(np.eye(d, dtype=complex), ())]
    for op in ops:
        op = as_operator(op)
        refined = []
        for v, vals in blocks:
            sub = v.conj().T @ op @ v
            w, x = herm_eig(0.5 * (sub + sub.conj().T))
            start = 0
            while start < len(w):
                stop = start + 1
                while stop < len(w) and w[stop] - w[start] <= tol:
                    stop += 1
                vecs = v @ x[:, start:stop]
                refined.append((vecs, vals + (float(np.mean(w[start:stop])),)))
                start = stop
        blocks = refined

    def cmp(a, b):
        for x, y in zip(a[1], b[1]):
            if abs(x - y) > tol:
                return -1 if x < y else 1
        return 0

    return sorted(blocks, key=functools.cmp_to_key(cmp))


def _fmt(x: float) -> str:
    return repr(float(x))


def save_operator(op, path) -> None:
    """Write ``op`` as CSV: header ``dim=<d>``, then rows of ``re:im`` entries."""
    op = as_operator(op)
    lines = [f"dim={op.shape[0]}"]
    for row in op:
        lines.append(",".join(f"{_fmt(z.real)}:{_fmt(z.imag)}" for z in row))
    Path(path).write_text("\n".join(lines) + "\n")


def load_operator(path) -> np.ndarray:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("dim="):
        raise DimensionError(f"{path}: missing 'dim=<d>' header")
    d = int(lines[0][4:])
    rows = lines[1:]
    if len(rows) != d:
        raise DimensionError(f"{path}: header says dim={d} but found {len(rows)} rows")
    out = np.empty((d, d), dtype=complex)
    for i, row in enumerate(rows):
        cells = row.split(",")
        if len(cells) != d:
            raise DimensionError(f"{path}: row {i} has {len(cells)} entries, expected {d}")
        for j, cell in enumerate(cells):
            re, im = cell.split(":")
            out[i, j] = complex(float(re), float(im))
    return out
