"""
Dense complex linear algebra for small multipartite systems.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. The Hermitian
eigensolver is a cyclic Jacobi iteration (closed form for 2x2), which is
deterministic and accurate at the dimensions this package works with
(a few dozen at most).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BadPermutation, NotNormalized, NotPSD, NotTraceless

STRUCT_TOL = 1e-10
UNITARY_TOL = 1e-12

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
IDENTITY2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix contains NaN or Inf")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def projector(ket: np.ndarray) -> np.ndarray:
    ket = np.asarray(ket, dtype=complex)
    return np.outer(ket, ket.conj())


def tensor(a, b) -> np.ndarray:
    """Kronecker product; works for matrices and for kets."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def tensor_all(ops: Sequence) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex) if np.ndim(ops[0]) == 2 else np.ones(1, dtype=complex)
    for op in ops:
        out = tensor(out, op)
    return out


def is_hermitian(m: np.ndarray, tol: float = STRUCT_TOL) -> bool:
    return m.shape[0] == m.shape[1] and np.max(np.abs(m - dagger(m)), initial=0.0) <= tol


def _eig2(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = m[0, 0].real
    d = m[1, 1].real
    b = 0.5 * (m[0, 1] + np.conj(m[1, 0]))
    mean = 0.5 * (a + d)
    half = 0.5 * (a - d)
    r = np.hypot(half, abs(b))
    vals = np.array([mean - r, mean + r])
    if abs(b) == 0.0:
        vecs = np.eye(2, dtype=complex)
        if a > d:
            vecs = vecs[:, ::-1].copy()
            return np.array([d, a]), vecs
        return np.array([a, d]), vecs
    # rotate so the off-diagonal is real, then a real rotation by theta
    phase = b / abs(b)
    theta = 0.5 * np.arctan2(2 * abs(b), a - d)
    c, s = np.cos(theta), np.sin(theta)
    v_hi = np.array([c, s * np.conj(phase)], dtype=complex)
    v_lo = np.array([-s, c * np.conj(phase)], dtype=complex)
    return vals, np.column_stack([v_lo, v_hi])


def hermitian_eig(m, tol: float = 1e-15, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Returns ``(values, vectors)`` with values ascending and eigenvectors as the
    columns of a unitary matrix, so that ``m = V diag(values) V^dagger``.
    """
    a = as_matrix(m).copy()
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    a = 0.5 * (a + dagger(a))
    if n == 1:
        return np.array([a[0, 0].real]), np.ones((1, 1), dtype=complex)
    if n == 2:
        return _eig2(a)
    v = np.eye(n, dtype=complex)
    scale = max(np.linalg.norm(a), 1e-300)
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                b = a[p, q]
                if abs(b) <= 1e-300:
                    continue
                phase = b / abs(b)
                theta = 0.5 * np.arctan2(2 * abs(b), (a[p, p] - a[q, q]).real)
                c, s = np.cos(theta), np.sin(theta)
                # columns of J: (c, s conj(phase)) and (-s, c conj(phase)) in the (p, q) plane
                jp = np.array([c, s * np.conj(phase)])
                jq = np.array([-s, c * np.conj(phase)])
                cols = a[:, [p, q]]
                a[:, p] = cols @ jp
                a[:, q] = cols @ jq
                rows = a[[p, q], :]
                a[p, :] = np.conj(jp) @ rows
                a[q, :] = np.conj(jq) @ rows
                a[p, q] = 0.0
                a[q, p] = 0.0
                vcols = v[:, [p, q]]
                v[:, p] = vcols @ jp
                v[:, q] = vcols @ jq
    vals = np.real(np.diag(a))
    order = np.argsort(vals, kind="stable")
    return vals[order], v[:, order]


def _check_psd(m: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    if not is_hermitian(m, max(tol, STRUCT_TOL)):
        raise NotPSD("matrix is not Hermitian")
    vals, vecs = hermitian_eig(m)
    if vals[0] < -tol:
        raise NotPSD(f"minimum eigenvalue {vals[0]:.3e} is negative")
    return np.clip(vals, 0.0, None), vecs


def psd_sqrt(m, tol: float = STRUCT_TOL) -> np.ndarray:
    """Principal square root of a Hermitian positive semidefinite matrix."""
    vals, vecs = _check_psd(as_matrix(m), tol)
    return (vecs * np.sqrt(vals)) @ dagger(vecs)


def psd_pinv_sqrt(m, tol: float = STRUCT_TOL) -> np.ndarray:
    """Inverse square root on the support (eigenvalues > tol), zero on the kernel."""
    vals, vecs = _check_psd(as_matrix(m), tol)
    inv = np.zeros_like(vals)
    keep = vals > tol
    inv[keep] = 1.0 / np.sqrt(vals[keep])
    return (vecs * inv) @ dagger(vecs)


def polar_isometry(x: np.ndarray) -> np.ndarray:
    """Closest isometry to ``x`` (unitary factor of the polar decomposition).

    Columns in the kernel of ``x`` are completed to an orthonormal set.
    """
    u, _, vh = np.linalg.svd(x, full_matrices=False)
    return u @ vh


def orthogonal_complement(vectors: np.ndarray, dim: int) -> np.ndarray:
    """Orthonormal basis (as columns) of the complement of span(vectors).

    Built by Gram-Schmidt over the computational basis so the result is
    deterministic.
    """
    basis = [np.asarray(v, dtype=complex) for v in np.atleast_2d(vectors.T)] if vectors.size else []
    out = []
    for k in range(dim):
        e = np.zeros(dim, dtype=complex)
        e[k] = 1.0
        for b in basis + out:
            e = e - np.vdot(b, e) * b
        for b in basis + out:
            e = e - np.vdot(b, e) * b
        nrm = np.linalg.norm(e)
        if nrm > 1e-8:
            out.append(e / nrm)
        if len(basis) + len(out) == dim:
            break
    if not out:
        return np.zeros((dim, 0), dtype=complex)
    return np.column_stack(out)


def _rotate_to_value(n: np.ndarray, q: np.ndarray, i: int, j: int, target: complex) -> None:
    """Unitary rotation in the (i, j) plane making ``n[i, i] == target`` in place.

    ``target`` must lie on the segment between ``n[i, i]`` and ``n[j, j]``,
    which is inside the numerical range of the 2x2 block. ``q`` accumulates
    the new basis vectors as columns, so ``n == q^dagger n0 q`` throughout.
    """
    ni = n[i, i] - target
    nj = n[j, j] - target
    diff = nj - ni
    if abs(diff) < 1e-300:
        return
    t = float(np.clip(-(ni * np.conj(diff)).real / abs(diff) ** 2, 0.0, 1.0))
    # phase for which the cross term is a real multiple of diff
    ca = n[i, j] * np.conj(diff)
    cb = n[j, i] * np.conj(diff)
    phi = np.arctan2(-(ca.imag + cb.imag), ca.real - cb.real)
    g = np.exp(1j * phi) * n[i, j] + np.exp(-1j * phi) * n[j, i]
    mu = (g * np.conj(diff)).real / abs(diff) ** 2
    r = np.hypot(1.0, mu)
    gamma = np.arctan2(1.0, mu)
    psi = gamma + np.arcsin(np.clip((2 * t - 1) / r, -1.0, 1.0))
    theta = 0.5 * psi
    c, s = np.cos(theta), np.sin(theta)
    e = np.exp(1j * phi)
    x = np.array([c, e * s])
    y = np.array([-s, e * c])
    cols = n[:, [i, j]]
    n[:, i] = cols @ x
    n[:, j] = cols @ y
    rows = n[[i, j], :]
    n[i, :] = np.conj(x) @ rows
    n[j, :] = np.conj(y) @ rows
    qcols = q[:, [i, j]]
    q[:, i] = qcols @ x
    q[:, j] = qcols @ y


def zero_diagonal_unitary(n, tol: float = STRUCT_TOL) -> np.ndarray:
    """Unitary ``U`` such that ``U n U^dagger`` has (numerically) zero diagonal.

    ``n`` must be traceless. Each pass takes the active diagonal entry of
    largest magnitude and zeroes it with at most two plane rotations; the
    zeroed index then leaves the active set, whose compression stays
    traceless.
    """
    a = as_matrix(n).copy()
    dim = a.shape[0]
    scale = max(np.linalg.norm(a), 1.0)
    if abs(np.trace(a)) > tol * scale:
        raise NotTraceless(f"trace {np.trace(a):.3e} is not zero")
    q = np.eye(dim, dtype=complex)
    active = list(range(dim))
    zero_tol = 1e-15 * scale
    max_rot = 100 * dim * dim
    rotations = 0
    while len(active) > 1 and rotations < max_rot:
        diag = np.array([a[k, k] for k in active])
        pos = int(np.argmax(np.abs(diag)))
        i = active[pos]
        ni = a[i, i]
        if abs(ni) <= zero_tol:
            break
        direction = ni / abs(ni)
        others = [k for k in active if k != i]
        side = {k: (a[k, k] * np.conj(direction)).imag for k in others}
        along = {k: (a[k, k] * np.conj(direction)).real for k in others}
        # best point opposite to n_i on the line through 0 and n_i:
        # either a single collinear entry or a crossing of a segment.
        best = None
        for j in others:
            if abs(side[j]) <= 1e-14 * scale and along[j] < 0:
                cand = (along[j], j, None, a[j, j])
                best = cand if best is None or cand[0] < best[0] else best
        for j in others:
            for k in others:
                if side[j] > 0 and side[k] < 0:
                    w = side[j] / (side[j] - side[k])
                    z = (1 - w) * a[j, j] + w * a[k, k]
                    cand = ((z * np.conj(direction)).real, j, k, z)
                    best = cand if best is None or cand[0] < best[0] else best
        if best is None or best[0] > 0:
            # only rounding noise can land here
            break
        _, j, k, z = best
        if k is not None:
            _rotate_to_value(a, q, j, k, z)
            rotations += 1
        _rotate_to_value(a, q, i, j, 0.0)
        rotations += 1
        a[i, i] = 0.0 if abs(a[i, i]) < zero_tol else a[i, i]
        active.remove(i)
    return dagger(q)


@dataclass(frozen=True)
class StateVector:
    """Ket over a list of subsystem dimensions."""

    dims: tuple[int, ...]
    amplitudes: np.ndarray = field(repr=False)
    normalized: bool = True

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if int(np.prod(dims)) != amps.size:
            raise ValueError(f"amplitude length {amps.size} does not match dims {dims}")
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes contain NaN or Inf")
        if self.normalized and abs(np.linalg.norm(amps) - 1.0) > UNITARY_TOL:
            raise NotNormalized(f"norm {np.linalg.norm(amps):.15f} != 1")
        amps.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.dims)


def permute_subsystems(s: StateVector, perm: Sequence[int]) -> StateVector:
    """Reorder subsystems: new subsystem ``k`` is old subsystem ``perm[k]``."""
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(len(s.dims))):
        raise BadPermutation(f"{perm} is not a permutation of {len(s.dims)} subsystems")
    t = np.transpose(s.tensor(), perm)
    return StateVector(tuple(s.dims[p] for p in perm), t.reshape(-1), normalized=s.normalized)


def apply_local(op: np.ndarray, vecs: np.ndarray, dims: Sequence[int], k: int) -> np.ndarray:
    """Apply ``op`` to subsystem ``k`` of a ket (1-D) or a batch of kets (columns)."""
    dims = tuple(dims)
    batch = vecs.ndim == 2
    cols = vecs.shape[1] if batch else 1
    t = vecs.reshape(dims + (cols,))
    t = np.tensordot(op, t, axes=([1], [k]))
    t = np.moveaxis(t, 0, k)
    out = t.reshape(-1, cols)
    return out if batch else out[:, 0]


def embed_local(op: np.ndarray, dims: Sequence[int], k: int) -> np.ndarray:
    """``I ⊗ ... ⊗ op ⊗ ... ⊗ I`` with ``op`` on subsystem ``k``."""
    ops = [np.eye(d, dtype=complex) for d in dims]
    ops[k] = np.asarray(op, dtype=complex)
    return tensor_all(ops)
