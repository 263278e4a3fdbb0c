"""Logical qubits encoded in multipartite systems and their Walgate decompositions."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import NotNormalized, NotOrthogonal
from .linalg import (
    STRUCT_TOL,
    UNITARY_TOL,
    StateVector,
    as_matrix,
    dagger,
    hermitian_eig,
    orthogonal_complement,
    permute_subsystems,
    zero_diagonal_unitary,
)

# rows whose norm is below this carry no information; their conditional
# states are filled in arbitrarily
ROW_NORM_TOL = 1e-12


@dataclass(frozen=True)
class LogicalSubspace:
    """Isometric encoding of a qubit: ``|0> -> ket0``, ``|1> -> ket1``."""

    dims: tuple[int, ...]
    ket0: np.ndarray = field(repr=False)
    ket1: np.ndarray = field(repr=False)

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        k0 = StateVector(dims, self.ket0).amplitudes
        k1 = StateVector(dims, self.ket1).amplitudes
        if abs(np.vdot(k0, k1)) > UNITARY_TOL:
            raise NotOrthogonal(f"<0_L|1_L> = {np.vdot(k0, k1):.3e}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "ket0", k0)
        object.__setattr__(self, "ket1", k1)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def isometry(self) -> np.ndarray:
        return np.column_stack([self.ket0, self.ket1])

    def encode(self, alpha: complex, beta: complex) -> np.ndarray:
        return alpha * self.ket0 + beta * self.ket1

    def projector(self) -> np.ndarray:
        v = self.isometry
        return v @ dagger(v)

    @classmethod
    def from_isometry(cls, dims: Sequence[int], v: np.ndarray) -> "LogicalSubspace":
        return cls(tuple(dims), v[:, 0], v[:, 1])


def embed(ls: LogicalSubspace, logical_op) -> np.ndarray:
    """Push a 2x2 logical operator forward: ``V op V^dagger``."""
    v = ls.isometry
    return v @ as_matrix(logical_op) @ dagger(v)


def random_encoding(dims: Sequence[int], rng: np.random.Generator) -> LogicalSubspace:
    """Haar-random two-dimensional subspace of the given multipartite space."""
    d = int(np.prod(dims))
    x = rng.normal(size=(d, 2)) + 1j * rng.normal(size=(d, 2))
    q, r = np.linalg.qr(x)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return LogicalSubspace(tuple(dims), q[:, 0], q[:, 1])


@dataclass(frozen=True)
class WalgateDecomposition:
    """``chi0 = sum_i sqrt(p_i)|i>|eta_i>``, ``chi1 = sum_i sqrt(q_i)|i>|eta_i^perp>``.

    ``basis_a`` holds the kets ``|i>`` of the cut subsystem as columns;
    ``eta`` and ``eta_perp`` hold the conditional states of the remainder
    as rows. ``dims`` are the dimensions after moving the cut subsystem to
    the front (``dims[0]`` is the cut subsystem).
    """

    cut: int
    dims: tuple[int, ...]
    basis_a: np.ndarray = field(repr=False)
    p: np.ndarray
    q: np.ndarray
    eta: np.ndarray = field(repr=False)
    eta_perp: np.ndarray = field(repr=False)

    @property
    def dim_a(self) -> int:
        return self.dims[0]

    def reconstruct(self) -> tuple[np.ndarray, np.ndarray]:
        """Both kets, in the cut-first subsystem ordering."""
        rows0 = np.sqrt(self.p)[:, None] * self.eta
        rows1 = np.sqrt(self.q)[:, None] * self.eta_perp
        return (self.basis_a @ rows0).reshape(-1), (self.basis_a @ rows1).reshape(-1)

    def swapped_logical(self) -> "WalgateDecomposition":
        return replace(self, p=self.q, q=self.p, eta=self.eta_perp, eta_perp=self.eta)

    def reindexed(self, order: Sequence[int]) -> "WalgateDecomposition":
        order = list(order)
        return replace(
            self,
            basis_a=self.basis_a[:, order],
            p=self.p[order],
            q=self.q[order],
            eta=self.eta[order],
            eta_perp=self.eta_perp[order],
        )


def _complete_row(other: np.ndarray, dim: int) -> np.ndarray:
    if np.linalg.norm(other) < 0.5:
        return orthogonal_complement(np.zeros((dim, 0)), dim)[:, 0]
    return orthogonal_complement(other[:, None], dim)[:, 0]


def walgate_decompose(chi0, chi1, dims: Sequence[int], cut: int = 0, tol: float = STRUCT_TOL) -> WalgateDecomposition:
    """Walgate decomposition of an orthonormal pair across ``cut`` vs the rest.

    The coefficient matrices ``M0, M1`` (rows indexed by the cut subsystem)
    give a traceless ``N = M1 M0^dagger``; a unitary that zeroes its
    diagonal defines the local basis, and the rows of ``U M0`` and ``U M1``
    give the amplitudes and conditional states. The search runs on the
    support of the cut subsystem's reduced state, and kernel directions are
    appended with ``p_i = q_i = 0``. If the computational basis of the cut
    subsystem already zeroes the diagonal (and the reduced state has full
    rank) it is used as is.
    """
    dims = tuple(int(d) for d in dims)
    s0 = StateVector(dims, chi0, normalized=False)
    s1 = StateVector(dims, chi1, normalized=False)
    for name, s in (("chi0", s0), ("chi1", s1)):
        if abs(s.norm - 1) > tol:
            raise NotNormalized(f"{name} has norm {s.norm:.12f}")
    if abs(np.vdot(s0.amplitudes, s1.amplitudes)) > tol:
        raise NotOrthogonal(f"<chi0|chi1> = {np.vdot(s0.amplitudes, s1.amplitudes):.3e}")
    if not 0 <= cut < len(dims):
        raise ValueError(f"cut {cut} out of range for dims {dims}")
    if len(dims) < 2:
        raise ValueError("need at least two subsystems to decompose")
    perm = [cut] + [k for k in range(len(dims)) if k != cut]
    s0 = permute_subsystems(s0, perm)
    s1 = permute_subsystems(s1, perm)
    pdims = s0.dims
    da = pdims[0]
    drest = int(np.prod(pdims[1:]))
    m0 = s0.amplitudes.reshape(da, drest)
    m1 = s1.amplitudes.reshape(da, drest)

    rho = m0 @ dagger(m0) + m1 @ dagger(m1)
    vals, vecs = hermitian_eig(rho)
    order = np.argsort(-vals, kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    rank = max(1, int(np.sum(vals > 1e-14)))
    if rank == da and np.max(np.abs(np.diag(m1 @ dagger(m0)))) <= tol:
        # the computational basis already works; keep it
        basis = np.eye(da, dtype=complex)
    else:
        support, kernel = vecs[:, :rank], vecs[:, rank:]
        n = dagger(support) @ m1 @ dagger(m0) @ support
        u = zero_diagonal_unitary(n - np.trace(n) / rank * np.eye(rank), tol)
        basis = np.column_stack([support @ dagger(u), kernel]) if kernel.size else support @ dagger(u)

    rows0 = dagger(basis) @ m0
    rows1 = dagger(basis) @ m1
    n0 = np.linalg.norm(rows0, axis=1)
    n1 = np.linalg.norm(rows1, axis=1)
    eta = np.zeros_like(rows0)
    eta_perp = np.zeros_like(rows1)
    for i in range(da):
        big0, big1 = n0[i] > ROW_NORM_TOL, n1[i] > ROW_NORM_TOL
        if big0:
            eta[i] = rows0[i] / n0[i]
        if big1:
            eta_perp[i] = rows1[i] / n1[i]
        if big0 and big1:
            # remove the rounding-level overlap from the lighter row
            if n0[i] >= n1[i]:
                v = eta_perp[i] - np.vdot(eta[i], eta_perp[i]) * eta[i]
                eta_perp[i] = v / np.linalg.norm(v)
            else:
                v = eta[i] - np.vdot(eta_perp[i], eta[i]) * eta_perp[i]
                eta[i] = v / np.linalg.norm(v)
        elif big0:
            eta_perp[i] = _complete_row(eta[i], drest)
        elif big1:
            eta[i] = _complete_row(eta_perp[i], drest)
        else:
            eta[i] = _complete_row(np.zeros(drest), drest)
            eta_perp[i] = _complete_row(eta[i], drest)
    p = np.where(n0 > ROW_NORM_TOL, n0**2, 0.0)
    q = np.where(n1 > ROW_NORM_TOL, n1**2, 0.0)
    return WalgateDecomposition(cut, pdims, basis, p, q, eta, eta_perp)


@dataclass(frozen=True)
class CoarseGrain:
    """Two-block projective split of the cut subsystem with aggregated weights."""

    P0: np.ndarray = field(repr=False)
    P1: np.ndarray = field(repr=False)
    p: float
    q: float
    group0: tuple[int, ...]
    group1: tuple[int, ...]


def coarse_grain(wd: WalgateDecomposition) -> CoarseGrain:
    """Group basis indices with ``p_i >= q_i`` (ties included) into ``P0``."""
    g0 = tuple(i for i in range(wd.dim_a) if wd.p[i] >= wd.q[i])
    g1 = tuple(i for i in range(wd.dim_a) if wd.p[i] < wd.q[i])
    b = wd.basis_a
    p0 = b[:, list(g0)] @ dagger(b[:, list(g0)])
    p1 = b[:, list(g1)] @ dagger(b[:, list(g1)]) if g1 else np.zeros_like(p0)
    return CoarseGrain(p0, p1, float(np.sum(wd.p[list(g0)])), float(np.sum(wd.q[list(g0)])), g0, g1)


@dataclass(frozen=True)
class Relabel:
    """Which label swaps :func:`normalize_ordering` applied."""

    logical_swapped: bool = False
    outcome_swapped: bool = False
    a_order: tuple[int, ...] = ()


def normalize_ordering(wd: WalgateDecomposition, op, tol: float = 0.0):
    """Relabel so that ``a >= b`` and (qubit cut) ``p_0 >= q_0``.

    A logical swap exchanges ``|0_L>`` and ``|1_L>`` in both the operation
    and the decomposition; if that still leaves ``p_0 < q_0`` the cut
    subsystem's basis is reordered. Returns ``(wd, op, record)``; applying
    the function again with the record's swaps undoes it (see
    :func:`undo_ordering`).
    """
    from .povm import TwoOutcomeOp

    logical = op.a < op.b - tol
    if logical:
        swap = np.array([[0, 1], [1, 0]])
        op = TwoOutcomeOp(op.b, op.a, op.in_basis @ swap, op.out_basis0 @ swap, op.out_basis1 @ swap)
        wd = wd.swapped_logical()
    order = tuple(range(wd.dim_a))
    if wd.p[0] < wd.q[0] - tol:
        order = tuple(np.argsort(-(wd.p - wd.q), kind="stable"))
        wd = wd.reindexed(order)
    return wd, op, Relabel(logical, False, order)


def undo_ordering(wd: WalgateDecomposition, op, record: Relabel):
    from .povm import TwoOutcomeOp

    inverse = tuple(np.argsort(record.a_order)) if record.a_order else ()
    if inverse:
        wd = wd.reindexed(inverse)
    if record.logical_swapped:
        swap = np.array([[0, 1], [1, 0]])
        op = TwoOutcomeOp(op.b, op.a, op.in_basis @ swap, op.out_basis0 @ swap, op.out_basis1 @ swap)
        wd = wd.swapped_logical()
    return wd, op
