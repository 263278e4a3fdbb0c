"""POVMs on a qubit, their two-outcome canonical form, and binary-tree decompositions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .errors import InvalidPovm, NotPSD, NotSubIdentity
from .linalg import (
    STRUCT_TOL,
    UNITARY_TOL,
    as_matrix,
    dagger,
    hermitian_eig,
    is_hermitian,
    psd_pinv_sqrt,
    psd_sqrt,
)


@dataclass(frozen=True)
class Povm:
    """Finite POVM: positive elements summing to the identity.

    Construction does not validate; call :func:`validate_povm` (or
    :meth:`checked`) when the input comes from outside.
    """

    elements: tuple[np.ndarray, ...]
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        elems = tuple(as_matrix(e) for e in self.elements)
        labels = tuple(str(x) for x in self.labels) or tuple(str(k) for k in range(len(elems)))
        if len(labels) != len(elems):
            raise ValueError("labels and elements differ in length")
        if len(set(labels)) != len(labels):
            raise ValueError("labels must be unique")
        object.__setattr__(self, "elements", elems)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    def __len__(self) -> int:
        return len(self.elements)

    def element(self, label: str) -> np.ndarray:
        return self.elements[self.labels.index(label)]

    def as_dict(self) -> dict[str, np.ndarray]:
        return dict(zip(self.labels, self.elements))

    def checked(self, tol: float = STRUCT_TOL) -> "Povm":
        violations = validate_povm(self, tol)
        if violations:
            first = violations[0]
            where = f" (element {first['index']})" if first.get("index") is not None else ""
            raise InvalidPovm(f"{first['kind']}{where}: magnitude {first['magnitude']:.3e}", violations)
        return self


def validate_povm(p: Povm, tol: float = STRUCT_TOL) -> list[dict]:
    """Report every way ``p`` fails to be a POVM; an empty list means valid."""
    report = []
    if len(p.elements) < 1:
        return [{"kind": "empty", "index": None, "magnitude": 0.0}]
    dim = p.elements[0].shape[0]
    total = np.zeros((dim, dim), dtype=complex)
    for k, e in enumerate(p.elements):
        if e.shape != (dim, dim):
            report.append({"kind": "shape", "index": k, "magnitude": float("inf")})
            continue
        herm = float(np.max(np.abs(e - dagger(e))))
        if herm > tol:
            report.append({"kind": "non-hermitian", "index": k, "magnitude": herm})
        vals, _ = hermitian_eig(0.5 * (e + dagger(e)))
        if vals[0] < -tol:
            report.append({"kind": "negative", "index": k, "magnitude": float(-vals[0])})
        total += e
    if not any(v["kind"] == "shape" for v in report):
        resid = float(np.linalg.norm(total - np.eye(dim)))
        if resid > tol:
            report.append({"kind": "completeness", "index": None, "magnitude": resid})
    return report


@dataclass(frozen=True)
class TwoOutcomeOp:
    """Two-outcome operation ``A0 = sqrt(a)|0'><0| + sqrt(b)|1'><1|`` and its partner.

    ``in_basis`` holds the ket ``|0>`` and ``|1>`` as columns; the output
    bases default to the input basis (minimally disturbing Kraus operators).
    """

    a: float
    b: float
    in_basis: np.ndarray = field(default_factory=lambda: np.eye(2, dtype=complex))
    out_basis0: np.ndarray | None = None
    out_basis1: np.ndarray | None = None

    def __post_init__(self):
        for name in ("a", "b"):
            v = float(getattr(self, name))
            if not -UNITARY_TOL <= v <= 1 + UNITARY_TOL:
                raise ValueError(f"{name}={v} outside [0, 1]")
            object.__setattr__(self, name, min(max(v, 0.0), 1.0))
        for name in ("in_basis", "out_basis0", "out_basis1"):
            m = getattr(self, name)
            m = self.in_basis if m is None else as_matrix(m)
            if np.max(np.abs(dagger(m) @ m - np.eye(2))) > UNITARY_TOL:
                raise ValueError(f"{name} is not orthonormal")
            object.__setattr__(self, name, m)

    @property
    def effect0(self) -> np.ndarray:
        u = self.in_basis
        return (u * np.array([self.a, self.b])) @ dagger(u)

    @property
    def effect1(self) -> np.ndarray:
        return np.eye(2) - self.effect0

    def kraus(self) -> tuple[np.ndarray, np.ndarray]:
        u = self.in_basis
        k0 = (self.out_basis0 * np.sqrt([self.a, self.b])) @ dagger(u)
        k1 = (self.out_basis1 * np.sqrt([1 - self.a, 1 - self.b])) @ dagger(u)
        return k0, k1


def _fix_phase(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v) > 1e-12))
    return v * (abs(v[k]) / v[k])


def canonical_form(pi0, tol: float = STRUCT_TOL) -> TwoOutcomeOp:
    """Eigen-form of the first element of the two-outcome POVM ``{pi0, I - pi0}``.

    Returns the op with ``a >= b``. Degenerate effects get the computational
    basis; otherwise eigenvectors are phase-fixed so their first nonzero
    entry is real and positive.
    """
    pi0 = as_matrix(pi0)
    if pi0.shape != (2, 2):
        raise ValueError("canonical_form expects a 2x2 effect")
    if not is_hermitian(pi0, tol):
        raise NotPSD("effect is not Hermitian")
    vals, vecs = hermitian_eig(pi0)
    if vals[0] < -tol:
        raise NotPSD(f"effect has eigenvalue {vals[0]:.3e}")
    if vals[1] > 1 + tol:
        raise NotSubIdentity(f"effect has eigenvalue {vals[1]:.3e} > 1")
    b, a = (min(max(v, 0.0), 1.0) for v in vals)
    if a - b <= tol:
        basis = np.eye(2, dtype=complex)
        a = b = 0.5 * (a + b)
    else:
        basis = np.column_stack([_fix_phase(vecs[:, 1]), _fix_phase(vecs[:, 0])])
    return TwoOutcomeOp(a, b, basis)


# grouping strategies map a list of labels to (first group, second group)
Grouping = Union[str, Callable[[Sequence[str]], tuple[Sequence[str], Sequence[str]]]]


def balanced_split(labels: Sequence[str]) -> tuple[list[str], list[str]]:
    half = len(labels) // 2
    return list(labels[:half]), list(labels[half:])


def sequential_split(labels: Sequence[str]) -> tuple[list[str], list[str]]:
    return [labels[0]], list(labels[1:])


GROUPINGS = {"balanced": balanced_split, "sequential": sequential_split}


def resolve_grouping(grouping: Grouping) -> Callable:
    if callable(grouping):
        return grouping
    try:
        return GROUPINGS[grouping]
    except KeyError:
        raise ValueError(f"unknown grouping {grouping!r}; choose from {sorted(GROUPINGS)}") from None


@dataclass(frozen=True)
class BinaryMeasurementTree:
    """Node of a binary decomposition.

    ``pi0`` is the coarse-grained first effect at this node, expressed in
    the frame left behind by the parent's Kraus operator. Children are
    either subtrees or outcome labels.
    """

    pi0: np.ndarray
    op: TwoOutcomeOp
    child0: Union["BinaryMeasurementTree", str]
    child1: Union["BinaryMeasurementTree", str]

    @property
    def effects(self) -> tuple[np.ndarray, np.ndarray]:
        return self.pi0, np.eye(2) - self.pi0

    def kraus(self) -> tuple[np.ndarray, np.ndarray]:
        """``A_i = pi_i^{1/2}`` (the free unitaries are the identity)."""
        e0, e1 = self.effects
        return psd_sqrt(e0), psd_sqrt(e1)

    def children(self):
        return self.child0, self.child1

    def leaf_labels(self) -> list[str]:
        out = []
        for ch in self.children():
            out.extend([ch] if isinstance(ch, str) else ch.leaf_labels())
        return out


def renormalize(coarse: np.ndarray, members: Sequence[np.ndarray], tol: float = STRUCT_TOL) -> list[np.ndarray]:
    """Child POVM ``coarse^{-1/2} pi coarse^{-1/2}``, padded on the kernel of ``coarse``.

    The kernel projector is added to the first element.
    """
    inv = psd_pinv_sqrt(coarse, tol)
    out = [inv @ m @ inv for m in members]
    support = inv @ coarse @ inv
    kernel = np.eye(coarse.shape[0]) - support
    vals, vecs = hermitian_eig(kernel)
    kernel = (vecs * np.round(np.clip(vals, 0, 1))) @ dagger(vecs)
    out[0] = out[0] + kernel
    return [0.5 * (m + dagger(m)) for m in out]


def decompose_binary(p: Povm, grouping: Grouping = "balanced", tol: float = STRUCT_TOL):
    """Decompose a qubit POVM into nested two-outcome operations.

    Returns a :class:`BinaryMeasurementTree`, or the bare label when the
    POVM has a single element.
    """
    p.checked(tol)
    if p.dim != 2:
        raise ValueError("only qubit POVMs are supported")
    split = resolve_grouping(grouping)
    return _decompose(list(p.elements), list(p.labels), split, tol)


def _decompose(elements, labels, split, tol):
    if len(labels) == 1:
        return labels[0]
    g0, g1 = split(labels)
    g0, g1 = list(g0), list(g1)
    if not g0 or not g1 or sorted(g0 + g1) != sorted(labels):
        raise ValueError(f"grouping must partition {labels} into two non-empty groups")
    lookup = dict(zip(labels, elements))
    pi0 = sum(lookup[x] for x in g0)
    pi0 = 0.5 * (pi0 + dagger(pi0))
    pi1 = np.eye(2) - pi0
    children = []
    for coarse, group in ((pi0, g0), (pi1, g1)):
        if len(group) == 1:
            children.append(group[0])
        else:
            sub = renormalize(coarse, [lookup[x] for x in group], tol)
            children.append(_decompose(sub, group, split, tol))
    return BinaryMeasurementTree(pi0, canonical_form(pi0, tol), children[0], children[1])


def tree_effective_povm(t) -> Povm:
    """Recompose a decomposition tree into the POVM it implements."""
    acc: dict[str, np.ndarray] = {}

    def walk(node, m):
        if isinstance(node, str):
            acc[node] = acc.get(node, 0) + dagger(m) @ m
            return
        k0, k1 = node.kraus()
        walk(node.child0, k0 @ m)
        walk(node.child1, k1 @ m)

    if isinstance(t, str):
        return Povm((np.eye(2, dtype=complex),), (t,))
    walk(t, np.eye(2, dtype=complex))
    labels = t.leaf_labels()
    return Povm(tuple(acc[x] for x in labels), tuple(labels))


def random_qubit_povm(n: int, rng: np.random.Generator, rank_one: bool = False) -> Povm:
    """Random ``n``-outcome qubit POVM (normalized Ginibre construction)."""
    gs = []
    for _ in range(n):
        cols = 1 if rank_one else 2
        x = rng.normal(size=(2, cols)) + 1j * rng.normal(size=(2, cols))
        gs.append(x @ dagger(x))
    s = psd_pinv_sqrt(sum(gs))
    elems = tuple(0.5 * (s @ g @ s + dagger(s @ g @ s)) for g in gs)
    return Povm(elems, tuple(str(k) for k in range(n)))
