"""
Compilation of qubit measurements on encoded subspaces into local plans.

A two-outcome operation ``A0 ~ diag(sqrt(a), sqrt(b))`` on the encoded
qubit is realized by a Kraus pair diagonal in the Walgate basis of the
first remaining subsystem. When that pair cannot produce the target by
itself, the branch that fell short is finished by a completion operation,
compiled recursively on what is left of the system. Every node touches a
single subsystem and subsystem indices never decrease along a path, so the
plan needs only one-way classical feed-forward.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .errors import CompilationError, DegenerateOutcome, DomainError, Infeasible
from .linalg import (
    STRUCT_TOL,
    apply_local,
    dagger,
    orthogonal_complement,
    polar_isometry,
    psd_pinv_sqrt,
    psd_sqrt,
)
from .povm import BinaryMeasurementTree, Grouping, Povm, TwoOutcomeOp, canonical_form, decompose_binary
from .subspace import CoarseGrain, LogicalSubspace, WalgateDecomposition, coarse_grain, walgate_decompose

INTERIOR = "Interior"
C_EQUALS_1 = "CEquals1"
D_EQUALS_0 = "DEquals0"
PROJECTIVE = "Projective"

TELEPORT_TOL = 1e-12
PARAM_TOL = 1e-12


@dataclass(frozen=True)
class StrategyParams:
    case: str
    c: float
    d: float

    def kraus(self, cg: CoarseGrain) -> tuple[np.ndarray, np.ndarray]:
        """Kraus pair on the cut subsystem, diagonal in its Walgate basis."""
        k0 = np.sqrt(self.c) * cg.P0 + np.sqrt(self.d) * cg.P1
        k1 = np.sqrt(1 - self.c) * cg.P0 + np.sqrt(1 - self.d) * cg.P1
        return k0, k1

    @property
    def completes(self) -> tuple[bool, bool]:
        """Whether outcome 0 / outcome 1 of the first step already finishes the operation."""
        return {
            INTERIOR: (True, True),
            C_EQUALS_1: (True, False),
            D_EQUALS_0: (False, True),
            PROJECTIVE: (False, False),
        }[self.case]


def _in_unit(name, v, tol=PARAM_TOL):
    if not -tol <= v <= 1 + tol:
        raise DomainError(f"{name}={v} outside [0, 1]")
    return min(max(float(v), 0.0), 1.0)


def strategy_select(a: float, b: float, p: float, q: float, tol: float = PARAM_TOL) -> StrategyParams:
    """Choose the first-step Kraus parameters ``c, d`` for target ``(a, b)``.

    Requires ``a >= b`` and ``p > q``. When both feasibility conditions hold
    the first step does everything; when one fails the corresponding
    parameter is pinned to its bound and that outcome needs completion;
    when both fail the first step is projective. The point where both
    conditions hold with equality yields ``c = 1, d = 0`` and is reported as
    projective.
    """
    a, b, p, q = (_in_unit(n, v, tol) for n, v in zip("abpq", (a, b, p, q)))
    if a < b - tol or p < q - tol:
        raise DomainError(f"ordering a >= b, p >= q violated: a={a}, b={b}, p={p}, q={q}")
    if abs(p - q) < TELEPORT_TOL:
        raise DomainError("p == q: first subsystem teleports; no strategy needed")
    if abs(a - b) <= tol:
        return StrategyParams(INTERIOR, a, a)
    # (1-b)/(1-a) <= (1-q)/(1-p) and b/a >= q/p, cross-multiplied
    cond1 = (1 - b) * (1 - p) <= (1 - q) * (1 - a) + tol
    cond2 = b * p >= q * a - tol
    if cond1 and cond2:
        c = ((1 - q) * a - (1 - p) * b) / (p - q)
        d = (p * b - q * a) / (p - q)
        c, d = min(max(c, 0.0), 1.0), min(max(d, 0.0), 1.0)
        if c >= 1 - tol and d <= tol:
            return StrategyParams(PROJECTIVE, 1.0, 0.0)
        return StrategyParams(INTERIOR, c, d)
    if cond2:
        d = (p * b - q * a) / ((1 - q) * a - (1 - p) * b)
        return StrategyParams(C_EQUALS_1, 1.0, min(max(d, 0.0), 1.0))
    if cond1:
        c = (a - b) / (p * (1 - b) - q * (1 - a))
        return StrategyParams(D_EQUALS_0, min(max(c, 0.0), 1.0), 0.0)
    return StrategyParams(PROJECTIVE, 1.0, 0.0)


def step_effects(params: StrategyParams, p: float, q: float) -> tuple[float, float]:
    """Logical weights ``(cp + d(1-p), cq + d(1-q))`` of outcome 0 of the first step."""
    return params.c * p + params.d * (1 - p), params.c * q + params.d * (1 - q)


def _ratio(x: float, y: float, eps: float = 1e-15) -> float:
    if y <= eps:
        return 0.0 if x <= eps else np.inf
    return x / y


def completion_feasible(a: float, b: float, a_p: float, b_p: float, tol: float = 1e-12) -> bool:
    """Can ``(a, b)`` still be reached after the operation ``(a_p, b_p)`` was applied?

    Both outcomes of the applied operation must disturb less than the
    target: their ratios have to sit between ``b/a`` and ``(1-b)/(1-a)``.
    """
    lo = _ratio(b, a)
    hi = _ratio(1 - b, 1 - a)

    def inside(r):
        return lo - tol * max(1.0, lo) <= r <= hi + tol * max(1.0, r if np.isfinite(r) else 1.0) or (
            np.isinf(r) and np.isinf(hi)
        )

    return inside(_ratio(b_p, a_p)) and inside(_ratio(1 - b_p, 1 - a_p))


@dataclass(frozen=True)
class CompletionOp:
    """Kraus pair finishing a target after an effect ``diag(a_p, b_p)``.

    ``B0``/``B1`` are 2x2 and diagonal in the residual (primed) basis unless
    another frame was requested. The pair is itself a two-outcome operation
    with outcome-0 weights ``(a2, b2)``; ``x = a2`` and ``y`` are the convex
    weights on ``b/a`` and ``(1-b)/(1-a)``.
    """

    alpha0: float
    alpha1: float
    x: float
    y: float
    B0: np.ndarray = field(repr=False)
    B1: np.ndarray = field(repr=False)

    a2: float = 0.0
    b2: float = 0.0


def completion_op(a: float, b: float, a_p: float, b_p: float, bases=None, tol: float = 1e-12) -> CompletionOp:
    """Solve for ``alpha0, alpha1`` so that ``B_i A' ~ A_i`` and ``B0^+B0 + B1^+B1 = I``.

    Completeness reads ``alpha0 a + alpha1 (1-a) = a_p`` and
    ``alpha0 b + alpha1 (1-b) = b_p``; both alphas must be nonnegative.
    ``(a_p, b_p)`` may be unnormalized. With ``bases`` (a 2x2 unitary whose
    columns are the primed kets) the pair is returned in that frame instead
    of the diagonal one.
    """
    if a_p <= tol or b_p <= tol:
        raise DegenerateOutcome(f"applied effect ({a_p}, {b_p}) annihilates a logical ray")
    if abs(a - b) <= tol:
        if abs(a_p - b_p) > tol * max(1.0, a_p):
            raise Infeasible("identity-like target after a disturbing operation")
        alpha0 = alpha1 = a_p
    else:
        det = a - b  # a(1-b) - b(1-a)
        alpha0 = (a_p * (1 - b) - b_p * (1 - a)) / det
        alpha1 = (a * b_p - b * a_p) / det
    scale = max(a_p, b_p)
    if alpha0 < -tol * scale or alpha1 < -tol * scale:
        raise Infeasible(f"no nonnegative completion: alpha=({alpha0:.3e}, {alpha1:.3e})")
    alpha0, alpha1 = max(alpha0, 0.0), max(alpha1, 0.0)
    e00 = min(alpha0 * a / a_p, 1.0)
    e01 = min(alpha0 * b / b_p, 1.0)
    e10 = min(alpha1 * (1 - a) / a_p, 1.0)
    e11 = min(alpha1 * (1 - b) / b_p, 1.0)
    b0 = np.diag(np.sqrt([e00, e01])).astype(complex)
    b1 = np.diag(np.sqrt([e10, e11])).astype(complex)
    if bases is not None:
        w = np.asarray(bases, dtype=complex)
        b0, b1 = w @ b0 @ dagger(w), w @ b1 @ dagger(w)
    return CompletionOp(alpha0, alpha1, e00, e10, b0, b1, e00, e01)


@dataclass(frozen=True)
class EffectiveKraus:
    kraus0: np.ndarray
    kraus1: np.ndarray
    primed0: LogicalSubspace | None
    primed1: LogicalSubspace | None


def _primed(wd: WalgateDecomposition, k: np.ndarray) -> LogicalSubspace:
    chi0, chi1 = wd.reconstruct()
    y = apply_local(k, np.column_stack([chi0, chi1]), wd.dims, 0)
    norms = np.linalg.norm(y, axis=0)
    cols = []
    for j in range(2):
        if norms[j] > 1e-12:
            cols.append(y[:, j] / norms[j])
    while len(cols) < 2:
        cols.append(orthogonal_complement(np.column_stack(cols) if cols else np.zeros((y.shape[0], 0)), y.shape[0])[:, 0])
    return LogicalSubspace(wd.dims, cols[0], cols[1])


def effective_kraus(c: float, d: float, wd: Union[WalgateDecomposition, CoarseGrain]) -> EffectiveKraus:
    """Action of ``K0 = sqrt(c)P0 + sqrt(d)P1`` (and its partner) on the encoded qubit.

    The 2x2 matrices map the logical basis onto the primed bases; those
    bases are returned as subspaces (in the decomposition's cut-first
    ordering) when a full decomposition is given.
    """
    c, d = _in_unit("c", c), _in_unit("d", d)
    cg = wd if isinstance(wd, CoarseGrain) else coarse_grain(wd)
    w0 = (c * cg.p + d * (1 - cg.p), c * cg.q + d * (1 - cg.q))
    k0 = np.diag(np.sqrt(w0)).astype(complex)
    k1 = np.diag(np.sqrt([1 - w0[0], 1 - w0[1]])).astype(complex)
    if isinstance(wd, CoarseGrain):
        return EffectiveKraus(k0, k1, None, None)
    sp = StrategyParams(INTERIOR, c, d)
    local0, local1 = sp.kraus(cg)
    return EffectiveKraus(k0, k1, _primed(wd, local0), _primed(wd, local1))


# ---------------------------------------------------------------- plans


@dataclass(frozen=True)
class PlanLeaf:
    """End of a branch.

    ``residual`` holds the post-measurement logical basis as columns on
    subsystems ``residual_start..``; ``correction`` is the unitary ``T`` with
    logical Kraus operator ``T sqrt(pi_label)`` relative to that basis.
    """

    label: str
    correction: np.ndarray = field(default_factory=lambda: np.eye(2, dtype=complex), repr=False)
    residual_start: int = 0
    residual: np.ndarray | None = field(default=None, repr=False)
    rank_deficient: bool = False


@dataclass(frozen=True)
class PlanNode:
    subsystem: int
    kraus0: np.ndarray = field(repr=False)
    kraus1: np.ndarray = field(repr=False)
    child0: Union["PlanNode", PlanLeaf]
    child1: Union["PlanNode", PlanLeaf]

    @property
    def kraus(self) -> tuple[np.ndarray, np.ndarray]:
        return self.kraus0, self.kraus1

    @property
    def children(self):
        return self.child0, self.child1


PlanTree = Union[PlanNode, PlanLeaf]


@dataclass(frozen=True)
class MeasurementPlan:
    dims: tuple[int, ...]
    labels: tuple[str, ...]
    root: PlanTree
    trace: tuple[dict, ...] = ()

    def leaves(self):
        """Yield ``(path, leaf)`` where ``path`` is a list of ``(node, outcome)``."""
        stack = [(self.root, [])]
        while stack:
            node, path = stack.pop()
            if isinstance(node, PlanLeaf):
                yield path, node
                continue
            for j in (1, 0):
                stack.append((node.children[j], path + [(node, j)]))

    def nodes(self):
        stack = [self.root]
        while stack:
            node = stack.pop()
            if isinstance(node, PlanNode):
                yield node
                stack.extend([node.child1, node.child0])

    def depth(self) -> int:
        def rec(n):
            return 0 if isinstance(n, PlanLeaf) else 1 + max(rec(n.child0), rec(n.child1))

        return rec(self.root)

    def stage_trace(self, stage: str = "") -> list[dict]:
        return [t for t in self.trace if t["stage"] == stage]


@dataclass(frozen=True)
class _StageLeaf:
    outcome: int
    start: int
    residual: np.ndarray  # columns: images of the two stage input kets


def map_leaves(tree, fn: Callable):
    if isinstance(tree, PlanNode):
        return PlanNode(tree.subsystem, tree.kraus0, tree.kraus1, map_leaves(tree.child0, fn), map_leaves(tree.child1, fn))
    return fn(tree)


def _rescale(tree, scale: np.ndarray):
    return map_leaves(tree, lambda lf: _StageLeaf(lf.outcome, lf.start, lf.residual * scale))


class _Compiler:
    def __init__(self, dims: Sequence[int], tol: float = STRUCT_TOL, teleport_tol: float = TELEPORT_TOL):
        self.dims = tuple(dims)
        self.tol = tol
        self.teleport_tol = teleport_tol
        self.trace: list[dict] = []
        self.stage = ""

    def _log(self, **rec):
        rec["stage"] = self.stage
        self.trace.append(rec)

    # one two-outcome stage, diagonal in (chi0, chi1)
    def stage_tree(self, start: int, chi0: np.ndarray, chi1: np.ndarray, a: float, b: float, depth: int = 0):
        if depth > 64:
            raise CompilationError("completion recursion did not terminate")
        dims = self.dims[start:]
        x = np.column_stack([chi0, chi1])
        if a < b:
            sub = self.stage_tree(start, chi1, chi0, b, a, depth + 1)
            return map_leaves(sub, lambda lf: _StageLeaf(lf.outcome, lf.start, lf.residual[:, ::-1]))
        if a - b <= PARAM_TOL:
            if a >= 1 - PARAM_TOL:
                return _StageLeaf(0, start, x)
            if a <= PARAM_TOL:
                return _StageLeaf(1, start, x)
            eye = np.eye(dims[0], dtype=complex)
            self._log(subsystem=start, case="Scalar", a=a, b=b)
            return PlanNode(
                start, np.sqrt(a) * eye, np.sqrt(1 - a) * eye,
                _StageLeaf(0, start, np.sqrt(a) * x), _StageLeaf(1, start, np.sqrt(1 - a) * x),
            )
        if len(dims) == 1:
            qc = np.eye(dims[0]) - x @ dagger(x)
            k0 = np.sqrt(a) * np.outer(chi0, chi0.conj()) + np.sqrt(b) * np.outer(chi1, chi1.conj()) + qc
            k1 = np.sqrt(1 - a) * np.outer(chi0, chi0.conj()) + np.sqrt(1 - b) * np.outer(chi1, chi1.conj())
            self._log(subsystem=start, case="Local", a=a, b=b)
            return PlanNode(start, k0, k1, _StageLeaf(0, start, k0 @ x), _StageLeaf(1, start, k1 @ x))

        wd = walgate_decompose(chi0, chi1, dims, 0)
        weight = wd.p + wd.q
        support = [i for i in range(wd.dim_a) if weight[i] > 1e-24]
        if len(support) == 1:
            i = support[0]
            return self.stage_tree(start + 1, wd.eta[i], wd.eta_perp[i], a, b, depth + 1)
        cg = coarse_grain(wd)
        if abs(cg.p - cg.q) < self.teleport_tol:
            self._log(subsystem=start, case="Teleport", a=a, b=b, p=cg.p, q=cg.q)
            kernel = [i for i in range(wd.dim_a) if i not in support]
            blocks = [[i] for i in support]
            blocks[0] = blocks[0] + kernel
            projs = [wd.basis_a[:, blk] @ dagger(wd.basis_a[:, blk]) for blk in blocks]
            children = []
            for i in support:
                sub = self.stage_tree(start + 1, wd.eta[i], wd.eta_perp[i], a, b, depth + 1)
                children.append(_rescale(sub, np.sqrt([wd.p[i], wd.q[i]])))
            return _projective_tree(start, projs, children)

        params = strategy_select(a, b, cg.p, cg.q)
        self._log(subsystem=start, case=params.case, c=params.c, d=params.d, a=a, b=b, p=cg.p, q=cg.q)
        kraus = params.kraus(cg)
        children = []
        for j, done in enumerate(params.completes):
            y = apply_local(kraus[j], x, dims, 0)
            if done:
                children.append(_StageLeaf(j, start, y))
                continue
            s = np.linalg.norm(y, axis=0)
            comp = completion_op(a, b, s[0] ** 2, s[1] ** 2)
            sub = self.stage_tree(start, y[:, 0] / s[0], y[:, 1] / s[1], comp.a2, comp.b2, depth + 1)
            children.append(_rescale(sub, s))
        return PlanNode(start, kraus[0], kraus[1], children[0], children[1])

    def compile_tree(self, bt, start: int, iso: np.ndarray, chain: np.ndarray, stage: str = "", deficient: bool = False):
        if isinstance(bt, str):
            return PlanLeaf(bt, polar_isometry(chain), start, iso, deficient)
        effects = bt.effects
        op = bt.op
        u = op.in_basis
        chi = iso @ u
        self.stage = stage
        tree = self.stage_tree(start, chi[:, 0], chi[:, 1], op.a, op.b)

        def finish(lf: _StageLeaf):
            m = lf.outcome
            e = effects[m]
            r = lf.residual @ dagger(u)
            gram = dagger(r) @ r
            tr_e = float(np.trace(e).real)
            w = float(np.trace(gram).real) / tr_e if tr_e > self.tol else 0.0
            if np.linalg.norm(gram - w * e) > 1e-8:
                raise CompilationError(f"stage {stage!r} leaf {m}: residual not proportional to target effect")
            vals = np.linalg.eigvalsh(e)
            rank_def = bool(deficient or vals[0] < self.tol or w < self.tol)
            xx = r @ psd_pinv_sqrt(e, self.tol)
            if w > 1e-300:
                xx = xx / np.sqrt(w)
            new_iso = polar_isometry(xx)
            child = bt.child0 if m == 0 else bt.child1
            return self.compile_tree(child, lf.start, new_iso, psd_sqrt(e) @ chain, stage + str(m), rank_def)

        return map_leaves(tree, finish)


def _projective_tree(subsystem: int, projs: list[np.ndarray], children: list):
    """Binary tree of projective splits on one subsystem.

    Projectors outside the current block are lumped into its first member
    so every split is a complete Kraus pair.
    """
    if len(children) == 1:
        return children[0]
    total = sum(projs)
    projs = [projs[0] + (np.eye(total.shape[0]) - total)] + list(projs[1:])
    half = len(children) // 2
    return PlanNode(
        subsystem, sum(projs[:half]), sum(projs[half:]),
        _projective_tree(subsystem, projs[:half], children[:half]),
        _projective_tree(subsystem, projs[half:], children[half:]),
    )


def compile_povm(ls: LogicalSubspace, p: Povm, grouping: Grouping = "balanced", tol: float = STRUCT_TOL) -> MeasurementPlan:
    """Compile a qubit POVM on an encoded qubit into a local feed-forward plan."""
    bt = decompose_binary(p, grouping, tol)
    comp = _Compiler(ls.dims, tol)
    root = comp.compile_tree(bt, 0, ls.isometry, np.eye(2, dtype=complex))
    return MeasurementPlan(ls.dims, tuple(p.labels), root, tuple(comp.trace))


def compile_two_outcome(ls: LogicalSubspace, op: TwoOutcomeOp, tol: float = STRUCT_TOL) -> MeasurementPlan:
    """Compile one two-outcome operation; leaves are labeled ``"0"`` and ``"1"``."""
    bt = BinaryMeasurementTree(op.effect0, canonical_form(op.effect0, tol), "0", "1")
    comp = _Compiler(ls.dims, tol)
    root = comp.compile_tree(bt, 0, ls.isometry, np.eye(2, dtype=complex))
    return MeasurementPlan(ls.dims, ("0", "1"), root, tuple(comp.trace))
