"""Exact and sampled execution of measurement plans, plus structural audits."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .linalg import STRUCT_TOL, apply_local, dagger
from .protocol import MeasurementPlan, PlanLeaf
from .povm import Povm
from .subspace import LogicalSubspace

SHARD_SIZE = 1 << 16
_PRUNE = 1e-30


@dataclass(frozen=True)
class OutcomeDistribution:
    probabilities: dict
    outside_subspace: bool = False
    leakage: float = 0.0

    def __getitem__(self, label):
        return self.probabilities[label]

    def as_array(self, labels) -> np.ndarray:
        return np.array([self.probabilities[x] for x in labels])


def _walk_state(plan: MeasurementPlan, psi: np.ndarray, acc: dict):
    def rec(node, v):
        if isinstance(node, PlanLeaf):
            acc[node.label] += float(np.vdot(v, v).real)
            return
        for k, child in zip(node.kraus, node.children):
            w = apply_local(k, v, plan.dims, node.subsystem)
            if np.vdot(w, w).real > _PRUNE:
                rec(child, w)

    rec(plan.root, psi)


def exact_state_distribution(plan: MeasurementPlan, psi, ls: LogicalSubspace | None = None, tol: float = STRUCT_TOL):
    """Outcome probabilities for a full-space input ``psi`` (normalized here).

    When ``ls`` is given, the weight outside the logical subspace is
    reported and the result is flagged if it exceeds ``tol``.
    """
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    nrm = np.linalg.norm(psi)
    if nrm == 0:
        raise ValueError("zero input state")
    psi = psi / nrm
    leak = 0.0
    if ls is not None:
        inside = ls.isometry @ (dagger(ls.isometry) @ psi)
        leak = float(np.linalg.norm(psi - inside) ** 2)
    acc = {x: 0.0 for x in plan.labels}
    _walk_state(plan, psi, acc)
    return OutcomeDistribution(acc, leak > tol, leak)


def exact_distribution(plan: MeasurementPlan, ls: LogicalSubspace, alpha: complex, beta: complex) -> OutcomeDistribution:
    """Outcome probabilities for the encoded input ``alpha|0_L> + beta|1_L>``."""
    return exact_state_distribution(plan, ls.encode(alpha, beta))


def plan_effective_povm(plan: MeasurementPlan, ls: LogicalSubspace) -> Povm:
    """Logical POVM implemented by ``plan``: ``sum V^+ M^+ M V`` over each label's paths.

    Uses only the plan's Kraus matrices, so it is independent of the
    bookkeeping done during compilation.
    """
    acc = {x: np.zeros((2, 2), dtype=complex) for x in plan.labels}

    def rec(node, v):
        if isinstance(node, PlanLeaf):
            acc[node.label] += dagger(v) @ v
            return
        for k, child in zip(node.kraus, node.children):
            w = apply_local(k, v, plan.dims, node.subsystem)
            if np.linalg.norm(w) > 1e-15:
                rec(child, w)

    rec(plan.root, ls.isometry)
    return Povm(tuple(acc[x] for x in plan.labels), plan.labels)


def povm_distance(p: Povm, q: Povm) -> float:
    """Max over labels of the Frobenius distance between matching elements."""
    qd = q.as_dict()
    return max(float(np.linalg.norm(e - qd[x])) for x, e in zip(p.labels, p.elements))


# ---------------------------------------------------------------- sampling


@dataclass(frozen=True)
class _FlatTree:
    prob0: np.ndarray  # conditional probability of outcome 0 at internal nodes
    child: np.ndarray  # (n, 2) child indices; leaves point to themselves
    leaf_label: np.ndarray  # label index at leaves, -1 at internal nodes
    depth: int


def _flatten(plan: MeasurementPlan, psi: np.ndarray) -> _FlatTree:
    prob0, child, leaf = [], [], []
    label_index = {x: k for k, x in enumerate(plan.labels)}
    depth = 0

    def rec(node, v, level):
        nonlocal depth
        idx = len(prob0)
        prob0.append(0.0)
        child.append([idx, idx])
        leaf.append(-1)
        if isinstance(node, PlanLeaf):
            leaf[idx] = label_index[node.label]
            depth = max(depth, level)
            return idx
        w0 = apply_local(node.kraus0, v, plan.dims, node.subsystem)
        w1 = apply_local(node.kraus1, v, plan.dims, node.subsystem)
        n0, n1 = float(np.vdot(w0, w0).real), float(np.vdot(w1, w1).real)
        prob0[idx] = n0 / (n0 + n1) if n0 + n1 > 0 else 0.5
        child[idx] = [rec(node.child0, w0, level + 1), rec(node.child1, w1, level + 1)]
        return idx

    rec(plan.root, psi, 0)
    return _FlatTree(np.array(prob0), np.array(child, dtype=np.int64), np.array(leaf, dtype=np.int64), depth)


def _run_shard(flat: _FlatTree, n: int, seed: int, shard: int, n_labels: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, shard])))
    u = rng.random((n, max(flat.depth, 1)))
    idx = np.zeros(n, dtype=np.int64)
    for level in range(flat.depth):
        go1 = u[:, level] >= flat.prob0[idx]
        idx = flat.child[idx, go1.astype(np.int64)]
    return np.bincount(flat.leaf_label[idx], minlength=n_labels)


@dataclass(frozen=True)
class SampleResult:
    counts: dict
    n: int
    seed: int

    @property
    def frequencies(self) -> dict:
        return {k: v / self.n for k, v in self.counts.items()}


def sample_state(plan: MeasurementPlan, psi, n: int, seed: int = 0, workers: int = 1) -> SampleResult:
    """Monte Carlo run of ``plan`` on a full-space input.

    Trials are split into fixed-size shards, each with its own stream
    seeded by ``(seed, shard)``, so counts do not depend on ``workers``.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    psi = psi / np.linalg.norm(psi)
    flat = _flatten(plan, psi)
    sizes = [min(SHARD_SIZE, n - s) for s in range(0, n, SHARD_SIZE)]
    nl = len(plan.labels)

    def job(k):
        return _run_shard(flat, sizes[k], seed, k, nl)

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(job, range(len(sizes))))
    else:
        parts = [job(k) for k in range(len(sizes))]
    total = np.sum(parts, axis=0) if parts else np.zeros(nl, dtype=np.int64)
    return SampleResult({x: int(total[k]) for k, x in enumerate(plan.labels)}, n, seed)


def sample(plan: MeasurementPlan, ls: LogicalSubspace, alpha: complex, beta: complex, n: int, seed: int = 0, workers: int = 1) -> SampleResult:
    return sample_state(plan, ls.encode(alpha, beta), n, seed, workers)


# ---------------------------------------------------------------- audit


@dataclass(frozen=True)
class AuditReport:
    residuals: list = field(default_factory=list)
    path_monotonic: bool = True
    max_residual: float = 0.0
    passed: bool = True


def locality_audit(plan: MeasurementPlan, tol: float = STRUCT_TOL) -> AuditReport:
    """Check every node is a complete single-subsystem Kraus pair and paths never move backwards.

    Residual per node is ``||K0^+K0 + K1^+K1 - I||_F``; a Kraus matrix whose
    shape does not match its subsystem counts as an infinite residual.
    """
    residuals = []
    monotonic = True

    def rec(node, last):
        nonlocal monotonic
        if isinstance(node, PlanLeaf):
            if node.residual_start < last:
                monotonic = False
            return
        k = node.subsystem
        if k < last:
            monotonic = False
        d = plan.dims[k] if 0 <= k < len(plan.dims) else -1
        if any(m.shape != (d, d) for m in node.kraus):
            r = float("inf")
        else:
            r = float(np.linalg.norm(sum(dagger(m) @ m for m in node.kraus) - np.eye(d)))
        residuals.append((k, r))
        rec(node.child0, k)
        rec(node.child1, k)

    rec(plan.root, 0)
    worst = max((r for _, r in residuals), default=0.0)
    return AuditReport(residuals, monotonic, worst, monotonic and worst <= tol)
