import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from locmeas.bb84 import BB84Spec, compile_bb84
from locmeas.linalg import KET0, KET1, projector
from locmeas.povm import random_qubit_povm
from locmeas.protocol import MeasurementPlan, PlanLeaf, PlanNode, compile_povm
from locmeas.simulate import (
    SHARD_SIZE,
    exact_distribution,
    exact_state_distribution,
    locality_audit,
    plan_effective_povm,
    povm_distance,
    sample,
)
from locmeas.subspace import random_encoding

BB84_ZERO = {"00": 0.5, "01": 0.25, "10": 0.0, "11": 0.25}


def leaf(label):
    return PlanLeaf(label, np.eye(2, dtype=complex), 0)


@pytest.fixture(scope="module")
def bb84():
    return compile_bb84(BB84Spec())


def test_bb84_zero_input(bb84):
    ls, plan = bb84
    dist = exact_distribution(plan, ls, 1, 0)
    for k, v in BB84_ZERO.items():
        assert abs(dist[k] - v) < 1e-12
    assert not dist.outside_subspace


def test_distribution_sums_to_one(rng):
    ls = random_encoding((2, 4, 2), rng)
    plan = compile_povm(ls, random_qubit_povm(5, rng))
    a, b = rng.normal(size=2) + 1j * rng.normal(size=2)
    n = np.hypot(abs(a), abs(b))
    dist = exact_distribution(plan, ls, a / n, b / n)
    assert abs(sum(dist.probabilities.values()) - 1) < 1e-12


@given(st.integers(0, 2**32 - 1))
def test_matches_effective_povm(seed):
    rng = np.random.default_rng(seed)
    ls = random_encoding((2, 2, 2), rng)
    p = random_qubit_povm(4, rng)
    plan = compile_povm(ls, p)
    psi = rng.normal(size=2) + 1j * rng.normal(size=2)
    psi /= np.linalg.norm(psi)
    dist = exact_distribution(plan, ls, *psi)
    for label, e in zip(p.labels, p.elements):
        assert abs(dist[label] - np.vdot(psi, e @ psi).real) < 1e-10


def test_leakage_flagged(bb84):
    ls, plan = bb84
    psi = np.zeros(4)
    psi[0] = 1
    dist = exact_state_distribution(plan, psi, ls)
    assert dist.outside_subspace and dist.leakage > 0.1
    inside = exact_state_distribution(plan, ls.encode(0.6, 0.8), ls)
    assert not inside.outside_subspace and inside.leakage < 1e-20


def test_sampling_deterministic_and_worker_independent(bb84):
    ls, plan = bb84
    n = 3 * SHARD_SIZE + 17
    r1 = sample(plan, ls, 1, 0, n, seed=11)
    r2 = sample(plan, ls, 1, 0, n, seed=11)
    r4 = sample(plan, ls, 1, 0, n, seed=11, workers=4)
    assert r1.counts == r2.counts == r4.counts
    assert sum(r1.counts.values()) == n
    assert sample(plan, ls, 1, 0, n, seed=12).counts != r1.counts


def test_sampling_agrees_with_exact(rng):
    ls = random_encoding((2, 2, 2), rng)
    plan = compile_povm(ls, random_qubit_povm(4, rng))
    n = 200_000
    dist = exact_distribution(plan, ls, 0.6, 0.8j)
    freq = sample(plan, ls, 0.6, 0.8j, n, seed=3).frequencies
    tv = 0.5 * sum(abs(freq[k] - dist[k]) for k in plan.labels)
    assert tv < 5 * np.sqrt(len(plan.labels) / n)


def test_zero_trials(bb84):
    ls, plan = bb84
    assert sample(plan, ls, 1, 0, 0).counts == dict.fromkeys(plan.labels, 0)
    with pytest.raises(ValueError):
        sample(plan, ls, 1, 0, -1)


def test_distance_is_zero_for_compiled_plan(bb84):
    from locmeas.bb84 import build_bb84_povm

    ls, plan = bb84
    assert povm_distance(plan_effective_povm(plan, ls), build_bb84_povm()) < 1e-12


class TestAudit:
    def test_compiled_plans_pass(self, bb84):
        report = locality_audit(bb84[1])
        assert report.passed and report.path_monotonic and report.max_residual < 1e-12

    def test_out_of_order_detected(self):
        z0, z1 = projector(KET0), projector(KET1)
        inner = PlanNode(0, z0, z1, leaf("0"), leaf("1"))
        root = PlanNode(1, z0, z1, inner, leaf("1"))
        report = locality_audit(MeasurementPlan((2, 2), ("0", "1"), root))
        assert not report.path_monotonic and not report.passed

    def test_incomplete_kraus_detected(self):
        root = PlanNode(0, projector(KET0), 0.5 * projector(KET1), leaf("0"), leaf("1"))
        report = locality_audit(MeasurementPlan((2, 2), ("0", "1"), root))
        assert report.path_monotonic and not report.passed
        assert abs(report.max_residual - 0.75) < 1e-12

    def test_nonlocal_kraus_detected(self):
        root = PlanNode(0, np.eye(4) / np.sqrt(2), np.eye(4) / np.sqrt(2), leaf("0"), leaf("1"))
        report = locality_audit(MeasurementPlan((2, 2), ("0", "1"), root))
        assert report.max_residual == float("inf") and not report.passed
