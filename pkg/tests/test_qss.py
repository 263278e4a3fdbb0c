import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from locmeas import qss
from locmeas.errors import ExcludedCase
from locmeas.linalg import KET0, KET1, SIGMA_X, tensor
from locmeas.povm import TwoOutcomeOp, random_qubit_povm
from locmeas.protocol import compile_povm, compile_two_outcome
from locmeas.simulate import exact_state_distribution

S = 1 / np.sqrt(2)


def same_ray(u, v, tol=1e-12):
    return 1 - qss.fidelity(u, v) < tol


def collapse(alpha, beta, label, k0=KET0, k1=KET1):
    return {
        "Phi+": alpha * k0 + beta * k1,
        "Phi-": alpha * k0 - beta * k1,
        "Psi+": beta * k0 + alpha * k1,
        "Psi-": beta * k0 - alpha * k1,
    }[label]


class TestGhz:
    @pytest.mark.parametrize("alice,bob", list(itertools.product(qss.BELL_LABELS, qss.BOB_LABELS)))
    def test_zero_input_every_outcome(self, alice, bob):
        r = qss.run_ghz_protocol(1, 0, alice, bob)
        assert same_ray(r.charlie_after, KET0)

    @pytest.mark.parametrize("alice", qss.BELL_LABELS)
    def test_collapse_forms(self, alice):
        alpha, beta = 0.6, 0.8
        forms = [alpha * KET0 + beta * KET1, alpha * KET0 - beta * KET1, beta * KET0 + alpha * KET1, beta * KET0 - alpha * KET1]
        for bob in qss.BOB_LABELS:
            r = qss.run_ghz_protocol(alpha, beta, alice, bob)
            assert any(same_ray(r.charlie_before, f) for f in forms)
            assert abs(r.fidelity - 1) < 1e-12

    @given(st.integers(0, 2**32 - 1))
    def test_random_inputs(self, seed):
        rng = np.random.default_rng(seed)
        psi = rng.normal(size=2) + 1j * rng.normal(size=2)
        psi /= np.linalg.norm(psi)
        r = qss.run_ghz_protocol(*psi, seed=seed)
        assert abs(r.fidelity - 1) < 1e-12

    def test_unnormalized_rejected(self):
        with pytest.raises(ValueError):
            qss.run_ghz_protocol(1, 1)

    def test_correction_table(self):
        assert np.allclose(qss.ghz_correction("Phi+", "+"), np.eye(2))
        assert np.allclose(qss.ghz_correction("Psi+", "+"), SIGMA_X)
        assert np.allclose(qss.ghz_correction("Phi-", "-"), np.eye(2))


class TestEncoding:
    @pytest.mark.parametrize("name", sorted(qss.PRESETS))
    def test_presets_reconstruct(self, name):
        enc = qss.preset(name)
        assert enc.p >= enc.q
        chi0, chi1 = enc.wd.reconstruct()
        assert same_ray(chi0, enc.chi0.amplitudes) and same_ray(chi1, enc.chi1.amplitudes)

    def test_flags(self):
        assert qss.preset("teleport").is_teleport
        assert qss.preset("ghz").is_product
        assert qss.preset("eta-equal").is_eta_equal
        g = qss.preset("generic")
        assert not (g.is_teleport or g.is_product or g.is_eta_equal)
        assert abs(g.eta_angle - 0.7) < 1e-12

    def test_operators(self):
        enc = qss.preset("generic")
        assert np.allclose(enc.k0, np.diag(np.sqrt([0.8, 0.3])))
        assert np.allclose(enc.k1, np.diag(np.sqrt([0.2, 0.7])))
        for u in (enc.u0, enc.u1):
            assert np.allclose(u.conj().T @ u, np.eye(2))

    def test_unknown_preset(self):
        with pytest.raises(ValueError):
            qss.preset("nope")

    def test_random_generic_respects_thresholds(self, rng):
        for _ in range(20):
            enc = qss.random_generic_encoding(rng, 0.1, 0.1)
            assert abs(enc.p - enc.q) > 0.1 and enc.eta_angle > 0.1


class TestModified:
    @pytest.mark.parametrize("alice", qss.BELL_LABELS)
    def test_reduces_to_ghz(self, alice):
        alpha, beta = 0.6, 0.8j
        r = qss.run_modified_protocol(qss.preset("ghz"), alpha, beta, alice_outcome=alice)
        want = collapse(alpha, beta, alice, tensor(KET0, KET0), tensor(KET1, KET1))
        assert same_ray(r.bc_state, want)

    @pytest.mark.parametrize("alice", qss.BELL_LABELS)
    def test_collapse_in_subspace(self, alice, rng):
        enc = qss.random_generic_encoding(rng)
        alpha, beta = 0.28, 0.96
        r = qss.run_modified_protocol(enc, alpha, beta, alice_outcome=alice)
        proj = enc.subspace().projector()
        assert np.linalg.norm(r.bc_state - proj @ r.bc_state) < 1e-12
        want = collapse(alpha, beta, alice, enc.chi0.amplitudes, enc.chi1.amplitudes)
        assert same_ray(r.bc_state, want)

    def test_transcript_records_first_party(self):
        r = qss.run_modified_protocol(qss.preset("generic"), 1, 0, seed=4)
        assert r.first_party in ("Bob", "Charlie")
        assert dict(r.transcript)["first"] == r.first_party

    @given(st.integers(0, 2**32 - 1))
    def test_end_to_end_statistics(self, seed):
        rng = np.random.default_rng(seed)
        enc = qss.random_generic_encoding(rng)
        ls = enc.subspace()
        psi = rng.normal(size=2) + 1j * rng.normal(size=2)
        psi /= np.linalg.norm(psi)
        target = random_qubit_povm(3, rng)
        r = qss.run_modified_protocol(enc, *psi, seed=seed)
        plan = compile_povm(ls, r.frame_povm(target))
        dist = exact_state_distribution(plan, r.bc_state, ls)
        for label, e in zip(target.labels, target.elements):
            assert abs(dist[label] - np.vdot(psi, e @ psi).real) < 1e-8

    def test_two_outcome_pipeline(self):
        enc = qss.preset("generic")
        ls = enc.subspace()
        op = TwoOutcomeOp(0.9, 0.2)
        psi = np.array([S, 1j * S])
        r = qss.run_modified_protocol(enc, *psi, alice_outcome="Psi-")
        frame = r.logical_frame
        plan = compile_two_outcome(ls, TwoOutcomeOp(0.9, 0.2, frame @ op.in_basis))
        dist = exact_state_distribution(plan, r.bc_state, ls)
        assert abs(dist["0"] - np.vdot(psi, op.effect0 @ psi).real) < 1e-10


class TestTransfer:
    def test_teleport_case_is_perfect(self):
        enc = qss.preset("teleport")
        assert qss.transfer_deviation(enc, KET0[None, :])[0] < 1e-10
        assert qss.check_perfect_transfer(enc).min_deviation < 1e-10

    def test_generic_case_bounded_away(self):
        r = qss.check_perfect_transfer(qss.preset("generic"))
        assert r.min_deviation > 1e-3
        assert r.grid_size == 200 * 400 + 101 * 101
        assert abs(np.linalg.norm(r.argmin_phi) - 1) < 1e-12

    def test_product_case(self):
        enc = qss.preset("ghz")
        assert abs(qss.transfer_deviation(enc, KET0[None, :])[0] - np.sqrt(2)) < 1e-12

    def test_eta_equal_is_perfect(self):
        # identical conditional states compose into a single unitary frame
        assert qss.check_perfect_transfer(qss.preset("eta-equal")).min_deviation < 1e-6

    def test_random_generic(self, rng):
        for _ in range(5):
            enc = qss.random_generic_encoding(rng)
            assert qss.check_perfect_transfer(enc, 100, 200).min_deviation > 1e-3


class TestBasisInfo:
    def test_eta_equal_zero(self):
        assert qss.check_basis_info(qss.preset("eta-equal")).commutator_norm < 1e-10

    def test_eta_perp_with_equal_weights_zero(self):
        assert qss.check_basis_info(qss.preset("eta-perp")).commutator_norm < 1e-10

    def test_equal_weights_any_eta_zero(self):
        assert qss.check_basis_info(qss.preset("teleport")).commutator_norm < 1e-10

    def test_generic_nonzero(self, rng):
        assert qss.check_basis_info(qss.preset("generic")).commutator_norm > 1e-6
        for _ in range(50):
            assert qss.check_basis_info(qss.random_generic_encoding(rng)).commutator_norm > 1e-6

    def test_closed_form(self, rng):
        # ||[N, N^+]|| = |p/(1-p) - q/(1-q)| * ||eta1 eta1^+ - eta0 eta0^+||
        for _ in range(10):
            enc = qss.random_generic_encoding(rng)
            p, q = enc.p, enc.q
            d = np.outer(enc.eta1, enc.eta1.conj()) - np.outer(enc.eta0, enc.eta0.conj())
            want = abs(p / (1 - p) - q / (1 - q)) * np.linalg.norm(d)
            assert abs(qss.check_basis_info(enc).commutator_norm - want) < 1e-9 * max(1, want)

    def test_inverse_choice(self):
        enc = qss.QssEncoding.from_walgate(1.0, 0.4, np.eye(2), qss._rot(0.5))
        assert qss.check_basis_info(enc).used_inverse_of == "K0"
        g = qss.preset("generic")
        a = qss.check_basis_info(g, "K1").commutator_norm
        b = qss.check_basis_info(g, "K0").commutator_norm
        assert a > 1e-6 and b > 1e-6

    def test_excluded(self):
        with pytest.raises(ExcludedCase):
            qss.check_basis_info(qss.preset("ghz"))
        with pytest.raises(ValueError):
            qss.check_basis_info(qss.preset("generic"), "K2")

