"""Quantum information splitting between two receivers.

Covers the GHZ baseline, the variant in which Bob and Charlie share a
general orthonormal pair ``chi0, chi1``, and two numerical certificates:
no rank-one measurement by Bob leaves Charlie with the full state, and
Charlie alone has perfect information about no basis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ExcludedCase
from .linalg import IDENTITY2, KET0, KET1, SIGMA_X, SIGMA_Z, StateVector, dagger, tensor
from .povm import Povm
from .subspace import LogicalSubspace, WalgateDecomposition, walgate_decompose

BELL_LABELS = ("Phi+", "Phi-", "Psi+", "Psi-")
BOB_LABELS = ("+", "-")
EQUAL_FIDELITY_TOL = 1e-10

_s = 1 / np.sqrt(2)
BELL_STATES = {
    "Phi+": _s * (tensor(KET0, KET0) + tensor(KET1, KET1)),
    "Phi-": _s * (tensor(KET0, KET0) - tensor(KET1, KET1)),
    "Psi+": _s * (tensor(KET0, KET1) + tensor(KET1, KET0)),
    "Psi-": _s * (tensor(KET0, KET1) - tensor(KET1, KET0)),
}
BOB_KETS = {"+": _s * (KET0 + KET1), "-": _s * (KET0 - KET1)}

# logical Pauli P with collapsed state = V P psi, per Bell outcome
LOGICAL_FRAME = {
    "Phi+": IDENTITY2,
    "Phi-": SIGMA_Z,
    "Psi+": SIGMA_X,
    "Psi-": SIGMA_X @ SIGMA_Z,
}


def _normalized_input(alpha, beta) -> np.ndarray:
    psi = np.array([alpha, beta], dtype=complex)
    n = np.linalg.norm(psi)
    if abs(n - 1) > 1e-10:
        raise ValueError(f"input not normalized: |alpha|^2+|beta|^2 = {n**2:.12f}")
    return psi / n


def fidelity(u: np.ndarray, v: np.ndarray) -> float:
    """``|<u|v>|^2`` after normalizing both."""
    return float(abs(np.vdot(u, v)) ** 2 / (np.vdot(u, u).real * np.vdot(v, v).real))


def _bell_project(psi_in: np.ndarray, shared: np.ndarray, label: str) -> tuple[np.ndarray, float]:
    # shared: Alice's qubit first, rest flattened
    rest = shared.size // 2
    full = np.kron(psi_in, shared).reshape(4, rest)
    out = BELL_STATES[label].conj() @ full
    prob = float(np.vdot(out, out).real)
    return out, prob


def _choose(rng, labels, probs):
    probs = np.asarray(probs, dtype=float)
    return labels[int(rng.choice(len(labels), p=probs / probs.sum()))]


@dataclass(frozen=True)
class GhzResult:
    alice_outcome: str
    bob_outcome: str
    charlie_before: np.ndarray = field(repr=False)
    correction: np.ndarray = field(repr=False)
    charlie_after: np.ndarray = field(repr=False)
    fidelity: float = 1.0


def ghz_correction(alice_outcome: str, bob_outcome: str) -> np.ndarray:
    """Charlie's fix-up ``Z^z X^x``: ``x`` for a Psi outcome, ``z`` when the signs disagree."""
    x = alice_outcome.startswith("Psi")
    sign = (-1 if alice_outcome.endswith("-") else 1) * (-1 if bob_outcome == "-" else 1)
    m = SIGMA_X if x else IDENTITY2
    return (SIGMA_Z if sign < 0 else IDENTITY2) @ m


def run_ghz_protocol(alpha, beta, alice_outcome: str | None = None, bob_outcome: str | None = None, seed: int | None = None) -> GhzResult:
    """Teleport into a GHZ state, let Bob measure ``|+->``, correct at Charlie.

    Outcomes not fixed by the caller are drawn with their Born weights from
    a generator seeded by ``seed``.
    """
    psi = _normalized_input(alpha, beta)
    rng = np.random.default_rng(seed)
    ghz = _s * (np.kron(np.kron(KET0, KET0), KET0) + np.kron(np.kron(KET1, KET1), KET1))
    if alice_outcome is None:
        probs = [_bell_project(psi, ghz, lab)[1] for lab in BELL_LABELS]
        alice_outcome = _choose(rng, BELL_LABELS, probs)
    bc, _ = _bell_project(psi, ghz, alice_outcome)
    bc = bc.reshape(2, 2)
    if bob_outcome is None:
        probs = [np.linalg.norm(BOB_KETS[lab].conj() @ bc) ** 2 for lab in BOB_LABELS]
        bob_outcome = _choose(rng, BOB_LABELS, probs)
    c = BOB_KETS[bob_outcome].conj() @ bc
    c = c / np.linalg.norm(c)
    fix = ghz_correction(alice_outcome, bob_outcome)
    after = fix @ c
    return GhzResult(alice_outcome, bob_outcome, c, fix, after, fidelity(after, psi))


# ---------------------------------------------------------------- encodings


@dataclass(frozen=True)
class QssEncoding:
    """Orthonormal pair shared by Bob (first qubit) and Charlie (second).

    ``wd`` is ordered so that ``p >= q`` where ``p = wd.p[0]``,
    ``q = wd.q[0]``; ``U_i = |eta_i><0| + |eta_i^perp><1|`` and
    ``K0 = diag(sqrt p, sqrt q)``, ``K1 = diag(sqrt(1-p), sqrt(1-q))``.
    """

    chi0: StateVector
    chi1: StateVector
    wd: WalgateDecomposition = field(repr=False)

    @classmethod
    def from_states(cls, chi0, chi1) -> "QssEncoding":
        s0 = StateVector((2, 2), chi0)
        s1 = StateVector((2, 2), chi1)
        wd = walgate_decompose(s0.amplitudes, s1.amplitudes, (2, 2), 0)
        if wd.p[0] < wd.q[0]:
            wd = wd.reindexed([1, 0])
        return cls(s0, s1, wd)

    @classmethod
    def from_walgate(cls, p: float, q: float, eta0_basis, eta1_basis) -> "QssEncoding":
        """Build ``chi0 = sqrt(p)|0>|eta0> + sqrt(1-p)|1>|eta1>`` and its partner."""
        e0 = np.asarray(eta0_basis, dtype=complex)
        e1 = np.asarray(eta1_basis, dtype=complex)
        chi0 = np.sqrt(p) * tensor(KET0, e0[:, 0]) + np.sqrt(1 - p) * tensor(KET1, e1[:, 0])
        chi1 = np.sqrt(q) * tensor(KET0, e0[:, 1]) + np.sqrt(1 - q) * tensor(KET1, e1[:, 1])
        return cls.from_states(chi0, chi1)

    @property
    def p(self) -> float:
        return float(self.wd.p[0])

    @property
    def q(self) -> float:
        return float(self.wd.q[0])

    @property
    def eta0(self) -> np.ndarray:
        return self.wd.eta[0]

    @property
    def eta1(self) -> np.ndarray:
        return self.wd.eta[1]

    @property
    def u0(self) -> np.ndarray:
        return np.column_stack([self.wd.eta[0], self.wd.eta_perp[0]])

    @property
    def u1(self) -> np.ndarray:
        return np.column_stack([self.wd.eta[1], self.wd.eta_perp[1]])

    @property
    def k0(self) -> np.ndarray:
        return np.diag(np.sqrt([self.p, self.q])).astype(complex)

    @property
    def k1(self) -> np.ndarray:
        return np.diag(np.sqrt([1 - self.p, 1 - self.q])).astype(complex)

    @property
    def bob_basis(self) -> np.ndarray:
        return self.wd.basis_a

    @property
    def is_teleport(self) -> bool:
        return abs(self.p - self.q) < 1e-10

    @property
    def is_product(self) -> bool:
        return self.p > 1 - 1e-12 and self.q < 1e-12

    @property
    def is_eta_equal(self) -> bool:
        return 1 - fidelity(self.eta0, self.eta1) < EQUAL_FIDELITY_TOL

    @property
    def eta_angle(self) -> float:
        """Fubini-Study angle between ``eta0`` and ``eta1``."""
        return float(np.arccos(np.sqrt(min(fidelity(self.eta0, self.eta1), 1.0))))

    def subspace(self) -> LogicalSubspace:
        return LogicalSubspace((2, 2), self.chi0.amplitudes, self.chi1.amplitudes)


def _rot(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=complex)


PRESETS = {
    "teleport": lambda: QssEncoding.from_walgate(0.5, 0.5, IDENTITY2, _rot(np.pi / 4)),
    "generic": lambda: QssEncoding.from_walgate(0.8, 0.3, IDENTITY2, _rot(0.7)),
    "eta-equal": lambda: QssEncoding.from_walgate(0.8, 0.3, _rot(0.3), _rot(0.3)),
    "eta-perp": lambda: QssEncoding.from_walgate(0.6, 0.6, IDENTITY2, np.array([[0, 1], [1, 0]], dtype=complex)),
    "ghz": lambda: QssEncoding.from_states(tensor(KET0, KET0), tensor(KET1, KET1)),
}


def preset(name: str) -> QssEncoding:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def random_generic_encoding(rng: np.random.Generator, min_gap: float = 0.05, min_angle: float = 0.05) -> QssEncoding:
    """Haar-random pair, rejected until ``|p - q| > min_gap`` and the eta angle exceeds ``min_angle``."""
    while True:
        x = rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2))
        qm, _ = np.linalg.qr(x)
        enc = QssEncoding.from_states(qm[:, 0], qm[:, 1])
        if abs(enc.p - enc.q) > min_gap and enc.eta_angle > min_angle:
            return enc


# ---------------------------------------------------------------- modified protocol


@dataclass(frozen=True)
class ModifiedResult:
    alice_outcome: str
    bc_state: np.ndarray = field(repr=False)
    logical_frame: np.ndarray = field(repr=False)
    first_party: str = "Bob"
    transcript: tuple = ()

    def frame_povm(self, target: Povm) -> Povm:
        """The POVM to run on the shared pair so that ``target`` is measured on the secret."""
        f = self.logical_frame
        return Povm(tuple(f @ e @ dagger(f) for e in target.elements), target.labels)


def run_modified_protocol(enc: QssEncoding, alpha, beta, seed: int | None = None, alice_outcome: str | None = None) -> ModifiedResult:
    """Alice teleports into ``(|0>|chi0> + |1>|chi1>)/sqrt 2`` and announces her outcome.

    The collapsed Bob-Charlie state equals ``V P psi`` with ``P`` the
    returned logical frame. Alice also picks (at random) which receiver
    measures first; this is recorded only.
    """
    psi = _normalized_input(alpha, beta)
    rng = np.random.default_rng(seed)
    chi0, chi1 = enc.chi0.amplitudes, enc.chi1.amplitudes
    shared = _s * np.concatenate([chi0, chi1])
    if alice_outcome is None:
        probs = [_bell_project(psi, shared, lab)[1] for lab in BELL_LABELS]
        alice_outcome = _choose(rng, BELL_LABELS, probs)
    bc, _ = _bell_project(psi, shared, alice_outcome)
    bc = bc / np.linalg.norm(bc)
    first = "Bob" if rng.random() < 0.5 else "Charlie"
    transcript = (("alice", alice_outcome), ("first", first))
    return ModifiedResult(alice_outcome, bc, LOGICAL_FRAME[alice_outcome], first, transcript)


# ---------------------------------------------------------------- certificates


@dataclass(frozen=True)
class TransferReport:
    min_deviation: float
    argmin_phi: np.ndarray
    grid_size: int


def _kphi(enc: QssEncoding, phis: np.ndarray) -> np.ndarray:
    a = enc.u0 @ enc.k0
    b = enc.u1 @ enc.k1
    c0 = phis[:, 0].conj()
    c1 = phis[:, 1].conj()
    return c0[:, None, None] * a + c1[:, None, None] * b


def transfer_deviation(enc: QssEncoding, phis: np.ndarray) -> np.ndarray:
    """``|| K^+K / (tr K^+K / 2) - I ||_F`` for each row of ``phis`` (kets in Bob's basis)."""
    phis = np.atleast_2d(phis)
    k = _kphi(enc, phis)
    g = np.einsum("nji,njk->nik", k.conj(), k)
    tr = np.real(np.einsum("nii->n", g))
    with np.errstate(divide="ignore", invalid="ignore"):
        m = g / (tr / 2)[:, None, None] - np.eye(2)
    dev = np.linalg.norm(m, axis=(1, 2))
    return np.where(tr > 1e-300, dev, np.inf)


def _bloch(theta, phi):
    return np.stack([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)], axis=-1)


def check_perfect_transfer(enc: QssEncoding, n_theta: int = 200, n_phi: int = 400, refine: int = 101) -> TransferReport:
    """Grid search over Bob's rank-one outcomes for one leaving Charlie a unitary image of the secret.

    The Bloch sphere is sampled on ``n_theta x n_phi`` points (both poles
    included), then a ``refine x refine`` grid spanning one cell either
    side of the best point is searched once.
    """
    th = np.linspace(0, np.pi, n_theta)
    ph = np.linspace(0, 2 * np.pi, n_phi, endpoint=False)
    tt, pp = np.meshgrid(th, ph, indexing="ij")
    dev = transfer_deviation(enc, _bloch(tt.ravel(), pp.ravel()))
    k = int(np.argmin(dev))
    best_t, best_p, best = tt.ravel()[k], pp.ravel()[k], dev[k]
    dt, dp = th[1] - th[0], ph[1] - ph[0]
    rt = np.clip(np.linspace(best_t - dt, best_t + dt, refine), 0, np.pi)
    rp = np.linspace(best_p - dp, best_p + dp, refine)
    rtt, rpp = np.meshgrid(rt, rp, indexing="ij")
    rdev = transfer_deviation(enc, _bloch(rtt.ravel(), rpp.ravel()))
    j = int(np.argmin(rdev))
    if rdev[j] < best:
        best_t, best_p, best = rtt.ravel()[j], rpp.ravel()[j], rdev[j]
    return TransferReport(float(best), _bloch(best_t, best_p), n_theta * n_phi + refine * refine)


@dataclass(frozen=True)
class BasisInfoReport:
    commutator_norm: float
    used_inverse_of: str


def check_basis_info(enc: QssEncoding, invert: str | None = None) -> BasisInfoReport:
    """Frobenius norm of ``[N, N^+]`` for ``N = U1 K1^{-1} K0 U0^+``.

    Zero means some basis could be read perfectly by Charlie alone. If
    ``K1`` is singular (``p = 1``) the roles are exchanged and
    ``N = U0 K0^{-1} K1 U1^+`` is used instead.
    """
    if enc.is_product:
        raise ExcludedCase("p = 1 and q = 0: the pair is locally distinguishable")
    if invert is None:
        invert = "K1" if enc.p < 1 - 1e-12 else "K0"
    if invert == "K1":
        n = enc.u1 @ np.linalg.inv(enc.k1) @ enc.k0 @ dagger(enc.u0)
    elif invert == "K0":
        if enc.q < 1e-12:
            raise ExcludedCase("K0 is singular")
        n = enc.u0 @ np.linalg.inv(enc.k0) @ enc.k1 @ dagger(enc.u1)
    else:
        raise ValueError("invert must be 'K0' or 'K1'")
    comm = n @ dagger(n) - dagger(n) @ n
    return BasisInfoReport(float(np.linalg.norm(comm)), invert)
