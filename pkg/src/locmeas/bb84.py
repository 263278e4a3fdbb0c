"""BB84 measurement on a qubit encoded across two qubits.

The four-outcome BB84 POVM is split as ``{00, 01} | {10, 11}``; the first
step is diagonal in the Breidbart basis, the second is projective.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import KET0, KET1, dagger, projector, tensor
from .povm import Povm
from .protocol import MeasurementPlan, compile_povm
from .simulate import OutcomeDistribution, exact_distribution
from .subspace import LogicalSubspace

LABELS = ("00", "01", "10", "11")
BOUNDARY_PHI = np.pi / 8

_C, _S = np.cos(np.pi / 8), np.sin(np.pi / 8)
B0 = np.array([_C, _S], dtype=complex)
B1 = np.array([-_S, _C], dtype=complex)
BREIDBART = np.column_stack([B0, B1])

KET_PLUS = (KET0 + KET1) / np.sqrt(2)
KET_MINUS = (KET0 - KET1) / np.sqrt(2)
HADAMARD = np.column_stack([KET_PLUS, KET_MINUS])

INPUT_PRESETS = {
    "0": KET0,
    "1": KET1,
    "+": KET_PLUS,
    "-": KET_MINUS,
    "+i": (KET0 + 1j * KET1) / np.sqrt(2),
    "-i": (KET0 - 1j * KET1) / np.sqrt(2),
}


def build_bb84_povm() -> Povm:
    """``{|0><0|, |+><+|, |1><1|, |-><-|} / 2`` labeled ``00, 01, 10, 11``."""
    kets = (KET0, KET_PLUS, KET1, KET_MINUS)
    return Povm(tuple(0.5 * projector(k) for k in kets), LABELS)


def _check_basis(m, name):
    m = np.asarray(m, dtype=complex)
    if m.shape != (2, 2) or np.max(np.abs(dagger(m) @ m - np.eye(2))) > 1e-12:
        raise ValueError(f"{name} must be a 2x2 unitary")
    return m


@dataclass(frozen=True)
class BB84Spec:
    """Encoding angle and the two bases of system B.

    Each basis holds ``eta_i`` and ``eta_i^perp`` as columns.
    """

    phi: float = BOUNDARY_PHI
    eta0_basis: np.ndarray = field(default_factory=lambda: np.eye(2, dtype=complex), repr=False)
    eta1_basis: np.ndarray = field(default_factory=lambda: HADAMARD.copy(), repr=False)

    def __post_init__(self):
        if not 0 <= self.phi <= np.pi / 2 + 1e-15:
            raise ValueError(f"phi={self.phi} outside [0, pi/2]")
        object.__setattr__(self, "eta0_basis", _check_basis(self.eta0_basis, "eta0_basis"))
        object.__setattr__(self, "eta1_basis", _check_basis(self.eta1_basis, "eta1_basis"))


def logical_pair(spec: BB84Spec) -> tuple[np.ndarray, np.ndarray]:
    """The Walgate-form pair ``|0_L>, |1_L>`` with ``p = 1 - q = cos^2 phi``."""
    e0, e0p = spec.eta0_basis[:, 0], spec.eta0_basis[:, 1]
    e1, e1p = spec.eta1_basis[:, 0], spec.eta1_basis[:, 1]
    c, s = np.cos(spec.phi), np.sin(spec.phi)
    zero_l = c * tensor(KET0, e0) + s * tensor(KET1, e1)
    one_l = s * tensor(KET0, e0p) + c * tensor(KET1, e1p)
    return zero_l, one_l


def build_encoding(spec: BB84Spec, frame: str = "computational") -> LogicalSubspace:
    """Encoding whose logical Breidbart kets are ``|0_L>`` and ``|1_L>``.

    With ``frame="computational"`` (default) the subspace maps the
    computational kets of the abstract qubit, so ``|0> -> cos(pi/8)|0_L> -
    sin(pi/8)|1_L>``, and the BB84 POVM can be used unchanged. With
    ``frame="breidbart"`` it maps ``|0> -> |0_L>``; POVMs then need
    :func:`to_breidbart_frame`.
    """
    zero_l, one_l = logical_pair(spec)
    if frame == "breidbart":
        return LogicalSubspace((2, 2), zero_l, one_l)
    if frame != "computational":
        raise ValueError(f"unknown frame {frame!r}")
    v = np.column_stack([zero_l, one_l]) @ dagger(BREIDBART)
    return LogicalSubspace((2, 2), v[:, 0], v[:, 1])


def to_breidbart_frame(p: Povm) -> Povm:
    """Express POVM elements in Breidbart coordinates."""
    w = BREIDBART
    return Povm(tuple(dagger(w) @ e @ w for e in p.elements), p.labels)


def compile_bb84(spec: BB84Spec) -> tuple[LogicalSubspace, MeasurementPlan]:
    ls = build_encoding(spec)
    return ls, compile_povm(ls, build_bb84_povm(), "balanced")


@dataclass(frozen=True)
class DemoResult:
    distribution: OutcomeDistribution
    strategy: str
    trace: tuple
    plan: MeasurementPlan = field(repr=False)


def run_demo(spec: BB84Spec, input_state="0") -> DemoResult:
    """Compile BB84 on the encoding, run it on ``input_state``, report the first-step strategy.

    ``input_state`` is a preset name or a 2-vector in computational
    coordinates of the abstract qubit.
    """
    if isinstance(input_state, str):
        psi = INPUT_PRESETS[input_state]
    else:
        psi = np.asarray(input_state, dtype=complex)
        psi = psi / np.linalg.norm(psi)
    ls, plan = compile_bb84(spec)
    dist = exact_distribution(plan, ls, psi[0], psi[1])
    first = plan.stage_trace("")
    strategy = first[0]["case"] if first else "None"
    return DemoResult(dist, strategy, plan.trace, plan)
