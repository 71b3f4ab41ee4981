"""Damping faults inside recovery procedures and in a single-ancilla ZZ gadget.

Faults are single A1 insertions conditioned on the decay happening, so the
returned weights carry the probability of that event and fidelities are
computed within it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channel import damping_kraus
from .decoders import build_procedure, run_procedure, syndrome_correct
from .engine import (
    Gate,
    Kraus,
    Measure,
    MeasurementProgram,
    QuantumState,
    apply_gate,
    apply_single,
    partial_trace,
    project_out,
    run_exact,
)
from .lattice import CodeSpec, Gauge, encode
from .pauli import PauliString


class Stage(enum.Enum):
    BeforeAll = "before-all"
    AfterZtilde = "after-ztilde"
    AfterZZGauge = "after-zz-gauge"
    AfterFirstCNOT = "after-first-cnot"
    AfterSecondCNOT = "after-second-cnot"

    @classmethod
    def parse(cls, value) -> "Stage":
        if isinstance(value, Stage):
            return value
        key = str(value).strip().lower().replace("_", "-")
        for s in cls:
            if key in (s.value, s.name.lower()):
                return s
        raise ValueError(f"unknown fault stage {value!r}; choose from {[s.value for s in cls]}")


@dataclass(frozen=True)
class FaultLocation:
    stage: Stage
    qubit: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "stage", Stage.parse(self.stage))


PROCEDURE_STAGES = {
    "clifford": (Stage.BeforeAll, Stage.AfterZZGauge),
    "teleport": (Stage.BeforeAll, Stage.AfterZtilde, Stage.AfterZZGauge),
    "teleport-multicolumn": (Stage.BeforeAll, Stage.AfterZtilde, Stage.AfterZZGauge),
}
GADGET_STAGES = (Stage.AfterFirstCNOT, Stage.AfterSecondCNOT)
ABSORBED = "absorbed"


@dataclass
class GadgetOutcome:
    """One ancilla-readout branch of the ZZ gadget.

    ``effective_kraus`` holds the operator this branch applies to the data
    pair (ancilla traced out by its readout); ``fault_operator`` is the map
    from the first data qubit to (that qubit, ancilla) at the fault.
    """

    syndrome_bit: object
    effective_kraus: list
    data_state: QuantumState | None
    weight: float
    fault_operator: np.ndarray | None = None


@dataclass
class InjectionResult:
    fidelity: float
    weight: float
    reports: list = field(default_factory=list)


def _gadget_steps(d1: int, d2: int, anc: int, gamma: float, fault: FaultLocation | None,
                  damped: bool) -> list:
    steps = [Gate("CNOT", (d1, anc))]
    kraus = damping_kraus(gamma)[1 if damped else 0].matrix
    if fault is not None and fault.stage is Stage.AfterFirstCNOT:
        steps.append(Kraus(kraus, anc, "ancilla"))
    steps.append(Gate("CNOT", (d2, anc)))
    if fault is not None and fault.stage is Stage.AfterSecondCNOT:
        steps.append(Kraus(kraus, anc, "ancilla"))
    return steps


def _apply_steps(state: QuantumState, steps) -> QuantumState:
    for step in steps:
        if isinstance(step, Gate):
            state = apply_gate(state, step.name, step.targets)
        else:
            state = apply_single(state, step.matrix, step.qubit)
    return state


def _basis(bits: Sequence[int]) -> QuantumState:
    return QuantumState.basis("".join(str(b) for b in bits))


def fault_operator(gamma: float, damped: bool = True) -> np.ndarray:
    """(data qubit x ancilla) <- data qubit map up to and including a fault after the first CNOT."""
    kraus = damping_kraus(gamma)[1 if damped else 0].matrix
    cols = []
    for b in (0, 1):
        s = _basis([b, 0])
        s = _apply_steps(s, [Gate("CNOT", (0, 1)), Kraus(kraus, 1)])
        cols.append(s.data)
    return np.array(cols).T


def _pair_kraus(gamma: float, fault: FaultLocation | None, damped: bool) -> dict:
    """Per readout value, the 4x4 operator on (d1, d2)."""
    steps = _gadget_steps(0, 1, 2, gamma, fault, damped)
    ops = {1: np.zeros((4, 4), dtype=complex), -1: np.zeros((4, 4), dtype=complex)}
    for col in range(4):
        s = _basis([col >> 1, col & 1, 0])
        s = _apply_steps(s, steps)
        out = s.data.reshape(4, 2)
        ops[1][:, col] = out[:, 0]
        ops[-1][:, col] = out[:, 1]
    return ops


def zz_gadget(state: QuantumState, data_pair: Sequence[int], gamma: float,
              fault: FaultLocation | None = None, damped: bool = True) -> list[GadgetOutcome]:
    """Measure ``Z Z`` on ``data_pair`` through one ancilla prepared in ``|0>``.

    ``fault`` places a damping event on the ancilla after the first or
    second CNOT; ``damped=False`` selects the complementary no-decay branch.
    """
    d1, d2 = (int(q) for q in data_pair)
    n = state.num_qubits
    if d1 == d2 or not (0 <= d1 < n and 0 <= d2 < n):
        raise ValueError(f"invalid data pair {tuple(data_pair)} for {n} qubits")
    if fault is not None and fault.stage not in GADGET_STAGES:
        raise ValueError(f"stage {fault.stage.value} is not a gadget location")
    anc = n
    zero = QuantumState(np.array([1, 0], dtype=complex), 1)
    joint = state.tensor(zero)
    prog = MeasurementProgram(_gadget_steps(d1, d2, anc, gamma, fault, damped))
    prog.add(Measure("ancilla", PauliString.on(n + 1, [anc], "Z")))
    kraus = _pair_kraus(gamma, fault, damped)
    fop = fault_operator(gamma, damped) if fault is not None and fault.stage is Stage.AfterFirstCNOT else None
    absorbed = fault is not None and fault.stage is Stage.AfterSecondCNOT and damped
    out = []
    for br in run_exact(joint, prog, prune=0.0):
        bit = br.outcomes["ancilla"]
        vec = np.array([1, 0] if bit == 1 else [0, 1], dtype=complex)
        data = project_out(br.post_state, anc, vec)
        out.append(GadgetOutcome(ABSORBED if absorbed else bit, [kraus[bit]], data, br.weight, fop))
    return out


def gadget_completeness(gamma: float, stage: Stage = Stage.AfterFirstCNOT) -> np.ndarray:
    """Sum of K^dag K over readouts and over decay / no-decay at one location."""
    fault = FaultLocation(stage)
    total = np.zeros((4, 4), dtype=complex)
    for damped in (True, False):
        for k in _pair_kraus(gamma, fault, damped).values():
            total += k.conj().T @ k
    return total


def _check_stage(procedure: str, fault: FaultLocation, spec: CodeSpec):
    if procedure not in PROCEDURE_STAGES:
        raise ValueError(f"fault injection supports {sorted(PROCEDURE_STAGES)}, got {procedure!r}")
    if fault.stage not in PROCEDURE_STAGES[procedure]:
        raise ValueError(f"stage {fault.stage.value} does not occur in the {procedure} procedure")
    if fault.qubit is None or not 0 <= fault.qubit < spec.num_qubits:
        raise ValueError("fault qubit must be a data qubit of the code block")
    if spec.gauge is not Gauge.Z:
        raise ValueError("fault injection needs a Z-gauge code")


def inject_and_run(spec: CodeSpec, procedure: str, fault: FaultLocation, gamma: float,
                   amplitudes=(1.0, 0.0)) -> InjectionResult:
    """Run ``procedure`` with one A1 inserted at ``fault``; fidelity is conditioned on that event."""
    _check_stage(procedure, fault, spec)
    alpha, beta = (complex(a) for a in amplitudes)
    state = encode(spec, (alpha, beta))
    a1 = damping_kraus(gamma)[1].matrix
    hooks = {fault.stage.name: [Kraus(a1, fault.qubit, "fault")]}
    branches = run_procedure(build_procedure(procedure, spec, state.num_qubits, hooks), state)
    target = np.array([alpha, beta])
    weight = sum(b.weight for b in branches)
    if weight <= 0:
        return InjectionResult(float("nan"), 0.0, [])
    overlap = 0.0
    for b in branches:
        s = b.logical
        if s.is_density:
            rho = s.data if s.num_qubits == 1 else partial_trace(s, [0]).data
            overlap += float(np.vdot(target, rho @ target).real)
        else:
            amps = s.data.reshape(2, -1)
            overlap += float(np.sum(np.abs(target.conj() @ amps) ** 2))
    return InjectionResult(overlap / weight, weight, [b.report for b in branches])


def ancilla_phase_propagation(spec: CodeSpec, row: int, gamma: float, b: int = 0) -> QuantumState:
    """Codeword ``|b>`` after a ZZ gadget on the first two qubits of ``row`` whose ancilla decays.

    The decay follows the first CNOT; the returned data state is summed over
    readouts (only one carries weight) and left unnormalized.
    """
    if spec.gauge is not Gauge.Z:
        raise ValueError("needs a Z-gauge code")
    if spec.cols < 2:
        raise ValueError("the gadget needs two qubits in the row")
    if not 0 <= row < spec.rows:
        raise ValueError("row out of range")
    state = encode(spec, (1.0, 0.0) if b == 0 else (0.0, 1.0))
    pair = (spec.qubit(row, 0), spec.qubit(row, 1))
    outs = zz_gadget(state, pair, gamma, FaultLocation(Stage.AfterFirstCNOT))
    data = sum(o.data_state.data for o in outs) if outs else np.zeros_like(state.data)
    return QuantumState(data, spec.num_qubits, True)


def restore_after_propagation(spec: CodeSpec, state: QuantumState) -> list:
    """One syndrome-correction cycle on a (normalized copy of a) propagated state."""
    return syndrome_correct(state.normalized(), spec)
