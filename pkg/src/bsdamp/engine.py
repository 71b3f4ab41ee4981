"""Dense state-vector / density-matrix engine with exact branch enumeration.

Qubit 0 is the most significant bit of a basis index (the ``np.kron``
ordering), so ``|q0 q1 ... q_{n-1}>`` has index ``q0*2**(n-1) + ...``.
States may be unnormalized: a Kraus branch or measurement branch carries
its probability in the squared norm (vectors) or the trace (densities).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence, Union

import numpy as np

from .pauli import PauliString

PRUNE_THRESHOLD = 1e-14

SQRT_HALF = 1 / np.sqrt(2)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) * SQRT_HALF


@dataclass
class QuantumState:
    """A state vector of shape ``(2**n,)`` or a density matrix ``(2**n, 2**n)``."""

    data: np.ndarray
    num_qubits: int
    norm_is_weight: bool = False

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        dim = 1 << self.num_qubits
        if self.data.shape not in ((dim,), (dim, dim)):
            raise ValueError(f"data shape {self.data.shape} does not match {self.num_qubits} qubits")

    @property
    def is_density(self) -> bool:
        return self.data.ndim == 2

    @classmethod
    def from_vector(cls, vec, norm_is_weight: bool = False) -> "QuantumState":
        vec = np.asarray(vec, dtype=complex).ravel()
        n = int(round(np.log2(vec.size)))
        return cls(vec, n, norm_is_weight)

    @classmethod
    def basis(cls, bits: str) -> "QuantumState":
        vec = np.zeros(1 << len(bits), dtype=complex)
        vec[int(bits, 2) if bits else 0] = 1.0
        return cls(vec, len(bits))

    def weight(self) -> float:
        if self.is_density:
            return float(np.trace(self.data).real)
        return float(np.vdot(self.data, self.data).real)

    def copy(self) -> "QuantumState":
        return QuantumState(self.data.copy(), self.num_qubits, self.norm_is_weight)

    def normalized(self) -> "QuantumState":
        w = self.weight()
        if w <= 0:
            raise ValueError("cannot normalize a zero-weight state")
        scale = w if self.is_density else np.sqrt(w)
        return QuantumState(self.data / scale, self.num_qubits, False)

    def to_density(self) -> "QuantumState":
        if self.is_density:
            return self.copy()
        return QuantumState(np.outer(self.data, self.data.conj()), self.num_qubits, self.norm_is_weight)

    def tensor(self, other: "QuantumState") -> "QuantumState":
        if self.is_density != other.is_density:
            a, b = self.to_density(), other.to_density()
        else:
            a, b = self, other
        return QuantumState(
            np.kron(a.data, b.data),
            self.num_qubits + other.num_qubits,
            self.norm_is_weight or other.norm_is_weight,
        )

    def _with(self, data: np.ndarray, weighted: bool | None = None) -> "QuantumState":
        nw = self.norm_is_weight if weighted is None else weighted
        return QuantumState(data, self.num_qubits, nw)


# ---------------------------------------------------------------------------
# primitive left actions on the leading axis of a (2**n, k) array


@lru_cache(maxsize=None)
def _indices(n: int) -> np.ndarray:
    return np.arange(1 << n, dtype=np.int64)


def _index_mask(mask: int, n: int) -> int:
    out = 0
    for q in range(n):
        if mask >> q & 1:
            out |= 1 << (n - 1 - q)
    return out


@lru_cache(maxsize=4096)
def _pauli_tables(n: int, xmask: int, zmask: int) -> tuple[np.ndarray, np.ndarray]:
    idx = _indices(n)
    xi = _index_mask(xmask, n)
    zi = _index_mask(zmask, n)
    # sigma = i^{|x&z|} X^x Z^z
    letters = (1j) ** (bin(xmask & zmask).count("1") % 4)
    signs = (1 - 2 * (np.bitwise_count(idx & zi) & 1).astype(np.int64)) * letters
    return idx ^ xi, signs.astype(complex)


def _pauli_left(arr: np.ndarray, p: PauliString) -> np.ndarray:
    perm, signs = _pauli_tables(p.num_qubits, p.xmask, p.zmask)
    shaped = signs if arr.ndim == 1 else signs[:, None]
    out = (shaped * arr)[perm]
    return out if p.phase == 0 else p.coefficient * out


def _pauli_right_dag(arr: np.ndarray, p: PauliString) -> np.ndarray:
    """``arr @ P^dag`` for a matrix ``arr``."""
    perm, signs = _pauli_tables(p.num_qubits, p.xmask, p.zmask)
    out = (arr * signs.conj()[None, :])[:, perm]
    return out if p.phase == 0 else np.conj(p.coefficient) * out


def _single_left(arr: np.ndarray, mat: np.ndarray, q: int, n: int) -> np.ndarray:
    k = arr.shape[1] if arr.ndim == 2 else 1
    view = arr.reshape(1 << q, 2, 1 << (n - q - 1), k)
    out = np.einsum("ab,ibjk->iajk", mat, view)
    return out.reshape(arr.shape)


def _perm_left(arr: np.ndarray, perm: np.ndarray) -> np.ndarray:
    return arr[perm]


def _both_sides(state: QuantumState, left: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    if not state.is_density:
        return left(state.data)
    tmp = left(state.data)
    return left(tmp.conj().T).conj().T


def _check_width(state: QuantumState, p: PauliString):
    if p.num_qubits != state.num_qubits:
        raise ValueError(
            f"operator on {p.num_qubits} qubits applied to a {state.num_qubits}-qubit state"
        )


# ---------------------------------------------------------------------------
# public operations


def apply_pauli(state: QuantumState, p: PauliString) -> QuantumState:
    _check_width(state, p)
    if state.is_density:
        return state._with(_pauli_right_dag(_pauli_left(state.data, p), p))
    return state._with(_pauli_left(state.data, p))


def apply_single(state: QuantumState, mat: np.ndarray, qubit: int) -> QuantumState:
    """Apply a (not necessarily unitary) 2x2 operator; densities get ``M rho M^dag``."""
    n = state.num_qubits
    if not 0 <= qubit < n:
        raise ValueError(f"qubit {qubit} out of range")
    mat = np.asarray(mat, dtype=complex)
    out = state._with(_both_sides(state, lambda a: _single_left(a, mat, qubit, n)))
    if not np.allclose(mat.conj().T @ mat, np.eye(2)):
        out.norm_is_weight = True
    return out


@lru_cache(maxsize=None)
def _cnot_perm(n: int, control: int, target: int) -> np.ndarray:
    idx = _indices(n)
    cbit = 1 << (n - 1 - control)
    tbit = 1 << (n - 1 - target)
    return np.where(idx & cbit, idx ^ tbit, idx)


@lru_cache(maxsize=None)
def _cphase_signs(n: int, a: int, b: int) -> np.ndarray:
    idx = _indices(n)
    both = (idx >> (n - 1 - a) & 1) & (idx >> (n - 1 - b) & 1)
    return (1 - 2 * both).astype(complex)


def apply_gate(state: QuantumState, gate: str, targets: Sequence[int]) -> QuantumState:
    """Apply ``CNOT`` (control, target), ``CPHASE`` (a, b) or ``H`` (q)."""
    n = state.num_qubits
    targets = tuple(int(t) for t in targets)
    if len(set(targets)) != len(targets):
        raise ValueError("duplicate gate targets")
    if any(not 0 <= t < n for t in targets):
        raise ValueError("gate target out of range")
    gate = gate.upper()
    if gate == "H":
        if len(targets) != 1:
            raise ValueError("H takes one target")
        return state._with(_both_sides(state, lambda a: _single_left(a, HADAMARD, targets[0], n)))
    if len(targets) != 2:
        raise ValueError(f"{gate} takes two targets")
    if gate == "CNOT":
        perm = _cnot_perm(n, *targets)
        return state._with(_both_sides(state, lambda a: _perm_left(a, perm)))
    if gate == "CPHASE":
        signs = _cphase_signs(n, *targets)
        return state._with(
            _both_sides(state, lambda a: (signs if a.ndim == 1 else signs[:, None]) * a)
        )
    raise ValueError(f"unknown gate {gate!r}")


def expectation(state: QuantumState, p: PauliString) -> complex:
    """Unnormalized ``<psi|P|psi>`` (or ``tr(P rho)``)."""
    _check_width(state, p)
    if state.is_density:
        return complex(np.trace(_pauli_left(state.data, p)))
    return complex(np.vdot(state.data, _pauli_left(state.data, p)))


@dataclass
class MeasurementBranch:
    outcomes: dict = field(default_factory=dict)
    weight: float = 1.0
    post_state: QuantumState | None = None

    @property
    def outcome_list(self) -> list[int]:
        return list(self.outcomes.values())


def measure_pauli(state: QuantumState, p: PauliString) -> tuple[MeasurementBranch, MeasurementBranch]:
    """Project onto the +1 and -1 eigenspaces of a Hermitian Pauli string."""
    _check_width(state, p)
    if not p.is_hermitian():
        raise ValueError(f"cannot measure non-Hermitian Pauli {p}")
    if state.is_density:
        # P is Hermitian here, so P^dag = P and the branches are Pi rho Pi
        rho = state.data
        prho = _pauli_left(rho, p)
        half_plus = (rho + prho) / 2
        half_minus = (rho - prho) / 2
        plus = (half_plus + _pauli_right_dag(half_plus, p)) / 2
        minus = (half_minus - _pauli_right_dag(half_minus, p)) / 2
    else:
        pv = _pauli_left(state.data, p)
        plus = (state.data + pv) / 2
        minus = (state.data - pv) / 2
    out = []
    for data in (plus, minus):
        s = state._with(data, True)
        out.append(MeasurementBranch({}, s.weight(), s))
    return out[0], out[1]


# ---------------------------------------------------------------------------
# qubit bookkeeping


def permute(state: QuantumState, order: Sequence[int]) -> QuantumState:
    """New state whose qubit ``i`` is old qubit ``order[i]``."""
    n = state.num_qubits
    order = list(order)
    if sorted(order) != list(range(n)):
        raise ValueError("order must be a permutation of all qubits")
    if state.is_density:
        t = state.data.reshape((2,) * (2 * n))
        t = t.transpose(order + [n + o for o in order])
        return state._with(t.reshape(1 << n, 1 << n))
    t = state.data.reshape((2,) * n).transpose(order)
    return state._with(t.reshape(-1))


def partial_trace(state: QuantumState, keep: Sequence[int]) -> QuantumState:
    """Reduced density matrix on ``keep`` (in the given order)."""
    n = state.num_qubits
    keep = list(keep)
    rest = [q for q in range(n) if q not in keep]
    s = permute(state, keep + rest)
    dk, dr = 1 << len(keep), 1 << len(rest)
    if s.is_density:
        rho = s.data.reshape(dk, dr, dk, dr)
        red = np.einsum("ajbj->ab", rho)
    else:
        m = s.data.reshape(dk, dr)
        red = m @ m.conj().T
    return QuantumState(red, len(keep), state.norm_is_weight)


def apply_block(state: QuantumState, mat: np.ndarray, qubits: Sequence[int]) -> QuantumState:
    """Apply ``mat`` (rows: output basis, cols: input basis) to ``qubits`` and move them first.

    ``mat`` may be rectangular only if it keeps the dimension (it is applied as a
    linear map on the block); the returned state has the block qubits first,
    followed by the remaining qubits in their original order.
    """
    n = state.num_qubits
    qubits = list(qubits)
    rest = [q for q in range(n) if q not in qubits]
    s = permute(state, qubits + rest)
    dk, dr = 1 << len(qubits), 1 << len(rest)
    if mat.shape != (dk, dk):
        raise ValueError("block operator has the wrong dimension")
    if s.is_density:
        rho = s.data.reshape(dk, dr, dk, dr)
        rho = np.einsum("ab,bjck,dc->ajdk", mat, rho, mat.conj())
        return s._with(rho.reshape(dk * dr, dk * dr))
    return s._with((mat @ s.data.reshape(dk, dr)).reshape(-1))


def project_out(state: QuantumState, qubit: int, vec: np.ndarray) -> QuantumState:
    """Contract ``qubit`` with the single-qubit ket ``vec`` and drop it from the register."""
    n = state.num_qubits
    order = [qubit] + [q for q in range(n) if q != qubit]
    s = permute(state, order)
    vec = np.asarray(vec, dtype=complex)
    rest = 1 << (n - 1)
    if s.is_density:
        rho = s.data.reshape(2, rest, 2, rest)
        data = np.einsum("a,ajbk,b->jk", vec.conj(), rho, vec)
    else:
        data = vec.conj() @ s.data.reshape(2, rest)
    return QuantumState(data, n - 1, True)


# ---------------------------------------------------------------------------
# measurement programs


PauliSource = Union[PauliString, Callable[[dict], "PauliString | None"]]


@dataclass(frozen=True)
class Measure:
    """Measure a Pauli; ``op`` may depend on the outcomes recorded so far."""

    key: str
    op: PauliSource


@dataclass(frozen=True)
class Apply:
    """Apply a Pauli, or skip when the callable returns ``None``."""

    op: PauliSource


@dataclass(frozen=True)
class Gate:
    name: str
    targets: tuple


@dataclass(frozen=True)
class Kraus:
    """Insert a single-qubit operator (used for conditioned fault insertions)."""

    matrix: np.ndarray
    qubit: int
    label: str = ""


Step = Union[Measure, Apply, Gate, Kraus]


@dataclass
class MeasurementProgram:
    steps: list = field(default_factory=list)

    def __iter__(self):
        return iter(self.steps)

    def __len__(self):
        return len(self.steps)

    def add(self, *steps: Step) -> "MeasurementProgram":
        self.steps.extend(steps)
        return self

    def validate(self):
        seen = set()
        for step in self.steps:
            if isinstance(step, Measure):
                if step.key in seen:
                    raise ValueError(f"outcome key {step.key!r} used twice")
                seen.add(step.key)


def measure_qubit(key: str, qubit: int, basis: str, num_qubits: int) -> Measure:
    basis = basis.upper()
    if basis not in ("X", "Z"):
        raise ValueError("basis must be X or Z")
    return Measure(key, PauliString.on(num_qubits, [qubit], basis))


def _resolve(op: PauliSource, outcomes: dict):
    return op(outcomes) if callable(op) else op


def _step_deterministic(state: QuantumState, step, outcomes: dict) -> QuantumState:
    if isinstance(step, Apply):
        p = _resolve(step.op, outcomes)
        return state if p is None else apply_pauli(state, p)
    if isinstance(step, Gate):
        return apply_gate(state, step.name, step.targets)
    if isinstance(step, Kraus):
        return apply_single(state, step.matrix, step.qubit)
    raise TypeError(f"unknown program step {step!r}")


def run_exact(state: QuantumState, program, prune: float = PRUNE_THRESHOLD) -> list[MeasurementBranch]:
    """Enumerate every leaf of the measurement tree (``+1`` branch first).

    Branches whose weight falls below ``prune`` times the input weight are
    dropped.
    """
    if isinstance(program, MeasurementProgram):
        program.validate()
    w0 = state.weight()
    cut = prune * w0
    live = [MeasurementBranch({}, w0, state)]
    for step in program:
        nxt = []
        for br in live:
            if isinstance(step, Measure):
                p = _resolve(step.op, br.outcomes)
                if p is None:
                    nxt.append(br)
                    continue
                for val, child in zip((1, -1), measure_pauli(br.post_state, p)):
                    if child.weight > cut:
                        nxt.append(MeasurementBranch({**br.outcomes, step.key: val}, child.weight, child.post_state))
            else:
                s = _step_deterministic(br.post_state, step, br.outcomes)
                w = s.weight()
                if w > cut:
                    nxt.append(MeasurementBranch(br.outcomes, w, s))
        live = nxt
    return live


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator for shot ``stream`` of a run seeded with ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(stream)])))


def run_sampled(state: QuantumState, program, seed: int, stream: int = 0,
                rng: np.random.Generator | None = None) -> MeasurementBranch:
    """Draw one leaf with its exact probability.

    The returned branch weight is the leaf weight relative to the input; the
    post-state is renormalized.
    """
    if rng is None:
        rng = make_rng(seed, stream)
    w_in = state.weight()
    cur = state.normalized() if w_in > 0 else state
    outcomes: dict = {}
    prob = 1.0
    for step in program:
        if isinstance(step, Measure):
            p = _resolve(step.op, outcomes)
            if p is None:
                continue
            plus, minus = measure_pauli(cur, p)
            total = plus.weight + minus.weight
            p_plus = plus.weight / total
            if rng.random() < p_plus:
                chosen, val, q = plus, 1, p_plus
            else:
                chosen, val, q = minus, -1, 1 - p_plus
            outcomes[step.key] = val
            prob *= q
            cur = chosen.post_state.normalized()
        else:
            s = _step_deterministic(cur, step, outcomes)
            w = s.weight()
            if w <= 0:
                return MeasurementBranch(outcomes, 0.0, s)
            prob *= w
            cur = s.normalized()
    return MeasurementBranch(outcomes, prob, cur)


# ---------------------------------------------------------------------------
# figures of merit on a (reference, logical) pair

_BELL = np.array(
    [
        [1, 0, 0, 1],   # Phi+
        [1, 0, 0, -1],  # Phi-
        [0, 1, 1, 0],   # Psi+
        [0, 1, -1, 0],  # Psi-
    ],
    dtype=complex,
) * SQRT_HALF


def _as_two_qubit_density(rho) -> np.ndarray:
    if isinstance(rho, QuantumState):
        rho = rho.to_density().data
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError("expected a two-qubit density matrix")
    return rho


def entanglement_fidelity(rho_rl) -> float:
    """``<Phi+|rho|Phi+>`` for a (possibly subnormalized) two-qubit density matrix."""
    rho = _as_two_qubit_density(rho_rl)
    phi = _BELL[0]
    return float(np.vdot(phi, rho @ phi).real)


def bell_populations(rho_rl) -> np.ndarray:
    """Populations of (Phi+, Phi-, Psi+, Psi-)."""
    rho = _as_two_qubit_density(rho_rl)
    return np.einsum("ia,ab,ib->i", _BELL.conj(), rho, _BELL).real


def bell_amplitude_populations(amps: np.ndarray) -> np.ndarray:
    """Bell populations summed over a batch of two-qubit amplitude vectors.

    ``amps`` has shape ``(4, k)``; working at amplitude level keeps small
    orthogonal components free of cancellation against the O(1) overlap.
    """
    coeff = _BELL.conj() @ amps
    return np.sum(np.abs(coeff) ** 2, axis=1)
