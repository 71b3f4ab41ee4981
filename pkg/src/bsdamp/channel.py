"""Amplitude damping, its Pauli twirl, and order-truncated Kraus-string enumeration."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb, sqrt
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .engine import QuantumState, apply_pauli, apply_single
from .pauli import PauliString


def _check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not 0.0 <= gamma <= 1.0 or np.isnan(gamma):
        raise ValueError(f"damping probability must lie in [0, 1], got {gamma}")
    return gamma


class SingleQubitKraus(NamedTuple):
    label: str
    matrix: np.ndarray


def damping_kraus(gamma: float) -> tuple[SingleQubitKraus, SingleQubitKraus]:
    gamma = _check_gamma(gamma)
    a0 = np.array([[1.0, 0.0], [0.0, sqrt(1.0 - gamma)]], dtype=complex)
    a1 = np.array([[0.0, sqrt(gamma)], [0.0, 0.0]], dtype=complex)
    return SingleQubitKraus("A0", a0), SingleQubitKraus("A1", a1)


def a0_decomposition(gamma: float) -> tuple[float, float]:
    """Coefficients of I and Z in the no-decay operator."""
    s = sqrt(1.0 - _check_gamma(gamma))
    return (1.0 + s) / 2.0, (1.0 - s) / 2.0


@dataclass(frozen=True)
class TwirlDistribution:
    pI: float
    pX: float
    pY: float
    pZ: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.pI, self.pX, self.pY, self.pZ)

    def flip_probability(self) -> float:
        return self.pX + self.pY


def twirl_distribution(gamma: float) -> TwirlDistribution:
    gamma = _check_gamma(gamma)
    s = sqrt(1.0 - gamma)
    # pZ written as gamma^2 / (4 (2 - gamma + 2s)) avoids cancellation for small gamma
    pz = gamma * gamma / (4.0 * (2.0 - gamma + 2.0 * s))
    return TwirlDistribution((2.0 - gamma + 2.0 * s) / 4.0, gamma / 4.0, gamma / 4.0, pz)


def twirl_channel_kraus(gamma: float) -> list[tuple[float, PauliString]]:
    d = twirl_distribution(gamma)
    return [(p, PauliString.from_label(l)) for p, l in zip(d.as_tuple(), "IXYZ")]


@dataclass(frozen=True)
class KrausString:
    """Per-qubit choice of A0 (0) or A1 (1)."""

    labels: tuple

    @property
    def weight(self) -> int:
        return sum(self.labels)

    @property
    def damped(self) -> list[int]:
        return [q for q, a in enumerate(self.labels) if a]

    def __len__(self):
        return len(self.labels)

    def __str__(self):
        return "".join("A1" if a else "A0" for a in self.labels)

    @classmethod
    def with_damped(cls, num_qubits: int, damped: Sequence[int]) -> "KrausString":
        labels = [0] * num_qubits
        for q in damped:
            labels[q] = 1
        return cls(tuple(labels))


def kraus_strings_up_to_weight(num_qubits: int, t: int) -> Iterator[KrausString]:
    """Weight-major, then lexicographic in the damped positions."""
    if not 0 <= t <= num_qubits:
        raise ValueError("need 0 <= t <= number of qubits")
    for w in range(t + 1):
        for damped in itertools.combinations(range(num_qubits), w):
            yield KrausString.with_damped(num_qubits, damped)


def apply_string(state: QuantumState, s: KrausString, gamma: float,
                 qubits: Sequence[int] | None = None) -> QuantumState:
    """``(A_{s_0} x A_{s_1} x ...)`` on ``qubits`` (default: all, in order); unnormalized."""
    if qubits is None:
        if len(s) != state.num_qubits:
            raise ValueError("Kraus string length does not match the state")
        qubits = range(state.num_qubits)
    elif len(qubits) != len(s):
        raise ValueError("Kraus string length does not match the target qubits")
    a0, a1 = damping_kraus(gamma)
    out = state
    for q, lab in zip(qubits, s.labels):
        out = apply_single(out, a1.matrix if lab else a0.matrix, q)
    out.norm_is_weight = True
    return out


def truncation_bound(num_qubits: int, t: int, gamma: float) -> float:
    """Upper bound on the total weight of strings with more than ``t`` decays.

    Each string's weight is a mixture of Binomial(h, gamma) tails over the
    excitation number h <= num_qubits, so the full binomial tail bounds it.
    """
    gamma = _check_gamma(gamma)
    return float(sum(comb(num_qubits, w) * gamma**w * (1 - gamma) ** (num_qubits - w)
                     for w in range(t + 1, num_qubits + 1)))


def pauli_error_strings(num_qubits: int, t: int) -> Iterator[tuple[str, ...]]:
    """Strings over I/X/Y/Z with at most ``t`` non-identity letters."""
    for w in range(t + 1):
        for pos in itertools.combinations(range(num_qubits), w):
            for letters in itertools.product("XYZ", repeat=w):
                out = ["I"] * num_qubits
                for q, l in zip(pos, letters):
                    out[q] = l
                yield tuple(out)


def pauli_string_probability(letters: Sequence[str], gamma: float) -> float:
    d = twirl_distribution(gamma)
    table = {"I": d.pI, "X": d.pX, "Y": d.pY, "Z": d.pZ}
    return float(np.prod([table[l] for l in letters]))


def twirl_truncation_bound(num_qubits: int, t: int, gamma: float) -> float:
    d = twirl_distribution(gamma)
    p = 1.0 - d.pI
    return float(sum(comb(num_qubits, w) * p**w * d.pI ** (num_qubits - w)
                     for w in range(t + 1, num_qubits + 1)))


def apply_pauli_letters(state: QuantumState, letters: Sequence[str], qubits: Sequence[int]) -> QuantumState:
    n = state.num_qubits
    p = PauliString.identity(n)
    for q, l in zip(qubits, letters):
        if l != "I":
            p = p * PauliString.on(n, [q], l)
    return apply_pauli(state, p)


def damp_density(state: QuantumState, gamma: float, qubits: Sequence[int]) -> QuantumState:
    """Exact amplitude damping on each listed qubit of a density matrix."""
    if not state.is_density:
        state = state.to_density()
    a0, a1 = damping_kraus(gamma)
    for q in qubits:
        data = apply_single(state, a0.matrix, q).data + apply_single(state, a1.matrix, q).data
        state = QuantumState(data, state.num_qubits, state.norm_is_weight)
    return state


def twirl_density(state: QuantumState, gamma: float, qubits: Sequence[int]) -> QuantumState:
    """Exact Pauli-twirled damping on each listed qubit of a density matrix."""
    if not state.is_density:
        state = state.to_density()
    probs = twirl_distribution(gamma).as_tuple()
    n = state.num_qubits
    for q in qubits:
        data = probs[0] * state.data
        for p, l in zip(probs[1:], "XYZ"):
            if p:
                data = data + p * apply_pauli(state, PauliString.on(n, [q], l)).data
        state = QuantumState(data, n, state.norm_is_weight)
    return state
