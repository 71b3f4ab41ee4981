"""Signed multi-qubit Pauli operators in bit-mask form.

Bit ``q`` of ``xmask``/``zmask`` refers to qubit ``q``.  The operator is

    i**phase * sigma_0 (x) sigma_1 (x) ... (x) sigma_{n-1}

where ``sigma_q`` is I, X, Z or Y according to the bits ``(x_q, z_q)``
(Y when both are set).  With this convention a Pauli string is Hermitian
exactly when ``phase`` is even, i.e. when its coefficient is +1 or -1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

_LETTERS = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}
_PHASES = (1, 1j, -1, -1j)


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True)
class PauliString:
    num_qubits: int
    xmask: int = 0
    zmask: int = 0
    phase: int = 0

    def __post_init__(self):
        if self.num_qubits < 0:
            raise ValueError("num_qubits must be non-negative")
        full = (1 << self.num_qubits) - 1
        if self.xmask & ~full or self.zmask & ~full:
            raise ValueError("mask has bits outside the register")
        object.__setattr__(self, "phase", self.phase % 4)

    # construction -----------------------------------------------------

    @classmethod
    def identity(cls, num_qubits: int) -> "PauliString":
        return cls(num_qubits)

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """Parse labels such as ``"XXII"``, ``"-ZIZI"`` or ``"+iY"``."""
        phase = 0
        body = label.strip()
        if body.startswith("-"):
            phase, body = 2, body[1:]
        elif body.startswith("+"):
            body = body[1:]
        if body.startswith("i"):
            phase, body = phase + 1, body[1:]
        x = z = 0
        for q, ch in enumerate(body):
            try:
                xb, zb = _LETTERS[ch]
            except KeyError:
                raise ValueError(f"bad Pauli letter {ch!r} in {label!r}") from None
            x |= xb << q
            z |= zb << q
        return cls(len(body), x, z, phase)

    @classmethod
    def on(cls, num_qubits: int, qubits: Iterable[int], letter: str) -> "PauliString":
        """The same single-qubit Pauli ``letter`` on every qubit in ``qubits``."""
        xb, zb = _LETTERS[letter]
        mask = 0
        for q in qubits:
            if not 0 <= q < num_qubits:
                raise ValueError(f"qubit {q} outside register of {num_qubits}")
            mask |= 1 << q
        return cls(num_qubits, mask * xb, mask * zb)

    # algebra ----------------------------------------------------------

    @property
    def coefficient(self) -> complex:
        return _PHASES[self.phase]

    @property
    def weight(self) -> int:
        return _popcount(self.xmask | self.zmask)

    @property
    def support(self) -> list[int]:
        m = self.xmask | self.zmask
        return [q for q in range(self.num_qubits) if m >> q & 1]

    def is_hermitian(self) -> bool:
        return self.phase % 2 == 0

    def _xz_phase(self) -> int:
        # exponent k with P = i^k X^x Z^z
        return self.phase + _popcount(self.xmask & self.zmask)

    def __mul__(self, other: "PauliString") -> "PauliString":
        if not isinstance(other, PauliString):
            return NotImplemented
        if other.num_qubits != self.num_qubits:
            raise ValueError("Pauli strings act on different register sizes")
        k = self._xz_phase() + other._xz_phase() + 2 * _popcount(self.zmask & other.xmask)
        x = self.xmask ^ other.xmask
        z = self.zmask ^ other.zmask
        return PauliString(self.num_qubits, x, z, k - _popcount(x & z))

    def __neg__(self) -> "PauliString":
        return PauliString(self.num_qubits, self.xmask, self.zmask, self.phase + 2)

    def commutes(self, other: "PauliString") -> bool:
        return (_popcount(self.xmask & other.zmask) + _popcount(self.zmask & other.xmask)) % 2 == 0

    def same_operator(self, other: "PauliString") -> bool:
        """Equality ignoring the overall phase."""
        return (self.num_qubits, self.xmask, self.zmask) == (
            other.num_qubits,
            other.xmask,
            other.zmask,
        )

    def embed(self, total: int, offset: int = 0) -> "PauliString":
        """Place this operator on qubits ``offset .. offset+n-1`` of a larger register."""
        if offset < 0 or offset + self.num_qubits > total:
            raise ValueError("embedding does not fit the target register")
        return PauliString(total, self.xmask << offset, self.zmask << offset, self.phase)

    def remap(self, qubits: list[int], total: int) -> "PauliString":
        """Send qubit ``q`` of this operator to qubit ``qubits[q]`` of a ``total``-qubit register."""
        if len(qubits) != self.num_qubits:
            raise ValueError("remap needs one target per qubit")
        x = z = 0
        for q, t in enumerate(qubits):
            x |= (self.xmask >> q & 1) << t
            z |= (self.zmask >> q & 1) << t
        return PauliString(total, x, z, self.phase)

    # display / dense form ----------------------------------------------

    def letters(self) -> str:
        out = []
        for q in range(self.num_qubits):
            out.append("IXZY"[(self.xmask >> q & 1) + 2 * (self.zmask >> q & 1)])
        return "".join(out)

    def __str__(self) -> str:
        return ("+", "+i", "-", "-i")[self.phase] + self.letters()

    def to_matrix(self) -> np.ndarray:
        """Dense matrix; only sensible for a handful of qubits."""
        mats = {
            "I": np.eye(2),
            "X": np.array([[0, 1], [1, 0]]),
            "Y": np.array([[0, -1j], [1j, 0]]),
            "Z": np.diag([1, -1]),
        }
        out = np.array([[self.coefficient]], dtype=complex)
        for ch in self.letters():
            out = np.kron(out, mats[ch])
        return out


def product(paulis: Iterable[PauliString], num_qubits: int) -> PauliString:
    out = PauliString.identity(num_qubits)
    for p in paulis:
        out = out * p
    return out
