"""Bacon-Shor (n, m) codes: generators, logical operators and exact codewords.

Qubit ``(r, c)`` of the n x m grid is qubit ``r*m + c`` (row-major).  The
logical operators are fixed as X on the top row and Z on the left column.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .engine import QuantumState, _index_mask, permute
from .pauli import PauliString


class Gauge(enum.Enum):
    Z = "z"
    X = "x"

    @classmethod
    def parse(cls, value) -> "Gauge":
        if isinstance(value, Gauge):
            return value
        key = str(value).strip().lower()
        if key in ("z", "zgauge", "z-gauge"):
            return cls.Z
        if key in ("x", "xgauge", "x-gauge"):
            return cls.X
        raise ValueError(f"unknown gauge {value!r}; expected 'z' or 'x'")


@dataclass(frozen=True)
class CodeSpec:
    rows: int
    cols: int
    gauge: Gauge = Gauge.Z

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("a Bacon-Shor code needs at least one row and one column")
        object.__setattr__(self, "gauge", Gauge.parse(self.gauge))

    @property
    def num_qubits(self) -> int:
        return self.rows * self.cols

    def qubit(self, r: int, c: int) -> int:
        return r * self.cols + c

    def row(self, r: int) -> list[int]:
        return [self.qubit(r, c) for c in range(self.cols)]

    def column(self, c: int) -> list[int]:
        return [self.qubit(r, c) for r in range(self.rows)]

    def __str__(self):
        return f"({self.rows},{self.cols},{self.gauge.name}-gauge)"


def x_stabilizers(spec: CodeSpec) -> list[PauliString]:
    n = spec.num_qubits
    return [PauliString.on(n, spec.row(r) + spec.row(r + 1), "X") for r in range(spec.rows - 1)]


def z_stabilizers(spec: CodeSpec) -> list[PauliString]:
    n = spec.num_qubits
    return [PauliString.on(n, spec.column(c) + spec.column(c + 1), "Z") for c in range(spec.cols - 1)]


def stabilizer_generators(spec: CodeSpec) -> list[PauliString]:
    """X-type row-pair generators followed by Z-type column-pair generators."""
    return x_stabilizers(spec) + z_stabilizers(spec)


def zz_gauge_pairs(spec: CodeSpec) -> list[tuple[int, int]]:
    """Horizontally adjacent pairs, row by row."""
    return [(spec.qubit(r, c), spec.qubit(r, c + 1)) for r in range(spec.rows) for c in range(spec.cols - 1)]


def gauge_generators(spec: CodeSpec) -> list[PauliString]:
    n = spec.num_qubits
    if spec.gauge is Gauge.Z:
        return [PauliString.on(n, pair, "Z") for pair in zz_gauge_pairs(spec)]
    return [
        PauliString.on(n, (spec.qubit(r, c), spec.qubit(r + 1, c)), "X")
        for r in range(spec.rows - 1)
        for c in range(spec.cols)
    ]


def logical_operators(spec: CodeSpec) -> tuple[PauliString, PauliString]:
    n = spec.num_qubits
    return PauliString.on(n, spec.row(0), "X"), PauliString.on(n, spec.column(0), "Z")


def logical_y(spec: CodeSpec) -> PauliString:
    xbar, zbar = logical_operators(spec)
    # Y = i X Z
    return PauliString(spec.num_qubits, 0, 0, 1) * xbar * zbar


@lru_cache(maxsize=None)
def _zgauge_codeword(rows: int, cols: int, b: int) -> np.ndarray:
    if rows == 1:
        vec = np.zeros(1 << cols)
        vec[-1 if b else 0] = 1.0
        return vec
    sub0 = _zgauge_codeword(rows - 1, cols, b)
    sub1 = _zgauge_codeword(rows - 1, cols, 1 - b)  # X' on the smaller code swaps codewords
    zero = np.zeros(1 << cols)
    one = np.zeros(1 << cols)
    zero[0] = one[-1] = 1.0
    vec = np.kron(zero, sub0) + np.kron(one, sub1)
    return vec / np.linalg.norm(vec)


def _transposed(vec: np.ndarray, rows: int, cols: int) -> np.ndarray:
    # vec is indexed by qubits (c, r) of the (cols, rows) grid; re-index as (r, c)
    t = vec.reshape((2,) * (rows * cols))
    axes = [c * rows + r for r in range(rows) for c in range(cols)]
    return t.transpose(axes).reshape(-1)


def _hadamard_all(vec: np.ndarray, n: int) -> np.ndarray:
    # unnormalized +-1 Hadamards keep the integer structure exact
    h = np.array([[1.0, 1.0], [1.0, -1.0]])
    t = vec.reshape((2,) * n)
    for q in range(n):
        t = np.moveaxis(np.tensordot(h, t, axes=([1], [q])), 0, q)
    return t.reshape(-1)


def codeword(spec: CodeSpec, b: int) -> QuantumState:
    """The logical ``|b>`` codeword (Z-gauge recursion, or its transposed dual for X gauge)."""
    if b not in (0, 1):
        raise ValueError("logical bit must be 0 or 1")
    if spec.gauge is Gauge.Z:
        vec = _zgauge_codeword(spec.rows, spec.cols, b)
    else:
        # X gauge (n, m) = Hadamard-conjugated Z gauge (m, n) with logicals exchanged
        z0 = _zgauge_codeword(spec.cols, spec.rows, 0)
        z1 = _zgauge_codeword(spec.cols, spec.rows, 1)
        dual = (z0 + z1) if b == 0 else (z0 - z1)
        vec = _hadamard_all(_transposed(dual, spec.rows, spec.cols), spec.num_qubits)
        vec = vec / np.linalg.norm(vec)
    return QuantumState(vec.astype(complex), spec.num_qubits)


def encode(spec: CodeSpec, amplitudes) -> QuantumState:
    alpha, beta = (complex(a) for a in amplitudes)
    if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1) > 1e-12:
        raise ValueError("logical amplitudes must be normalized")
    data = alpha * codeword(spec, 0).data + beta * codeword(spec, 1).data
    return QuantumState(data, spec.num_qubits)


def encode_with_reference(spec: CodeSpec) -> QuantumState:
    """``(|0>|0>_R + |1>|1>_R)/sqrt2`` encoded on the code block; the reference is the last qubit."""
    zero = np.array([1, 0], dtype=complex)
    one = np.array([0, 1], dtype=complex)
    data = np.kron(codeword(spec, 0).data, zero) + np.kron(codeword(spec, 1).data, one)
    return QuantumState(data / np.sqrt(2), spec.num_qubits + 1)


def _syndrome_flips(spec: CodeSpec) -> list[PauliString]:
    """One Pauli per checked label (ZZ gauges, then X stabilizers) flipping only that label.

    All of them commute with the top-row X and the left-column Z.
    """
    n = spec.num_qubits
    flips = []
    for r in range(spec.rows):
        for c in range(spec.cols - 1):
            flips.append(PauliString.on(n, [spec.qubit(r, k) for k in range(c + 1, spec.cols)], "X"))
    for r in range(spec.rows - 1):
        flips.append(PauliString.on(n, [spec.qubit(k, 0) for k in range(r + 1, spec.rows)], "Z"))
    return flips


@lru_cache(maxsize=None)
def _unencoder_gather(rows: int, cols: int) -> tuple[np.ndarray, np.ndarray]:
    """Sparse rows of the unencoder: ``out[r] = sum_j coef[r, j] * psi[idx[r, j]]``."""
    spec = CodeSpec(rows, cols, Gauge.Z)
    n = spec.num_qubits
    flips = _syndrome_flips(spec)
    nf = len(flips)
    fx = np.array([_index_mask(f.xmask, n) for f in flips], dtype=np.int64)
    fz = np.array([_index_mask(f.zmask, n) for f in flips], dtype=np.int64)
    labels = np.arange(1 << nf, dtype=np.int64)
    bits = (labels[:, None] >> (nf - 1 - np.arange(nf))) & 1
    xi = np.bitwise_xor.reduce(bits * fx, axis=1)
    zi = np.bitwise_xor.reduce(bits * fz, axis=1)
    idx_rows, coef_rows = [], []
    for b in (0, 1):
        cw = _zgauge_codeword(rows, cols, b)
        support = np.flatnonzero(cw)
        amp = cw[support]
        idx = support[None, :] ^ xi[:, None]
        # Z flips act after the X flips, so their signs read the flipped index
        sign = 1 - 2 * (np.bitwise_count(idx & zi[:, None]) & 1).astype(np.int64)
        idx_rows.append(idx)
        coef_rows.append(sign * amp[None, :])
    return np.concatenate(idx_rows), np.concatenate(coef_rows)


def unencoder(spec: CodeSpec) -> np.ndarray:
    """Orthogonal matrix mapping the Z-gauge code block to ``logical (x) syndrome register``.

    Row ``(b, s)`` is the codeword ``|b>`` moved into syndrome sector ``s`` by
    Paulis that commute with both logical representatives, so the output
    qubit reads out the top-row X and left-column Z of *any* input state, as
    a Clifford unencoding circuit would.  Dense form, for small blocks only;
    :func:`apply_unencoder` works for any block size.
    """
    if spec.gauge is not Gauge.Z:
        raise ValueError("unencoding is defined for Z-gauge codes")
    if spec.num_qubits > 12:
        raise ValueError("code block too large for a dense unencoder")
    idx, coef = _unencoder_gather(spec.rows, spec.cols)
    dim = 1 << spec.num_qubits
    mat = np.zeros((dim, dim))
    np.put_along_axis(mat, idx, coef, axis=1)
    return mat


def _gather(arr: np.ndarray, idx: np.ndarray, coef: np.ndarray, axis: int) -> np.ndarray:
    arr = np.moveaxis(arr, axis, 0)
    shape = (-1,) + (1,) * (arr.ndim - 1)
    out = np.zeros(arr.shape, dtype=arr.dtype)
    for j in range(idx.shape[1]):
        out += coef[:, j].reshape(shape) * arr[idx[:, j]]
    return np.moveaxis(out, 0, axis)


def apply_unencoder(state: QuantumState, spec: CodeSpec, qubits) -> QuantumState:
    """Unencode the block on ``qubits``; the result has the block (logical qubit first) in front."""
    if spec.gauge is not Gauge.Z:
        raise ValueError("unencoding is defined for Z-gauge codes")
    qubits = list(qubits)
    if len(qubits) != spec.num_qubits:
        raise ValueError("qubit list does not match the code block")
    n = state.num_qubits
    rest = [q for q in range(n) if q not in qubits]
    s = permute(state, qubits + rest)
    idx, coef = _unencoder_gather(spec.rows, spec.cols)
    dk, dr = 1 << len(qubits), 1 << len(rest)
    if s.is_density:
        rho = s.data.reshape(dk, dr, dk, dr)
        rho = _gather(_gather(rho, idx, coef, 0), idx, coef, 2)
        data = rho.reshape(dk * dr, dk * dr)
    else:
        data = _gather(s.data.reshape(dk, dr), idx, coef, 0).reshape(-1)
    return QuantumState(data, n, True)
