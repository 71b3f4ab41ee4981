"""Recovery procedures for Z-gauge Bacon-Shor codes under amplitude damping.

Every procedure compiles to a :class:`~bsdamp.engine.MeasurementProgram`
with classical feed-forward, plus a ``finish`` step that turns a measurement
leaf into a :class:`DecoderBranch`.  Branches carry two states:

``state``
    the physical output (a codeword for standard/syndrome/teleport, the
    decoded qubit for the Clifford decoder);
``logical``
    qubits ``[logical, spectators..., junk...]`` where spectators are the
    qubits the caller appended after the code block (e.g. a reference) and
    junk holds the syndrome register and discarded rows.  Density inputs have
    the junk traced out already (``num_junk == 0``).

Conventions: outcome keys ``zz{r}_{c}`` (ZZ gauge on (r,c),(r,c+1)),
``xs{i}`` (X stabilizers), ``zs{c}`` (Z stabilizers), ``zt{c}`` (column-wise
Z across the two teleportation blocks), ``m{r}_{c}`` (single-qubit
measurements).  Majority ties resolve to +1 / no flip of the first element.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .engine import (
    Apply,
    Measure,
    MeasurementBranch,
    MeasurementProgram,
    QuantumState,
    partial_trace,
    permute,
    project_out,
    run_exact,
    run_sampled,
)
from .lattice import CodeSpec, Gauge, apply_unencoder, codeword, x_stabilizers, z_stabilizers, zz_gauge_pairs
from .pauli import PauliString

DECODER_NAMES = ("standard", "clifford", "teleport", "teleport-multicolumn", "syndrome")


@dataclass
class RecoveryReport:
    damped_rows: list = field(default_factory=list)
    undamped_count: int = 0
    logical_flip_applied: bool = False
    corrections: list = field(default_factory=list)
    decode_basis_results: dict = field(default_factory=dict)
    failed: bool = False


@dataclass
class TeleportRecord:
    ztilde_per_column: list = field(default_factory=list)
    ell: int = 0
    xbar_majority: int = 1
    chosen_column: int = 0
    damped_rows: list = field(default_factory=list)
    corrections: list = field(default_factory=list)
    failed: bool = False


@dataclass
class DecoderBranch:
    weight: float
    state: QuantumState
    logical: QuantumState
    num_junk: int
    report: object
    outcomes: dict = field(default_factory=dict)


@dataclass
class Procedure:
    prepare: Callable[[QuantumState], QuantumState]
    program: MeasurementProgram
    finish: Callable[[MeasurementBranch], DecoderBranch]


# ---------------------------------------------------------------------------
# classical post-processing


def majority(values: Sequence[int]) -> int:
    """Majority of +-1 values; ties give +1."""
    return 1 if sum(values) >= 0 else -1


def repetition_decode(syndromes: Sequence[int]) -> list[int]:
    """Minimum-weight flip pattern for a repetition code from adjacent-pair checks.

    ``syndromes[i]`` is the +-1 check between elements ``i`` and ``i+1``.  On a
    tie the pattern leaving element 0 untouched is chosen.
    """
    e = [0]
    for s in syndromes:
        e.append(e[-1] ^ (s == -1))
    comp = [1 - b for b in e]
    return comp if sum(comp) < sum(e) else e


def reset_rows(damaged_rows: Sequence[int], x_syndromes: Sequence[int]) -> list[int]:
    """Damaged rows whose first qubit needs a Z so every X syndrome reads +1.

    Unknowns live only on damaged rows and each check couples neighbouring
    rows, so one top-to-bottom sweep solves the system.
    """
    n = len(x_syndromes) + 1
    damaged = set(damaged_rows)
    undamaged = [r for r in range(n) if r not in damaged]
    flip = [0] * n
    if 0 in damaged and undamaged:
        u = undamaged[0]
        flip[0] = sum(s == -1 for s in x_syndromes[:u]) % 2
    for i, s in enumerate(x_syndromes):
        flip[i + 1] = flip[i] ^ (s == -1)
    bad = [r for r in undamaged if flip[r]]
    assert not bad, f"X syndromes {list(x_syndromes)} cannot be reset from rows {sorted(damaged)}"
    return [r for r in range(n) if flip[r]]


def reset_pattern(damaged_rows: Sequence[int], x_syndromes: Sequence[int], spec: CodeSpec) -> PauliString:
    rows = reset_rows(damaged_rows, x_syndromes)
    return PauliString.on(spec.num_qubits, [spec.qubit(r, 0) for r in rows], "Z")


def damped_rows_from(outcomes: dict, spec: CodeSpec) -> list[int]:
    return [
        r for r in range(spec.rows)
        if any(outcomes.get(f"zz{r}_{c}", 1) == -1 for c in range(spec.cols - 1))
    ]


def _zz_steps(spec: CodeSpec, total: int) -> list:
    return [
        Measure(f"zz{a // spec.cols}_{a % spec.cols}", PauliString.on(total, (a, b), "Z"))
        for a, b in zz_gauge_pairs(spec)
    ]


# ---------------------------------------------------------------------------
# logical extraction


def extract_logical(state: QuantumState, code_qubits: Sequence[int], code: CodeSpec,
                    spectators: Sequence[int]) -> tuple[QuantumState, int]:
    """Unencode ``code_qubits`` with ``code``; return ``([logical, spectators, junk], n_junk)``."""
    n = state.num_qubits
    code_qubits = list(code_qubits)
    rest = [q for q in range(n) if q not in code_qubits]
    s = apply_unencoder(state, code, code_qubits)
    k = len(code_qubits)
    spec_pos = [k + rest.index(q) for q in spectators]
    others = [p for p in range(1, n) if p not in spec_pos]
    s = permute(s, [0] + spec_pos + others)
    s.norm_is_weight = True
    if s.is_density:
        return partial_trace(s, range(1 + len(spectators))), 0
    return s, n - 1 - len(spectators)


def _finish_codeword(br: MeasurementBranch, spec: CodeSpec, total: int, report) -> DecoderBranch:
    spectators = range(spec.num_qubits, total)
    logical, junk = extract_logical(br.post_state, range(spec.num_qubits), spec, spectators)
    return DecoderBranch(br.weight, br.post_state, logical, junk, report, br.outcomes)


# ---------------------------------------------------------------------------
# procedures


def _require_zgauge(spec: CodeSpec):
    if spec.gauge is not Gauge.Z:
        raise ValueError(f"decoder requires a Z-gauge code, got {spec}")


def standard_procedure(spec: CodeSpec, total: int, hooks: dict | None = None) -> Procedure:
    """Separate repetition-code correction of phase flips (rows) and bit flips (columns)."""
    hooks = hooks or {}
    xs = [p.embed(total) for p in x_stabilizers(spec)]
    zs = [p.embed(total) for p in z_stabilizers(spec)]
    prog = MeasurementProgram(list(hooks.get("BeforeAll", [])))
    prog.add(*[Measure(f"xs{i}", p) for i, p in enumerate(xs)])
    prog.add(*[Measure(f"zs{c}", p) for c, p in enumerate(zs)])

    def correction(o):
        rows = repetition_decode([o[f"xs{i}"] for i in range(len(xs))])
        cols = repetition_decode([o[f"zs{c}"] for c in range(len(zs))])
        p = PauliString.on(total, [spec.qubit(r, 0) for r, f in enumerate(rows) if f], "Z")
        p = p * PauliString.on(total, [spec.qubit(0, c) for c, f in enumerate(cols) if f], "X")
        return p if p.weight else None

    prog.add(Apply(correction))

    def finish(br):
        corr = correction(br.outcomes)
        rep = RecoveryReport([], spec.rows, False, [corr] if corr else [], dict(br.outcomes))
        return _finish_codeword(br, spec, total, rep)

    return Procedure(lambda s: s, prog, finish)


def clifford_procedure(spec: CodeSpec, total: int, hooks: dict | None = None) -> Procedure:
    """Detect damped rows, phase-correct the surviving rows, undo the logical flips, unencode."""
    _require_zgauge(spec)
    hooks = hooks or {}
    n, m = spec.rows, spec.cols

    def undamped(o):
        d = set(damped_rows_from(o, spec))
        return [r for r in range(n) if r not in d]

    prog = MeasurementProgram(list(hooks.get("BeforeAll", [])))
    prog.add(*_zz_steps(spec, total))
    prog.add(*hooks.get("AfterZZGauge", []))

    def sub_stabilizer(i):
        def op(o):
            u = undamped(o)
            if i + 1 < len(u):
                return PauliString.on(total, spec.row(u[i]) + spec.row(u[i + 1]), "X")
            return None
        return op

    prog.add(*[Measure(f"xs{i}", sub_stabilizer(i)) for i in range(n - 1)])

    def phase_fix(o):
        u = undamped(o)
        flips = repetition_decode([o[f"xs{i}"] for i in range(len(u) - 1)])
        rows = [u[k] for k, f in enumerate(flips) if f]
        return PauliString.on(total, [spec.qubit(r, 0) for r in rows], "Z") if rows else None

    def logical_flip(o):
        u = undamped(o)
        if u and (n - len(u)) % 2:
            return PauliString.on(total, spec.row(u[0]), "X")
        return None

    prog.add(Apply(phase_fix), Apply(logical_flip))

    def finish(br):
        o = br.outcomes
        u = undamped(o)
        failed = not u
        rows = u if u else list(range(n))
        sub = CodeSpec(len(rows), m)
        code_qubits = [q for r in rows for q in spec.row(r)]
        logical, junk = extract_logical(br.post_state, code_qubits, sub, range(spec.num_qubits, total))
        corr = [p for p in (phase_fix(o), logical_flip(o)) if p is not None]
        rep = RecoveryReport(
            damped_rows=damped_rows_from(o, spec),
            undamped_count=len(u),
            logical_flip_applied=bool(u) and (n - len(u)) % 2 == 1,
            corrections=corr,
            decode_basis_results=dict(o),
            failed=failed,
        )
        return DecoderBranch(br.weight, logical, logical, junk, rep, o)

    return Procedure(lambda s: s, prog, finish)


def syndrome_procedure(spec: CodeSpec, total: int, hooks: dict | None = None) -> Procedure:
    """ZZ-gauge bit-flip correction, phase correction on undamaged rows, then X-syndrome reset."""
    _require_zgauge(spec)
    hooks = hooks or {}
    n, m = spec.rows, spec.cols
    xs = [p.embed(total) for p in x_stabilizers(spec)]
    prog = MeasurementProgram(list(hooks.get("BeforeAll", [])))
    prog.add(*_zz_steps(spec, total))
    prog.add(*[Measure(f"xs{i}", p) for i, p in enumerate(xs)])

    def plan(o):
        damaged = damped_rows_from(o, spec)
        undamaged = [r for r in range(n) if r not in damaged]
        bit_qubits = []
        for r in damaged:
            flips = repetition_decode([o[f"zz{r}_{c}"] for c in range(m - 1)])
            bit_qubits += [spec.qubit(r, c) for c, f in enumerate(flips) if f]
        syn = [o[f"xs{i}"] for i in range(n - 1)]
        sub_syn = []
        for a, b in zip(undamaged, undamaged[1:]):
            sub_syn.append(int(np.prod(syn[a:b])))
        phase_rows = [undamaged[k] for k, f in enumerate(repetition_decode(sub_syn)) if f]
        updated = list(syn)
        for r in phase_rows:
            if r > 0:
                updated[r - 1] *= -1
            if r < n - 1:
                updated[r] *= -1
        reset = reset_rows(damaged, updated)
        return damaged, bit_qubits, phase_rows, reset

    def correction(o):
        _, bit_qubits, phase_rows, reset = plan(o)
        zq = [spec.qubit(r, 0) for r in phase_rows + reset]
        p = PauliString.on(total, bit_qubits, "X") * PauliString.on(total, zq, "Z")
        return p if p.weight else None

    prog.add(Apply(correction))

    def finish(br):
        o = br.outcomes
        damaged, *_ = plan(o)
        corr = correction(o)
        rep = RecoveryReport(damaged, n - len(damaged), False, [corr] if corr else [], dict(o))
        return _finish_codeword(br, spec, total, rep)

    return Procedure(lambda s: s, prog, finish)


def plus_codeword(spec: CodeSpec) -> QuantumState:
    data = (codeword(spec, 0).data + codeword(spec, 1).data) / np.sqrt(2)
    return QuantumState(data, spec.num_qubits)


def teleport_procedure(spec: CodeSpec, total: int, multi_column: bool = False,
                       hooks: dict | None = None) -> Procedure:
    """Codeword correction by one-bit teleportation into a fresh block B.

    Block A is the input code block (qubits ``0..N-1``); B is appended after
    every input qubit and starts in the logical ``|+>`` codeword.
    """
    _require_zgauge(spec)
    hooks = hooks or {}
    n, m = spec.rows, spec.cols
    N = spec.num_qubits
    T = total + N
    b_off = total
    columns = list(range(m)) if multi_column else [0]

    def prepare(state):
        return state.tensor(plus_codeword(spec))

    prog = MeasurementProgram(list(hooks.get("BeforeAll", [])))
    for c in columns:
        qs = spec.column(c) + [b_off + q for q in spec.column(c)]
        prog.add(Measure(f"zt{c}", PauliString.on(T, qs, "Z")))
    prog.add(*hooks.get("AfterZtilde", []))
    prog.add(*_zz_steps(spec, T))
    prog.add(*hooks.get("AfterZZGauge", []))

    def row_measure(r, c):
        def op(o):
            if r in damped_rows_from(o, spec):
                return PauliString.on(T, [spec.qubit(r, 0)], "Z") if c == 0 else None
            return PauliString.on(T, [spec.qubit(r, c)], "X")
        return op

    prog.add(*[Measure(f"m{r}_{c}", row_measure(r, c)) for r in range(n) for c in range(m)])

    def row_bits(o, r):
        bits = [0 if o[f"m{r}_0"] == 1 else 1]
        for c in range(m - 1):
            bits.append(bits[-1] ^ (o[f"zz{r}_{c}"] == -1))
        return bits

    def decide(o):
        damaged = damped_rows_from(o, spec)
        undamaged = [r for r in range(n) if r not in damaged]
        bits = {r: row_bits(o, r) for r in damaged}
        failed = False
        if multi_column:
            good = [c for c in columns if all(bits[r][c] == 1 for r in damaged)]
            if good:
                col = good[0]
            else:
                col, failed = 0, True
        else:
            col = 0
        ell = sum(1 for r in damaged if bits[r][col] == 0)
        zz_value = (-1) ** ell * o[f"zt{col}"]
        parities = [int(np.prod([o[f"m{r}_{c}"] for c in range(m)])) for r in undamaged]
        if not undamaged:
            failed = True
        x_value = majority(parities) if parities else 1
        return damaged, col, ell, zz_value, x_value, failed

    xbar_b = PauliString.on(T, [b_off + q for q in spec.row(0)], "X")
    zbar_b = PauliString.on(T, [b_off + q for q in spec.column(0)], "Z")
    prog.add(Apply(lambda o: xbar_b if decide(o)[3] == -1 else None))
    prog.add(Apply(lambda o: zbar_b if decide(o)[4] == -1 else None))

    # discarding A: measure whatever is left of it in Z and forget the result
    def leftover(r, c):
        def op(o):
            if c > 0 and r in damped_rows_from(o, spec):
                return PauliString.on(T, [spec.qubit(r, c)], "Z")
            return None
        return op

    prog.add(*[Measure(f"discard{r}_{c}", leftover(r, c)) for r in range(n) for c in range(1, m)])

    def finish(br):
        o = br.outcomes
        damaged, col, ell, zz_value, x_value, failed = decide(o)
        state = br.post_state
        for q in reversed(range(N)):
            key = f"m{q // m}_{q % m}" if f"m{q // m}_{q % m}" in o else f"discard{q // m}_{q % m}"
            val = o[key]
            if key.startswith("m") and (q // m) not in damaged:
                vec = np.array([1, val], dtype=complex) / np.sqrt(2)
            else:
                vec = np.array([1, 0] if val == 1 else [0, 1], dtype=complex)
            state = project_out(state, q, vec)
        # now [spectators..., B]; put B first
        S = total - N
        state = permute(state, list(range(S, S + N)) + list(range(S)))
        state.norm_is_weight = True
        logical, junk = extract_logical(state, range(N), spec, range(N, N + S))
        corr = []
        if zz_value == -1:
            corr.append(PauliString.on(N, spec.row(0), "X"))
        if x_value == -1:
            corr.append(PauliString.on(N, spec.column(0), "Z"))
        rec = TeleportRecord(
            ztilde_per_column=[o[f"zt{c}"] for c in columns],
            ell=ell,
            xbar_majority=x_value,
            chosen_column=col,
            damped_rows=damaged,
            corrections=corr,
            failed=failed,
        )
        return DecoderBranch(br.weight, state, logical, junk, rec, o)

    return Procedure(prepare, prog, finish)


def build_procedure(name: str, spec: CodeSpec, total: int, hooks: dict | None = None) -> Procedure:
    if name == "standard":
        return standard_procedure(spec, total, hooks)
    if name == "clifford":
        return clifford_procedure(spec, total, hooks)
    if name == "syndrome":
        return syndrome_procedure(spec, total, hooks)
    if name == "teleport":
        return teleport_procedure(spec, total, False, hooks)
    if name == "teleport-multicolumn":
        return teleport_procedure(spec, total, True, hooks)
    raise ValueError(f"unknown decoder {name!r}; choose from {', '.join(DECODER_NAMES)}")


def run_procedure(proc: Procedure, state: QuantumState, seed: int | None = None,
                  stream: int = 0, rng=None) -> list[DecoderBranch]:
    """Exact branch enumeration, or a single sampled branch when ``seed``/``rng`` is given."""
    prepared = proc.prepare(state)
    if seed is None and rng is None:
        return [proc.finish(br) for br in run_exact(prepared, proc.program)]
    leaf = run_sampled(prepared, proc.program, seed if seed is not None else 0, stream, rng=rng)
    return [proc.finish(leaf)]


def _run(name, state, spec, seed=None, hooks=None):
    if state.num_qubits < spec.num_qubits:
        raise ValueError("state is smaller than the code block")
    return run_procedure(build_procedure(name, spec, state.num_qubits, hooks), state, seed)


def standard_correct(state: QuantumState, spec: CodeSpec, seed: int | None = None) -> list[DecoderBranch]:
    return _run("standard", state, spec, seed)


def clifford_decode(state: QuantumState, spec: CodeSpec, seed: int | None = None) -> list[DecoderBranch]:
    return _run("clifford", state, spec, seed)


def syndrome_correct(state: QuantumState, spec: CodeSpec, seed: int | None = None) -> list[DecoderBranch]:
    return _run("syndrome", state, spec, seed)


def teleport_correct(state: QuantumState, spec: CodeSpec, multi_column: bool = False,
                     seed: int | None = None) -> list[DecoderBranch]:
    return _run("teleport-multicolumn" if multi_column else "teleport", state, spec, seed)


def decoded_qubit(branch: DecoderBranch) -> QuantumState:
    """Reduced state of the logical qubit (plus spectators) with the junk traced out."""
    s = branch.logical
    if branch.num_junk == 0:
        return s
    return partial_trace(s, range(s.num_qubits - branch.num_junk))
