"""Order-t verification: Knill-Laflamme checks, fidelity curves, scaling fits.

Infidelities are accumulated as populations of the three Bell states
orthogonal to ``|Phi+>`` rather than as ``1 - F``.  Working at amplitude
level keeps values near 1e-15 meaningful, which the series fits rely on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channel import (
    apply_string,
    damp_density,
    kraus_strings_up_to_weight,
    pauli_error_strings,
    pauli_string_probability,
    truncation_bound,
    twirl_density,
    twirl_distribution,
    twirl_truncation_bound,
    apply_pauli_letters,
    damping_kraus,
)
from .decoders import DecoderBranch, build_procedure, run_procedure
from .engine import (
    QuantumState,
    apply_single,
    bell_amplitude_populations,
    bell_populations,
    make_rng,
    partial_trace,
)
from .lattice import CodeSpec, codeword, encode_with_reference

MAX_DENSITY_QUBITS = 12
KL_ZERO = 1e-13
DEGENERATE_INFIDELITY = 1e-13
SLOPE_GRID = tuple(np.logspace(-3, -2, 8))
SERIES_GAMMA_MAX = 1e-5
SERIES_TOLERANCE = 1e-3
CHANNELS = ("damping", "twirl")


# ---------------------------------------------------------------------------
# simulation modes


@dataclass(frozen=True)
class ExactDensity:
    name = "exact-density"


@dataclass(frozen=True)
class TruncatedKraus:
    t: int
    name = "truncated"


@dataclass(frozen=True)
class MonteCarlo:
    shots: int
    seed: int
    name = "monte-carlo"


def parse_mode(text: str, t: int | None = None, shots: int | None = None, seed: int | None = None):
    key = text.strip().lower().replace("_", "-")
    if key in ("exact-density", "exact", "density"):
        return ExactDensity()
    if key in ("truncated", "truncated-kraus", "kraus"):
        if t is None:
            raise ValueError("truncated mode needs an order t")
        return TruncatedKraus(int(t))
    if key in ("monte-carlo", "mc", "montecarlo"):
        if shots is None or seed is None:
            raise ValueError("monte-carlo mode needs shots and seed")
        return MonteCarlo(int(shots), int(seed))
    raise ValueError(f"unknown mode {text!r}; expected exact-density, truncated or monte-carlo")


# ---------------------------------------------------------------------------
# result types


@dataclass
class KLWitness:
    pair: tuple
    basis_state: str
    violation: float
    exponent: float
    kind: str


@dataclass
class KLReport:
    passed: bool
    t: int
    witness: KLWitness | None = None
    pairs_checked: int = 0


@dataclass
class FidelityCurve:
    gamma_grid: list
    fidelity: list
    infidelity: list
    mode: object
    channel: str = "damping"
    truncation_bound: list | None = None
    stderr: list | None = None


@dataclass
class OrderEstimate:
    slope: float
    intercept: float
    target_t: int
    passed: bool
    method: str = "slope"
    coefficients: list | None = None
    gammas: list = field(default_factory=list)
    infidelities: list = field(default_factory=list)
    exact_to_precision: bool = False


# ---------------------------------------------------------------------------
# Knill-Laflamme


def _grid_exponent(gammas: np.ndarray, values: np.ndarray) -> float:
    return float(np.polyfit(np.log(gammas), np.log(values), 1)[0])


def _dominant_basis_state(vecs: np.ndarray, kind: str, e: int, f: int) -> int:
    """Basis index carrying the largest share of one violation (ties: lowest index)."""
    if kind == "diagonal difference":
        contrib = vecs[0, e].conj() * vecs[0, f] - vecs[1, e].conj() * vecs[1, f]
    else:
        bl, br = (0, 1) if kind == "off-diagonal 01" else (1, 0)
        contrib = vecs[bl, e].conj() * vecs[br, f]
    mag = np.abs(contrib)
    return int(np.flatnonzero(mag >= mag.max() * (1 - 1e-9))[0])


def kl_check(spec: CodeSpec, t: int, gammas: Sequence[float] | None = None) -> KLReport:
    """Check the error-correction conditions for damping strings of weight <= t.

    For every pair (E, F) the quantities ``<0|E^dag F|1>``, ``<1|E^dag F|0>``
    and ``<0|E^dag F|0> - <1|E^dag F|1>`` are evaluated on a grid of gamma.
    A nonzero violation scaling as ``gamma**e`` spoils the recovery at
    density-matrix order ``2e - (w_E + w_F)/2``; it is acceptable when that
    order is at least ``t + 1``, i.e. ``e - (w_E + w_F)/4 >= (t+1)/2``.
    """
    if spec.num_qubits > 16:
        raise ValueError("kl_check supports at most 16 qubits")
    if t < 0 or t > spec.num_qubits:
        raise ValueError("need 0 <= t <= number of qubits")
    gammas = np.asarray(gammas if gammas is not None else np.logspace(-3, -2, 5), dtype=float)
    strings = list(kraus_strings_up_to_weight(spec.num_qubits, t))
    weights = np.array([s.weight for s in strings])
    cw = [codeword(spec, b) for b in (0, 1)]
    # vecs[g, b, s, :] = E_s |b>
    vecs = np.empty((len(gammas), 2, len(strings), 1 << spec.num_qubits), dtype=complex)
    for g, gamma in enumerate(gammas):
        for b in (0, 1):
            for k, s in enumerate(strings):
                vecs[g, b, k] = apply_string(cw[b], s, gamma).data
    gram = np.einsum("gasx,gbux->gabsu", vecs.conj(), vecs)
    kinds = {
        "off-diagonal 01": gram[:, 0, 1],
        "off-diagonal 10": gram[:, 1, 0],
        "diagonal difference": gram[:, 0, 0] - gram[:, 1, 1],
    }
    need = (t + 1) / 2
    failing = []
    for kind, viol in kinds.items():
        mag = np.abs(viol)
        nonzero = mag.max(axis=0) > KL_ZERO
        for e, f in zip(*np.nonzero(nonzero)):
            vals = mag[:, e, f]
            if np.any(vals <= 0):
                exponent = -math.inf
            else:
                exponent = _grid_exponent(gammas, vals) - (weights[e] + weights[f]) / 4
            if exponent < need - 0.05:
                failing.append((exponent, kind, e, f, vals[-1]))
    report = KLReport(not failing, t, None, len(strings) ** 2)
    if failing:
        lowest = min(c[0] for c in failing)
        best = None
        for exponent, kind, e, f, size in failing:
            if exponent > lowest + 1e-6:
                continue
            x = _dominant_basis_state(vecs[-1], kind, e, f)
            if best is None or x < best[0]:
                best = (x, exponent, kind, e, f, size)
        x, exponent, kind, e, f, size = best
        label = format(x, f"0{spec.num_qubits}b")
        report.witness = KLWitness((strings[e], strings[f]), label, float(size), float(exponent), kind)
    return report


# ---------------------------------------------------------------------------
# fidelity bookkeeping


def branch_populations(branch: DecoderBranch) -> np.ndarray:
    """Bell populations of (decoded logical, reference) for one decoder branch."""
    s = branch.logical
    if s.is_density:
        red = s if s.num_qubits == 2 else partial_trace(s, [0, 1])
        return bell_populations(red)
    return bell_amplitude_populations(s.data.reshape(4, -1))


def _populations(branches) -> np.ndarray:
    out = np.zeros(4)
    for br in branches:
        out += branch_populations(br)
    return out


def _logical_density(branches) -> np.ndarray:
    rho = np.zeros((4, 4), dtype=complex)
    for br in branches:
        s = br.logical
        if s.is_density:
            rho += (s if s.num_qubits == 2 else partial_trace(s, [0, 1])).data
        else:
            a = s.data.reshape(4, -1)
            rho += a @ a.conj().T
    return rho


_PAULI_EIGENSTATES = [
    np.array(v, dtype=complex) / np.linalg.norm(v)
    for v in ([1, 0], [0, 1], [1, 1], [1, -1], [1, 1j], [1, -1j])
]


def worst_case_fidelity(rho_lr: np.ndarray) -> float:
    """Minimum over the six Pauli eigenstates of the channel encoded in ``rho_lr``.

    ``rho_lr`` is the (logical, reference) state produced from ``|Phi+>``; the
    logical channel maps ``psi`` to ``2 tr_R[(1 x psi^T) rho]``.
    """
    rho = rho_lr.reshape(2, 2, 2, 2)
    vals = []
    for psi in _PAULI_EIGENSTATES:
        proj_t = np.outer(psi, psi.conj()).T
        out = 2 * np.einsum("arbs,sr->ab", rho, proj_t)
        vals.append(float(np.vdot(psi, out @ psi).real / np.trace(out).real))
    return min(vals)


def _check_channel(channel: str):
    if channel not in CHANNELS:
        raise ValueError(f"unknown channel {channel!r}; expected one of {CHANNELS}")


def _apply_channel_density(state: QuantumState, gamma: float, qubits, channel: str) -> QuantumState:
    if channel == "damping":
        return damp_density(state, gamma, qubits)
    return twirl_density(state, gamma, qubits)


def _error_terms(spec: CodeSpec, gamma: float, t: int, channel: str, psi: QuantumState):
    """Unnormalized post-channel vectors for every included error string."""
    N = spec.num_qubits
    qubits = list(range(N))
    if channel == "damping":
        for s in kraus_strings_up_to_weight(N, t):
            out = apply_string(psi, s, gamma, qubits)
            if out.weight() > 0:
                yield out
    else:
        for letters in pauli_error_strings(N, t):
            p = pauli_string_probability(letters, gamma)
            if p > 0:
                out = apply_pauli_letters(psi, letters, qubits)
                out = QuantumState(out.data * math.sqrt(p), out.num_qubits, True)
                yield out


def _point(spec, decoder, gamma, mode, channel, metric):
    """(fidelity, infidelity, truncation bound, stderr) at one gamma."""
    N = spec.num_qubits
    psi = encode_with_reference(spec)
    if isinstance(mode, ExactDensity):
        total = N + 1 + (N if decoder.startswith("teleport") else 0)
        if total > MAX_DENSITY_QUBITS:
            raise ValueError(
                f"exact-density mode is limited to {MAX_DENSITY_QUBITS} qubits; "
                f"{decoder} on {spec} needs {total}. Use truncated mode instead."
            )
        rho = _apply_channel_density(psi.to_density(), gamma, range(N), channel)
        branches = run_procedure(build_procedure(decoder, spec, N + 1), rho)
        return _summarize(branches, metric) + (0.0, None)
    if isinstance(mode, TruncatedKraus):
        if not 0 <= mode.t <= N:
            raise ValueError("truncation order must lie in [0, number of code qubits]")
        proc = build_procedure(decoder, spec, N + 1)
        branches = []
        for term in _error_terms(spec, gamma, mode.t, channel, psi):
            branches += run_procedure(proc, term)
        bound = (truncation_bound if channel == "damping" else twirl_truncation_bound)(N, mode.t, gamma)
        return _summarize(branches, metric) + (bound, None)
    if isinstance(mode, MonteCarlo):
        mean, err = _monte_carlo(spec, decoder, gamma, channel, mode.shots, mode.seed, psi)
        return mean, 1.0 - mean, 0.0, err
    raise TypeError(f"unknown mode {mode!r}")


def _summarize(branches, metric):
    if metric == "entanglement":
        pops = _populations(branches)
        return float(pops[0]), float(pops[1:].sum())
    if metric == "worst-case":
        f = worst_case_fidelity(_logical_density(branches))
        return f, 1.0 - f
    raise ValueError(f"unknown metric {metric!r}")


def _monte_carlo(spec, decoder, gamma, channel, shots, seed, psi):
    """Trajectory sampling with one counter-based stream per shot.

    Each shot draws an error string with its exact probability, then one
    decoder leaf with its exact probability.  Exact leaf distributions are
    memoized per error string, which keeps 1e5 shots cheap.
    """
    if shots < 1:
        raise ValueError("need at least one shot")
    N = spec.num_qubits
    proc = build_procedure(decoder, spec, N + 1)
    leaves: dict = {}

    def leaf_table(key, state):
        if key not in leaves:
            brs = run_procedure(proc, state.normalized())
            w = np.array([b.weight for b in brs])
            f = np.array([branch_populations(b)[0] for b in brs]) / w
            leaves[key] = (np.cumsum(w) / w.sum(), f)
        return leaves[key]

    if channel == "damping":
        a0, a1 = (k.matrix for k in damping_kraus(gamma))
        prefix_states = {(): psi}

        def prefix(p):
            if p not in prefix_states:
                prev = prefix(p[:-1])
                prefix_states[p] = apply_single(prev, a1 if p[-1] else a0, len(p) - 1)
            return prefix_states[p]
    else:
        cum = np.cumsum(twirl_distribution(gamma).as_tuple())

    values = np.empty(shots)
    for i in range(shots):
        rng = make_rng(seed, i)
        if channel == "damping":
            p: tuple = ()
            for _ in range(N):
                w = prefix(p).weight()
                p1 = prefix(p + (1,)).weight() / w if w > 0 else 0.0
                p = p + (int(rng.random() < p1),)
            key, state = p, prefix(p)
        else:
            letters = tuple("IXYZ"[min(int(np.searchsorted(cum, rng.random(), side="right")), 3)]
                            for _ in range(N))
            key = letters
            state = apply_pauli_letters(psi, letters, range(N)) if key not in leaves else psi
        cdf, fids = leaf_table(key, state)
        j = min(int(np.searchsorted(cdf, rng.random(), side="right")), len(fids) - 1)
        values[i] = fids[j]
    mean = float(values.mean())
    err = float(values.std(ddof=1) / math.sqrt(shots)) if shots > 1 else math.inf
    return mean, err


def fidelity_curve(spec: CodeSpec, decoder: str, gamma_grid: Sequence[float], mode=None,
                   channel: str = "damping", metric: str = "entanglement") -> FidelityCurve:
    """Entanglement fidelity of encode -> channel -> decode for each gamma.

    In truncated mode ``fidelity`` and ``infidelity`` are both partial sums
    over the included error strings; the true values exceed each by at most
    the reported truncation bound.
    """
    _check_channel(channel)
    mode = mode if mode is not None else ExactDensity()
    grid = [float(g) for g in gamma_grid]
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("gamma grid must be sorted ascending")
    fids, infs, bounds, errs = [], [], [], []
    for g in grid:
        f, i, b, e = _point(spec, decoder, g, mode, channel, metric)
        fids.append(f)
        infs.append(i)
        bounds.append(b)
        errs.append(e)
    return FidelityCurve(
        gamma_grid=grid,
        fidelity=fids,
        infidelity=infs,
        mode=mode,
        channel=channel,
        truncation_bound=bounds if isinstance(mode, TruncatedKraus) else None,
        stderr=errs if isinstance(mode, MonteCarlo) else None,
    )


def exact_mode(spec: CodeSpec, decoder: str, channel: str):
    """Fastest exact engine for the pair.

    Damping: every Kraus string enumerated on state vectors (2**N strings),
    which beats density matrices by a wide margin.  Twirl: density matrices
    when they fit, full Pauli enumeration otherwise.
    """
    N = spec.num_qubits
    total = N + 1 + (N if decoder.startswith("teleport") else 0)
    if channel == "twirl" and total <= MAX_DENSITY_QUBITS:
        return ExactDensity()
    return TruncatedKraus(N)


def recovery_order(spec: CodeSpec, decoder: str, channel: str, t: int, method: str = "slope",
                   gammas: Sequence[float] | None = None) -> OrderEstimate:
    """Fit the scaling of the infidelity and test it against order ``t``.

    ``slope``: least-squares slope of log(1-F) against log(gamma), exact
    engine, pass when the slope is at least ``t + 0.9``.
    ``series``: polynomial of degree t+1 fitted on t+3 small gammas with the
    order-t truncated engine; pass when every scaled coefficient of degree
    1..t is below 1e-3 of the scaled degree-(t+1) coefficient.
    """
    _check_channel(channel)
    if method == "slope":
        grid = np.asarray(gammas if gammas is not None else SLOPE_GRID, dtype=float)
        curve = fidelity_curve(spec, decoder, grid, exact_mode(spec, decoder, channel), channel)
        inf = np.asarray(curve.infidelity)
        if np.all(inf <= DEGENERATE_INFIDELITY):
            return OrderEstimate(math.inf, -math.inf, t, True, method, None, list(grid), list(inf), True)
        slope, intercept = np.polyfit(np.log(grid), np.log(np.maximum(inf, 1e-300)), 1)
        return OrderEstimate(float(slope), float(intercept), t, bool(slope >= t + 0.9), method,
                             None, list(grid), list(inf))
    if method == "series":
        gmax = SERIES_GAMMA_MAX if gammas is None else float(max(gammas))
        grid = (np.asarray(gammas, dtype=float) if gammas is not None
                else gmax * np.arange(1, t + 4) / (t + 3))
        curve = fidelity_curve(spec, decoder, grid, TruncatedKraus(t), channel)
        inf = np.asarray(curve.infidelity)
        if np.all(inf <= DEGENERATE_INFIDELITY * 1e-3):
            return OrderEstimate(math.inf, -math.inf, t, True, method, [0.0] * (t + 2),
                                 list(grid), list(inf), True)
        x = grid / gmax
        scaled = np.polynomial.polynomial.polyfit(x, inf, t + 1)
        coeffs = scaled / gmax ** np.arange(t + 2)
        lead = abs(scaled[t + 1])
        low = np.abs(scaled[1:t + 1])
        passed = bool(lead > 0 and np.all(low <= SERIES_TOLERANCE * lead))
        pos = inf > 0
        slope = float(np.polyfit(np.log(grid[pos]), np.log(inf[pos]), 1)[0]) if pos.sum() > 1 else math.nan
        return OrderEstimate(slope, math.nan, t, passed, method, [float(c) for c in coeffs],
                             list(grid), list(inf))
    raise ValueError(f"unknown method {method!r}; expected slope or series")


# ---------------------------------------------------------------------------
# absence of a threshold


def no_threshold_prob(n: int, m: int, gamma: float) -> float:
    """Probability that every row of an (n, m) block has at least one decay."""
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    if gamma == 0.0:
        return 0.0
    if gamma == 1.0:
        return 1.0
    # log of 1 - q with q = (1-g)^m, taking the accurate branch on each side of 1/2
    lq = m * math.log1p(-gamma)
    q = math.exp(lq)
    log_row = math.log1p(-q) if q < 0.5 else math.log(-math.expm1(lq))
    return math.exp(n * log_row)


def row_damping_frequency(n: int, m: int, gamma: float, shots: int, seed: int) -> tuple[float, float]:
    """Monte Carlo frequency of 'every row damped' with its binomial standard error."""
    rng = make_rng(seed, 0)
    hits = 0
    chunk = 10000
    done = 0
    while done < shots:
        k = min(chunk, shots - done)
        damped = rng.random((k, n, m)) < gamma
        hits += int(np.all(damped.any(axis=2), axis=1).sum())
        done += k
    p = hits / shots
    p_ref = no_threshold_prob(n, m, gamma)
    return p, math.sqrt(p_ref * (1 - p_ref) / shots)
