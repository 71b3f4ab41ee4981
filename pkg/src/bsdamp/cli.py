"""Command-line experiment runner.

Every subcommand writes a table (CSV with a header, or JSON with ``meta`` and
``records``).  Output is a pure function of the configuration: fixed row
order, reals printed with 17 significant digits, no timestamps.

Exit codes: 0 success, 2 invalid configuration, 3 failed ``--assert``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass, field, fields

from . import __version__
from .analysis import (
    MonteCarlo,
    SLOPE_GRID,
    TruncatedKraus,
    fidelity_curve,
    kl_check,
    no_threshold_prob,
    parse_mode,
    recovery_order,
    row_damping_frequency,
)
from .channel import twirl_distribution
from .decoders import DECODER_NAMES
from .faults import PROCEDURE_STAGES, FaultLocation, Stage, inject_and_run
from .lattice import CodeSpec, Gauge

COMMANDS = ("kl-check", "curve", "order", "inject", "twirl", "threshold")
EXIT_OK, EXIT_CONFIG, EXIT_ASSERT = 0, 2, 3
OUTPUT_ENV = "BSDAMP_OUTPUT_DIR"
CURVE_COLUMNS = ("gamma", "fidelity", "infidelity", "mode", "truncation_bound", "shots", "seed")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    command: str
    code: tuple = (2, 2)
    gauge: str = "z"
    decoder: str = "clifford"
    channel: str = "damping"
    gamma_list: list = field(default_factory=list)
    mode: str = "exact-density"
    metric: str = "entanglement"
    t: int | None = None
    method: str = "slope"
    shots: int | None = None
    seed: int | None = None
    stage: str | None = None
    qubit: int | None = None
    amplitudes: tuple = (1.0, 0.0)
    output_path: str | None = None
    format: str = "csv"
    assert_pass: bool = False
    assert_t: int | None = None

    def spec(self) -> CodeSpec:
        return CodeSpec(self.code[0], self.code[1], Gauge.parse(self.gauge))

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if len(self.code) != 2 or min(self.code) < 1:
            raise ConfigError("--code needs two positive integers, e.g. --code 2,2")
        try:
            Gauge.parse(self.gauge)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.format not in ("csv", "json"):
            raise ConfigError("--format must be csv or json")
        if self.metric not in ("entanglement", "worst-case"):
            raise ConfigError("--metric must be entanglement or worst-case")
        if self.channel not in ("damping", "twirl"):
            raise ConfigError("--channel must be damping or twirl")
        if any(not 0.0 <= g <= 1.0 for g in self.gamma_list):
            raise ConfigError("every gamma must lie in [0, 1]")
        if self.command in ("curve", "order", "inject"):
            if self.decoder not in DECODER_NAMES:
                raise ConfigError(f"unknown decoder {self.decoder!r}; choose from {', '.join(DECODER_NAMES)}")
            if Gauge.parse(self.gauge) is not Gauge.Z:
                raise ConfigError(
                    f"decoder {self.decoder!r} needs --gauge z; X-gauge codes are only supported by kl-check"
                )
        if self.command == "curve":
            mc = self.mode.replace("_", "-") in ("monte-carlo", "mc", "montecarlo")
            if mc and (self.shots is None or self.seed is None):
                raise ConfigError("monte-carlo mode requires --shots and --seed")
            if not mc and (self.shots is not None or self.seed is not None):
                raise ConfigError("--shots/--seed apply only to --mode monte-carlo")
        if self.command == "threshold" and (self.shots is None) != (self.seed is None):
            raise ConfigError("threshold sampling needs both --shots and --seed")
        if self.command in ("kl-check",) and self.t is None:
            raise ConfigError("kl-check requires --t")
        if self.command == "order" and self.t is None and self.assert_t is None:
            raise ConfigError("order requires --t or --assert-t")
        if self.command == "inject":
            if self.decoder not in PROCEDURE_STAGES:
                raise ConfigError(f"inject supports decoders {sorted(PROCEDURE_STAGES)}")
            if self.stage is None or self.qubit is None:
                raise ConfigError("inject requires --stage and --qubit")
            try:
                stage = Stage.parse(self.stage)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
            if stage not in PROCEDURE_STAGES[self.decoder]:
                raise ConfigError(f"stage {stage.value} does not occur in the {self.decoder} procedure")
        if self.command == "twirl" and not self.gamma_list:
            raise ConfigError("twirl requires --gamma")


# ---------------------------------------------------------------------------
# parsing


def _pair(text: str) -> tuple:
    try:
        parts = tuple(int(p) for p in str(text).replace(" ", "").split(","))
    except ValueError:
        raise ConfigError(f"cannot parse {text!r} as n,m") from None
    if len(parts) != 2:
        raise ConfigError(f"expected two comma-separated integers, got {text!r}")
    return parts


def _floats(text) -> list:
    if isinstance(text, list):
        return [float(x) for x in text]
    try:
        return [float(x) for x in str(text).replace(" ", "").split(",") if x]
    except ValueError:
        raise ConfigError(f"cannot parse {text!r} as a list of numbers") from None


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    key = str(text).strip().lower()
    if key in ("1", "true", "yes", "on"):
        return True
    if key in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"cannot parse {text!r} as a boolean")


_FILE_ALIASES = {"assert": "assert_pass", "output": "output_path"}


def read_config_file(path: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment; keys mirror the long flags."""
    out = {}
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    for num, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{num}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        out[_FILE_ALIASES.get(key, key)] = value
    return out


_CONVERT = {
    "code": _pair,
    "gamma": _floats,
    "amplitudes": lambda v: tuple(_floats(v)),
    "t": int,
    "assert_t": int,
    "shots": int,
    "seed": int,
    "qubit": int,
    "assert_pass": _bool,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value file; flags override its values")
    common.add_argument("--code", help="rows,cols of the code, e.g. 2,2")
    common.add_argument("--gauge", help="z or x")
    common.add_argument("--decoder", help=", ".join(DECODER_NAMES))
    common.add_argument("--channel", help="damping or twirl")
    common.add_argument("--gamma", help="comma-separated damping probabilities")
    common.add_argument("--mode", help="exact-density, truncated or monte-carlo")
    common.add_argument("--metric", help="entanglement (default) or worst-case, for curve")
    common.add_argument("--t", type=int, help="target order / truncation order")
    common.add_argument("--method", help="slope or series (order command)")
    common.add_argument("--shots", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--stage", help="fault stage for inject, e.g. after-zz-gauge")
    common.add_argument("--qubit", type=int, help="data qubit hit by the fault")
    common.add_argument("--amplitudes", help="logical input alpha,beta for inject")
    common.add_argument("--output", dest="output_path", help="output file (default: stdout or $%s)" % OUTPUT_ENV)
    common.add_argument("--format", help="csv or json")
    common.add_argument("--assert", dest="assert_pass", action="store_const", const=True,
                        help="exit 3 when the check fails")
    common.add_argument("--assert-t", dest="assert_t", type=int, help="order to assert (order command)")
    parser = argparse.ArgumentParser(prog="bsdamp", description="Bacon-Shor amplitude-damping experiments")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in [
        ("kl-check", "error-correction conditions to order t"),
        ("curve", "fidelity against gamma"),
        ("order", "fitted recovery order"),
        ("inject", "single damping fault inside a procedure"),
        ("twirl", "Pauli-twirl probabilities"),
        ("threshold", "probability that every row decays"),
    ]:
        sub.add_parser(name, parents=[common], help=text)
    return parser


def config_from_args(argv=None) -> ExperimentConfig:
    args = build_parser().parse_args(argv)
    values = {}
    if args.config:
        values.update(read_config_file(args.config))
    for key, val in vars(args).items():
        if key in ("config",) or val is None:
            continue
        values[key] = val
    names = {f.name for f in fields(ExperimentConfig)}
    kwargs = {}
    for key, val in values.items():
        if key == "command":
            kwargs["command"] = val
            continue
        try:
            conv = _CONVERT.get(key, str)(val) if isinstance(val, str) else val
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key}: {val!r} ({exc})") from None
        if key == "gamma":
            key = "gamma_list"
        if key not in names:
            raise ConfigError(f"unknown configuration key {key!r}")
        kwargs[key] = conv
    kwargs["command"] = args.command
    cfg = ExperimentConfig(**kwargs)
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# execution


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def render(meta: dict, columns: list, records: list, fmt: str) -> str:
    if fmt == "json":
        body = {"meta": meta, "records": [{c: r.get(c) for c in columns} for r in records]}
        return json.dumps(body, indent=2, sort_keys=False) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in records:
        w.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def _meta(cfg: ExperimentConfig) -> dict:
    return {
        "command": cfg.command,
        "code": f"{cfg.code[0]},{cfg.code[1]}",
        "gauge": Gauge.parse(cfg.gauge).value,
        "decoder": cfg.decoder,
        "channel": cfg.channel,
        "version": __version__,
    }


def _run_kl(cfg):
    rep = kl_check(cfg.spec(), cfg.t)
    w = rep.witness
    rec = {
        "t": cfg.t,
        "passed": rep.passed,
        "pairs_checked": rep.pairs_checked,
        "witness_state": w.basis_state if w else None,
        "witness_pair": f"{w.pair[0]}|{w.pair[1]}" if w else None,
        "witness_kind": w.kind if w else None,
        "violation": w.violation if w else None,
        "exponent": w.exponent if w else None,
    }
    msg = "pass" if rep.passed else f"fail: witness |{w.basis_state}> from {w.pair[0]} vs {w.pair[1]}"
    return list(rec), [rec], rep.passed, msg


def _run_curve(cfg):
    grid = cfg.gamma_list or list(SLOPE_GRID)
    mode = parse_mode(cfg.mode, cfg.t, cfg.shots, cfg.seed)
    curve = fidelity_curve(cfg.spec(), cfg.decoder, grid, mode, cfg.channel, cfg.metric)
    recs = []
    for i, g in enumerate(curve.gamma_grid):
        recs.append({
            "gamma": g,
            "fidelity": curve.fidelity[i],
            "infidelity": curve.infidelity[i],
            "mode": mode.name if not isinstance(mode, TruncatedKraus) else f"truncated-{mode.t}",
            "truncation_bound": curve.truncation_bound[i] if curve.truncation_bound else None,
            "shots": mode.shots if isinstance(mode, MonteCarlo) else None,
            "seed": mode.seed if isinstance(mode, MonteCarlo) else None,
        })
    return list(CURVE_COLUMNS), recs, True, f"{len(recs)} points"


def _run_order(cfg):
    t = cfg.assert_t if cfg.assert_t is not None else cfg.t
    est = recovery_order(cfg.spec(), cfg.decoder, cfg.channel, t, cfg.method,
                         cfg.gamma_list or None)
    rec = {
        "method": est.method,
        "target_t": est.target_t,
        "slope": est.slope,
        "intercept": est.intercept,
        "passed": est.passed,
        "exact_to_precision": est.exact_to_precision,
    }
    cols = list(rec)
    for k, c in enumerate(est.coefficients or []):
        rec[f"c{k}"] = c
        cols.append(f"c{k}")
    return cols, [rec], est.passed, f"slope {est.slope:.4f}, {'pass' if est.passed else 'fail'} at t={t}"


def _run_inject(cfg):
    grid = cfg.gamma_list or [0.1]
    stage = Stage.parse(cfg.stage)
    recs = []
    for g in grid:
        res = inject_and_run(cfg.spec(), cfg.decoder, FaultLocation(stage, cfg.qubit), g, cfg.amplitudes)
        recs.append({"gamma": g, "stage": stage.value, "qubit": cfg.qubit,
                     "fidelity": res.fidelity, "weight": res.weight})
    return ["gamma", "stage", "qubit", "fidelity", "weight"], recs, True, f"{len(recs)} points"


def _run_twirl(cfg):
    recs = []
    for g in cfg.gamma_list:
        d = twirl_distribution(g)
        recs.append({"gamma": g, "pI": d.pI, "pX": d.pX, "pY": d.pY, "pZ": d.pZ})
    return ["gamma", "pI", "pX", "pY", "pZ"], recs, True, f"{len(recs)} points"


def _run_threshold(cfg):
    n, m = cfg.code
    recs = []
    ok = True
    for g in cfg.gamma_list or [0.1]:
        rec = {"n": n, "m": m, "gamma": g, "probability": no_threshold_prob(n, m, g),
               "frequency": None, "sigma": None, "shots": cfg.shots, "seed": cfg.seed}
        if cfg.shots is not None:
            freq, sigma = row_damping_frequency(n, m, g, cfg.shots, cfg.seed)
            rec["frequency"], rec["sigma"] = freq, sigma
            ok = ok and abs(freq - rec["probability"]) <= 4 * sigma
        recs.append(rec)
    return ["n", "m", "gamma", "probability", "frequency", "sigma", "shots", "seed"], recs, ok, f"{len(recs)} points"


RUNNERS = {
    "kl-check": _run_kl,
    "curve": _run_curve,
    "order": _run_order,
    "inject": _run_inject,
    "twirl": _run_twirl,
    "threshold": _run_threshold,
}


def _destination(cfg: ExperimentConfig) -> str | None:
    if cfg.output_path:
        return cfg.output_path
    base = os.environ.get(OUTPUT_ENV)
    if base:
        return os.path.join(base, f"{cfg.command}.{cfg.format}")
    return None


def run(cfg: ExperimentConfig, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        cfg.validate()
        columns, records, passed, summary = RUNNERS[cfg.command](cfg)
    except ValueError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_CONFIG
    text = render(_meta(cfg), columns, records, cfg.format)
    dest = _destination(cfg)
    if dest is None:
        stdout.write(text)
    else:
        os.makedirs(os.path.dirname(os.path.abspath(dest)), exist_ok=True)
        with open(dest, "w", newline="") as fh:
            fh.write(text)
    print(f"{cfg.command}: {summary}", file=stderr)
    wants_check = cfg.assert_pass or (cfg.command == "order" and cfg.assert_t is not None)
    if wants_check and not passed:
        print(f"{cfg.command}: assertion failed", file=stderr)
        return EXIT_ASSERT
    return EXIT_OK


def main(argv=None) -> int:
    try:
        cfg = config_from_args(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
