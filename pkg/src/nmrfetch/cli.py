"""Command-line driver for the ensemble fetch experiment.

Subcommands
-----------
simulate   full pipeline: prepare, apply the query once, read out before
           and after spectra, decode marked items, check against the
           classical enumeration
spectrum   pre-query readout only
compile    print the pulse-sequence listing for a pattern
verify     dual-route consistency checks (compiled vs. direct oracle,
           hard-pulse vs. ideal, fast vs. dense)
bench      query-count comparison table for search strategies

Exit codes: 0 success (and verified), 2 verification mismatch,
3 configuration error, 4 numerical failure.  All artifacts are
byte-deterministic for a fixed configuration.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .compiler import (
    CompileError,
    GateSequence,
    build_query_network,
    expand_to_hard_pulses,
    format_sequence,
    sequence_report,
    sequence_unitary,
)
from .operators import MAX_DENSE_QUBITS, distance_up_to_global_phase, hadamard_like
from .plotting import spectrum_svg
from .spectrometer import (
    AcquisitionParams,
    DecodeError,
    Spectrum,
    SpectrometerError,
    acquire_fid,
    analytic_spectrum,
    classify_marked,
    decode_peaks,
    fft_spectrum,
    pick_peaks,
    spectrum_csv,
)
from .spin_system import (
    ConfigError,
    QueryPattern,
    SpinSystem,
    SpinSystemError,
    crotonic_default,
    load_spin_system_file,
)
from .states import (
    DensityState,
    StateError,
    apply_query_diagonal,
    apply_unitary,
    effective_pure_ancilla,
    thermal_state,
)

__all__ = [
    "RunConfig",
    "RunResult",
    "run_fetch",
    "classical_oracle",
    "bench_report",
    "direct_oracle_unitary",
    "main",
]

_BACKENDS = {"ideal": "ideal", "hard": "hard_pulse", "fast": "fast_diagonal"}
_INITS = {"thermal": "thermal", "eps": "effective_pure"}

EXIT_OK = 0
EXIT_MISMATCH = 2
EXIT_CONFIG = 3
EXIT_NUMERICAL = 4

# simulate cross-checks the FFT route against the closed-form route and
# treats disagreement beyond this (relative L-inf) as a numerical failure
_ROUTE_GUARD = 1e-5


@dataclass(frozen=True)
class RunConfig:
    system: SpinSystem
    pattern: QueryPattern
    init: str = "effective_pure"  # or "thermal"
    backend: str = "ideal"  # "ideal" | "hard_pulse" | "fast_diagonal"
    params: AcquisitionParams | None = None
    out_dir: str | None = None
    emit: tuple[str, ...] = ()
    decode_tolerance_hz: float = 0.3

    def __post_init__(self):
        if len(self.pattern.constraints) != self.system.n_database:
            raise ConfigError(
                f"pattern length {len(self.pattern.constraints)} does not match "
                f"{self.system.n_database} database qubits"
            )
        if self.init not in ("thermal", "effective_pure"):
            raise ConfigError(f"unknown init mode {self.init!r}")
        if self.backend not in ("ideal", "hard_pulse", "fast_diagonal"):
            raise ConfigError(f"unknown backend {self.backend!r}")
        if self.backend != "fast_diagonal" and self.system.n_spins > MAX_DENSE_QUBITS:
            raise ConfigError(
                f"backend {self.backend} needs a dense register; "
                f"{self.system.n_spins} spins exceed the {MAX_DENSE_QUBITS}-spin limit"
            )
        bad = set(self.emit) - {"csv", "json", "svg", "seq"}
        if bad:
            raise ConfigError(f"unknown emit kinds: {sorted(bad)}")


@dataclass(frozen=True)
class RunResult:
    before: Spectrum
    after: Spectrum
    marked: tuple[int, ...]
    expected: tuple[int, ...]
    inconsistent: tuple[int, ...]
    verified: bool
    oracle_calls: int
    peaks_before: tuple
    peaks_after: tuple
    sequence: GateSequence | None


def classical_oracle(pattern: QueryPattern, n: int) -> list[int]:
    """Ground truth: exhaustively enumerate matching items."""
    if n > 30:
        raise ConfigError("exhaustive oracle capped at 30 bits")
    return [i for i in range(2**n) if pattern.matches(i)]


def direct_oracle_unitary(system: SpinSystem, pattern: QueryPattern) -> np.ndarray:
    """Reference oracle built from first principles, bypassing the compiler.

    A matching item picks up exp(-i pi z) on the ancilla between the two
    basis-toggle pulses; everything else is untouched.
    """
    n = system.n_spins
    dim = 2**n
    half = dim // 2
    mask = pattern.match_mask(system.n_database)
    phases = np.ones(dim, dtype=complex)
    phases[:half][mask] = np.exp(-0.5j * math.pi)
    phases[half:][mask] = np.exp(0.5j * math.pi)
    h = hadamard_like(0, n)
    return h @ (phases[:, None] * h)


def _initial_state(cfg: RunConfig) -> DensityState:
    if cfg.init == "thermal":
        return thermal_state(cfg.system)
    return effective_pure_ancilla(cfg.system)


def _readout(
    state: DensityState, cfg: RunConfig, params: AcquisitionParams
) -> tuple[Spectrum, list]:
    """FID route spectrum plus decoded peaks, guarded by the analytic route."""
    fid = acquire_fid(state, cfg.system, params)
    spec = fft_spectrum(fid, params)
    ref = analytic_spectrum(state, cfg.system, params)
    top = float(np.max(np.abs(ref.amplitude)))
    if top > 0.0:
        gap = float(np.max(np.abs(spec.amplitude - ref.amplitude))) / top
        if gap > _ROUTE_GUARD:
            raise DecodeError(
                f"time-domain and closed-form spectra disagree ({gap:.2e} relative)"
            )
    peaks = decode_peaks(pick_peaks(spec), cfg.system, cfg.decode_tolerance_hz)
    return spec, peaks


def run_fetch(cfg: RunConfig) -> RunResult:
    """Prepare, query once, read out, decode, and verify."""
    params = cfg.params or AcquisitionParams.for_system(cfg.system)
    state = _initial_state(cfg)

    before_spec, before_peaks = _readout(state, cfg, params)

    oracle_calls = 0
    sequence: GateSequence | None = None
    if cfg.backend == "fast_diagonal":
        queried = apply_query_diagonal(state, cfg.pattern)
        oracle_calls += 1
    else:
        sequence = build_query_network(cfg.system, cfg.pattern)
        if cfg.backend == "hard_pulse":
            sequence = expand_to_hard_pulses(sequence, cfg.system)
        u = sequence_unitary(sequence, cfg.system)
        queried = apply_unitary(state, u)
        oracle_calls += 1

    after_spec, after_peaks = _readout(queried, cfg, params)

    verdict = classify_marked(after_peaks)
    expected = tuple(classical_oracle(cfg.pattern, cfg.system.n_database))
    verified = verdict.marked == expected and not verdict.inconsistent
    return RunResult(
        before=before_spec,
        after=after_spec,
        marked=verdict.marked,
        expected=expected,
        inconsistent=verdict.inconsistent,
        verified=verified,
        oracle_calls=oracle_calls,
        peaks_before=tuple(before_peaks),
        peaks_after=tuple(after_peaks),
        sequence=sequence,
    )


def bench_report(n_bits: int, n_marked: int) -> dict:
    """Query counts for competing search strategies on N = 2**n_bits items."""
    if n_bits < 1:
        raise ConfigError("n_bits must be at least 1")
    n_items = 2**n_bits
    if not 1 <= n_marked <= n_items:
        raise ConfigError("n_marked must lie in [1, 2**n_bits]")
    grover = math.ceil((math.pi / 4.0) * math.sqrt(n_items / n_marked))
    return {
        "n_bits": n_bits,
        "n_items": n_items,
        "n_marked": n_marked,
        "queries": {
            "classical_expected": n_items / (n_marked + 1),
            "grover": grover,
            "per_bit_bisection": n_bits,
            "ensemble_fetch": 1,
        },
        "notes": {
            "classical_expected": "mean draws without replacement, N/(M+1)",
            "grover": "ceil((pi/4) * sqrt(N/M)) amplitude-amplification rounds",
            "per_bit_bisection": "one ensemble query per address bit (single match)",
            "ensemble_fetch": "this package: one query, all matches read out at once",
        },
    }


# ---------------------------------------------------------------------------
# artifact plumbing
# ---------------------------------------------------------------------------


def _peak_dict(p) -> dict:
    return {
        "freq_hz": p.freq_hz,
        "amplitude": p.amplitude,
        "item": p.item,
        "manifold": p.manifold,
        "marked": p.amplitude < 0,
    }


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _json_text(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _acq_dict(params: AcquisitionParams) -> dict:
    return {
        "n_points": params.n_points,
        "dwell_s": params.dwell_s,
        "t2_s": params.t2_s,
        "carrier_hz": params.carrier_hz,
    }


def _system_dict(system: SpinSystem) -> dict:
    return {
        "labels": list(system.labels),
        "n_database": system.n_database,
        "ancilla": system.spins[0].label,
        "bit_signs": list(system.bit_signs),
    }


def _emit_run_artifacts(cfg: RunConfig, params, result: RunResult) -> None:
    if not cfg.emit:
        return
    if cfg.out_dir is None:
        raise ConfigError("--emit requires --out")
    out = Path(cfg.out_dir)
    if "csv" in cfg.emit:
        _write(out / "before_spectrum.csv", spectrum_csv(result.before))
        _write(out / "after_spectrum.csv", spectrum_csv(result.after))
    if "svg" in cfg.emit:
        _write(out / "before_spectrum.svg", spectrum_svg(result.before, title="before query"))
        _write(out / "after_spectrum.svg", spectrum_svg(result.after, title="after query"))
    if "seq" in cfg.emit:
        if result.sequence is None:
            raise ConfigError("fast backend has no pulse sequence to emit")
        _write(out / "sequence.seq", format_sequence(result.sequence))
    if "json" in cfg.emit:
        payload = {
            "system": _system_dict(cfg.system),
            "pattern": "".join(cfg.pattern.constraints),
            "init": cfg.init,
            "backend": cfg.backend,
            "acquisition": _acq_dict(params),
            "oracle_calls": result.oracle_calls,
            "marked_items": list(result.marked),
            "expected_items": list(result.expected),
            "inconsistent_items": list(result.inconsistent),
            "verified": result.verified,
            "peaks_before": [_peak_dict(p) for p in result.peaks_before],
            "peaks_after": [_peak_dict(p) for p in result.peaks_after],
            "sequence_report": (
                None
                if result.sequence is None
                else _report_dict(sequence_report(result.sequence))
            ),
            "fetch_seed": os.environ.get("FETCH_SEED"),
        }
        _write(out / "result.json", _json_text(payload))


def _report_dict(rep) -> dict:
    return {
        "n_pulses": rep.n_pulses,
        "pulse_counts": {f"{axis},{deg:g}": c for (axis, deg), c in sorted(rep.pulse_counts.items())},
        "n_zz": rep.n_zz,
        "n_virtual_z": rep.n_virtual_z,
        "n_delays": rep.n_delays,
        "total_duration_s": rep.total_duration_s,
    }


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; remap to the config-error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _load_system(spec: str) -> SpinSystem:
    if spec == "builtin":
        return crotonic_default()
    return load_spin_system_file(spec)


def _acq_from_args(system: SpinSystem, args) -> AcquisitionParams:
    base = AcquisitionParams.for_system(
        system,
        n_points=args.points,
        t2_s=args.t2,
    )
    if args.dwell is not None:
        base = AcquisitionParams(
            n_points=args.points, dwell_s=args.dwell, t2_s=args.t2
        )
    return base


def _add_common(p: argparse.ArgumentParser, pattern_required: bool) -> None:
    p.add_argument("--system", default="builtin", help="'builtin' or a config file path")
    if pattern_required is not None:
        p.add_argument(
            "--pattern",
            required=pattern_required,
            help="query string over {0,1,x}, qubit 1 leftmost",
        )


def _add_acquisition(p: argparse.ArgumentParser) -> None:
    p.add_argument("--points", type=int, default=16384, help="FID length (power of two)")
    p.add_argument("--dwell", type=float, default=None, help="dwell time in seconds")
    p.add_argument("--t2", type=float, default=2.0, help="coherence decay time in seconds")


def _add_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default=None, help="artifact directory")
    p.add_argument(
        "--emit",
        default="",
        help="comma list from csv,json,svg,seq (requires --out)",
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nmrfetch", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="full fetch run with verification")
    _add_common(sim, pattern_required=True)
    sim.add_argument("--init", choices=sorted(_INITS), default="eps")
    sim.add_argument("--backend", choices=sorted(_BACKENDS), default="ideal")
    _add_acquisition(sim)
    _add_output(sim)

    spec = sub.add_parser("spectrum", help="pre-query spectrum only")
    _add_common(spec, pattern_required=None)
    spec.add_argument("--init", choices=sorted(_INITS), default="eps")
    _add_acquisition(spec)
    _add_output(spec)

    comp = sub.add_parser("compile", help="pulse-sequence listing for a pattern")
    _add_common(comp, pattern_required=True)
    comp.add_argument("--backend", choices=["ideal", "hard"], default="ideal")
    _add_output(comp)

    ver = sub.add_parser("verify", help="dual-route oracle comparison")
    _add_common(ver, pattern_required=True)
    ver.add_argument("--backend", choices=sorted(_BACKENDS), default="ideal")

    ben = sub.add_parser("bench", help="query-count comparison table")
    ben.add_argument("--bits", type=int, default=56)
    ben.add_argument("--marked", type=int, default=1)
    _add_output(ben)
    return parser


def _emit_list(args) -> tuple[str, ...]:
    return tuple(tok for tok in args.emit.split(",") if tok) if args.emit else ()


# ---------------------------------------------------------------------------
# subcommand bodies
# ---------------------------------------------------------------------------


def _cmd_simulate(args) -> int:
    system = _load_system(args.system)
    cfg = RunConfig(
        system=system,
        pattern=QueryPattern.from_string(args.pattern),
        init=_INITS[args.init],
        backend=_BACKENDS[args.backend],
        params=_acq_from_args(system, args),
        out_dir=args.out,
        emit=_emit_list(args),
    )
    result = run_fetch(cfg)
    params = cfg.params
    print(f"system: {', '.join(system.labels)} (ancilla {system.spins[0].label})")
    print(f"pattern: {''.join(cfg.pattern.constraints)}  init: {cfg.init}  backend: {cfg.backend}")
    print(f"oracle calls: {result.oracle_calls}")
    print(f"peaks: {len(result.peaks_before)} before, {len(result.peaks_after)} after")
    print(f"marked items: {_format_items(result.marked)}")
    print(f"expected items: {_format_items(result.expected)}")
    if result.inconsistent:
        print(f"inconsistent items: {_format_items(result.inconsistent)}")
    print(f"verification: {'PASS' if result.verified else 'FAIL'}")
    _emit_run_artifacts(cfg, params, result)
    return EXIT_OK if result.verified else EXIT_MISMATCH


def _format_items(items) -> str:
    return "{" + ", ".join(str(i) for i in items) + "}" if items else "{}"


def _cmd_spectrum(args) -> int:
    system = _load_system(args.system)
    params = _acq_from_args(system, args)
    init = _INITS[args.init]
    state = (
        thermal_state(system) if init == "thermal" else effective_pure_ancilla(system)
    )
    fid = acquire_fid(state, system, params)
    spec = fft_spectrum(fid, params)
    peaks = decode_peaks(pick_peaks(spec), system)
    print(f"spectral width: {params.spectral_width_hz:g} Hz, {params.n_points} points")
    print(f"peaks found: {len(peaks)}")
    for p in peaks:
        print(
            f"  {p.freq_hz:+10.3f} Hz  amp {p.amplitude:+.6g}  "
            f"item {p.item} ({p.manifold})"
        )
    emit = _emit_list(args)
    if emit:
        if args.out is None:
            raise ConfigError("--emit requires --out")
        out = Path(args.out)
        if "csv" in emit:
            _write(out / "spectrum.csv", spectrum_csv(spec))
        if "svg" in emit:
            _write(out / "spectrum.svg", spectrum_svg(spec, title="pre-query spectrum"))
        if "json" in emit:
            payload = {
                "system": _system_dict(system),
                "init": init,
                "acquisition": _acq_dict(params),
                "peaks": [_peak_dict(p) for p in peaks],
                "fetch_seed": os.environ.get("FETCH_SEED"),
            }
            _write(out / "result.json", _json_text(payload))
        if "seq" in emit:
            raise ConfigError("spectrum subcommand has no sequence to emit")
    return EXIT_OK


def _cmd_compile(args) -> int:
    system = _load_system(args.system)
    pattern = QueryPattern.from_string(args.pattern)
    if len(pattern.constraints) != system.n_database:
        raise ConfigError(
            f"pattern length {len(pattern.constraints)} does not match "
            f"{system.n_database} database qubits"
        )
    seq = build_query_network(system, pattern)
    if args.backend == "hard":
        seq = expand_to_hard_pulses(seq, system)
    listing = format_sequence(seq)
    print(listing, end="")
    emit = _emit_list(args)
    if emit:
        if args.out is None:
            raise ConfigError("--emit requires --out")
        if set(emit) - {"seq"}:
            raise ConfigError("compile emits only 'seq'")
        _write(Path(args.out) / "sequence.seq", listing)
    return EXIT_OK


def _cmd_verify(args) -> int:
    system = _load_system(args.system)
    pattern = QueryPattern.from_string(args.pattern)
    if len(pattern.constraints) != system.n_database:
        raise ConfigError(
            f"pattern length {len(pattern.constraints)} does not match "
            f"{system.n_database} database qubits"
        )
    if system.n_spins > MAX_DENSE_QUBITS:
        raise ConfigError("verify needs a dense register")

    checks: list[tuple[str, float, float]] = []
    network = build_query_network(system, pattern)
    u_net = sequence_unitary(network, system)
    u_ref = direct_oracle_unitary(system, pattern)
    checks.append(("compiled network vs direct oracle", distance_up_to_global_phase(u_net, u_ref), 1e-9))

    if args.backend == "hard":
        hard = expand_to_hard_pulses(network, system)
        u_hard = sequence_unitary(hard, system)
        checks.append(("hard-pulse expansion vs ideal gates", distance_up_to_global_phase(u_hard, u_net), 1e-6))
    elif args.backend == "fast":
        state = thermal_state(system, polarization=1e-3)
        dense = apply_unitary(state, u_net).as_populations()
        fast = apply_query_diagonal(state, pattern).as_populations()
        checks.append(("fast diagonal vs dense populations", float(np.max(np.abs(dense - fast))), 1e-9))

    ok = True
    for name, value, tol in checks:
        good = value <= tol
        ok = ok and good
        print(f"{name}: max deviation {value:.3e} (tolerance {tol:g}) -> {'ok' if good else 'FAIL'}")
    return EXIT_OK if ok else EXIT_MISMATCH


def _cmd_bench(args) -> int:
    report = bench_report(args.bits, args.marked)
    q = report["queries"]
    print(f"database: {report['n_items']} items ({report['n_bits']} bits), {report['n_marked']} marked")
    rows = [
        ("classical (expected)", f"{q['classical_expected']:.6g}"),
        ("grover", str(q["grover"])),
        ("per-bit bisection", str(q["per_bit_bisection"])),
        ("ensemble fetch", str(q["ensemble_fetch"])),
    ]
    width = max(len(r[0]) for r in rows)
    print(f"{'strategy':<{width}}  queries")
    for name, val in rows:
        print(f"{name:<{width}}  {val}")
    emit = _emit_list(args)
    if emit:
        if args.out is None:
            raise ConfigError("--emit requires --out")
        if "json" in emit:
            _write(Path(args.out) / "bench.json", _json_text(report))
        if set(emit) - {"json"}:
            raise ConfigError("bench emits only 'json'")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits on bad flags and on --help
        return int(exc.code or 0)
    handlers = {
        "simulate": _cmd_simulate,
        "spectrum": _cmd_spectrum,
        "compile": _cmd_compile,
        "verify": _cmd_verify,
        "bench": _cmd_bench,
    }
    try:
        return handlers[args.command](args)
    except DecodeError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, SpinSystemError, CompileError, StateError, SpectrometerError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
