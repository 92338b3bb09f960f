"""Command-line entry point: ``qtx curves | thresholds | verify | sweep``.

Exit codes are 0 on success, 1 when a verification check fails and 2 for
usage or configuration errors. Work is spread over a thread pool and
gathered in submission order, so output does not depend on the thread count.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from . import analysis, analytic, channel, fock
from .channel import LossPoint
from .fock import TruncationError
from .qubits import Encoding
from .simulate import InputAmplitude, Protocol, QuadratureSpec, average_over_bloch

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
CURVE_HEADER = ("r", "fidelity_direct", "fidelity_teleport", "success_direct", "success_teleport")
SWEEP_HEADER = ("alpha", "r", "encoding", "protocol", "fidelity", "success")
DEFAULT_COH_ALPHAS = (0.3, 0.979, 1.5)
RC_ALPHAS = (0.7, 1.0, 1.5, 2.0, 3.0)
EXACT_TOL = 1e-9
COH_TOL = 1e-4
LIMIT_TOL = 1e-3


class UsageError(Exception):
    pass


def fmt(x: float) -> str:
    """Locale-independent decimal with 12 significant digits."""
    return format(float(x), ".12g")


# --- configuration ----------------------------------------------------------------


def _thread_count(flag: int | None) -> int:
    if flag is not None:
        n = flag
    elif os.environ.get("QTX_THREADS"):
        try:
            n = int(os.environ["QTX_THREADS"])
        except ValueError:
            raise UsageError(f"QTX_THREADS must be an integer, got {os.environ['QTX_THREADS']!r}") from None
    else:
        n = os.cpu_count() or 1
    if n < 1:
        raise UsageError(f"thread count must be at least 1, got {n}")
    return n


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def read_config(path: str) -> list[str]:
    """Turn a ``key=value`` file into flag tokens; blank lines and ``#`` comments are skipped."""
    tokens = []
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    for num, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise UsageError(f"{path}:{num}: expected key=value, got {line!r}")
        tokens += ["--" + key.strip().replace("_", "-"), value.strip()]
    return tokens


def _pmap(fn: Callable, items: Sequence, threads: int) -> list:
    if threads == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _check_alpha(encoding: Encoding, alpha: float | None, required: bool = True) -> None:
    if encoding is Encoding.COH:
        if required and alpha is None:
            raise UsageError("--alpha is required for coherent-state qubits")
        if alpha is not None and alpha < 0:
            raise UsageError(f"--alpha must be non-negative, got {alpha}")
    elif alpha is not None:
        raise UsageError(f"--alpha is only meaningful for coherent-state qubits, not {encoding.value}")


def _r_grid(steps: int) -> np.ndarray:
    if steps < 2:
        raise UsageError(f"--steps must be at least 2, got {steps}")
    return np.linspace(0.0, 1.0, steps)


def _config_dict(args: argparse.Namespace) -> dict:
    skip = {"func", "config"}
    return {k: (v.value if hasattr(v, "value") else v) for k, v in sorted(vars(args).items()) if k not in skip}


def _emit(text: str, output: str | None) -> None:
    if output is None or output == "-":
        sys.stdout.write(text)
        return
    try:
        with open(output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {output}: {exc}") from None


def _csv(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _json(command: str, args: argparse.Namespace, key: str, items: list) -> str:
    return json.dumps({"command": command, "config": _config_dict(args), key: items}, indent=2) + "\n"


# --- curves -------------------------------------------------------------------


def _chunks(values: np.ndarray, n: int) -> list[np.ndarray]:
    return [c for c in np.array_split(values, min(n, values.size)) if c.size]


def cmd_curves(args: argparse.Namespace) -> int:
    enc = Encoding(args.encoding)
    _check_alpha(enc, args.alpha)
    r = _r_grid(args.steps)
    parts = _pmap(lambda chunk: analysis.sample_curves(enc, chunk, args.alpha), _chunks(r, args.threads), args.threads)
    samples = [s for part in parts for s in part]
    if args.format == "json":
        _emit(_json("curves", args, "rows", [asdict(s) for s in samples]), args.output)
    else:
        rows = ([fmt(getattr(s, k)) for k in CURVE_HEADER] for s in samples)
        _emit(_csv(CURVE_HEADER, rows), args.output)
    return EXIT_OK


# --- thresholds ---------------------------------------------------------------


def _report(fn: Callable[[], analysis.ThresholdReport], name: str) -> dict:
    try:
        out = fn().to_dict()
        out["no_crossing"] = False
        return out
    except analysis.NoCrossing as exc:
        return {"name": name, "no_crossing": True, "message": str(exc)}


def threshold_jobs(which: str, alphas: Sequence[float] | None) -> list[tuple[str, Callable]]:
    jobs: list[tuple[str, Callable]] = []
    if which in ("all", "classical-crossings"):
        jobs.append(("classical-crossings", analysis.classical_crossings))
    if which in ("all", "alpha-equal-photon"):
        jobs.append(("alpha_equal_mean_photon", analysis.alpha_equal_mean_photon))
    if which in ("all", "dominance"):
        jobs.append(("alpha_teleport_dominance", analysis.alpha_teleport_dominance))
    if which in ("all", "alpha-vs-psp"):
        for protocol in ("direct", "teleport"):
            for region in analysis.ComparisonRegion:
                jobs.append((f"alpha_vs_psp_{protocol}", lambda p=protocol, g=region: analysis.alpha_vs_psp(p, g)))
    if which in ("all", "rc-boundary"):
        for a in alphas or RC_ALPHAS:
            if not a > 0:
                raise UsageError(f"rc-boundary needs positive alpha, got {a}")
            jobs.append(("rc_boundary", lambda a=a: analysis.rc_boundary(a)))
    return jobs


def cmd_thresholds(args: argparse.Namespace) -> int:
    jobs = threshold_jobs(args.which, args.alpha)

    def run(job):
        name, fn = job
        if name == "classical-crossings":
            return [_report(lambda r=r: r, r.name) for r in fn()]
        return [_report(fn, name)]

    reports = [r for group in _pmap(run, jobs, args.threads) for r in group]
    _emit(_json("thresholds", args, "reports", reports), args.output)
    return EXIT_OK


# --- verify -------------------------------------------------------------------


@dataclass(frozen=True)
class Check:
    """One analytic-vs-oracle comparison; ``passed`` holds iff ``abs_diff <= tolerance``."""

    name: str
    analytic: float | None
    oracle: float | None
    abs_diff: float | None
    tolerance: float
    passed: bool
    error: str | None = None

    @classmethod
    def compare(cls, name: str, analytic_value: float, oracle_value: float, tolerance: float) -> "Check":
        diff = abs(float(analytic_value) - float(oracle_value))
        return cls(name, float(analytic_value), float(oracle_value), diff, tolerance, diff <= tolerance)

    @classmethod
    def failed(cls, name: str, analytic_value: float | None, tolerance: float, error: str) -> "Check":
        return cls(name, analytic_value, None, None, tolerance, False, error)


def _oracle_checks(
    enc: Encoding, alpha: float | None, r: float, quad: QuadratureSpec, n_max: int | None, amplitude: InputAmplitude
) -> list[Check]:
    p = LossPoint.from_r(float(r))
    tol = COH_TOL if enc is Encoding.COH else EXACT_TOL
    tag = f"{enc.value}" + (f"[alpha={fmt(alpha)}]" if alpha is not None else "") + f"@r={fmt(r)}"
    out = []
    for protocol in Protocol:
        want = analytic.fidelity(protocol.value, enc, p.t, alpha)
        try:
            avg = average_over_bloch(protocol, enc, p, alpha, quad, n_max, amplitude=amplitude)
        except TruncationError as exc:
            out.append(Check.failed(f"{tag}:{protocol.value}:fidelity", want, tol, f"truncation: {exc}"))
            continue
        out.append(Check.compare(f"{tag}:{protocol.value}:fidelity", want, avg.avg_fidelity, tol))
        if protocol is Protocol.TELEPORT:
            out.append(Check.compare(f"{tag}:teleport:success", analytic.p_success(enc, p.t), avg.avg_success, tol))
    return out


def _property_checks() -> list[Check]:
    out = []
    eta, n = 0.37, 20
    completeness = sum(e.conj().T @ e for e in channel.kraus_ops(eta, n))
    out.append(Check.compare("kraus_completeness", 0.0, float(np.abs(completeness - np.eye(n + 1)).max()), 1e-14))
    rho = fock.coherent_state(1.2, n).normalize().dm()
    two = channel.apply_loss(channel.apply_loss(rho, 0.6, [0]), 0.7, [0])
    one = channel.apply_loss(rho, 0.42, [0])
    out.append(Check.compare("loss_semigroup", 0.0, float(np.abs(two.matrix - one.matrix).max()), 1e-12))
    t = analysis.t_of_r(np.linspace(0.0, 1.0, 11))
    for protocol in ("direct", "teleport"):
        gap = np.max(np.abs(analytic.fidelity(protocol, "coh", t, 0.05) - analytic.fidelity(protocol, "vsp", t)))
        out.append(Check.compare(f"coh_small_alpha_limit:{protocol}", 0.0, float(gap), LIMIT_TOL))
    return out


def cmd_verify(args: argparse.Namespace) -> int:
    encodings = list(Encoding) if args.encoding == "all" else [Encoding(args.encoding)]
    if args.alpha is not None and Encoding.COH not in encodings:
        raise UsageError("--alpha is only meaningful for coherent-state qubits")
    if args.alpha is not None and any(a < 0 for a in args.alpha):
        raise UsageError("--alpha must be non-negative")
    if args.nmax is not None and args.nmax < 1:
        raise UsageError(f"--nmax must be at least 1, got {args.nmax}")
    try:
        quad = QuadratureSpec(args.n_theta, args.n_phi)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    amplitude = InputAmplitude(args.input_amplitude)
    tasks = []
    for enc in encodings:
        if enc is Encoding.COH:
            steps = args.steps or 11
            for a in args.alpha or DEFAULT_COH_ALPHAS:
                tasks += [(enc, a, r) for r in _r_grid(steps)]
        else:
            n_max = args.nmax if args.nmax is not None else 4
            tasks += [(enc, None, r, n_max) for r in _r_grid(args.steps or 21)]

    def run(task):
        enc, a, r, *rest = task
        n_max = rest[0] if rest else args.nmax
        return _oracle_checks(enc, a, r, quad, n_max, amplitude)

    checks = [c for group in _pmap(run, tasks, args.threads) for c in group]
    if args.encoding == "all":
        checks += _property_checks()
    _emit(_json("verify", args, "checks", [asdict(c) for c in checks]), args.output)
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAIL


# --- sweep ---------------------------------------------------------------------


def _alpha_values(args: argparse.Namespace) -> list[float]:
    if args.alpha:
        values = list(args.alpha)
    else:
        if args.alpha_steps < 1:
            raise UsageError("--alpha-steps must be at least 1")
        values = list(np.linspace(args.alpha_min, args.alpha_max, args.alpha_steps))
    if any(not a >= 0 for a in values):
        raise UsageError("sweep amplitudes must be non-negative")
    return values


def cmd_sweep(args: argparse.Namespace) -> int:
    r = _r_grid(args.steps)
    alphas = _alpha_values(args)
    encodings = [Encoding(e) for e in args.encodings.split(",")] if args.encodings else [Encoding.COH]

    def rows_for(job):
        enc, a = job
        t = analysis.t_of_r(r)
        success = np.broadcast_to(analytic.p_success(enc, t), r.shape)
        out = []
        fids = {p: np.broadcast_to(analytic.fidelity(p, enc, t, a), r.shape) for p in ("direct", "teleport")}
        for i, ri in enumerate(r):
            for p in ("direct", "teleport"):
                s = 1.0 if p == "direct" else success[i]
                out.append(("" if a is None else fmt(a), fmt(ri), enc.value, p, fmt(fids[p][i]), fmt(s)))
        return out

    jobs = []
    for enc in encodings:
        jobs += [(enc, a) for a in alphas] if enc is Encoding.COH else [(enc, None)]
    rows = [row for group in _pmap(rows_for, jobs, args.threads) for row in group]
    if args.format == "json":
        _emit(_json("sweep", args, "rows", [dict(zip(SWEEP_HEADER, row)) for row in rows]), args.output)
    else:
        _emit(_csv(SWEEP_HEADER, rows), args.output)
    return EXIT_OK


# --- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, help="worker threads (default: $QTX_THREADS or CPU count)")
    common.add_argument("--output", "-o", help="output path (default: stdout)")
    common.add_argument("--config", help="file of key=value lines; flags take precedence")

    parser = argparse.ArgumentParser(prog="qtx", description="Loss-channel fidelity curves, thresholds and oracle checks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curves", parents=[common], help="tabulate fidelity and success curves against r")
    p.add_argument("--encoding", choices=[e.value for e in Encoding], required=True)
    p.add_argument("--alpha", type=float)
    p.add_argument("--steps", type=int, default=101)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("thresholds", parents=[common], help="solve for crossings and amplitude thresholds")
    p.add_argument(
        "--which",
        choices=["all", "classical-crossings", "alpha-equal-photon", "dominance", "alpha-vs-psp", "rc-boundary"],
        default="all",
    )
    p.add_argument("--alpha", type=_float_list, help="comma-separated amplitudes for rc-boundary")
    p.set_defaults(func=cmd_thresholds)

    p = sub.add_parser("verify", parents=[common], help="compare the Fock-space oracle with the closed forms")
    p.add_argument("--encoding", choices=["all"] + [e.value for e in Encoding], default="all")
    p.add_argument("--alpha", type=_float_list, help="comma-separated coherent amplitudes")
    p.add_argument("--nmax", type=int, help="Fock truncation (default: 4, or adaptive for coherent qubits)")
    p.add_argument("--steps", type=int, help="r-grid points (default: 21, or 11 for coherent qubits)")
    p.add_argument("--n-theta", type=int, default=32)
    p.add_argument("--n-phi", type=int, default=32)
    p.add_argument("--input-amplitude", choices=[a.value for a in InputAmplitude], default=InputAmplitude.ARM.value)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", parents=[common], help="long-format grid over alpha and r")
    p.add_argument("--encodings", help="comma-separated encodings (default: coh)")
    p.add_argument("--alpha", type=_float_list, help="explicit comma-separated amplitudes")
    p.add_argument("--alpha-min", type=float, default=0.0)
    p.add_argument("--alpha-max", type=float, default=3.0)
    p.add_argument("--alpha-steps", type=int, default=31)
    p.add_argument("--steps", type=int, default=101)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_sweep)
    return parser


def parse_args(argv: Sequence[str]) -> argparse.Namespace:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config and argv and not argv[0].startswith("-"):
        # config tokens go first so that repeated flags on the command line win
        argv = argv[:1] + read_config(known.config) + argv[1:]
    return build_parser().parse_args(argv)


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    except UsageError as exc:
        print(f"qtx: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args.threads = _thread_count(args.threads)
        return args.func(args)
    except UsageError as exc:
        print(f"qtx: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"qtx: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
