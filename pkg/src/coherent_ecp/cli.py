"""Command-line front end.

Exit codes: 0 ok, 1 validation failure, 2 degenerate parameters, 3 circuit
assertion or runtime failure, 64 usage, 65 circuit parse error, 66 missing
file, 74 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

from . import __version__, protocols, validation
from .circuit import CircuitRuntimeError, ParseError, execute_circuit, parse_circuit
from .core import CoherentStateError, DegenerateStateError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_DEGENERATE = 2
EXIT_ASSERTION = 3
EXIT_USAGE = 64
EXIT_PARSE = 65
EXIT_NO_INPUT = 66
EXIT_IO = 74

ECP1_HEADER = ("alpha", "beta", "gamma", "p_formula", "p_exact")
ECP2_HEADER = ("alpha", "theta1", "theta2", "theta3", "beta", "gamma", "delta", "eta", "p_formula", "p_exact")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _alpha_list(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")
    if not values or not all(v > 0 and math.isfinite(v) for v in values):
        raise argparse.ArgumentTypeError("alpha values must be positive and finite")
    return values


def _steps(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if value < 2:
        raise argparse.ArgumentTypeError("need at least 2 grid steps")
    return value


@dataclass(frozen=True)
class SweepSpec:
    protocol: str
    alpha_values: tuple[float, ...]
    grid_steps: int
    theta3: float = math.pi / 6
    output_path: str | None = None
    gamma_convention: str = "derived"
    gamma: float | None = None

    def __post_init__(self):
        if self.grid_steps < 2:
            raise UsageError("grid_steps must be >= 2")
        if not self.alpha_values or any(a <= 0 for a in self.alpha_values):
            raise UsageError("alpha_values must be nonempty and positive")
        if self.gamma_convention == "explicit" and self.gamma is None:
            raise UsageError("gamma_convention 'explicit' needs --gamma")


def grid(lo: float, hi: float, steps: int) -> list[float]:
    # Endpoints are exact so boundary rows hit the zero-probability edges.
    return [lo + (hi - lo) * k / (steps - 1) if k < steps - 1 else hi for k in range(steps)]


def sweep_ecp1_rows(spec: SweepSpec) -> Iterator[tuple[float, ...]]:
    for alpha in spec.alpha_values:
        for beta in grid(0.0, 1.0, spec.grid_steps):
            if spec.gamma_convention == "explicit":
                p = protocols.Ecp1Params(alpha, beta, spec.gamma)
            else:
                p = protocols.Ecp1Params.from_beta(alpha, beta)
            yield (alpha, p.beta, p.gamma, protocols.formula_p_ecp1(p), protocols.p_exact_ecp1(p))


def sweep_ecp2_rows(spec: SweepSpec) -> Iterator[tuple[float, ...]]:
    angles = grid(0.0, math.pi / 2, spec.grid_steps)
    for alpha in spec.alpha_values:
        for t1 in angles:
            for t2 in angles:
                t = protocols.ThetaParams(t1, t2, spec.theta3)
                q = protocols.Ecp2Params.from_theta(alpha, t)
                yield (
                    alpha, t1, t2, spec.theta3, *q.coefficients,
                    protocols.formula_p_ecp2(q), protocols.p_exact_ecp2(q),
                )


def render_csv(header: Sequence[str], rows) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def _write_output(text: str, path: str | None, meta: dict | None = None) -> int:
    if path is None or path == "-":
        sys.stdout.write(text)
        return EXIT_OK
    try:
        Path(path).write_text(text, encoding="utf-8")
        if meta is not None:
            Path(path + ".meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as err:
        print(f"error: cannot write {path}: {err}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def _sweep_meta(spec: SweepSpec, rows: int) -> dict:
    meta = {
        "protocol": spec.protocol,
        "version": __version__,
        "alpha_values": list(spec.alpha_values),
        "grid_steps": spec.grid_steps,
        "rows": rows,
    }
    if spec.protocol == "ecp1":
        meta["gamma_convention"] = (
            "gamma = sqrt(1 - beta^2)" if spec.gamma_convention == "derived" else f"gamma = {spec.gamma!r}"
        )
    else:
        meta["theta3"] = spec.theta3
    return meta


# ---------------------------------------------------------------------------
# commands


def cmd_run(args) -> int:
    try:
        if args.protocol == "ecp1":
            if args.beta is None:
                raise UsageError("run ecp1 needs --beta")
            if args.gamma is None:
                params = protocols.Ecp1Params.from_beta(args.alpha, args.beta)
            else:
                params = protocols.Ecp1Params(args.alpha, args.beta, args.gamma)
            report = protocols.run_ecp1(params)
        else:
            thetas = (args.theta1, args.theta2, args.theta3)
            coeffs = (args.beta, args.gamma, args.delta, args.eta)
            if all(t is not None for t in thetas):
                params = protocols.Ecp2Params.from_theta(args.alpha, protocols.ThetaParams(*thetas))
            elif all(c is not None for c in coeffs):
                params = protocols.Ecp2Params(args.alpha, *coeffs)
            else:
                raise UsageError("run ecp2 needs --theta1/2/3 or --beta/--gamma/--delta/--eta")
            report = protocols.run_ecp2(params)
    except DegenerateStateError as err:
        print(f"degenerate parameters: {err}", file=sys.stderr)
        return EXIT_DEGENERATE
    except CoherentStateError as err:
        print(f"invalid parameters: {err}", file=sys.stderr)
        return EXIT_DEGENERATE
    print(report.to_json() if args.json else report.summary())
    if report.final_state.n_terms == 0:
        print("degenerate parameters: the post-selected branch is empty (p = 0)", file=sys.stderr)
        return EXIT_DEGENERATE
    return EXIT_OK


def cmd_sweep_ecp1(args) -> int:
    spec = SweepSpec(
        "ecp1", tuple(args.alpha), args.steps, output_path=args.out,
        gamma_convention="explicit" if args.gamma is not None else "derived", gamma=args.gamma,
    )
    try:
        rows = list(sweep_ecp1_rows(spec))
    except CoherentStateError as err:
        print(f"degenerate parameters: {err}", file=sys.stderr)
        return EXIT_DEGENERATE
    return _write_output(render_csv(ECP1_HEADER, rows), spec.output_path, _sweep_meta(spec, len(rows)))


def cmd_sweep_ecp2(args) -> int:
    spec = SweepSpec("ecp2", tuple(args.alpha), args.steps, theta3=args.theta3, output_path=args.out)
    rows = list(sweep_ecp2_rows(spec))
    return _write_output(render_csv(ECP2_HEADER, rows), spec.output_path, _sweep_meta(spec, len(rows)))


def cmd_validate(args) -> int:
    results = validation.run_checks(args.seed)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    if failed:
        print("failed checks: " + "; ".join(failed))
        return EXIT_VALIDATION
    print(f"all {len(results)} checks passed (seed {args.seed})")
    return EXIT_OK


def cmd_exec(args) -> int:
    path = Path(args.path)
    try:
        source = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        print(f"error: no such file: {path}", file=sys.stderr)
        return EXIT_NO_INPUT
    except (OSError, UnicodeDecodeError) as err:
        print(f"error: cannot read {path}: {err}", file=sys.stderr)
        return EXIT_NO_INPUT
    try:
        program = parse_circuit(source, str(path))
    except ParseError as err:
        print(f"{path}:{err}", file=sys.stderr)
        return EXIT_PARSE
    try:
        report = execute_circuit(program)
    except CircuitRuntimeError as err:
        print(f"{path}: {err}", file=sys.stderr)
        return EXIT_DEGENERATE if err.degenerate else EXIT_ASSERTION
    print(report.summary())
    return EXIT_OK if report.ok else EXIT_ASSERTION


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="coherent-ecp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run one protocol and print its report")
    run.add_argument("protocol", choices=("ecp1", "ecp2"))
    run.add_argument("--alpha", type=float, required=True)
    for name in ("beta", "gamma", "delta", "eta", "theta1", "theta2", "theta3"):
        run.add_argument(f"--{name}", type=float)
    run.add_argument("--json", action="store_true", help="print the report as JSON")
    run.set_defaults(func=cmd_run)

    s1 = sub.add_parser("sweep-ecp1", help="success probability versus beta (CSV)")
    s1.add_argument("--alpha", type=_alpha_list, default=[0.5, 1.0, 2.0])
    s1.add_argument("--steps", type=_steps, default=201)
    s1.add_argument("--gamma", type=float, help="fix gamma instead of sqrt(1 - beta^2)")
    s1.add_argument("--out", help="output CSV path (default: stdout)")
    s1.set_defaults(func=cmd_sweep_ecp1)

    s2 = sub.add_parser("sweep-ecp2", help="success probability over (theta1, theta2) (CSV)")
    s2.add_argument("--alpha", type=_alpha_list, default=[2.0])
    s2.add_argument("--steps", type=_steps, default=101)
    s2.add_argument("--theta3", type=float, default=math.pi / 6)
    s2.add_argument("--out", help="output CSV path (default: stdout)")
    s2.set_defaults(func=cmd_sweep_ecp2)

    val = sub.add_parser("validate", help="check closed forms against the exact engine")
    val.add_argument("--seed", type=int, default=0)
    val.set_defaults(func=cmd_validate)

    ex = sub.add_parser("exec", help="parse and execute a .circ circuit file")
    ex.add_argument("path")
    ex.set_defaults(func=cmd_exec)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as err:
        parser.print_usage(sys.stderr)
        print(f"coherent-ecp: error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
