"""Command-line entry point: ``ventadd {emit,verify,count,sweep} BUILDER``.

Exit codes: 0 success, 1 bad flags, 2 verification failure, 3 simulation
budget exceeded.  Artifacts go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import sys

from . import ir
from .builders import BUILDERS, MIN_WIDTH, WidthTooSmall, apply_control, bind_offset, build
from .resources import count, linearity_check, sweep_range, table
from .simulator import BranchPolicy, BudgetExceeded, SimulationError
from .verify import default_policy, verify_builder

EXIT_OK, EXIT_FLAGS, EXIT_VERIFY, EXIT_BUDGET = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_FLAGS, f"{self.prog}: error: {message}\n")


class FlagError(Exception):
    pass


def _width_range(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition("..")
    try:
        return (int(lo), int(hi)) if sep else (int(lo), int(lo))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N or LO..HI, got {text!r}") from None


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ventadd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    def common(p, *, width_help="register width n"):
        p.add_argument("builder", choices=sorted(BUILDERS))
        p.add_argument("--n", required=True, type=_width_range, help=width_help)
        p.add_argument("--carry-in-const", type=int, choices=(0, 1), default=None,
                       help="replace the carry_in qubit by a classical bit")

    emit = sub.add_parser("emit", help="print a circuit")
    common(emit)
    emit.add_argument("--d", type=int, help="offset (omit to keep d_k symbolic)")
    emit.add_argument("--controlled", action="store_true")
    emit.add_argument("--format", choices=("text", "structured"), default="text")

    verify = sub.add_parser("verify", help="simulate against the reference adder")
    common(verify)
    verify.add_argument("--d", type=int, help="a single offset (default: all)")
    verify.add_argument("--exhaustive", action="store_true",
                        help="enumerate every measurement branch")
    verify.add_argument("--branches", choices=("auto", "enumerate", "sampled"), default="auto")
    verify.add_argument("--samples", type=int, default=64)
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--no-phase", action="store_true", help="skip the superposition test")
    verify.add_argument("--workers", type=int, default=1)

    cnt = sub.add_parser("count", help="resource counts for one circuit")
    common(cnt)
    cnt.add_argument("--d", type=int)
    cnt.add_argument("--controlled", action="store_true")
    cnt.add_argument("--format", choices=("text", "structured"), default="text")

    sweep = sub.add_parser("sweep", help="resource table over a width range")
    common(sweep, width_help="LO..HI")
    sweep.add_argument("--slope", type=int, default=None)
    sweep.add_argument("--bound", type=int, default=16)
    return parser


def _single_width(args) -> int:
    lo, hi = args.n
    if lo != hi:
        raise FlagError("--n takes a single width here")
    return lo


def _circuit(args) -> ir.Circuit:
    n = _single_width(args)
    if args.d is not None and not 0 <= args.d < (1 << n):
        raise FlagError(f"--d must be in [0, 2**{n})")
    if getattr(args, "controlled", False) and args.d is None:
        raise FlagError("--controlled requires --d")
    circuit = build(args.builder, n, carry_in_const=args.carry_in_const)
    if args.d is None:
        return circuit
    if args.controlled:
        return apply_control(circuit, args.d)
    return bind_offset(circuit, args.d)


def _emit(args) -> int:
    circuit = _circuit(args)
    sys.stdout.write(ir.dumps(circuit) if args.format == "structured" else ir.diagram(circuit))
    return EXIT_OK


def _count(args) -> int:
    report = count(_circuit(args))
    sys.stdout.write(report.to_json() if args.format == "structured" else table([report]))
    return EXIT_OK


def _verify(args) -> int:
    n = _single_width(args)
    if args.d is not None and not 0 <= args.d < (1 << n):
        raise FlagError(f"--d must be in [0, 2**{n})")
    circuit = build(args.builder, n, carry_in_const=args.carry_in_const)
    if args.exhaustive or args.branches == "enumerate":
        policy = BranchPolicy.enumerate_all()
    elif args.branches == "sampled":
        policy = BranchPolicy.sampled(args.seed, args.samples)
    else:
        policy = default_policy(circuit, args.seed)
    report = verify_builder(
        args.builder,
        n,
        None if args.d is None else [args.d],
        policy=policy,
        phase=not args.no_phase,
        seed=args.seed,
        workers=args.workers,
        circuit=circuit,
    )
    print(report.summary())
    return EXIT_OK if report.passed else EXIT_VERIFY


def _sweep(args) -> int:
    lo, hi = args.n
    ns = sweep_range(args.builder, lo, hi)
    if not ns:
        raise FlagError(f"empty width range for {args.builder} (min n={MIN_WIDTH[args.builder]})")
    reports = []
    for n in ns:
        circuit = build(args.builder, n, carry_in_const=args.carry_in_const)
        reports.append(count(bind_offset(circuit, (1 << n) - 1)))
    sys.stdout.write(table(reports))
    fit = linearity_check(args.builder, ns, args.slope, args.bound)
    verdict = "bounded" if fit.passed else "UNBOUNDED"
    print(
        f"slope={fit.slope} residual min={fit.min_residual} max={fit.max_residual} "
        f"spread={fit.spread} ({verdict}, bound {fit.bound})"
    )
    return EXIT_OK


VERBS = {"emit": _emit, "verify": _verify, "count": _count, "sweep": _sweep}


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return VERBS[args.verb](args)
    except BudgetExceeded as exc:
        print(f"ventadd: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (FlagError, WidthTooSmall) as exc:
        print(f"ventadd: error: {exc}", file=sys.stderr)
        return EXIT_FLAGS
    except SimulationError as exc:
        print(f"ventadd: {exc}", file=sys.stderr)
        return EXIT_FLAGS


if __name__ == "__main__":
    sys.exit(main())
