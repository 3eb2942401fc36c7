"""``chargesim`` command line.

Exit codes: 0 success, 1 predicate or fixture failure, 2 usage error or
unknown scenario, 3 malformed input file.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from ..errors import ChargeSimError, InputError, MalformedInputError, UnknownScenarioError
from ..standards import StandardId, all_profiles, export_profiles
from . import reports, scenarios

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_MALFORMED = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _standard(text: str) -> StandardId:
    try:
        return StandardId.parse(text)
    except (InputError, ValueError):
        raise argparse.ArgumentTypeError(
            f"unknown standard {text!r}; choose from {', '.join(s.value for s in StandardId)}") from None


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="chargesim", description="EV charging connector attack simulator")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run a named scenario or a JSON scenario file")
    run.add_argument("scenario", help=f"one of: {', '.join(scenarios.LIBRARY)}; or a path to a .json file")
    run.add_argument("--standard", type=_standard)
    run.add_argument("--seed", type=_seed, default=0)
    run.add_argument("--trace", metavar="FILE", help="write the JSONL trace here ('-' for stdout)")

    sub.add_parser("verify-table1", help="reproduce the spoofed CC impedance table")
    sub.add_parser("matrix", help="run every attack family against every standard")

    ev = sub.add_parser("eval-countermeasure", help="detection and false-positive rates")
    ev.add_argument("--trials", type=_positive, default=1000)
    ev.add_argument("--seed", type=_seed, default=0)

    sub.add_parser("list-standards", help="print the standard profiles")
    ex = sub.add_parser("export-profiles", help="write the standard profiles as JSON")
    ex.add_argument("file")
    sub.add_parser("list-scenarios", help="print the scenario library")
    return p


def _resolve(arg: str, standard):
    if arg in scenarios.LIBRARY:
        return scenarios.build(arg, standard)
    if arg.endswith(".json") or os.path.exists(arg):
        try:
            sc = scenarios.load_scenario(arg)
        except OSError as exc:
            raise MalformedInputError(f"{arg}: {exc.strerror}") from None
        if standard is not None:
            sc = scenarios.Scenario(sc.name, standard, sc.script, sc.wiring, sc.expected,
                                    sc.options, sc.description)
        return sc
    return scenarios.build(arg, standard)  # raises UnknownScenarioError


def _fmt(v):
    return f"{v:.4f}".rstrip("0").rstrip(".") if isinstance(v, float) else repr(v)


def _cmd_run(args, out) -> int:
    sc = _resolve(args.scenario, args.standard)
    outcome = sc.run(args.seed)
    if args.trace == "-":
        out.write(outcome.trace_jsonl())
    elif args.trace:
        with open(args.trace, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(outcome.trace_jsonl())
    results = scenarios.check(outcome, sc.expected)
    ok = all(r.passed for r in results)
    if args.json:
        json.dump({"scenario": sc.name, "standard": sc.standard.value, "seed": args.seed,
                   "final_state": str(outcome.final_evse), "gun_removable": outcome.gun_removable,
                   "delivered_wh": outcome.delivered_wh, "passed": ok,
                   "predicates": [{"name": r.name, "expected": r.expected, "actual": r.actual,
                                   "passed": r.passed} for r in results]},
                  out, sort_keys=True, default=str)
        out.write("\n")
    elif args.trace != "-":
        out.write(f"{sc.name} on {sc.standard.value} (seed {args.seed}): {outcome.final_evse}\n")
        for r in results:
            out.write(f"  {'ok  ' if r.passed else 'FAIL'} {r.name}: expected {_fmt(r.expected)}, got {_fmt(r.actual)}\n")
        out.write("PASS\n" if ok else "FAIL\n")
    return EXIT_OK if ok else EXIT_FAIL


def _emit(args, out, report) -> None:
    if args.json:
        json.dump(report.to_dict(), out, sort_keys=True)
        out.write("\n")
    else:
        out.write(report.render() + "\n")


def _cmd_table1(args, out) -> int:
    rep = reports.verify_table1()
    _emit(args, out, rep)
    return EXIT_OK if rep.ok else EXIT_FAIL


def _cmd_matrix(args, out) -> int:
    rep = reports.matrix()
    _emit(args, out, rep)
    return EXIT_OK if rep.matches_reference else EXIT_FAIL


def _cmd_eval(args, out) -> int:
    rep = reports.eval_countermeasure(args.trials, args.seed)
    _emit(args, out, rep)
    return EXIT_OK if rep.ok else EXIT_FAIL


def _cmd_list_standards(args, out) -> int:
    profiles = all_profiles()
    if args.json:
        json.dump([p.to_dict() for p in profiles], out, sort_keys=True)
        out.write("\n")
        return EXIT_OK
    out.write(f"{'id':<13}{'unpressed':>10}{'pressed':>9}  lock  can\n")
    for p in profiles:
        out.write(f"{p.id.value:<13}{p.unpressed_ohm:>10g}{p.pressed_ohm:>9g}  "
                  f"{'yes ' if p.has_lock else 'no  '}  {'yes' if p.exposes_can else 'no'}\n")
    return EXIT_OK


def _cmd_export(args, out) -> int:
    export_profiles(args.file)
    out.write(f"wrote {len(all_profiles())} profiles to {args.file}\n")
    return EXIT_OK


def _cmd_list_scenarios(args, out) -> int:
    for name, (factory, default) in scenarios.LIBRARY.items():
        sc = factory(scenarios.profile_of(default))
        out.write(f"{name:<14}{default.value:<13}{sc.description}\n")
    return EXIT_OK


COMMANDS = {
    "run": _cmd_run,
    "verify-table1": _cmd_table1,
    "matrix": _cmd_matrix,
    "eval-countermeasure": _cmd_eval,
    "list-standards": _cmd_list_standards,
    "export-profiles": _cmd_export,
    "list-scenarios": _cmd_list_scenarios,
}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return COMMANDS[args.command](args, out)
    except UnknownScenarioError as exc:
        print(f"chargesim: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MalformedInputError as exc:
        print(f"chargesim: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except (ChargeSimError, OSError) as exc:
        print(f"chargesim: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
