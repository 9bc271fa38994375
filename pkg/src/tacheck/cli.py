"""Command-line entry point: ``tacheck {check,simulate,explore,export,report}``.

Exit codes: 0 success, 1 a property or trace check failed, 2 a search budget
ran out (or a simulation stalled), 64 bad usage.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from . import models
from .checker import Outcome, SuiteReport, check_suite, format_table
from .counter import BudgetExhaustedError, explore, initial_configs
from .props import PropertySyntaxError, parse_properties
from .sim import adversary_from_name, agreement, justification, new_system, run, scheduler_from_name, validity
from .sim.abstraction import validate_abstraction
from .sim.runner import RunStatus
from .sim.schedulers import ScriptedScheduler
from .ta import MultiRoundTA, Parameters, ResilienceError, TAParseError, ThresholdAutomaton, base_of, export_dot, parse_ta

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_BUDGET = 2
EXIT_USAGE = 64

log = logging.getLogger("tacheck")


class UsageError(Exception):
    """Inputs cannot be resolved; reported with exit code 64."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------- resolution


def resolve_model(spec: str) -> ThresholdAutomaton | MultiRoundTA:
    if spec in models.MODEL_IDS:
        return models.model(spec)
    path = Path(spec)
    if path.is_file():
        try:
            return parse_ta(path.read_text(encoding="utf-8"), path.stem)
        except TAParseError as exc:
            raise UsageError(f"{spec}: {exc}") from None
    raise UsageError(f"unknown model {spec!r}: not one of {', '.join(models.MODEL_IDS)} and not a file")


def resolve_suite(model_spec: str, ta, suite: str | None):
    if model_spec in models.MODEL_IDS and (suite is None or suite in models.entry(model_spec).suites):
        return models.standard_properties(model_spec, suite)
    if suite is None:
        raise UsageError("a property file is required for a model given as a file")
    path = Path(suite)
    if not path.is_file():
        known = ", ".join(models.entry(model_spec).suites) if model_spec in models.MODEL_IDS else "none"
        raise UsageError(f"unknown suite {suite!r}: not a file and not a built-in suite ({known})")
    try:
        return tuple(parse_properties(path.read_text(encoding="utf-8"), base_of(ta)))
    except PropertySyntaxError as exc:
        raise UsageError(f"{suite}: {exc}") from None


def parse_params(values: Sequence[str]) -> list[Parameters]:
    try:
        return [Parameters.parse(v) for v in values]
    except ValueError as exc:
        raise UsageError(f"bad parameters: {exc}") from None


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text, encoding="utf-8")


# ---------------------------------------------------------------- commands


def cmd_check(args) -> int:
    ta = resolve_model(args.model)
    suite = resolve_suite(args.model, ta, args.suite)
    if args.property:
        wanted = set(args.property)
        suite = tuple(p for p in suite if p.name in wanted)
        unknown = wanted - {p.name for p in suite}
        if unknown:
            raise UsageError(f"unknown properties: {', '.join(sorted(unknown))}")
    params = parse_params(args.params)
    if not args.allow_unsafe_params:
        for p in params:
            if not base_of(ta).admits(p):
                raise UsageError(f"{p} violates the resilience condition; pass --allow-unsafe-params to check anyway")
    report = check_suite(ta, params, suite, args.allow_unsafe_params, args.budget, args.model)
    sys.stdout.write(report.table(args.timings))
    if args.json:
        _write(args.json, report.dumps(args.timings))
    if args.out:
        _write_check_outputs(Path(args.out), report, args.timings)
    return report.exit_code()


def _write_check_outputs(out: Path, report: SuiteReport, timings: bool) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.dumps(timings), encoding="utf-8")
    (out / "report.txt").write_text(report.table(timings), encoding="utf-8")
    for v in report.verdicts:
        if v.is_counterexample:
            n, t, f = v.params.as_tuple()
            path = out / f"counterexample_{v.name}_{n}_{t}_{f}.json"
            path.write_text(json.dumps(v.to_json(timings), indent=2, sort_keys=True) + "\n", encoding="utf-8")
            sys.stdout.write(f"counterexample written to {path}\n")


def cmd_simulate(args) -> int:
    (params,) = parse_params([args.params])
    n, t, f = params.as_tuple()
    try:
        inputs = [int(x) for x in args.inputs.split(",")]
        adversary = adversary_from_name(args.adversary, args.seed)
        if args.scheduler and Path(args.scheduler).is_file():
            scheduler = ScriptedScheduler.from_json(json.loads(Path(args.scheduler).read_text(encoding="utf-8")))
        else:
            value = args.good_value if args.good_value is not None else args.good_round % 2
            options = {"round": args.good_round, "value": value}
            scheduler = scheduler_from_name(args.scheduler or "random", args.seed, options)
        system = new_system(n, t, f, inputs, adversary, allow_unsafe=args.allow_unsafe_params)
    except (ValueError, ResilienceError) as exc:
        raise UsageError(str(exc)) from None
    trace = run(system, scheduler, args.max_rounds)
    checks = {"agreement": agreement(trace), "validity": validity(trace), "justification": justification(trace)}
    if args.abstract:
        mismatches = validate_abstraction(trace)
        checks["abstraction"] = not mismatches
        for m in mismatches:
            sys.stderr.write(f"abstraction mismatch: {m}\n")
    rows = [[str(r), " ".join(str(e) for e in trace.estimates_after(r))] for r in sorted(trace.snapshots)]
    sys.stdout.write(format_table(["round", "estimates"], rows))
    decisions = ", ".join(f"p{p}: {v} in round {r}" for p, (v, r) in sorted(trace.decisions.items())) or "none"
    sys.stdout.write(f"status: {trace.status.value}; steps: {trace.steps}; decisions: {decisions}\n")
    sys.stdout.write("checks: " + ", ".join(f"{k} {'ok' if ok else 'FAILED'}" for k, ok in checks.items()) + "\n")
    if args.out:
        _write(args.out, trace.dumps() + "\n")
    if not all(checks.values()):
        return EXIT_VIOLATION
    return EXIT_OK if trace.status is RunStatus.FINISHED else EXIT_BUDGET


def _restriction(items: Sequence[str] | None) -> dict[str, int] | None:
    if not items:
        return None
    result = {}
    for item in items:
        loc, _, count = item.partition("=")
        if not count.isdigit():
            raise UsageError(f"bad restriction {item!r}; expected LOCATION=COUNT")
        result[loc] = int(count)
    return result


def cmd_explore(args) -> int:
    ta = resolve_model(args.model)
    restriction = _restriction(args.restrict)
    if restriction:
        unknown = set(restriction) - set(base_of(ta).initial)
        if unknown:
            raise UsageError(f"restrictions must name initial locations, not {', '.join(sorted(unknown))}")
    code = EXIT_OK
    docs = []
    rows = []
    for params in parse_params(args.params):
        try:
            initials = initial_configs(ta, params, restriction, args.allow_unsafe_params)
        except ResilienceError as exc:
            raise UsageError(f"{exc}; pass --allow-unsafe-params to explore anyway") from None
        graph = explore(ta, params, initials, args.budget, args.allow_unsafe_params)
        if graph.exhausted:
            code = EXIT_BUDGET
        rows.append([str(params), str(len(graph.initials)), str(graph.state_count), str(graph.edge_count),
                     "no" if graph.exhausted else "yes"])
        docs.append(graph.to_json())
    sys.stdout.write(format_table(["params", "initial", "states", "edges", "complete"], rows))
    if args.out:
        payload = docs[0] if len(docs) == 1 else {"graphs": docs}
        _write(args.out, json.dumps(payload, separators=(",", ":"), sort_keys=True) + "\n")
    return code


def cmd_export(args) -> int:
    _write(args.out, export_dot(resolve_model(args.model)))
    return EXIT_OK


def cmd_report(args) -> int:
    """Summarize check reports and state-graph exports in one table."""
    verdict_rows, graph_rows = [], []
    code = EXIT_OK
    for name in args.files:
        try:
            doc = json.loads(Path(name).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"{name}: {exc}") from None
        if "verdicts" in doc:
            for v in doc["verdicts"]:
                verdict_rows.append([doc.get("model", "?"), v["name"], ",".join(map(str, v["params"])),
                                     v["result"], str(v["states_explored"])])
                if v["result"] in (Outcome.SAFETY_COUNTEREXAMPLE.value, Outcome.LIVENESS_COUNTEREXAMPLE.value):
                    code = EXIT_VIOLATION
                elif v["result"] == Outcome.BUDGET_EXHAUSTED.value and code == EXIT_OK:
                    code = EXIT_BUDGET
        else:
            graphs = doc.get("graphs", [doc])
            for g in graphs:
                if "states" not in g:
                    raise UsageError(f"{name}: neither a check report nor a state graph")
                graph_rows.append([g["automaton"], ",".join(map(str, g["params"])), str(len(g["states"])),
                                   str(len(g["edges"])), "yes" if g["complete"] else "no"])
                if not g["complete"] and code == EXIT_OK:
                    code = EXIT_BUDGET
    if verdict_rows:
        sys.stdout.write(format_table(["model", "property", "params", "result", "states"], verdict_rows))
    if graph_rows:
        if verdict_rows:
            sys.stdout.write("\n")
        sys.stdout.write(format_table(["automaton", "params", "states", "edges", "complete"], graph_rows))
    held = sum(r[3] == Outcome.HOLDS.value for r in verdict_rows)
    if verdict_rows:
        sys.stdout.write(f"\n{held}/{len(verdict_rows)} properties hold\n")
    return code


# ---------------------------------------------------------------- parser


def build_parser(defaults: dict | None = None) -> argparse.ArgumentParser:
    """The argument parser; ``defaults`` (from a config file) override built-in defaults."""
    parser = _Parser(prog="tacheck", description="Threshold-automaton checking and consensus simulation.")
    parser.add_argument("--config", help="JSON file of option defaults; command-line flags take precedence")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--model", required=False, help=f"built-in model ({', '.join(models.MODEL_IDS)}) or TA file")
        p.add_argument("--allow-unsafe-params", action="store_true", help="admit parameters violating resilience")
        p.add_argument("--budget", type=int, help="state budget per search (default: $TACHECK_BUDGET or 10^7)")

    check = sub.add_parser("check", help="check a property suite at parameter instances")
    common(check)
    check.add_argument("--suite", help="built-in suite name or property file (default: the model's first suite)")
    check.add_argument("--property", nargs="+", help="restrict to these property names")
    check.add_argument("--params", nargs="+", help="parameter instances n,t,f")
    check.add_argument("--json", help="write the JSON report here ('-' for stdout)")
    check.add_argument("--out", help="directory for report.json, report.txt and counterexample files")
    check.add_argument("--timings", action="store_true", help="include wall-clock times (makes output nondeterministic)")
    check.set_defaults(handler=cmd_check)

    simulate = sub.add_parser("simulate", help="run the consensus protocol under a scheduler")
    simulate.add_argument("--params", default="4,1,1", help="n,t,f")
    simulate.add_argument("--inputs", default="0,0,1", help="comma-separated inputs of the n-f correct processes")
    simulate.add_argument("--adversary", default="silent", help="silent, equivocate or estimate-cycle")
    simulate.add_argument("--scheduler", help="random, v-good, estimate-cycle or a JSON script file (default: random)")
    simulate.add_argument("--good-round", type=int, default=1, help="round made good by the v-good scheduler")
    simulate.add_argument("--good-value", type=int, help="value delivered first in that round (default: round mod 2)")
    simulate.add_argument("--seed", type=int, default=0)
    simulate.add_argument("--max-rounds", type=int, default=4)
    simulate.add_argument("--abstract", action="store_true", help="validate the trace against the naive automaton")
    simulate.add_argument("--allow-unsafe-params", action="store_true")
    simulate.add_argument("--out", help="write the trace JSON here ('-' for stdout)")
    simulate.set_defaults(handler=cmd_simulate)

    exp = sub.add_parser("explore", help="compute the reachable state graph")
    common(exp)
    exp.add_argument("--params", nargs="+", help="parameter instances n,t,f")
    exp.add_argument("--restrict", nargs="+", help="initial-location counts such as V1=0")
    exp.add_argument("--out", help="write the state graph JSON here ('-' for stdout)")
    exp.set_defaults(handler=cmd_explore)

    export = sub.add_parser("export", help="render an automaton as a DOT graph")
    export.add_argument("--model", required=False, help="built-in model or TA file")
    export.add_argument("--out", help="output file (default: stdout)")
    export.set_defaults(handler=cmd_export)

    report = sub.add_parser("report", help="summarize check reports and state-graph exports")
    report.add_argument("files", nargs="+", help="JSON files written by check or explore")
    report.set_defaults(handler=cmd_report)
    if defaults:
        for p in (check, simulate, exp, export, report):
            dests = {a.dest for a in p._actions}
            p.set_defaults(**{k: v for k, v in defaults.items() if k in dests})
    return parser


def _load_config(argv: Sequence[str]) -> dict:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return {}
    try:
        data = json.loads(Path(known.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"config {known.config}: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError(f"config {known.config}: expected a JSON object")
    return {k.replace("-", "_"): v for k, v in data.items()}


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        # Config values become parser defaults, so explicit flags still win.
        try:
            args = build_parser(_load_config(argv)).parse_args(argv)
        except SystemExit as exc:
            return exc.code if isinstance(exc.code, int) else EXIT_USAGE
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
        if args.command in ("check", "explore", "export") and not args.model:
            raise UsageError("--model is required")
        if args.command in ("check", "explore") and not args.params:
            raise UsageError("--params is required")
        if isinstance(getattr(args, "params", None), str) and args.command != "simulate":
            args.params = [args.params]
        return args.handler(args)
    except UsageError as exc:
        sys.stderr.write(f"tacheck: error: {exc}\n")
        return EXIT_USAGE
    except BudgetExhaustedError as exc:
        sys.stderr.write(f"tacheck: {exc}\n")
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
