"""Command-line entry point.

Exit codes: 0 success, 1 invalid input (bad flags, scenario validation,
unknown names, mismatched horizons), 2 I/O failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from . import __version__
from .errors import RangeError, SsaError
from .game import GameConfig
from .net import enumerate_attack_paths, path_nodes
from .scenario import (
    FIXTURES_ENV,
    ScenarioDoc,
    ScenarioError,
    fixtures_dir,
    resolve_scenario,
)
from .ssa import MODES, SituationSeries, compare, situation_series

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("--horizon", type=int, help="decision epochs H, integer >= 1 (default: scenario value, 10)")
    p.add_argument("--discount", type=float, help="discount factor, 0 <= x < 1 (default: scenario value, 0.9)")
    p.add_argument("--radix", type=float, help="aggregation radix B, > 1 (default: scenario value, 10)")
    p.add_argument("--mode", choices=MODES, help="state rollout, expectation | montecarlo (default: scenario value)")
    p.add_argument("--trials", type=int, help="Monte-Carlo trials, integer >= 1 (default: scenario value, 200)")
    p.add_argument("--seed", type=int, help="Monte-Carlo seed, integer >= 0 (default: scenario value, 0)")


def _add_out(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="output file path (default: standard output)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="iotssa", description="IoT security-situation simulator.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="write the situation series as CSV")
    p.add_argument("scenario", help=f"fixture name or scenario file (fixtures dir override: ${FIXTURES_ENV})")
    _add_overrides(p)
    _add_out(p)

    p = sub.add_parser("paths", help="list simple attack paths between two nodes")
    p.add_argument("scenario", help="fixture name or scenario file")
    p.add_argument("--entry", required=True, help="entry node id, must exist in the scenario")
    p.add_argument("--target", required=True, help="target node id, must exist in the scenario")
    p.add_argument("--threat", help="threat id, must exist in the scenario (default: first threat)")
    _add_out(p)

    p = sub.add_parser("compare", help="compare the situation curves of two scenarios")
    p.add_argument("scenario_a", help="fixture name or scenario file")
    p.add_argument("scenario_b", help="fixture name or scenario file")
    _add_overrides(p)
    _add_out(p)

    p = sub.add_parser("validate", help="check scenario files and report every problem")
    p.add_argument("scenarios", nargs="+", help="fixture names or scenario files")

    sub.add_parser("fixtures", help="list the fixtures available by name")
    return parser


def _settings(doc: ScenarioDoc, args) -> tuple[GameConfig, dict]:
    game = doc.game
    changes = {k: getattr(args, k) for k in ("horizon", "discount") if getattr(args, k) is not None}
    if changes:
        game = dataclasses.replace(game, **changes)
    ssa = dataclasses.asdict(doc.ssa)
    for k in ("radix", "mode", "trials", "seed"):
        if getattr(args, k) is not None:
            ssa[k] = getattr(args, k)
    if ssa["seed"] < 0:
        raise RangeError("seed", ssa["seed"], "integer >= 0")
    return game, ssa


def _series(doc: ScenarioDoc, args) -> SituationSeries:
    game, ssa = _settings(doc, args)
    return situation_series(
        doc.to_net(),
        game,
        ssa["radix"],
        mode=ssa["mode"],
        trials=ssa["trials"],
        seed=ssa["seed"],
        scenario_id=doc.scenario_id,
    )


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def cmd_simulate(args) -> int:
    _emit(_series(resolve_scenario(args.scenario), args).to_csv(), args.out)
    return EXIT_OK


def cmd_paths(args) -> int:
    doc = resolve_scenario(args.scenario)
    net = doc.to_net()
    threat = args.threat or (doc.threats[0] if doc.threats else None)
    if threat is None:
        raise UsageError("scenario declares no threats")
    paths = enumerate_attack_paths(net, threat, args.entry, args.target)
    lines = ["->".join(path_nodes(p, args.entry)) for p in paths]
    _emit("".join(f"{line}\n" for line in lines) + f"count: {len(lines)}\n", args.out)
    return EXIT_OK


def cmd_compare(args) -> int:
    a = _series(resolve_scenario(args.scenario_a), args)
    b = _series(resolve_scenario(args.scenario_b), args)
    _emit(compare(a, b).to_text(), args.out)
    return EXIT_OK


def cmd_validate(args) -> int:
    status = EXIT_OK
    for ref in args.scenarios:
        try:
            resolve_scenario(ref)
        except ScenarioError as exc:
            status = EXIT_INVALID
            for issue in exc.issues:
                print(f"{ref}: {issue}", file=sys.stderr)
        else:
            print(f"{ref}: ok")
    return status


def cmd_fixtures(args) -> int:
    for path in sorted(fixtures_dir().glob("*.yaml")):
        print(path.stem)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "paths": cmd_paths,
    "compare": cmd_compare,
    "validate": cmd_validate,
    "fixtures": cmd_fixtures,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except (UsageError, SsaError) as exc:
        print(f"error: {exc}".replace("\n", " "), file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
