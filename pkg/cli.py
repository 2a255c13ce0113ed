"""
Command-line entry point

    python cli.py validate --input systems/sort.ps
    python cli.py run --input systems/sort.ps --initial edcba
    python cli.py reverse --input systems/sort.ps --initial edcba
    python cli.py tree --input systems/tree.ps --depth 3
    python cli.py build-op --input systems/toy2.ps --format dense
    python cli.py grover --input systems/grover8.ps --depth 1 --mode uncompute --auto
    python cli.py perf --si-max 8192 --out surface.csv
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from config import Config
from errors import ProductionSystemError
from models import RunConfig, SearchMode, ValidationReport
import grover_engine
import perf_model
import probabilistic_engine
import quantum_operator
import reversible_engine
import rule_engine
import system_file
import utils

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DOMAIN_ERROR = 1
EXIT_USAGE_ERROR = 2


def validate_system(system) -> ValidationReport:
    deterministic, domain_overlaps = rule_engine.check_deterministic(system.rules)
    reversible, range_overlaps = rule_engine.check_reversible(system.rules)
    encoding = quantum_operator.compute_encoding(system)
    return ValidationReport(
        deterministic=deterministic,
        reversible=reversible,
        domain_overlaps=tuple(domain_overlaps),
        range_overlaps=tuple(range_overlaps),
        alpha=encoding.alpha,
        beta=encoding.beta,
        delta=encoding.delta,
    )


def _initial(config: RunConfig, system) -> str:
    return config.initial if config.initial is not None else system.initial_states[0]


# Subcommands
def cmd_validate(config: RunConfig, args) -> str:
    system, _ = system_file.load_system(config.input)
    report = validate_system(system)
    lines = [report.summary()]
    lines.extend(f"domain overlap: R{first}, R{second}" for first, second in report.domain_overlaps)
    lines.extend(f"range overlap: R{first}, R{second}" for first, second in report.range_overlaps)
    return "\n".join(lines) + "\n"


def cmd_run(config: RunConfig, args) -> str:
    system, _ = system_file.load_system(config.input)
    trace = rule_engine.run_forward(system, _initial(config, system), config.step_limit)
    return rule_engine.trace_to_csv(trace)


def cmd_reverse(config: RunConfig, args) -> str:
    system, _ = system_file.load_system(config.input)
    engine = reversible_engine.ReversibleEngine(system)
    run = engine.run_reversible(_initial(config, system), config.step_limit, verify=args.verify)
    return reversible_engine.log_to_csv(run)


def cmd_tree(config: RunConfig, args) -> str:
    system, control = system_file.load_system(config.input)
    initial = _initial(config, system)
    extend = None
    if control is None or args.uniform:
        # rows past --depth are derived when a run reaches them
        control = probabilistic_engine.uniform_control(system, [initial], config.depth)
        extend = probabilistic_engine.uniform_weights
    engine = probabilistic_engine.ProbabilisticEngine(system, control, extend=extend)
    if args.sample:
        trace = engine.sample_run(initial, config.seed, config.step_limit)
        return rule_engine.trace_to_csv(trace)
    return probabilistic_engine.tree_to_csv(engine.expand_tree(initial, config.depth))


def cmd_build_op(config: RunConfig, args) -> str:
    system, _ = system_file.load_system(config.input)
    op = quantum_operator.build_operator(system)
    valid, collision = quantum_operator.verify_bijection(op)
    if not valid:
        raise ProductionSystemError(f"operator is not a bijection: collision {collision}")
    if args.format == "dense":
        return quantum_operator.dense_to_csv(op)
    return quantum_operator.map_to_csv(op)


def cmd_grover(config: RunConfig, args) -> str:
    system, _ = system_file.load_system(config.input)
    states = list(system.initial_states)
    if args.neighbours:
        states = grover_engine.neighbour_states(system, states)
    engine = grover_engine.GroverEngine(system, config.depth, states)
    result = engine.search(config.mode, config.iterations, config.seed, config.shots)
    if args.amplitudes is not None:
        utils.write_text(grover_engine.amplitudes_to_csv(result.state, engine.oracle), args.amplitudes)
    return grover_engine.report_to_jsonl(result)


def cmd_perf(config: RunConfig, args) -> str:
    frame = perf_model.ratio_surface(args.si_min, args.si_max, config.depth)
    return perf_model.surface_to_csv(frame, config.depth)


COMMANDS = {
    "validate": cmd_validate,
    "run": cmd_run,
    "reverse": cmd_reverse,
    "tree": cmd_tree,
    "build-op": cmd_build_op,
    "grover": cmd_grover,
    "perf": cmd_perf,
}


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--input", type=Path, help="system definition file")
    shared.add_argument("--out", type=Path, help="output file (stdout when omitted)")
    shared.add_argument("--seed", type=int, default=Config.DEFAULT_SEED)
    shared.add_argument("--step-limit", type=int, default=Config.STEP_LIMIT)

    parser = argparse.ArgumentParser(prog="qps", description=Config.APP_NAME)
    subcommands = parser.add_subparsers(dest="subcommand", required=True)

    subcommands.add_parser("validate", parents=[shared], help="determinism, reversibility and encoding sizes")

    run = subcommands.add_parser("run", parents=[shared], help="forward-chaining trace CSV")
    run.add_argument("--initial")

    reverse = subcommands.add_parser("reverse", parents=[shared], help="reversible run log CSV")
    reverse.add_argument("--initial")
    reverse.add_argument("--verify", action="store_true", help="cross-check the output tape")

    tree = subcommands.add_parser("tree", parents=[shared], help="computation tree CSV")
    tree.add_argument("--initial")
    tree.add_argument("--depth", type=int, default=3)
    tree.add_argument("--uniform", action="store_true", help="ignore prob lines, weight rules equally")
    tree.add_argument("--sample", action="store_true", help="emit one seeded sampled trace instead")

    build_op = subcommands.add_parser("build-op", parents=[shared], help="permutation operator CSV")
    build_op.add_argument("--format", choices=["map", "dense"], default="map")

    grover = subcommands.add_parser("grover", parents=[shared], help="Grover search JSON-lines report")
    grover.add_argument("--depth", type=int, default=1)
    grover.add_argument("--mode", choices=[mode.value for mode in SearchMode], default=SearchMode.UNCOMPUTE.value)
    grover.add_argument("--iterations", default="auto", help="integer or 'auto'")
    grover.add_argument("--auto", action="store_const", const="auto", dest="iterations")
    grover.add_argument("--shots", type=int, default=Config.DEFAULT_SHOTS)
    grover.add_argument("--neighbours", action="store_true", help="add states one firing away")
    grover.add_argument("--amplitudes", type=Path, help="also dump nonzero amplitudes as CSV")

    perf = subcommands.add_parser("perf", parents=[shared], help="C/Q ratio surface CSV")
    perf.add_argument("--si-min", type=int, default=1)
    perf.add_argument("--si-max", type=int, default=perf_model.SURFACE_MAX)
    perf.add_argument("--depth", type=int, default=1)

    return parser


def run_config(args) -> RunConfig:
    return RunConfig(
        subcommand=args.subcommand,
        input=args.input,
        out=args.out,
        seed=args.seed,
        step_limit=args.step_limit,
        initial=getattr(args, "initial", None),
        depth=getattr(args, "depth", 1),
        mode=getattr(args, "mode", SearchMode.UNCOMPUTE.value),
        iterations=getattr(args, "iterations", "auto"),
        shots=getattr(args, "shots", Config.DEFAULT_SHOTS),
    )


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE_ERROR

    logging.basicConfig(level=Config.log_level(), format="%(levelname)s %(name)s: %(message)s")

    problems = Config.validate_config()
    if problems:
        for problem in problems:
            sys.stderr.write(f"config: {problem}\n")
        return EXIT_USAGE_ERROR

    try:
        config = run_config(args)
        if config.input is None and config.subcommand != "perf":
            raise ValueError(f"{config.subcommand} needs --input")
    except (ValidationError, ValueError) as e:
        sys.stderr.write(f"usage: {e}\n")
        return EXIT_USAGE_ERROR

    try:
        output = COMMANDS[config.subcommand](config, args)
    except ProductionSystemError as e:
        logger.debug(f"{config.subcommand} failed", exc_info=True)
        sys.stderr.write(f"error: {e}\n")
        return EXIT_DOMAIN_ERROR
    except ValueError as e:
        sys.stderr.write(f"usage: {e}\n")
        return EXIT_USAGE_ERROR

    utils.write_text(output, config.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
