import argparse
import json
import logging
import os
import sys
from typing import Dict, List, Optional

from circuit_protocol import (
    CIRCUIT_FORMAT,
    STABILIZER_FORMAT,
    SYSTEM_FORMAT,
    CircuitFormatError,
    amplitude_to_json,
    distribution_to_json,
    load_circuit,
    load_stabilizer,
    load_system,
    normal_form_to_json,
    read_document,
    solution_to_json,
    transcript_to_json,
)
from linear_solver import count_solutions, solve
from selftest import run_selftest
from simulator import exact_distribution, run, shot_seed
from stabilizer import NormalFormState, amplitude, normal_form

logger = logging.getLogger("Main")

SEED_ENV = "ABSTAB_SEED"


def configure_logging(level: str, log_file: Optional[str]):
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.append(logging.FileHandler(log_file, mode='w'))
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.WARNING),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers,
    )


def emit(obj):
    sys.stdout.write(json.dumps(obj) + "\n")
    sys.stdout.flush()


def parse_seed(raw: Optional[str]):
    if raw is None:
        raw = os.environ.get(SEED_ENV, "0")
    try:
        return int(raw)
    except ValueError:
        return raw


def parse_given(items: List[str]) -> Dict[str, int]:
    given = {}
    for item in items or []:
        name, sep, value = item.partition("=")
        if not sep or not name:
            raise CircuitFormatError(f"--given expects register=k, got {item!r}")
        given[name] = int(value)
    return given


def load_state(path: str, seed) -> NormalFormState:
    """Final normal form of a circuit run, or the state of a stabilizer file."""
    doc = read_document(path)
    if doc["format"] == STABILIZER_FORMAT:
        return normal_form(load_stabilizer(doc))
    elif doc["format"] == CIRCUIT_FORMAT:
        return run(load_circuit(doc), seed).final
    raise CircuitFormatError(f"{path}: expected {CIRCUIT_FORMAT} or {STABILIZER_FORMAT}, got {doc['format']!r}")


def cmd_simulate(args):
    program = load_circuit(read_document(args.file))
    seed = parse_seed(args.seed)
    for i in range(args.shots):
        emit(transcript_to_json(run(program, shot_seed(seed, i))))
    logger.info(f"Simulated {args.shots} shots of {args.file} with seed {seed}")


def cmd_distribution(args):
    program = load_circuit(read_document(args.file))
    dist = exact_distribution(program, args.register, parse_given(args.given))
    emit(distribution_to_json(args.register, dist))


def cmd_amplitude(args):
    nf = load_state(args.file, parse_seed(args.seed))
    residues = [int(v) for v in args.element.split(",")]
    if len(residues) != nf.group.rank:
        raise CircuitFormatError(f"--element has {len(residues)} entries, group {nf.group} needs {nf.group.rank}")
    emit(amplitude_to_json(amplitude(nf, nf.group.element(residues))))


def cmd_normalform(args):
    emit(normal_form_to_json(load_state(args.file, parse_seed(args.seed))))


def cmd_solve(args):
    doc = read_document(args.file)
    if doc["format"] != SYSTEM_FORMAT:
        raise CircuitFormatError(f"{args.file}: expected {SYSTEM_FORMAT}, got {doc['format']!r}")
    A, b = load_system(doc)
    solution = solve(A, b)
    emit(solution_to_json(solution, count_solutions(A, b) if solution.solvable else None))


def cmd_selftest(args):
    report = run_selftest(args.max_order, trials=args.trials, seed=parse_seed(args.seed))
    emit(report)
    return 1 if report["failures"] else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Exact simulator for adaptive normalizer circuits over finite Abelian groups")
    parser.add_argument('--log-level', default='WARNING', help="Logging level (DEBUG, INFO, WARNING, ERROR)")
    parser.add_argument('--log-file', type=str, help="Also write logs to this file")
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('simulate', help="Run a circuit file and print one transcript per shot")
    p.add_argument('file')
    p.add_argument('--shots', type=int, default=1)
    p.add_argument('--seed', type=str, help=f"Seed (default: ${SEED_ENV} or 0)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser('distribution', help="Exact outcome distribution of one measurement")
    p.add_argument('file')
    p.add_argument('--register', required=True)
    p.add_argument('--given', action='append', default=[], help="Earlier outcome as register=k (repeatable)")
    p.set_defaults(func=cmd_distribution)

    p = sub.add_parser('amplitude', help="Exact amplitude <g|psi> of the final state")
    p.add_argument('file')
    p.add_argument('--element', required=True, help="Comma-separated residues")
    p.add_argument('--seed', type=str)
    p.set_defaults(func=cmd_amplitude)

    p = sub.add_parser('normalform', help="Normal form of the final state")
    p.add_argument('file')
    p.add_argument('--seed', type=str)
    p.set_defaults(func=cmd_normalform)

    p = sub.add_parser('solve', help="Solve a linear system A x = b over finite Abelian groups")
    p.add_argument('file')
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser('selftest', help="Compare the simulator against the dense oracle on random instances")
    p.add_argument('--max-order', type=int, default=32)
    p.add_argument('--trials', type=int, default=50)
    p.add_argument('--seed', type=str)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level, args.log_file)
    try:
        return args.func(args) or 0
    except (ValueError, OSError) as e:
        logger.error(f"{args.command} failed: {e}")
        emit({"error": type(e).__name__, "message": str(e)})
        return 1


if __name__ == "__main__":
    sys.exit(main())
