import logging
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Tuple, Union

from abelian_group import GroupElement, GroupSpec, SubgroupGens, hiding_hom
from linear_solver import HomMatrix, solve
from measurement import OutcomeDistribution, eigenvalue_label, measure, outcome_distribution
from normalizer_gates import Automorphism, GateEncoding, PartialQFT, PauliGate, conjugate
from pauli import PauliLabel, make_X, make_Z
from stabilizer import NormalFormState, StabilizerGroup, initial_state_stabilizer, normal_form

logger = logging.getLogger(__name__)


class MalformedProgramError(ValueError):
    pass


class IndeterminatePrefixError(ValueError):
    pass


class UnsolvableCorrectionError(ValueError):
    pass


@dataclass(frozen=True)
class Condition:
    register: str
    equals: int


@dataclass(frozen=True)
class GateStep:
    gate: GateEncoding
    condition: Optional[Condition] = None


@dataclass(frozen=True)
class MeasureStep:
    pauli: PauliLabel
    register: str


@dataclass(frozen=True)
class CosetCorrectStep:
    """
    Reads the ancilla registers as b = hom(g') for some g' in the system part,
    solves for g' and applies X(target - g'). The system part is the first
    hom.domain.rank factors; registers[l] holds the Z(e_f) outcome of
    ancilla_factors[l].
    """
    hom: HomMatrix
    target: GroupElement
    registers: Tuple[str, ...]
    ancilla_factors: Tuple[int, ...]
    reset_ancilla: bool = False


Step = Union[GateStep, MeasureStep, CosetCorrectStep]


@dataclass(frozen=True)
class CircuitProgram:
    group: GroupSpec
    input: GroupElement
    steps: Tuple[Step, ...]


@dataclass(frozen=True)
class MeasurementRecord:
    register: str
    k: int
    probability: Fraction
    # (y, d) of the omega labelling when the measured Pauli is diagonal
    omega: Optional[Tuple[int, int]] = None


@dataclass(frozen=True)
class RunTranscript:
    records: Tuple[MeasurementRecord, ...]
    final: NormalFormState
    seed: object
    stabilizer: StabilizerGroup = field(compare=False, default=None)

    def outcomes(self) -> Dict[str, int]:
        return {r.register: r.k for r in self.records}


def _step_group(step: Step) -> GroupSpec:
    if isinstance(step, GateStep):
        return step.gate.group
    elif isinstance(step, MeasureStep):
        return step.pauli.group
    return None


def validate_program(program: CircuitProgram) -> CircuitProgram:
    G = program.group
    if program.input.group != G:
        raise MalformedProgramError(f"Input {program.input} is not an element of {G}")
    seen: Dict[str, MeasureStep] = {}
    for n, step in enumerate(program.steps):
        group = _step_group(step)
        if group is not None and group != G:
            raise MalformedProgramError(f"Step {n} acts on {group}, program group is {G}")
        if isinstance(step, GateStep):
            if step.condition is not None and step.condition.register not in seen:
                raise MalformedProgramError(
                    f"Step {n} is conditioned on register '{step.condition.register}' before it is measured")
        elif isinstance(step, MeasureStep):
            if step.register in seen:
                raise MalformedProgramError(f"Register '{step.register}' is measured twice")
            seen[step.register] = step
        elif isinstance(step, CosetCorrectStep):
            _validate_correction(n, step, G, seen)
        else:
            raise MalformedProgramError(f"Step {n} has unknown type {type(step).__name__}")
    return program


def _validate_correction(n: int, step: CosetCorrectStep, G: GroupSpec, seen: Dict[str, MeasureStep]):
    system = step.hom.domain
    if G.moduli[:system.rank] != system.moduli:
        raise MalformedProgramError(f"Step {n}: correction domain {system} is not the leading part of {G}")
    if step.target.group != system:
        raise MalformedProgramError(f"Step {n}: target {step.target} is not in {system}")
    if len(step.registers) != step.hom.codomain.rank or len(step.ancilla_factors) != len(step.registers):
        raise MalformedProgramError(f"Step {n}: need one register per ancilla factor and per matrix row")
    for name, f, c in zip(step.registers, step.ancilla_factors, step.hom.codomain.moduli):
        if name not in seen:
            raise MalformedProgramError(f"Step {n}: register '{name}' is read before it is measured")
        if not system.rank <= f < G.rank or G.moduli[f] != c:
            raise MalformedProgramError(f"Step {n}: ancilla factor {f} does not match modulus {c}")
        if seen[name].pauli != make_Z(G.basis(f)):
            raise MalformedProgramError(
                f"Step {n}: register '{name}' must hold a phase-free Z(e_{f}) outcome, got {seen[name].pauli}")


class AdaptiveSimulator:
    """
    Executes one adaptive run step by step on the stabilizer of the current
    state. Outcomes are drawn from rng unless the register is forced.
    """

    def __init__(self, program: CircuitProgram, rng: Optional[random.Random] = None,
                 forced: Optional[Mapping[str, int]] = None):
        self.program = program
        self.rng = rng
        self.forced = dict(forced or {})
        self.state = initial_state_stabilizer(program.group, program.input)
        self.outcomes: Dict[str, int] = {}
        self.records: List[MeasurementRecord] = []

    def handle_step(self, step: Step, distribution: Optional[OutcomeDistribution] = None):
        if isinstance(step, GateStep):
            self.handle_gate(step)
        elif isinstance(step, MeasureStep):
            self.handle_measure(step, distribution)
        elif isinstance(step, CosetCorrectStep):
            self.handle_correction(step)
        else:
            raise MalformedProgramError(f"Unknown step type {type(step).__name__}")

    def apply_gate(self, gate: GateEncoding):
        self.state = StabilizerGroup(tuple(conjugate(gate, p) for p in self.state.generators), self.state.group)

    def handle_gate(self, step: GateStep):
        cond = step.condition
        if cond is not None:
            value = self.outcomes[cond.register]
            if (value - cond.equals) % self.program.group.phase_modulus:
                logger.debug(f"Skipping gate: register {cond.register}={value} != {cond.equals}")
                return
        self.apply_gate(step.gate)

    def handle_measure(self, step: MeasureStep, distribution: Optional[OutcomeDistribution] = None):
        dist = distribution or outcome_distribution(self.state, step.pauli)
        k, self.state = measure(self.state, step.pauli, rng=self.rng,
                                forced=self.forced.get(step.register), distribution=dist)
        self.outcomes[step.register] = k
        self.records.append(MeasurementRecord(step.register, k, dist.probability(k),
                                            eigenvalue_label(k, step.pauli)))

    def register_value(self, name: str, modulus: int) -> int:
        # Z(e_f) on a factor of order c has eigenvalue exponent k = (2g / c) * value
        N = self.program.group.phase_modulus
        k = self.outcomes[name]
        if (k * modulus) % N:
            raise RuntimeError(f"Register '{name}' holds {k}, not a Z_{modulus} basis outcome")
        return k * modulus // N

    def handle_correction(self, step: CosetCorrectStep):
        G = self.program.group
        b = step.hom.codomain.element([self.register_value(name, c)
                                       for name, c in zip(step.registers, step.hom.codomain.moduli)])
        solution = solve(step.hom, b)
        if not solution.solvable:
            raise UnsolvableCorrectionError(f"Correction system has no solution for outcomes {b}")
        shift = step.target - solution.particular
        residues = list(shift.residues) + [0] * (G.rank - step.hom.domain.rank)
        if step.reset_ancilla:
            for f, value in zip(step.ancilla_factors, b.residues):
                residues[f] = -value
        logger.debug(f"Correction: g'={solution.particular}, applying X{tuple(residues)}")
        self.apply_gate(PauliGate(make_X(G.element(residues))))


def run(program: CircuitProgram, seed, forced: Optional[Mapping[str, int]] = None) -> RunTranscript:
    validate_program(program)
    sim = AdaptiveSimulator(program, random.Random(seed), forced)
    for step in program.steps:
        sim.handle_step(step)
    final = normal_form(sim.state)
    logger.info(f"Run finished: {len(sim.records)} measurements, seed {seed}")
    return RunTranscript(tuple(sim.records), final, seed, sim.state)


def shot_seed(seed, shot: int) -> int:
    return random.Random(f"{seed}/{shot}").getrandbits(63)


def run_shots(program: CircuitProgram, seed, shots: int) -> List[RunTranscript]:
    return [run(program, shot_seed(seed, i)) for i in range(shots)]


def exact_distribution(program: CircuitProgram, register: str,
                       given: Optional[Mapping[str, int]] = None) -> OutcomeDistribution:
    """
    Conditional outcome distribution of the named measurement. Earlier
    measurements must either be given or be deterministic.
    """
    validate_program(program)
    given = dict(given or {})
    sim = AdaptiveSimulator(program, forced=given)
    for step in program.steps:
        if isinstance(step, MeasureStep):
            dist = outcome_distribution(sim.state, step.pauli)
            if step.register == register:
                return dist
            if step.register not in given:
                if not dist.is_point_mass():
                    raise IndeterminatePrefixError(
                        f"indeterminate prefix: register '{step.register}' is random and not given")
                sim.forced[step.register] = dist.offset
            sim.handle_step(step, dist)
        else:
            sim.handle_step(step)
    raise MalformedProgramError(f"Program has no measurement named '{register}'")


def coset_prepare(G: GroupSpec, H_gens: SubgroupGens, x: GroupElement,
                  reset_ancilla: bool = False) -> CircuitProgram:
    """
    Adaptive program preparing |x + H> on G with ancilla factors Z_d^s, d the
    exponent of G: Fourier transform, write the hiding map into the ancilla,
    measure the ancilla and correct with X(x - g').
    """
    m = G.rank
    d = G.exponent
    scale = G.order // d
    omega = [[v // scale % d for v in row] for row in hiding_hom(H_gens).entries]
    s = len(omega)
    ancilla = GroupSpec((d,) * s)
    full = G.product(ancilla)

    matrix = [[1 if r == c else 0 for c in range(m + s)] for r in range(m + s)]
    for k, row in enumerate(omega):
        matrix[m + k][:m] = row
    steps: List[Step] = [
        GateStep(PartialQFT(tuple(range(m)), full)),
        GateStep(Automorphism(HomMatrix(tuple(tuple(r) for r in matrix), full, full))),
    ]
    registers = tuple(f"anc{k}" for k in range(s))
    for k, name in enumerate(registers):
        steps.append(MeasureStep(make_Z(full.basis(m + k)), name))
    steps.append(CosetCorrectStep(HomMatrix(tuple(tuple(r) for r in omega), G, ancilla), x,
                                  registers, tuple(range(m, m + s)), reset_ancilla))
    return CircuitProgram(full, full.zero(), tuple(steps))
