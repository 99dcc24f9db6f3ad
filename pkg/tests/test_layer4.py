import json
import logging
import os
import random
import sys
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from abelian_group import GroupSpec, SubgroupGens, make_group, reduce_generators, subgroup
from circuit_protocol import (
    CircuitFormatError,
    load_circuit,
    load_stabilizer,
    load_system,
    program_to_json,
    read_document,
)
from dense_oracle import (
    all_elements,
    apply_gate_dense,
    basis_state,
    compare_state,
    dense_outcome_probabilities,
    measure_dense,
)
from linear_solver import validate_hom
from main import main
from normalizer_gates import fourier_gate, pauli_gate
from pauli import make_X, make_Z, with_phase
from selftest import random_gate, random_group, random_pauli
from simulator import (
    CircuitProgram,
    Condition,
    CosetCorrectStep,
    GateStep,
    IndeterminatePrefixError,
    MalformedProgramError,
    MeasureStep,
    UnsolvableCorrectionError,
    coset_prepare,
    exact_distribution,
    run,
    run_shots,
    shot_seed,
    validate_program,
)
from stabilizer import amplitude, sample_support

logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
logger = logging.getLogger("Layer4Test")

CIRCUITS = os.path.abspath(os.path.join(os.path.dirname(__file__), '..', 'circuits'))
BELL = os.path.join(CIRCUITS, "bell.json")
COSET_Z4 = os.path.join(CIRCUITS, "coset_z4.json")
COSET_PREPARE_Z4 = os.path.join(CIRCUITS, "coset_prepare_z4.json")
RESET_Z3 = os.path.join(CIRCUITS, "reset_z3.json")
SOLVE_Z4 = os.path.join(CIRCUITS, "solve_z4.json")

SEEDS = st.integers(min_value=0, max_value=2 ** 32)


def bell_program() -> CircuitProgram:
    return load_circuit(read_document(BELL))


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, [json.loads(line) for line in out.splitlines() if line.strip()]


def write_json(tmp_path, name, doc) -> str:
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


# ---------------------------------------------------------------------------
# simulator
# ---------------------------------------------------------------------------

def test_empty_program():
    G = make_group([2, 3])
    transcript = run(CircuitProgram(G, G.zero(), ()), seed=0)
    assert transcript.records == ()
    assert transcript.final.offset == G.zero()
    assert transcript.final.order == 1


def test_bell_outcomes_are_correlated():
    program = bell_program()
    firsts = set()
    for seed in range(20):
        transcript = run(program, seed)
        outcomes = transcript.outcomes()
        assert outcomes["m0"] == outcomes["m1"]
        assert outcomes["m0"] in (0, 4)
        first, second = transcript.records
        assert first.probability == Fraction(1, 2)
        assert second.probability == 1
        assert first.omega == (outcomes["m0"] // 4, 2)
        firsts.add(outcomes["m0"])
    assert firsts == {0, 4}


def test_run_is_deterministic_per_seed():
    program = bell_program()
    assert run(program, 7) == run(program, 7)
    assert run(program, "label") == run(program, "label")
    assert [t.outcomes() for t in run_shots(program, 5, 6)] == [t.outcomes() for t in run_shots(program, 5, 6)]
    assert shot_seed(5, 0) != shot_seed(5, 1)


def test_forced_outcomes():
    transcript = run(bell_program(), 0, forced={"m0": 4})
    assert transcript.outcomes() == {"m0": 4, "m1": 4}


def test_conditional_gates_reset_the_state():
    program = load_circuit(read_document(RESET_Z3))
    seen = set()
    for seed in range(40):
        transcript = run(program, seed)
        seen.add(transcript.outcomes()["m"])
        assert transcript.final.offset == program.group.zero()
        assert transcript.final.order == 1
    assert seen == {0, 2, 4}


def test_validate_program_errors():
    G = make_group([2])
    X = GateStep(pauli_gate(make_X(G.element([1]))), Condition("m", 2))
    with pytest.raises(MalformedProgramError):
        run(CircuitProgram(G, G.zero(), (X,)), 0)

    m = MeasureStep(make_Z(G.element([1])), "m")
    with pytest.raises(MalformedProgramError):
        run(CircuitProgram(G, G.zero(), (m, m)), 0)

    other = make_group([3])
    with pytest.raises(MalformedProgramError):
        run(CircuitProgram(G, G.zero(), (GateStep(fourier_gate(other, 0)),)), 0)


def correction_program(pauli, input_residues=(0, 0)) -> CircuitProgram:
    G = make_group([4, 4])
    system = make_group([4])
    correct = CosetCorrectStep(validate_hom([[2]], system, make_group([4])), system.zero(), ("r",), (1,))
    return CircuitProgram(G, G.element(list(input_residues)), (MeasureStep(pauli, "r"), correct))


def test_correction_register_must_hold_a_basis_measurement():
    G = make_group([4, 4])
    phased_x = with_phase(make_X(G.element([0, 1])), 1)
    for pauli in (phased_x,
                  with_phase(make_Z(G.element([0, 1])), 2),
                  make_Z(G.element([0, 2])),
                  make_Z(G.element([1, 0]))):
        with pytest.raises(MalformedProgramError):
            validate_program(correction_program(pauli))
        with pytest.raises(MalformedProgramError):
            run(correction_program(pauli), 0)
    validate_program(correction_program(make_Z(G.element([0, 1]))))


def test_unsolvable_correction_is_a_value_error():
    G = make_group([4, 4])
    # ancilla reads 1, outside the image {0, 2} of x -> 2x
    program = correction_program(make_Z(G.element([0, 1])), input_residues=(0, 1))
    with pytest.raises(UnsolvableCorrectionError):
        run(program, 0)
    assert issubclass(UnsolvableCorrectionError, ValueError)


def test_exact_distribution():
    program = bell_program()
    assert exact_distribution(program, "m0").as_dict() == {0: Fraction(1, 2), 4: Fraction(1, 2)}
    dist = exact_distribution(program, "m1", given={"m0": 0})
    assert dist.is_point_mass() and dist.offset == 0
    dist = exact_distribution(program, "m1", given={"m0": 4})
    assert dist.as_dict() == {4: 1}
    with pytest.raises(IndeterminatePrefixError):
        exact_distribution(program, "m1")
    with pytest.raises(MalformedProgramError):
        exact_distribution(program, "nope")

    G = make_group([4])
    program = CircuitProgram(G, G.zero(), (MeasureStep(make_Z(G.element([1])), "a"),
                                           MeasureStep(make_Z(G.element([1])), "b")))
    # a deterministic earlier measurement need not be given
    assert exact_distribution(program, "b").as_dict() == {0: 1}


@given(SEEDS)
@settings(max_examples=25, deadline=None)
def test_run_matches_dense_replay(seed):
    rng = random.Random(seed)
    G = random_group(rng, 24)
    steps = []
    for n in range(8):
        if rng.random() < 0.3:
            steps.append(MeasureStep(random_pauli(G, rng), f"r{n}"))
        else:
            steps.append(GateStep(random_gate(G, rng)))
    x = G.element([rng.randrange(d) for d in G.moduli])
    program = CircuitProgram(G, x, tuple(steps))
    transcript = run(program, seed)
    outcomes = transcript.outcomes()
    probabilities = {r.register: r.probability for r in transcript.records}

    state = basis_state(x)
    for step in steps:
        if isinstance(step, GateStep):
            state = apply_gate_dense(state, step.gate)
        else:
            k = outcomes[step.register]
            dense = dense_outcome_probabilities(state, step.pauli)
            assert abs(dense[k] - float(probabilities[step.register])) < 1e-9
            _, state = measure_dense(state, step.pauli, forced=k)
    assert compare_state(transcript.final, state)


# ---------------------------------------------------------------------------
# coset-state preparation
# ---------------------------------------------------------------------------

def system_amplitude(transcript, G: GroupSpec, residues, ancilla=None):
    full = transcript.final.group
    padding = list(ancilla) if ancilla is not None else [0] * (full.rank - G.rank)
    return amplitude(transcript.final, full.element(list(residues) + padding))


def test_coset_prepare_z4():
    G = make_group([4])
    program = coset_prepare(G, subgroup(G, [[2]]), G.zero(), reset_ancilla=True)
    for seed in range(1000):
        transcript = run(program, seed)
        assert system_amplitude(transcript, G, [0]).mag2 == Fraction(1, 2)
        assert system_amplitude(transcript, G, [2]).mag2 == Fraction(1, 2)
        assert system_amplitude(transcript, G, [0]).phase.value == 0
        assert system_amplitude(transcript, G, [2]).phase.value == 0
        assert system_amplitude(transcript, G, [1]).is_zero()


def test_coset_prepare_without_reset_keeps_system_coset():
    G = make_group([4])
    program = coset_prepare(G, subgroup(G, [[2]]), G.element([1]))
    rng = random.Random(2)
    for seed in range(5):
        transcript = run(program, seed)
        for _ in range(10):
            g = sample_support(transcript.final, rng)
            assert g.residues[0] in (1, 3)


def test_coset_prepare_full_group():
    G = make_group([2, 3])
    program = coset_prepare(G, subgroup(G, [[1, 0], [0, 1]]), G.zero(), reset_ancilla=True)
    transcript = run(program, 4)
    for x in range(2):
        for y in range(3):
            assert system_amplitude(transcript, G, [x, y]).mag2 == Fraction(1, 6)


def test_coset_prepare_trivial_subgroup():
    G = make_group([3, 4])
    g = G.element([2, 3])
    program = coset_prepare(G, SubgroupGens((), G), g, reset_ancilla=True)
    for seed in range(4):
        transcript = run(program, seed)
        assert system_amplitude(transcript, G, g.residues).mag2 == 1


def invariant_factor_moduli(max_order: int, max_rank: int):
    """Every d_1 | d_2 | ... with product at most max_order, one per isomorphism class."""
    found = []

    def extend(prefix, order):
        if prefix:
            found.append(tuple(prefix))
        if len(prefix) == max_rank:
            return
        step = prefix[-1] if prefix else 1
        d = prefix[-1] if prefix else 2
        while order * d <= max_order:
            extend(prefix + [d], order * d)
            d += step

    extend([], 1)
    return found


def all_subgroups(G: GroupSpec):
    def close(members):
        frontier = list(members)
        members = set(members)
        while frontier:
            nxt = []
            for g in frontier:
                for h in list(members):
                    if g + h not in members:
                        members.add(g + h)
                        nxt.append(g + h)
            frontier = nxt
        return frozenset(members)

    elements = all_elements(G)
    found = {frozenset([G.zero()])}
    frontier = list(found)
    while frontier:
        nxt = []
        for H in frontier:
            for g in elements:
                if g not in H:
                    K = close(H | {g})
                    if K not in found:
                        found.add(K)
                        nxt.append(K)
        frontier = nxt
    return found


@pytest.mark.parametrize("moduli", invariant_factor_moduli(32, 3))
def test_coset_prepare_every_subgroup_and_coset(moduli):
    G = GroupSpec(moduli)
    for n, members in enumerate(sorted(all_subgroups(G), key=len)):
        H = reduce_generators(SubgroupGens(tuple(sorted(members, key=lambda g: g.residues)), G))
        remaining = set(all_elements(G))
        while remaining:
            x = min(remaining, key=lambda g: g.residues)
            coset = {x + h for h in members}
            remaining -= coset
            transcript = run(coset_prepare(G, H, x, reset_ancilla=True), seed=n)
            assert transcript.final.order == len(members)
            phases = set()
            for g in coset:
                amp = system_amplitude(transcript, G, g.residues)
                assert amp.mag2 == Fraction(1, len(members))
                phases.add(amp.phase.value)
            assert len(phases) == 1


def test_coset_prepare_program_file():
    program = load_circuit(read_document(COSET_PREPARE_Z4))
    dist = exact_distribution(program, "anc0")
    assert dist.size == 2
    for seed in range(4):
        transcript = run(program, seed)
        assert amplitude(transcript.final, program.group.element([2, 0])).mag2 == Fraction(1, 2)


# ---------------------------------------------------------------------------
# circuit files
# ---------------------------------------------------------------------------

def test_program_json_reload():
    for path in (BELL, COSET_PREPARE_Z4, RESET_Z3):
        program = load_circuit(read_document(path))
        assert load_circuit(json.loads(json.dumps(program_to_json(program)))) == program


def test_load_stabilizer_and_system():
    S = load_stabilizer(read_document(COSET_Z4))
    assert S.group == make_group([4]) and len(S) == 2
    A, b = load_system(read_document(SOLVE_Z4))
    assert A.entries == ((2,),) and b.residues == (1,)


@pytest.mark.parametrize("doc", [
    {"format": "abstab-circuit/2", "group": [2], "steps": []},
    {"format": "abstab-circuit/1", "group": [2], "steps": [{"op": "bogus"}]},
    {"format": "abstab-circuit/1", "group": [2], "steps": [], "extra": 1},
    {"format": "abstab-circuit/1", "group": [2], "steps": [{"op": "qft", "factors": [True]}]},
    {"format": "abstab-circuit/1", "group": [2], "steps": [{"op": "qft", "factors": [3]}]},
    {"format": "abstab-circuit/1", "group": [2, 2],
     "steps": [{"op": "quadratic_phase", "diag": [0, 0], "double": [0, 0], "pair": [[0, 1]]}]},
    {"format": "abstab-circuit/1", "group": [2],
     "steps": [{"op": "measure", "pauli": {"a": 0, "g": [1, 0], "h": [0]}, "register": "m"}]},
])
def test_malformed_circuits(doc):
    with pytest.raises(CircuitFormatError):
        load_circuit(doc)


def test_invalid_gate_data_is_rejected():
    doc = {"format": "abstab-circuit/1", "group": [4],
           "steps": [{"op": "mult", "factor": 0, "by": 2}]}
    with pytest.raises(ValueError):
        load_circuit(doc)


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------

def test_cli_simulate_is_deterministic(capsys):
    code, first = run_cli(capsys, "simulate", BELL, "--shots", "4", "--seed", "7")
    assert code == 0 and len(first) == 4
    _, second = run_cli(capsys, "simulate", BELL, "--shots", "4", "--seed", "7")
    assert first == second
    for line in first:
        ks = [r["k"] for r in line["records"]]
        assert ks[0] == ks[1]


def test_cli_seed_from_environment(capsys, monkeypatch):
    _, explicit = run_cli(capsys, "simulate", BELL, "--shots", "3", "--seed", "11")
    monkeypatch.setenv("ABSTAB_SEED", "11")
    _, from_env = run_cli(capsys, "simulate", BELL, "--shots", "3")
    assert explicit == from_env


def test_cli_amplitude(capsys):
    code, out = run_cli(capsys, "amplitude", COSET_Z4, "--element", "2")
    assert code == 0
    assert out == [{"phase_exp": "0", "mag2_num": "1", "mag2_den": "2"}]
    _, out = run_cli(capsys, "amplitude", COSET_Z4, "--element", "1")
    assert out[0]["mag2_num"] == "0"


def test_cli_normalform(capsys):
    code, out = run_cli(capsys, "normalform", COSET_Z4)
    assert code == 0
    assert out[0]["offset"] == ["0"] and out[0]["order"] == "2"
    _, out = run_cli(capsys, "normalform", BELL, "--seed", "3")
    assert out[0]["order"] == "1"


def test_cli_solve(capsys, tmp_path):
    code, out = run_cli(capsys, "solve", SOLVE_Z4)
    assert code == 0 and out == [{"solvable": False}]
    path = write_json(tmp_path, "system.json", {"format": "abstab-system/1", "domain": [4], "codomain": [4],
                                                "matrix": [[2]], "b": [2]})
    _, out = run_cli(capsys, "solve", path)
    assert out[0]["solvable"] is True
    assert out[0]["count"] == "2"
    assert out[0]["particular"] in (["1"], ["3"])


def test_cli_distribution(capsys):
    code, out = run_cli(capsys, "distribution", BELL, "--register", "m0")
    assert code == 0
    assert out[0]["size"] == "2"
    assert {o["k"] for o in out[0]["outcomes"]} == {"0", "4"}
    _, out = run_cli(capsys, "distribution", BELL, "--register", "m1", "--given", "m0=4")
    assert out[0]["outcomes"] == [{"k": "4", "prob_num": "1", "prob_den": "1"}]
    code, out = run_cli(capsys, "distribution", BELL, "--register", "m1")
    assert code == 1 and out[0]["error"] == "IndeterminatePrefixError"


def test_cli_reports_malformed_input(capsys, tmp_path):
    path = write_json(tmp_path, "bad.json", {"format": "abstab-circuit/1", "group": [2], "steps": [{"op": "bogus"}]})
    code, out = run_cli(capsys, "simulate", path)
    assert code == 1
    assert out[0]["error"] == "CircuitFormatError"
    code, out = run_cli(capsys, "simulate", str(tmp_path / "missing.json"))
    assert code == 1


def test_cli_reports_bad_correction_register(capsys, tmp_path):
    correct = {"op": "coset_correct", "matrix": [[2]], "moduli": [4], "target": [0], "registers": ["r"]}
    doc = {"format": "abstab-circuit/1", "group": [4, 4],
           "steps": [{"op": "measure", "pauli": {"a": 1, "g": [0, 0], "h": [0, 1]}, "register": "r"}, correct]}
    code, out = run_cli(capsys, "simulate", write_json(tmp_path, "phased.json", doc))
    assert code == 1
    assert out[0]["error"] == "MalformedProgramError"

    doc = {"format": "abstab-circuit/1", "group": [4, 4], "input": [0, 1],
           "steps": [{"op": "measure", "pauli": {"a": 0, "g": [0, 1], "h": [0, 0]}, "register": "r"}, correct]}
    code, out = run_cli(capsys, "simulate", write_json(tmp_path, "unsolvable.json", doc))
    assert code == 1
    assert out[0]["error"] == "UnsolvableCorrectionError"


def test_cli_selftest(capsys):
    code, out = run_cli(capsys, "selftest", "--max-order", "12", "--trials", "4", "--seed", "1")
    assert code == 0
    assert out[0]["failures"] == 0
