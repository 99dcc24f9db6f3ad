import json
import logging
import re
from typing import Any, Dict, List, Optional, Sequence, Tuple

from abelian_group import GroupElement, GroupSpec, make_group
from linear_solver import GeneralSolution, HomMatrix, validate_hom
from measurement import OutcomeDistribution
from normalizer_gates import (
    Automorphism,
    GateEncoding,
    PartialQFT,
    PauliGate,
    QuadraticPhase,
    cz_gate,
    make_automorphism,
    make_quadratic,
    mult_gate,
    phase_S_gate,
    sum_gate,
)
from pauli import PauliLabel
from simulator import (
    CircuitProgram,
    Condition,
    CosetCorrectStep,
    GateStep,
    MeasureStep,
    RunTranscript,
    Step,
)
from stabilizer import Amplitude, NormalFormState, StabilizerGroup, validate_stabilizer

logger = logging.getLogger(__name__)

CIRCUIT_FORMAT = "abstab-circuit/1"
STABILIZER_FORMAT = "abstab-stabilizer/1"
SYSTEM_FORMAT = "abstab-system/1"

# Distributions larger than this are reported by (offset, step, size) only
MAX_LISTED_OUTCOMES = 1024

_DECIMAL = re.compile(r"^-?[0-9]+$")


class CircuitFormatError(ValueError):
    pass


def _int(value: Any, where: str) -> int:
    if isinstance(value, bool):
        raise CircuitFormatError(f"{where}: expected an integer, got {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, str) and _DECIMAL.match(value):
        return int(value)
    raise CircuitFormatError(f"{where}: expected an integer or decimal string, got {value!r}")


def _int_list(value: Any, where: str) -> List[int]:
    if not isinstance(value, list):
        raise CircuitFormatError(f"{where}: expected a list, got {value!r}")
    return [_int(v, f"{where}[{n}]") for n, v in enumerate(value)]


def _bool(value: Any, where: str) -> bool:
    if not isinstance(value, bool):
        raise CircuitFormatError(f"{where}: expected true/false, got {value!r}")
    return value


def _str(value: Any, where: str) -> str:
    if not isinstance(value, str) or not value:
        raise CircuitFormatError(f"{where}: expected a non-empty string, got {value!r}")
    return value


def _fields(obj: Any, required: Sequence[str], optional: Sequence[str], where: str) -> Dict[str, Any]:
    if not isinstance(obj, dict):
        raise CircuitFormatError(f"{where}: expected an object, got {type(obj).__name__}")
    missing = [k for k in required if k not in obj]
    if missing:
        raise CircuitFormatError(f"{where}: missing field(s) {', '.join(missing)}")
    unknown = [k for k in obj if k not in required and k not in optional]
    if unknown:
        raise CircuitFormatError(f"{where}: unknown field(s) {', '.join(unknown)}")
    return obj


def _matrix(value: Any, where: str) -> List[List[int]]:
    if not isinstance(value, list):
        raise CircuitFormatError(f"{where}: expected a list of rows")
    return [_int_list(row, f"{where}[{n}]") for n, row in enumerate(value)]


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def parse_group(value: Any, where: str = "group") -> GroupSpec:
    return make_group(_int_list(value, where))


def parse_element(value: Any, G: GroupSpec, where: str) -> GroupElement:
    residues = _int_list(value, where)
    if len(residues) != G.rank:
        raise CircuitFormatError(f"{where}: element of length {len(residues)} does not fit {G}")
    return G.element(residues)


def parse_pauli(value: Any, G: GroupSpec, where: str = "pauli") -> PauliLabel:
    obj = _fields(value, ("a", "g", "h"), (), where)
    return PauliLabel(_int(obj["a"], f"{where}.a"),
                      parse_element(obj["g"], G, f"{where}.g"),
                      parse_element(obj["h"], G, f"{where}.h"))


def _factor(value: Any, G: GroupSpec, where: str) -> int:
    i = _int(value, where)
    if not 0 <= i < G.rank:
        raise CircuitFormatError(f"{where}: factor {i} out of range for {G}")
    return i


def parse_gate(obj: Dict[str, Any], G: GroupSpec, where: str) -> GateEncoding:
    op = obj["op"]
    if op == "qft":
        _fields(obj, ("op", "factors"), ("inverse", "if"), where)
        factors = [_factor(f, G, f"{where}.factors") for f in _int_list(obj["factors"], f"{where}.factors")]
        return PartialQFT(tuple(factors), G, _bool(obj.get("inverse", False), f"{where}.inverse"))
    elif op == "automorphism":
        _fields(obj, ("op", "matrix"), ("if",), where)
        return make_automorphism(_matrix(obj["matrix"], f"{where}.matrix"), G)
    elif op == "quadratic_phase":
        _fields(obj, ("op", "diag", "double"), ("pair", "if"), where)
        pair = {}
        for n, entry in enumerate(obj.get("pair", [])):
            values = _int_list(entry, f"{where}.pair[{n}]")
            if len(values) != 3:
                raise CircuitFormatError(f"{where}.pair[{n}]: expected [i, j, value]")
            i, j, val = values
            pair[(i, j)] = val
        return QuadraticPhase(make_quadratic(G, _int_list(obj["diag"], f"{where}.diag"),
                                             _int_list(obj["double"], f"{where}.double"), pair))
    elif op == "pauli":
        _fields(obj, ("op", "a", "g", "h"), ("if",), where)
        return PauliGate(parse_pauli({k: obj[k] for k in ("a", "g", "h")}, G, where))
    elif op == "sum":
        _fields(obj, ("op", "control", "target"), ("if",), where)
        return sum_gate(G, _factor(obj["control"], G, f"{where}.control"), _factor(obj["target"], G, f"{where}.target"))
    elif op == "cz":
        _fields(obj, ("op", "a", "b"), ("if",), where)
        return cz_gate(G, _factor(obj["a"], G, f"{where}.a"), _factor(obj["b"], G, f"{where}.b"))
    elif op == "s":
        _fields(obj, ("op", "factor"), ("power", "if"), where)
        return phase_S_gate(G, _factor(obj["factor"], G, f"{where}.factor"), _int(obj.get("power", 1), f"{where}.power"))
    elif op == "mult":
        _fields(obj, ("op", "factor", "by"), ("if",), where)
        return mult_gate(G, _factor(obj["factor"], G, f"{where}.factor"), _int(obj["by"], f"{where}.by"))
    raise CircuitFormatError(f"{where}: unknown op {op!r}")


def parse_step(obj: Any, G: GroupSpec, where: str) -> Step:
    if not isinstance(obj, dict) or "op" not in obj:
        raise CircuitFormatError(f"{where}: expected an object with an 'op' field")
    op = obj["op"]
    if op == "measure":
        _fields(obj, ("op", "pauli", "register"), (), where)
        return MeasureStep(parse_pauli(obj["pauli"], G, f"{where}.pauli"), _str(obj["register"], f"{where}.register"))
    elif op == "coset_correct":
        _fields(obj, ("op", "matrix", "moduli", "target", "registers"), ("reset_ancilla", "ancilla_factors"), where)
        matrix = _matrix(obj["matrix"], f"{where}.matrix")
        cols = len(matrix[0]) if matrix else 0
        if cols > G.rank:
            raise CircuitFormatError(f"{where}: matrix has more columns than {G} has factors")
        system = GroupSpec(G.moduli[:cols])
        codomain = make_group(_int_list(obj["moduli"], f"{where}.moduli"))
        registers = obj["registers"]
        if not isinstance(registers, list):
            raise CircuitFormatError(f"{where}.registers: expected a list")
        default_factors = list(range(cols, cols + len(registers)))
        factors = _int_list(obj.get("ancilla_factors", default_factors), f"{where}.ancilla_factors")
        return CosetCorrectStep(validate_hom(matrix, system, codomain),
                                parse_element(obj["target"], system, f"{where}.target"),
                                tuple(_str(r, f"{where}.registers") for r in registers),
                                tuple(factors),
                                _bool(obj.get("reset_ancilla", False), f"{where}.reset_ancilla"))

    condition = None
    if "if" in obj:
        cond = _fields(obj["if"], ("register", "equals"), (), f"{where}.if")
        condition = Condition(_str(cond["register"], f"{where}.if.register"), _int(cond["equals"], f"{where}.if.equals"))
    return GateStep(parse_gate(obj, G, where), condition)


def load_circuit(doc: Any) -> CircuitProgram:
    obj = _fields(doc, ("format", "group", "steps"), ("input",), "circuit")
    if obj["format"] != CIRCUIT_FORMAT:
        raise CircuitFormatError(f"Unsupported format {obj['format']!r}, expected {CIRCUIT_FORMAT}")
    G = parse_group(obj["group"])
    x = parse_element(obj["input"], G, "input") if "input" in obj else G.zero()
    if not isinstance(obj["steps"], list):
        raise CircuitFormatError("steps: expected a list")
    steps = tuple(parse_step(s, G, f"steps[{n}]") for n, s in enumerate(obj["steps"]))
    return CircuitProgram(G, x, steps)


def load_stabilizer(doc: Any) -> StabilizerGroup:
    obj = _fields(doc, ("format", "group", "generators"), (), "stabilizer")
    if obj["format"] != STABILIZER_FORMAT:
        raise CircuitFormatError(f"Unsupported format {obj['format']!r}, expected {STABILIZER_FORMAT}")
    G = parse_group(obj["group"])
    if not isinstance(obj["generators"], list):
        raise CircuitFormatError("generators: expected a list")
    gens = [parse_pauli(p, G, f"generators[{n}]") for n, p in enumerate(obj["generators"])]
    return validate_stabilizer(gens, G)


def load_system(doc: Any) -> Tuple[HomMatrix, GroupElement]:
    obj = _fields(doc, ("format", "domain", "codomain", "matrix", "b"), (), "system")
    if obj["format"] != SYSTEM_FORMAT:
        raise CircuitFormatError(f"Unsupported format {obj['format']!r}, expected {SYSTEM_FORMAT}")
    domain = parse_group(obj["domain"], "domain")
    codomain = parse_group(obj["codomain"], "codomain")
    matrix = _matrix(obj["matrix"], "matrix")
    if len(matrix) != codomain.rank or any(len(row) != domain.rank for row in matrix):
        raise CircuitFormatError(f"matrix: shape does not fit {domain} -> {codomain}")
    return validate_hom(matrix, domain, codomain), parse_element(obj["b"], codomain, "b")


def read_document(path: str) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    if not isinstance(doc, dict) or "format" not in doc:
        raise CircuitFormatError(f"{path}: not an abstab document (no 'format' field)")
    return doc


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def element_to_json(g: GroupElement) -> List[str]:
    return [str(r) for r in g.residues]


def pauli_to_json(p: PauliLabel) -> Dict[str, Any]:
    return {"a": str(p.phase), "g": element_to_json(p.z_part), "h": element_to_json(p.x_part)}


def gate_to_json(gate: GateEncoding) -> Dict[str, Any]:
    if isinstance(gate, PartialQFT):
        return {"op": "qft", "factors": [str(i) for i in gate.factors], "inverse": gate.inverse}
    elif isinstance(gate, Automorphism):
        return {"op": "automorphism", "matrix": [[str(v) for v in row] for row in gate.matrix.entries]}
    elif isinstance(gate, QuadraticPhase):
        qf = gate.qf
        return {"op": "quadratic_phase", "diag": [str(v) for v in qf.diag], "double": [str(v) for v in qf.double],
                "pair": [[i, j, str(v)] for (i, j), v in sorted(qf.pair.items())]}
    elif isinstance(gate, PauliGate):
        return {"op": "pauli", **pauli_to_json(gate.label)}
    raise TypeError(f"Unknown gate encoding {type(gate).__name__}")


def step_to_json(step: Step) -> Dict[str, Any]:
    if isinstance(step, GateStep):
        obj = gate_to_json(step.gate)
        if step.condition is not None:
            obj["if"] = {"register": step.condition.register, "equals": str(step.condition.equals)}
        return obj
    elif isinstance(step, MeasureStep):
        return {"op": "measure", "pauli": pauli_to_json(step.pauli), "register": step.register}
    elif isinstance(step, CosetCorrectStep):
        return {"op": "coset_correct",
                "matrix": [[str(v) for v in row] for row in step.hom.entries],
                "moduli": [str(c) for c in step.hom.codomain.moduli],
                "target": element_to_json(step.target),
                "registers": list(step.registers),
                "ancilla_factors": [str(f) for f in step.ancilla_factors],
                "reset_ancilla": step.reset_ancilla}
    raise TypeError(f"Unknown step type {type(step).__name__}")


def program_to_json(program: CircuitProgram) -> Dict[str, Any]:
    return {"format": CIRCUIT_FORMAT,
            "group": [str(d) for d in program.group.moduli],
            "input": element_to_json(program.input),
            "steps": [step_to_json(s) for s in program.steps]}


def normal_form_to_json(nf: NormalFormState) -> Dict[str, Any]:
    return {"offset": element_to_json(nf.offset),
            "H": [element_to_json(h) for h in nf.H_gens.generators],
            "witnesses": [pauli_to_json(p) for p in nf.witnesses],
            "order": str(nf.order)}


def amplitude_to_json(amp: Amplitude) -> Dict[str, str]:
    return {"phase_exp": str(amp.phase.value if not amp.is_zero() else 0),
            "mag2_num": str(amp.mag2.numerator),
            "mag2_den": str(amp.mag2.denominator)}


def transcript_to_json(transcript: RunTranscript) -> Dict[str, Any]:
    records = []
    for r in transcript.records:
        rec = {"register": r.register, "k": str(r.k),
               "prob_num": str(r.probability.numerator), "prob_den": str(r.probability.denominator)}
        if r.omega is not None:
            rec["y"], rec["d"] = str(r.omega[0]), str(r.omega[1])
        records.append(rec)
    return {"seed": str(transcript.seed), "records": records, "final": normal_form_to_json(transcript.final)}


def distribution_to_json(register: str, dist: OutcomeDistribution) -> Dict[str, Any]:
    obj: Dict[str, Any] = {"register": register, "modulus": str(dist.modulus), "offset": str(dist.offset),
                           "step": str(dist.step), "size": str(dist.size)}
    if dist.size <= MAX_LISTED_OUTCOMES:
        obj["outcomes"] = [{"k": str(k), "prob_num": str(p.numerator), "prob_den": str(p.denominator)}
                           for k, p in dist.items()]
    return obj


def solution_to_json(solution: GeneralSolution, count: Optional[int] = None) -> Dict[str, Any]:
    if not solution.solvable:
        return {"solvable": False}
    obj: Dict[str, Any] = {"solvable": True,
                           "particular": element_to_json(solution.particular),
                           "kernel": [element_to_json(k) for k in solution.kernel_gens.generators]}
    if count is not None:
        obj["count"] = str(count)
    return obj
