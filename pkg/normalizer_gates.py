import logging
import math
import random
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple, Union

from sympy import mod_inverse

from abelian_group import GroupElement, GroupMismatchError, GroupSpec, PhaseExponent, character_exponent
from linear_solver import HomMatrix, solve, validate_hom
from pauli import PauliLabel, inverse, multiply

logger = logging.getLogger(__name__)

# Above this order validate_quadratic samples pairs instead of checking all of them
EXHAUSTIVE_CHECK_ORDER = 16
SAMPLED_PAIRS = 32


class QuadraticEncodingError(ValueError):
    pass


class NonInvertibleAutomorphismError(ValueError):
    pass


@dataclass(frozen=True)
class QuadraticFunction:
    """
    Coefficient tables of a quadratic function xi = gamma^n.
    diag[i] = n(e_i), double[i] = n(2 e_i) and pair[(i, j)] = n(e_i + e_j) for
    i < j; a missing pair means the cross term vanishes.
    """
    diag: Tuple[int, ...]
    double: Tuple[int, ...]
    pair: Dict[Tuple[int, int], int]
    group: GroupSpec

    def __post_init__(self):
        N = self.group.phase_modulus
        if len(self.diag) != self.group.rank or len(self.double) != self.group.rank:
            raise QuadraticEncodingError(
                f"Tables of length {len(self.diag)}/{len(self.double)} do not fit group {self.group}")
        pair = {}
        for (i, j), value in dict(self.pair).items():
            if i == j or not (0 <= i < self.group.rank and 0 <= j < self.group.rank):
                raise QuadraticEncodingError(f"Invalid pair index ({i}, {j}) for group {self.group}")
            pair[(min(i, j), max(i, j))] = value % N
        object.__setattr__(self, "diag", tuple(v % N for v in self.diag))
        object.__setattr__(self, "double", tuple(v % N for v in self.double))
        object.__setattr__(self, "pair", pair)

    def __hash__(self):
        return hash((self.diag, self.double, tuple(sorted(self.pair.items())), self.group))

    @cached_property
    def beta(self) -> List[List[int]]:
        """Symmetric matrix of the bilinear part, entries in Z_{2g}."""
        N = self.group.phase_modulus
        m = self.group.rank
        beta = [[0] * m for _ in range(m)]
        for i in range(m):
            beta[i][i] = (self.double[i] - 2 * self.diag[i]) % N
        for (i, j), value in self.pair.items():
            beta[i][j] = beta[j][i] = (value - self.diag[i] - self.diag[j]) % N
        return beta


def eval_quadratic(qf: QuadraticFunction, g: GroupElement) -> PhaseExponent:
    if g.group != qf.group:
        raise GroupMismatchError(f"{g} is not an element of {qf.group}")
    beta = qf.beta
    x = g.residues
    total = 0
    for i, xi in enumerate(x):
        total += xi * qf.diag[i] + (xi * (xi - 1) // 2) * beta[i][i]
        for j in range(i + 1, len(x)):
            total += xi * x[j] * beta[i][j]
    return PhaseExponent(total, qf.group.phase_modulus)


def bilinear_exponent(qf: QuadraticFunction, g: GroupElement, h: GroupElement) -> int:
    """Exponent of B(g, h) = xi(g+h) / (xi(g) xi(h)) in gamma units."""
    beta = qf.beta
    total = sum(gi * beta[i][j] * hj for i, gi in enumerate(g.residues) for j, hj in enumerate(h.residues))
    return total % qf.group.phase_modulus


def bilinear_shift(qf: QuadraticFunction, h: GroupElement) -> GroupElement:
    """
    The element f(h) with B(g, h) = chi_g(f(h)) for every g.
    """
    group = qf.group
    N = group.phase_modulus
    beta = qf.beta
    residues = []
    for j, d in enumerate(group.moduli):
        row = sum(beta[j][k] * hk for k, hk in enumerate(h.residues))
        if (row * d) % N:
            raise RuntimeError(f"Bilinear form of {qf} is not a bicharacter at factor {j}")
        residues.append(row * d // N)
    return group.element(residues)


def validate_quadratic(qf: QuadraticFunction) -> QuadraticFunction:
    group = qf.group
    N = group.phase_modulus
    beta = qf.beta
    for i, d in enumerate(group.moduli):
        if (d * qf.diag[i] + (d * (d - 1) // 2) * beta[i][i]) % N:
            raise QuadraticEncodingError(
                f"inconsistent quadratic encoding: xi({d} e_{i}) != 1 for generator {i}")
    for i, d in enumerate(group.moduli):
        for j in range(group.rank):
            if (d * beta[i][j]) % N:
                raise QuadraticEncodingError(
                    f"inconsistent quadratic encoding: pair ({i}, {j}) is not bilinear on the group")

    if group.order <= EXHAUSTIVE_CHECK_ORDER:
        elements = _all_elements(group)
        pairs = [(g, h) for g in elements for h in elements]
    else:
        rng = random.Random(0)
        pairs = [(_random_element(group, rng), _random_element(group, rng)) for _ in range(SAMPLED_PAIRS)]
    for g, h in pairs:
        lhs = eval_quadratic(qf, g + h).value - eval_quadratic(qf, g).value - eval_quadratic(qf, h).value
        if (lhs - bilinear_exponent(qf, g, h)) % N:
            raise QuadraticEncodingError(
                f"inconsistent quadratic encoding: relation fails at pair {g}, {h}")
    return qf


def _all_elements(group: GroupSpec) -> List[GroupElement]:
    elements = [()]
    for d in group.moduli:
        elements = [e + (x,) for e in elements for x in range(d)]
    return [group.element(e) for e in elements]


def _random_element(group: GroupSpec, rng: random.Random) -> GroupElement:
    return group.element([rng.randrange(d) for d in group.moduli])


def make_quadratic(group: GroupSpec, diag: Sequence[int], double: Sequence[int],
                   pair: Optional[Dict[Tuple[int, int], int]] = None) -> QuadraticFunction:
    return validate_quadratic(QuadraticFunction(tuple(diag), tuple(double), dict(pair or {}), group))


# ---------------------------------------------------------------------------
# Gate encodings
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PartialQFT:
    factors: Tuple[int, ...]
    group: GroupSpec
    inverse: bool = False

    def __post_init__(self):
        factors = tuple(sorted(set(self.factors)))
        for i in factors:
            if not 0 <= i < self.group.rank:
                raise ValueError(f"QFT factor {i} out of range for group {self.group}")
        object.__setattr__(self, "factors", factors)


@dataclass(frozen=True)
class Automorphism:
    """
    Basis permutation |x> -> |A x>. The inverse matrix is solved for at
    construction; pass it explicitly only when it is already known.
    """
    matrix: HomMatrix
    inverse_matrix: Optional[HomMatrix] = field(default=None, compare=False)

    def __post_init__(self):
        A = self.matrix
        if A.domain != A.codomain:
            raise GroupMismatchError(f"Automorphism must map a group to itself, got {A.domain} -> {A.codomain}")
        if self.inverse_matrix is None:
            object.__setattr__(self, "inverse_matrix", _invert_matrix(A))

    @property
    def group(self) -> GroupSpec:
        return self.matrix.domain

    @cached_property
    def dual_matrix(self) -> HomMatrix:
        # B(i, j) = d_i Ainv(j, i) / d_j acts on Z labels
        moduli = self.group.moduli
        Ainv = self.inverse_matrix.entries
        entries = tuple(tuple(d_i * Ainv[j][i] // d_j for j, d_j in enumerate(moduli))
                        for i, d_i in enumerate(moduli))
        return HomMatrix(entries, self.group, self.group)


@dataclass(frozen=True)
class QuadraticPhase:
    qf: QuadraticFunction

    @property
    def group(self) -> GroupSpec:
        return self.qf.group


@dataclass(frozen=True)
class PauliGate:
    label: PauliLabel

    @property
    def group(self) -> GroupSpec:
        return self.label.group


GateEncoding = Union[PartialQFT, Automorphism, QuadraticPhase, PauliGate]


def _invert_matrix(A: HomMatrix) -> HomMatrix:
    columns = []
    for j in range(A.domain.rank):
        solution = solve(A, A.codomain.basis(j))
        if not solution.solvable:
            raise NonInvertibleAutomorphismError(f"Matrix is not invertible: e_{j} has no preimage")
        columns.append(solution.particular.residues)
    entries = tuple(tuple(col[i] for col in columns) for i in range(A.domain.rank))
    return HomMatrix(entries, A.domain, A.domain)


def make_automorphism(matrix: Sequence[Sequence[int]], group: GroupSpec) -> Automorphism:
    return Automorphism(validate_hom(matrix, group, group))


# ---------------------------------------------------------------------------
# Conjugation U sigma U^dagger
# ---------------------------------------------------------------------------

def _conjugate_qft(gate: PartialQFT, p: PauliLabel) -> PauliLabel:
    group = p.group
    order = group.order
    z, x = list(p.z_part.residues), list(p.x_part.residues)
    phase = p.phase
    for i in gate.factors:
        zi, xi = z[i], x[i]
        phase += 2 * (order // group.moduli[i]) * xi * zi
        if gate.inverse:
            z[i], x[i] = -xi, zi
        else:
            z[i], x[i] = xi, -zi
    return PauliLabel(phase, group.element(z), group.element(x))


def _conjugate_automorphism(gate: Automorphism, p: PauliLabel) -> PauliLabel:
    return PauliLabel(p.phase, gate.dual_matrix(p.z_part), gate.matrix(p.x_part))


def _conjugate_quadratic(gate: QuadraticPhase, p: PauliLabel) -> PauliLabel:
    h = p.x_part
    f = bilinear_shift(gate.qf, h)
    phase = p.phase + eval_quadratic(gate.qf, h).value - 2 * character_exponent(f, h)
    return PauliLabel(phase, p.z_part + f, h)


def conjugate(gate: GateEncoding, p: PauliLabel) -> PauliLabel:
    if gate.group != p.group:
        raise GroupMismatchError(f"Gate over {gate.group} cannot act on a Pauli over {p.group}")
    if isinstance(gate, PartialQFT):
        return _conjugate_qft(gate, p)
    elif isinstance(gate, Automorphism):
        return _conjugate_automorphism(gate, p)
    elif isinstance(gate, QuadraticPhase):
        return _conjugate_quadratic(gate, p)
    elif isinstance(gate, PauliGate):
        return multiply(multiply(gate.label, p), inverse(gate.label))
    raise TypeError(f"Unknown gate encoding {type(gate).__name__}")


def invert_gate(gate: GateEncoding) -> GateEncoding:
    if isinstance(gate, PartialQFT):
        return PartialQFT(gate.factors, gate.group, not gate.inverse)
    elif isinstance(gate, Automorphism):
        return Automorphism(gate.inverse_matrix, gate.matrix)
    elif isinstance(gate, QuadraticPhase):
        qf = gate.qf
        negated = QuadraticFunction(tuple(-v for v in qf.diag), tuple(-v for v in qf.double),
                                    {k: -v for k, v in qf.pair.items()}, qf.group)
        return QuadraticPhase(negated)
    elif isinstance(gate, PauliGate):
        return PauliGate(inverse(gate.label))
    raise TypeError(f"Unknown gate encoding {type(gate).__name__}")


# ---------------------------------------------------------------------------
# Gate library
# ---------------------------------------------------------------------------

def _check_factor(G: GroupSpec, i: int):
    if not 0 <= i < G.rank:
        raise ValueError(f"Factor {i} out of range for group {G}")


def sum_gate(G: GroupSpec, i: int, j: int) -> Automorphism:
    """SUM: |x_i, x_j> -> |x_i, x_j + x_i>."""
    _check_factor(G, i)
    _check_factor(G, j)
    if i == j:
        raise ValueError("SUM needs two distinct factors")
    if G.moduli[i] % G.moduli[j]:
        raise ValueError(f"SUM from Z_{G.moduli[i]} into Z_{G.moduli[j]} is not a homomorphism")
    matrix = [[1 if r == c else 0 for c in range(G.rank)] for r in range(G.rank)]
    undo = [row[:] for row in matrix]
    matrix[j][i] = 1
    undo[j][i] = -1
    return Automorphism(validate_hom(matrix, G, G), HomMatrix(tuple(map(tuple, undo)), G, G))


def mult_gate(G: GroupSpec, i: int, a: int) -> Automorphism:
    """M_a: |x_i> -> |a x_i> for a coprime to d_i."""
    _check_factor(G, i)
    if math.gcd(a, G.moduli[i]) != 1:
        raise ValueError(f"Multiplier {a} is not coprime to {G.moduli[i]}")
    d = G.moduli[i]
    matrix = [[1 if r == c else 0 for c in range(G.rank)] for r in range(G.rank)]
    undo = [row[:] for row in matrix]
    matrix[i][i] = a % d
    undo[i][i] = int(mod_inverse(a, d)) if d > 1 else 0
    return Automorphism(validate_hom(matrix, G, G), HomMatrix(tuple(map(tuple, undo)), G, G))


def cz_gate(G: GroupSpec, i: int, j: int) -> QuadraticPhase:
    """CZ: |x_i, x_j> -> exp(2 pi i x_i x_j / gcd(d_i, d_j)) |x_i, x_j>."""
    _check_factor(G, i)
    _check_factor(G, j)
    if i == j:
        raise ValueError("CZ needs two distinct factors")
    value = G.phase_modulus // math.gcd(G.moduli[i], G.moduli[j])
    zeros = [0] * G.rank
    return QuadraticPhase(QuadraticFunction(tuple(zeros), tuple(zeros), {(i, j): value}, G))


def phase_S_gate(G: GroupSpec, i: int, power: int = 1) -> QuadraticPhase:
    """
    S^power on factor i: |x> -> exp(i pi power x (x + d) / d) |x>.
    power=-1 on Z_2 is the qubit phase gate diag(1, i).
    """
    _check_factor(G, i)
    d = G.moduli[i]
    scale = power * (G.order // d)
    two = 2 % d
    diag = [0] * G.rank
    double = [0] * G.rank
    diag[i] = scale * (1 + d)
    double[i] = scale * two * (two + d)
    return QuadraticPhase(QuadraticFunction(tuple(diag), tuple(double), {}, G))


def fourier_gate(G: GroupSpec, i: int, inverse: bool = False) -> PartialQFT:
    _check_factor(G, i)
    return PartialQFT((i,), G, inverse)


def qft_gate(G: GroupSpec, inverse: bool = False) -> PartialQFT:
    return PartialQFT(tuple(range(G.rank)), G, inverse)


def pauli_gate(label: PauliLabel) -> PauliGate:
    return PauliGate(label)
