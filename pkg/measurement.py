import logging
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Tuple

from abelian_group import (
    GroupElement,
    GroupMismatchError,
    GroupSpec,
    SubgroupGens,
    intersection_coefficients,
    orthogonal,
    subgroup_order,
)
from normalizer_gates import GateEncoding, fourier_gate, mult_gate, phase_S_gate
from pauli import PauliLabel, commutes, is_identity, with_phase
from stabilizer import StabilizerGroup, combine_labels, normal_form, reduce_stabilizer

logger = logging.getLogger(__name__)


class ForcedOutcomeError(ValueError):
    pass


# Diagonalization steps: (kind, factor, power)
PHASE_STEP = "s"
FOURIER_STEP = "fourier"
NEGATE_STEP = "negate"


@dataclass(frozen=True)
class DiagonalizationResult:
    """
    The diagonalizing circuit as a list of single-factor steps, and the image
    gamma^a Z(g) of the measured Pauli under it.
    """
    group: GroupSpec
    steps: Tuple[Tuple[str, int, int], ...]
    diagonal: PauliLabel

    @property
    def circuit(self) -> Tuple[GateEncoding, ...]:
        G = self.group
        gates: List[GateEncoding] = []
        for kind, i, c in self.steps:
            if kind == PHASE_STEP:
                gates.append(phase_S_gate(G, i, power=c))
            elif kind == FOURIER_STEP:
                gates.append(fourier_gate(G, i))
            else:
                gates.append(mult_gate(G, i, -1 % G.moduli[i]))
        return tuple(gates)


@dataclass(frozen=True)
class OutcomeDistribution:
    """
    Uniform distribution over the eigenvalue exponents
    offset + j * step (mod modulus), j = 0 .. size - 1.
    """
    modulus: int
    offset: int
    step: int
    size: int

    def probability(self, k: int) -> Fraction:
        if (k - self.offset) % self.modulus % self.step:
            return Fraction(0)
        return Fraction(1, self.size)

    def items(self) -> Iterator[Tuple[int, Fraction]]:
        p = Fraction(1, self.size)
        for j in range(self.size):
            yield (self.offset + j * self.step) % self.modulus, p

    def as_dict(self) -> Dict[int, Fraction]:
        return dict(self.items())

    def is_point_mass(self) -> bool:
        return self.size == 1

    def sample(self, rng: random.Random) -> int:
        return (self.offset + rng.randrange(self.size) * self.step) % self.modulus


def _push_through(G: GroupSpec, steps, p: PauliLabel) -> PauliLabel:
    """
    Conjugates p through single-factor steps with plain integer updates on
    the touched factor; agrees with conjugate() over the gates of the steps.
    """
    N = G.phase_modulus
    order = G.order
    a = p.phase
    z = list(p.z_part.residues)
    x = list(p.x_part.residues)
    for kind, i, c in steps:
        d = G.moduli[i]
        unit = order // d
        if kind == FOURIER_STEP:
            a += 2 * unit * x[i] * z[i]
            z[i], x[i] = x[i], -z[i] % d
        elif kind == PHASE_STEP:
            two = 2 % d
            diag = c * unit * (1 + d) % N
            beta = (c * unit * two * (two + d) - 2 * diag) % N
            f = beta * x[i] * d // N % d
            a += x[i] * diag + (x[i] * (x[i] - 1) // 2) * beta - 2 * (unit * f * x[i] % order)
            z[i] = (z[i] + f) % d
        else:
            z[i], x[i] = -z[i] % d, -x[i] % d
    return PauliLabel(a % N, G.element(z), G.element(x))


def diagonalize_pauli(p: PauliLabel) -> DiagonalizationResult:
    """
    Per-factor Euclid reduction of (z_i, x_i) to (gcd, 0). S^c adds c x_i to
    z_i; a Fourier transform sends (z_i, x_i) to (x_i, -z_i). Quotients are
    rounded to the nearest integer so each round at least halves |x_i|.
    """
    G = p.group
    steps: List[Tuple[str, int, int]] = []
    for i, d in enumerate(G.moduli):
        u, v = p.z_part.residues[i], p.x_part.residues[i]
        while v:
            q = u // v
            r = u - q * v
            if 2 * abs(r) > abs(v):
                q += 1
                r -= v
            if q % d:
                steps.append((PHASE_STEP, i, -q % d))
            steps.append((FOURIER_STEP, i, 0))
            u, v = v, -r
        if u < 0 and (2 * u) % d:
            steps.append((NEGATE_STEP, i, 0))

    diagonal = _push_through(G, steps, p)
    if not diagonal.x_part.is_zero():
        raise RuntimeError(f"Diagonalization of {p} ended at {diagonal}")
    return DiagonalizationResult(G, tuple(steps), diagonal)


def apply_diagonalization(result: DiagonalizationResult, q: PauliLabel) -> PauliLabel:
    """Image of q under the diagonalizing circuit of result."""
    if q.group != result.group:
        raise GroupMismatchError(f"{q} is not a Pauli over {result.group}")
    return _push_through(result.group, result.steps, q)


def omega_exponent(g: GroupElement, x: GroupElement) -> int:
    """y with chi_g(x) = exp(2 pi i y / d), d the exponent of the group."""
    g._same_group(x)
    d = g.group.exponent
    return sum((d // di) * a * b for di, a, b in zip(g.group.moduli, g.residues, x.residues)) % d


def outcome_distribution(S: StabilizerGroup, p: PauliLabel) -> OutcomeDistribution:
    G = S.group
    N = G.phase_modulus
    d = G.exponent
    result = diagonalize_pauli(p)
    nf = normal_form(StabilizerGroup(tuple(apply_diagonalization(result, q) for q in S.generators), G))
    g = result.diagonal.z_part

    base = omega_exponent(g, nf.offset)
    cyclic = GroupSpec((d,))
    image = SubgroupGens(tuple(cyclic.element([omega_exponent(g, h)]) for h in nf.H_gens), cyclic)
    size = subgroup_order(image)
    q = d // size
    unit = N // d
    offset = (result.diagonal.phase + unit * base) % N
    return OutcomeDistribution(N, offset, unit * q, size)


def centralizer(S: StabilizerGroup, p: PauliLabel) -> List[PauliLabel]:
    """
    Generators of the elements of S commuting with p = gamma^a Z(x) X(y):
    kappa-images (g, h) orthogonal to (y, -x) in G x G, pulled back through
    the generator exponents.
    """
    if all(commutes(q, p) for q in S.generators):
        return list(S.generators)
    G = S.group
    doubled = G.product(G)
    target = doubled.element(p.x_part.residues + (-p.z_part).residues)
    pairs = SubgroupGens(tuple(doubled.element(q.z_part.residues + q.x_part.residues) for q in S.generators), doubled)
    result = []
    for w in intersection_coefficients(pairs, orthogonal(SubgroupGens((target,), doubled))):
        label = combine_labels(S.generators, w, G)
        if not is_identity(label):
            result.append(label)
    return result


def measure(S: StabilizerGroup, p: PauliLabel, rng: Optional[random.Random] = None,
            forced: Optional[int] = None,
            distribution: Optional[OutcomeDistribution] = None) -> Tuple[int, StabilizerGroup]:
    """
    Measures p. Returns the eigenvalue exponent k (eigenvalue gamma^k) and the
    post-measurement stabilizer <gamma^{-k} p, C_S(p)>.
    """
    dist = distribution or outcome_distribution(S, p)
    if forced is not None:
        k = forced % dist.modulus
        if dist.probability(k) == 0:
            raise ForcedOutcomeError(f"forced outcome {k} has probability zero")
    elif rng is not None:
        k = dist.sample(rng)
    else:
        raise ValueError("measure needs either a random source or a forced outcome")

    gens = [with_phase(p, p.phase - k)] + centralizer(S, p)
    S_m = reduce_stabilizer(StabilizerGroup(tuple(gens), S.group))
    logger.info(f"Measured {p}: outcome {k} with probability {dist.probability(k)}")
    return k, S_m


def eigenvalue_label(k: int, p: PauliLabel) -> Optional[Tuple[int, int]]:
    """
    For a diagonal p = gamma^a Z(g), the (y, d) pair of the omega labelling
    with gamma^k = gamma^a exp(2 pi i y / d); None when p is not diagonal.
    """
    if not p.x_part.is_zero():
        return None
    G = p.group
    d = G.exponent
    unit = G.phase_modulus // d
    shifted = (k - p.phase) % G.phase_modulus
    if shifted % unit:
        return None
    return shifted // unit, d
