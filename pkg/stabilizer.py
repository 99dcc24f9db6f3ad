import logging
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from abelian_group import (
    GroupElement,
    GroupMismatchError,
    GroupSpec,
    PhaseExponent,
    SubgroupGens,
    character_exponent,
    echelon_generators,
    member_decompose,
    orthogonal,
    solve_character_system,
    subgroup_order,
    subgroups_equal,
    uniform_sample_subgroup,
)
from linear_solver import HomMatrix, solve
from pauli import PauliLabel, commutes, is_identity, make_identity, multiply, power

logger = logging.getLogger(__name__)


class NonCommutingGeneratorsError(ValueError):
    def __init__(self, i: int, j: int):
        super().__init__(f"non-commuting generators ({i}, {j})")
        self.pair = (i, j)


class EmptySupportError(ValueError):
    pass


class NotAStabilizerStateError(ValueError):
    pass


@dataclass(frozen=True)
class StabilizerGroup:
    generators: Tuple[PauliLabel, ...]
    group: GroupSpec

    def __post_init__(self):
        gens = tuple(self.generators)
        for p in gens:
            if p.group != self.group:
                raise GroupMismatchError(f"Generator {p} is not a Pauli over {self.group}")
        object.__setattr__(self, "generators", gens)

    def __len__(self):
        return len(self.generators)

    def __iter__(self):
        return iter(self.generators)


@dataclass(frozen=True)
class LabelGroups:
    H_gens: SubgroupGens
    D_gens: SubgroupGens
    diag_gens: Tuple[PauliLabel, ...]


@dataclass(frozen=True)
class SupportInfo:
    support_rep: GroupElement
    support_kernel: SubgroupGens
    dim: int


@dataclass(frozen=True)
class NormalFormState:
    """
    1/sqrt|H| sum_h xi(h) |s + h>, with xi read off the witness labels.
    witnesses[k] is a stabilizer element whose X part is H_gens[k].
    """
    offset: GroupElement
    H_gens: SubgroupGens
    witnesses: Tuple[PauliLabel, ...]
    order: int

    @property
    def group(self) -> GroupSpec:
        return self.offset.group


@dataclass(frozen=True)
class Amplitude:
    phase: PhaseExponent
    mag2: Fraction

    def is_zero(self) -> bool:
        return self.mag2 == 0

    def to_complex(self) -> complex:
        return self.phase.to_complex() * float(self.mag2) ** 0.5


def combine_labels(generators: Sequence[PauliLabel], coefficients: Sequence[int], group: GroupSpec) -> PauliLabel:
    """prod_i generators[i]^coefficients[i], multiplied left to right."""
    result = make_identity(group)
    for p, w in zip(generators, coefficients):
        if w:
            result = multiply(result, power(p, w))
    return result


def _pair_element(p: PauliLabel, doubled: GroupSpec) -> GroupElement:
    return doubled.element(p.z_part.residues + p.x_part.residues)


def initial_state_stabilizer(G: GroupSpec, x: GroupElement) -> StabilizerGroup:
    if x.group != G:
        raise GroupMismatchError(f"{x} is not an element of {G}")
    order = G.order
    gens = tuple(PauliLabel(-2 * (order // d) * xi, G.basis(i), G.zero())
                 for i, (d, xi) in enumerate(zip(G.moduli, x.residues)))
    return StabilizerGroup(gens, G)


def label_groups(S: StabilizerGroup) -> LabelGroups:
    G = S.group
    gens = S.generators
    H = SubgroupGens(tuple(p.x_part for p in gens), G)
    if not gens:
        return LabelGroups(H, SubgroupGens((), G), ())

    # products prod sigma_i^{v_i} with sum v_i h_i = 0, v in Z_{2g}^k
    exponents = GroupSpec((G.phase_modulus,) * len(gens))
    phi = HomMatrix(tuple(tuple(p.x_part.residues[i] for p in gens) for i in range(G.rank)), exponents, G)
    kernel = solve(phi, G.zero()).kernel_gens
    diag = []
    for v in kernel.generators:
        label = combine_labels(gens, v.residues, G)
        if not label.x_part.is_zero():
            raise RuntimeError(f"Kernel product {label} is not diagonal")
        if not is_identity(label):
            diag.append(label)
    logger.debug(f"Label groups: {len(gens)} generators, {len(diag)} diagonal products")
    return LabelGroups(H, SubgroupGens(tuple(p.z_part for p in diag), G), tuple(diag))


def structure_test(S: StabilizerGroup, labels: Optional[LabelGroups] = None) -> SupportInfo:
    """
    Support of the stabilized space is g_0 + D-perp; its dimension is |D-perp| / |H|.
    """
    labels = labels or label_groups(S)
    G = S.group
    result = solve_character_system([p.z_part for p in labels.diag_gens],
                                     [-p.phase for p in labels.diag_gens], G)
    if result is None:
        raise EmptySupportError("empty support: no common +1 eigenstate")
    rep, kernel = result
    support_size = subgroup_order(kernel)
    h_size = subgroup_order(labels.H_gens)
    if support_size % h_size:
        raise RuntimeError(f"|D-perp| = {support_size} is not a multiple of |H| = {h_size}")
    return SupportInfo(rep, kernel, support_size // h_size)


def validate_stabilizer(generators: Sequence[PauliLabel], group: GroupSpec) -> StabilizerGroup:
    S = StabilizerGroup(tuple(generators), group)
    for i, p in enumerate(S.generators):
        for j in range(i + 1, len(S.generators)):
            if not commutes(p, S.generators[j]):
                raise NonCommutingGeneratorsError(i, j)
    structure_test(S)
    return S


def is_unique(S: StabilizerGroup) -> bool:
    labels = label_groups(S)
    return subgroups_equal(labels.H_gens, orthogonal(labels.D_gens))


def group_order(S: StabilizerGroup) -> int:
    labels = label_groups(S)
    return subgroup_order(labels.H_gens) * subgroup_order(labels.D_gens)


def normal_form(S: StabilizerGroup) -> NormalFormState:
    labels = label_groups(S)
    info = structure_test(S, labels)
    if info.dim != 1:
        raise NotAStabilizerStateError(f"not a stabilizer state: stabilized space has dimension {info.dim}")
    witnesses = tuple(p for p in S.generators if not p.x_part.is_zero())
    H = SubgroupGens(tuple(p.x_part for p in witnesses), S.group)
    return NormalFormState(info.support_rep, H, witnesses, subgroup_order(H))


def amplitude(nf: NormalFormState, g: GroupElement) -> Amplitude:
    """
    <g|psi> with the gauge xi(0) = 1. For g = s + h and a stabilizer element
    gamma^a Z(g') X(h), the amplitude is gamma^a chi_{g'}(s + h) / sqrt|H|.
    """
    G = nf.group
    if g.group != G:
        raise GroupMismatchError(f"{g} is not an element of {G}")
    modulus = G.phase_modulus
    w = member_decompose(g - nf.offset, nf.H_gens)
    if w is None:
        return Amplitude(PhaseExponent(0, modulus), Fraction(0))
    sigma = combine_labels(nf.witnesses, w, G)
    phase = sigma.phase + 2 * character_exponent(sigma.z_part, g)
    return Amplitude(PhaseExponent(phase, modulus), Fraction(1, nf.order))


def sample_support(nf: NormalFormState, rng: random.Random) -> GroupElement:
    return nf.offset + uniform_sample_subgroup(nf.H_gens, rng)


def stabilizer_contains(S: StabilizerGroup, p: PauliLabel) -> bool:
    """Exact membership of p (phase included) in the group generated by S."""
    doubled = S.group.product(S.group)
    pairs = SubgroupGens(tuple(_pair_element(q, doubled) for q in S.generators), doubled)
    w = member_decompose(_pair_element(p, doubled), pairs)
    if w is None:
        return False
    return combine_labels(S.generators, w, S.group).phase == p.phase


def stabilizers_equal(S: StabilizerGroup, T: StabilizerGroup) -> bool:
    if S.group != T.group:
        return False
    return (all(stabilizer_contains(S, p) for p in T.generators)
            and all(stabilizer_contains(T, p) for p in S.generators))


def reduce_stabilizer(S: StabilizerGroup) -> StabilizerGroup:
    """
    Echelon reduction on the (g, h) images: at most 2m generators remain, plus
    any phase-only leftover that is not the identity.
    """
    G = S.group
    pivots, leftovers = echelon_generators(
        S.generators,
        lambda p: p.z_part.residues + p.x_part.residues,
        G.moduli + G.moduli,
        lambda a, x, b, y: multiply(power(a, x), power(b, y)),
    )
    extra = [p for p in leftovers if not is_identity(p)]
    if extra:
        logger.warning(f"Generator reduction left {len(extra)} phase-only labels")
    return StabilizerGroup(tuple(pivots) + tuple(extra), G)


def stabilizer_elements(S: StabilizerGroup) -> List[PauliLabel]:
    """Every element of the generated group. Only meant for small groups."""
    elements = {make_identity(S.group)}
    frontier = list(elements)
    while frontier:
        nxt = []
        for p in frontier:
            for q in S.generators:
                r = multiply(p, q)
                if r not in elements:
                    elements.add(r)
                    nxt.append(r)
        frontier = nxt
    return sorted(elements, key=lambda p: (p.phase, p.z_part.residues, p.x_part.residues))
