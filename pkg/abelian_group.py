import logging
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Callable, List, Optional, Sequence, Tuple, TypeVar

from sympy.core.intfunc import igcdex

logger = logging.getLogger(__name__)

T = TypeVar("T")


class GroupMismatchError(ValueError):
    pass


def _check_int(value, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"{what} must be an integer, got {value!r}")
    return value


@dataclass(frozen=True)
class GroupSpec:
    """
    Finite Abelian group Z_{d_1} x ... x Z_{d_m} given by its cyclic moduli.
    A zero-factor spec (the trivial group) is legal internally; make_group
    insists on m >= 1.
    """
    moduli: Tuple[int, ...]

    def __post_init__(self):
        moduli = tuple(_check_int(d, "modulus") for d in self.moduli)
        for d in moduli:
            if d < 1:
                raise ValueError(f"Moduli must be positive, got {d}")
        object.__setattr__(self, "moduli", moduli)

    @property
    def rank(self) -> int:
        return len(self.moduli)

    @cached_property
    def order(self) -> int:
        return math.prod(self.moduli)

    @cached_property
    def phase_modulus(self) -> int:
        # 2g: exponents of gamma = exp(i pi / g) live in Z_{2g}
        return 2 * self.order

    @cached_property
    def exponent(self) -> int:
        # lcm folded left to right via gcd
        d = 1
        for modulus in self.moduli:
            d = d * modulus // math.gcd(d, modulus)
        return d

    def element(self, residues: Sequence[int]) -> "GroupElement":
        return GroupElement(tuple(residues), self)

    def zero(self) -> "GroupElement":
        return GroupElement((0,) * self.rank, self)

    def basis(self, i: int) -> "GroupElement":
        residues = [0] * self.rank
        residues[i] = 1
        return GroupElement(tuple(residues), self)

    def basis_elements(self) -> List["GroupElement"]:
        return [self.basis(i) for i in range(self.rank)]

    def product(self, other: "GroupSpec") -> "GroupSpec":
        return GroupSpec(self.moduli + other.moduli)

    def __repr__(self):
        return "Z(" + ",".join(str(d) for d in self.moduli) + ")"


@dataclass(frozen=True)
class GroupElement:
    residues: Tuple[int, ...]
    group: GroupSpec

    def __post_init__(self):
        if len(self.residues) != self.group.rank:
            raise GroupMismatchError(
                f"Element of length {len(self.residues)} does not fit group {self.group}")
        reduced = tuple(_check_int(r, "residue") % d for r, d in zip(self.residues, self.group.moduli))
        object.__setattr__(self, "residues", reduced)

    def _same_group(self, other: "GroupElement"):
        if not isinstance(other, GroupElement) or other.group != self.group:
            raise GroupMismatchError(f"Operands live in different groups: {self.group} vs {getattr(other, 'group', None)}")

    def __add__(self, other: "GroupElement") -> "GroupElement":
        self._same_group(other)
        return GroupElement(tuple(a + b for a, b in zip(self.residues, other.residues)), self.group)

    def __sub__(self, other: "GroupElement") -> "GroupElement":
        self._same_group(other)
        return GroupElement(tuple(a - b for a, b in zip(self.residues, other.residues)), self.group)

    def __neg__(self) -> "GroupElement":
        return GroupElement(tuple(-a for a in self.residues), self.group)

    def __rmul__(self, n: int) -> "GroupElement":
        n = _check_int(n, "scalar")
        return GroupElement(tuple(n * a for a in self.residues), self.group)

    def is_zero(self) -> bool:
        return not any(self.residues)

    def __iter__(self):
        return iter(self.residues)

    def __repr__(self):
        return "(" + ",".join(str(r) for r in self.residues) + ")"


@dataclass(frozen=True)
class SubgroupGens:
    """Generating list of a subgroup; the empty list is the trivial subgroup."""
    generators: Tuple[GroupElement, ...]
    group: GroupSpec

    def __post_init__(self):
        gens = tuple(self.generators)
        for g in gens:
            if g.group != self.group:
                raise GroupMismatchError(f"Generator {g} is not an element of {self.group}")
        object.__setattr__(self, "generators", gens)

    def __len__(self):
        return len(self.generators)

    def __iter__(self):
        return iter(self.generators)


@dataclass(frozen=True)
class PhaseExponent:
    """The scalar gamma^value with gamma = exp(i pi / g); value lives in Z_{2g}."""
    value: int
    modulus: int

    def __post_init__(self):
        object.__setattr__(self, "value", self.value % self.modulus)

    def to_complex(self) -> complex:
        angle = 2 * math.pi * float(Fraction(self.value, self.modulus))
        return complex(math.cos(angle), math.sin(angle))


def make_group(moduli: Sequence[int]) -> GroupSpec:
    moduli = tuple(moduli)
    if not moduli:
        raise ValueError("A group needs at least one cyclic factor")
    return GroupSpec(moduli)


def add(g: GroupElement, h: GroupElement) -> GroupElement:
    return g + h


def neg(g: GroupElement) -> GroupElement:
    return -g


def scalar_mul(n: int, g: GroupElement) -> GroupElement:
    return n * g


def character_exponent(g: GroupElement, h: GroupElement) -> int:
    """
    t with chi_g(h) = exp(2 pi i t / g), i.e. gamma^(2t).
    """
    g._same_group(h)
    order = g.group.order
    return sum((order // d) * a * b for d, a, b in zip(g.group.moduli, g.residues, h.residues)) % order


def subgroup(group: GroupSpec, generators: Sequence[Sequence[int]]) -> SubgroupGens:
    return SubgroupGens(tuple(group.element(g) for g in generators), group)


def _combination_hom(gens: Sequence[GroupElement], group: GroupSpec):
    """A_H: Z_d^r -> G whose columns are the generators, d the exponent of G."""
    from linear_solver import HomMatrix

    d = group.exponent
    entries = tuple(tuple(g.residues[i] for g in gens) for i in range(group.rank))
    return HomMatrix(entries, GroupSpec((d,) * len(gens)), group)


def member_decompose(b: GroupElement, H: SubgroupGens) -> Optional[List[int]]:
    """
    Coefficients w with b = sum w_i h_i, or None when b is not in H.
    """
    from linear_solver import solve

    if b.group != H.group:
        raise GroupMismatchError(f"{b} is not an element of {H.group}")
    solution = solve(_combination_hom(H.generators, H.group), b)
    if not solution.solvable:
        return None
    return list(solution.particular.residues)


def subgroup_contains(H: SubgroupGens, b: GroupElement) -> bool:
    return member_decompose(b, H) is not None


def subgroup_order(H: SubgroupGens) -> int:
    from linear_solver import count_solutions

    if not H.generators:
        return 1
    A = _combination_hom(H.generators, H.group)
    kernel = count_solutions(A, H.group.zero())
    return A.domain.order // kernel


def subgroups_equal(H: SubgroupGens, K: SubgroupGens) -> bool:
    return (all(subgroup_contains(K, h) for h in H.generators)
            and all(subgroup_contains(H, k) for k in K.generators))


def join(H: SubgroupGens, K: SubgroupGens) -> SubgroupGens:
    if H.group != K.group:
        raise GroupMismatchError(f"Cannot join subgroups of {H.group} and {K.group}")
    return SubgroupGens(H.generators + K.generators, H.group)


def intersection_coefficients(H: SubgroupGens, K: SubgroupGens) -> List[List[int]]:
    """
    Coefficient vectors w over H's generators whose combinations sum w_i h_i
    generate H ∩ K: the first r coordinates of the kernel of [A_H | A_K].
    """
    from linear_solver import solve

    if H.group != K.group:
        raise GroupMismatchError(f"Cannot intersect subgroups of {H.group} and {K.group}")
    r = len(H.generators)
    if r == 0 or not K.generators:
        return []
    stacked = _combination_hom(H.generators + K.generators, H.group)
    solution = solve(stacked, H.group.zero())
    return [list(x.residues[:r]) for x in solution.kernel_gens.generators]


def intersect(H: SubgroupGens, K: SubgroupGens) -> SubgroupGens:
    group = H.group
    gens = []
    for w in intersection_coefficients(H, K):
        g = group.zero()
        for c, h in zip(w, H.generators):
            g = g + c * h
        if not g.is_zero():
            gens.append(g)
    return SubgroupGens(tuple(gens), group)


def _character_matrix(h_list: Sequence[GroupElement], group: GroupSpec):
    """Omega(i, j) = (g / d_j) h_i(j), a homomorphism G -> Z_g^r."""
    from linear_solver import HomMatrix

    order = group.order
    entries = tuple(tuple((order // d) * h.residues[j] for j, d in enumerate(group.moduli)) for h in h_list)
    return HomMatrix(entries, group, GroupSpec((order,) * len(h_list)))


def solve_character_system(h_list: Sequence[GroupElement], a_list: Sequence[int],
                           group: GroupSpec) -> Optional[Tuple[GroupElement, SubgroupGens]]:
    """
    Solve chi_{h_i}(g) = gamma^{a_i} for g in G.
    Returns (g_0, kernel) with solution set g_0 + <kernel>, or None.
    """
    from linear_solver import solve

    if len(h_list) != len(a_list):
        raise ValueError(f"Length mismatch: {len(h_list)} characters vs {len(a_list)} phases")
    for h in h_list:
        if h.group != group:
            raise GroupMismatchError(f"{h} is not an element of {group}")
    modulus = group.phase_modulus
    targets = [a % modulus for a in a_list]
    if any(a % 2 for a in targets):
        # characters only reach even powers of gamma
        return None
    omega = _character_matrix(h_list, group)
    solution = solve(omega, omega.codomain.element([a // 2 for a in targets]))
    if not solution.solvable:
        return None
    return solution.particular, solution.kernel_gens


def orthogonal(H: SubgroupGens) -> SubgroupGens:
    result = solve_character_system(H.generators, [0] * len(H.generators), H.group)
    if result is None:
        raise RuntimeError("Homogeneous character system reported no solution")
    return result[1]


def hiding_hom(H: SubgroupGens):
    """
    Matrix of a homomorphism G -> Z_g^s whose kernel is exactly H.
    """
    from linear_solver import HomMatrix

    perp = [h for h in orthogonal(H).generators if not h.is_zero()]
    if not perp:
        group = H.group
        return HomMatrix((tuple(0 for _ in group.moduli),), group, GroupSpec((group.order,)))
    return _character_matrix(perp, H.group)


def uniform_sample_subgroup(H: SubgroupGens, rng: random.Random) -> GroupElement:
    d = H.group.exponent
    g = H.group.zero()
    for h in H.generators:
        g = g + rng.randrange(d) * h
    return g


def echelon_generators(items: Sequence[T], coordinates: Callable[[T], Sequence[int]],
                       moduli: Sequence[int], combine: Callable[[T, int, T, int], T]) -> Tuple[List[T], List[T]]:
    """
    Unimodular row reduction of a generating list of an Abelian group.

    combine(a, x, b, y) must return the element x*a + y*b. Every column yields at
    most one pivot, so the first returned list has at most len(moduli) entries;
    the second holds leftovers whose coordinates all vanish.
    """
    pending = list(items)
    pivots: List[T] = []
    for col, modulus in enumerate(moduli):
        active = [it for it in pending if coordinates(it)[col] % modulus]
        rest = [it for it in pending if not coordinates(it)[col] % modulus]
        if not active:
            continue
        pivot = active[0]
        for other in active[1:]:
            a = coordinates(pivot)[col] % modulus
            b = coordinates(other)[col] % modulus
            if b % a == 0:
                rest.append(combine(other, 1, pivot, -(b // a)))
                continue
            x, y, g = (int(v) for v in igcdex(a, b))
            new_pivot = combine(pivot, x, other, y)
            rest.append(combine(pivot, -(b // g), other, a // g))
            pivot = new_pivot
        pivots.append(pivot)
        pending = rest
    return pivots, pending


def reduce_generators(H: SubgroupGens) -> SubgroupGens:
    """Shrinks a generating list to at most m generators of the same subgroup."""
    pivots, _ = echelon_generators(
        H.generators,
        lambda g: g.residues,
        H.group.moduli,
        lambda a, x, b, y: x * a + y * b,
    )
    return SubgroupGens(tuple(pivots), H.group)
