import logging
from dataclasses import dataclass

from abelian_group import GroupElement, GroupMismatchError, GroupSpec, PhaseExponent, character_exponent

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PauliLabel:
    """
    Label (a, g, h) of the generalized Pauli operator gamma^a Z(g) X(h),
    gamma = exp(i pi / g). The phase lives in Z_{2g}; Z always sits left of X.
    """
    phase: int
    z_part: GroupElement
    x_part: GroupElement

    def __post_init__(self):
        if self.z_part.group != self.x_part.group:
            raise GroupMismatchError(f"Z part {self.z_part} and X part {self.x_part} live in different groups")
        object.__setattr__(self, "phase", self.phase % self.z_part.group.phase_modulus)

    @property
    def group(self) -> GroupSpec:
        return self.z_part.group

    @property
    def phase_exponent(self) -> PhaseExponent:
        return PhaseExponent(self.phase, self.group.phase_modulus)

    def __mul__(self, other: "PauliLabel") -> "PauliLabel":
        return multiply(self, other)

    def __pow__(self, n: int) -> "PauliLabel":
        return power(self, n)

    def __repr__(self):
        return f"Pauli(a={self.phase}, g={self.z_part!r}, h={self.x_part!r})"


def _same_group(p: PauliLabel, q: PauliLabel):
    if p.group != q.group:
        raise GroupMismatchError(f"Paulis over different groups: {p.group} vs {q.group}")


def make_identity(group: GroupSpec) -> PauliLabel:
    return PauliLabel(0, group.zero(), group.zero())


def make_X(h: GroupElement) -> PauliLabel:
    return PauliLabel(0, h.group.zero(), h)


def make_Z(g: GroupElement) -> PauliLabel:
    return PauliLabel(0, g, g.group.zero())


def with_phase(p: PauliLabel, a: int) -> PauliLabel:
    return PauliLabel(a, p.z_part, p.x_part)


def is_diagonal(p: PauliLabel) -> bool:
    return p.x_part.is_zero()


def is_identity(p: PauliLabel) -> bool:
    return p.phase == 0 and p.z_part.is_zero() and p.x_part.is_zero()


def multiply(p: PauliLabel, q: PauliLabel) -> PauliLabel:
    """
    Label of the product p q. Moving X(h1) past Z(g2) costs chi_{g2}(h1)^{-1},
    i.e. gamma^(-2 t(g2, h1)).
    """
    _same_group(p, q)
    phase = p.phase + q.phase - 2 * character_exponent(q.z_part, p.x_part)
    return PauliLabel(phase, p.z_part + q.z_part, p.x_part + q.x_part)


def inverse(p: PauliLabel) -> PauliLabel:
    phase = -p.phase - 2 * character_exponent(p.z_part, p.x_part)
    return PauliLabel(phase, -p.z_part, -p.x_part)


def power(p: PauliLabel, n: int) -> PauliLabel:
    """
    sigma^n in closed form: (Z(g)X(h))^n picks up one commutation phase per
    pair of factors, so sigma^n = (n a - 2 t(g,h) C(n,2), n g, n h).
    """
    if n < 0:
        return power(inverse(p), -n)
    t = character_exponent(p.z_part, p.x_part)
    phase = n * p.phase - 2 * t * (n * (n - 1) // 2)
    return PauliLabel(phase, n * p.z_part, n * p.x_part)


def commutes(p: PauliLabel, q: PauliLabel) -> bool:
    _same_group(p, q)
    return character_exponent(p.z_part, q.x_part) == character_exponent(q.z_part, p.x_part)
