import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from sympy import mod_inverse
from sympy.core.intfunc import igcdex

from abelian_group import GroupElement, GroupMismatchError, GroupSpec, SubgroupGens

logger = logging.getLogger(__name__)

Matrix = List[List[int]]


class NotAHomomorphismError(ValueError):
    def __init__(self, column: int, message: str):
        super().__init__(message)
        self.column = column


@dataclass(frozen=True)
class HomMatrix:
    """
    Matrix representation of a homomorphism domain -> codomain.
    entries[i][j] is row i (codomain factor) of column j (image of e_j).
    """
    entries: Tuple[Tuple[int, ...], ...]
    domain: GroupSpec
    codomain: GroupSpec

    def __post_init__(self):
        rows = tuple(tuple(row) for row in self.entries)
        if len(rows) != self.codomain.rank:
            raise ValueError(f"Matrix has {len(rows)} rows, codomain {self.codomain} needs {self.codomain.rank}")
        for row in rows:
            if len(row) != self.domain.rank:
                raise ValueError(f"Matrix row of length {len(row)}, domain {self.domain} needs {self.domain.rank}")
        reduced = tuple(tuple(v % d for v in row) for row, d in zip(rows, self.codomain.moduli))
        object.__setattr__(self, "entries", reduced)

    def column(self, j: int) -> GroupElement:
        return self.codomain.element([row[j] for row in self.entries])

    def __call__(self, x: GroupElement) -> GroupElement:
        return apply_hom(self, x)


@dataclass(frozen=True)
class GeneralSolution:
    solvable: bool
    particular: Optional[GroupElement] = None
    kernel_gens: Optional[SubgroupGens] = None


@dataclass(frozen=True)
class SmithDecomposition:
    """S = U M V (mod d) with U, V invertible; U_inv, V_inv are their inverses."""
    U: Matrix
    S: Matrix
    V: Matrix
    U_inv: Matrix
    V_inv: Matrix
    rank: int
    modulus: int

    def __iter__(self):
        return iter((self.U, self.S, self.V))


def validate_hom(matrix: Sequence[Sequence[int]], domain: GroupSpec, codomain: GroupSpec) -> HomMatrix:
    A = HomMatrix(tuple(tuple(row) for row in matrix), domain, codomain)
    for j, c in enumerate(domain.moduli):
        for i, d in enumerate(codomain.moduli):
            if (c * A.entries[i][j]) % d:
                raise NotAHomomorphismError(
                    j, f"not a homomorphism: column {j} times {c} is nonzero in factor {i} (mod {d})")
    return A


def apply_hom(A: HomMatrix, x: GroupElement) -> GroupElement:
    if x.group != A.domain:
        raise GroupMismatchError(f"{x} is not in the domain {A.domain}")
    return A.codomain.element([sum(a * v for a, v in zip(row, x.residues)) for row in A.entries])


def identity_matrix(size: int) -> Matrix:
    return [[1 if i == j else 0 for j in range(size)] for i in range(size)]


def mat_mul(A: Matrix, B: Matrix, modulus: int) -> Matrix:
    if not A:
        return []
    inner = len(B)
    cols = len(B[0]) if B else 0
    return [[sum(A[i][k] * B[k][j] for k in range(inner)) % modulus for j in range(cols)]
            for i in range(len(A))]


def _row_op(M: Matrix, p: int, q: int, R, d: int):
    (r00, r01), (r10, r11) = R
    row_p, row_q = M[p], M[q]
    M[p] = [(r00 * a + r01 * b) % d for a, b in zip(row_p, row_q)]
    M[q] = [(r10 * a + r11 * b) % d for a, b in zip(row_p, row_q)]


def _col_op(M: Matrix, p: int, q: int, C, d: int):
    (c00, c01), (c10, c11) = C
    for row in M:
        a, b = row[p], row[q]
        row[p] = (a * c00 + b * c10) % d
        row[q] = (a * c01 + b * c11) % d


def _inverse2(R):
    # all 2x2 transforms used below have determinant 1
    (r00, r01), (r10, r11) = R
    return ((r11, -r01), (-r10, r00))


def _combine(a: int, b: int):
    """2x2 unimodular matrix sending (a, b) to (g, 0)."""
    if b % a == 0:
        return ((1, 0), (-(b // a), 1))
    x, y, g = (int(v) for v in igcdex(a, b))
    return ((x, y), (-(b // g), a // g))


def smith_normal_form(matrix: Sequence[Sequence[int]], modulus: int, ncols: Optional[int] = None) -> SmithDecomposition:
    """
    Diagonalize an m x n integer matrix over Z_d by invertible row and column
    operations. Pivots are the entries with minimal nonzero gcd with d, ties
    broken by lowest (row, col).
    """
    d = modulus
    if d < 1:
        raise ValueError(f"Modulus must be positive, got {d}")
    S = [[v % d for v in row] for row in matrix]
    m = len(S)
    n = ncols if ncols is not None else (len(S[0]) if m else 0)
    U, U_inv = identity_matrix(m), identity_matrix(m)
    V, V_inv = identity_matrix(n), identity_matrix(n)

    t = 0
    while t < min(m, n):
        best = None
        for i in range(t, m):
            for j in range(t, n):
                if S[i][j]:
                    key = (math.gcd(S[i][j], d), i, j)
                    if best is None or key < best:
                        best = key
        if best is None:
            break
        _, pi, pj = best
        if pi != t:
            S[t], S[pi] = S[pi], S[t]
            U[t], U[pi] = U[pi], U[t]
            _col_op(U_inv, t, pi, ((0, 1), (1, 0)), d)
        if pj != t:
            _col_op(S, t, pj, ((0, 1), (1, 0)), d)
            _col_op(V, t, pj, ((0, 1), (1, 0)), d)
            V_inv[t], V_inv[pj] = V_inv[pj], V_inv[t]

        while True:
            for i in range(t + 1, m):
                if S[i][t]:
                    R = _combine(S[t][t], S[i][t])
                    _row_op(S, t, i, R, d)
                    _row_op(U, t, i, R, d)
                    _col_op(U_inv, t, i, _inverse2(R), d)
            for j in range(t + 1, n):
                if S[t][j]:
                    R = _combine(S[t][t], S[t][j])
                    # column form of R: new col_t = x col_t + y col_j
                    C = ((R[0][0], R[1][0]), (R[0][1], R[1][1]))
                    _col_op(S, t, j, C, d)
                    _col_op(V, t, j, C, d)
                    _row_op(V_inv, t, j, _inverse2(C), d)
            if not any(S[i][t] for i in range(t + 1, m)):
                break
        t += 1

    logger.debug(f"SNF of {m}x{n} matrix mod {d}: rank {t}")
    return SmithDecomposition(U, S, V, U_inv, V_inv, t, d)


def diagonal_kernel(S: Sequence[Sequence[int]], modulus: int, ncols: Optional[int] = None) -> Tuple[List[List[int]], int]:
    """
    Kernel of a diagonal matrix over Z_d: generators (d / gcd(s_i, d)) e_i and
    its size, the product of the gcd(s_i, d) (a zero diagonal gives gcd = d).
    """
    d = modulus
    m = len(S)
    n = ncols if ncols is not None else (len(S[0]) if m else 0)
    gens = []
    size = 1
    for i in range(n):
        s = S[i][i] % d if i < m else 0
        q = math.gcd(s, d)
        size *= q
        step = d // q
        if step % d:
            gen = [0] * n
            gen[i] = step
            gens.append(gen)
    return gens, size


def solve_congruence(s: int, c: int, d: int) -> Optional[int]:
    """Smallest nonnegative y with s*y = c (mod d), or None."""
    s, c = s % d, c % d
    g = math.gcd(s, d)
    if c % g:
        return None
    reduced = d // g
    if reduced == 1:
        return 0
    return (c // g) * int(mod_inverse(s // g, reduced)) % reduced


@dataclass(frozen=True)
class _EnlargedSystem:
    snf: SmithDecomposition
    n: int
    N: int
    modulus: int


def _enlarge(A: HomMatrix) -> _EnlargedSystem:
    """[A | diag(d_1..d_m)] over Z_d, d the lcm of every domain and codomain modulus."""
    n, m = A.domain.rank, A.codomain.rank
    d = math.lcm(*A.domain.moduli, *A.codomain.moduli)
    M = [list(row) + [d_i if k == i else 0 for k in range(m)]
         for i, (row, d_i) in enumerate(zip(A.entries, A.codomain.moduli))]
    snf = smith_normal_form(M, d, ncols=n + m)
    return _EnlargedSystem(snf, n, n + m, d)


def _project(A: HomMatrix, z: Sequence[int]) -> GroupElement:
    return A.domain.element(z[:A.domain.rank])


def _solve_enlarged(A: HomMatrix, b: GroupElement, system: _EnlargedSystem) -> GeneralSolution:
    d, N = system.modulus, system.N
    U, S, V = system.snf
    c = [sum(u * v for u, v in zip(row, b.residues)) % d for row in U]
    y = [0] * N
    for i, ci in enumerate(c):
        yi = solve_congruence(S[i][i], ci, d)
        if yi is None:
            return GeneralSolution(False)
        y[i] = yi
    z = [sum(V[i][j] * y[j] for j in range(N)) % d for i in range(N)]
    particular = _project(A, z)

    kernel_S, _ = diagonal_kernel(S, d, ncols=N)
    gens = []
    for k in kernel_S:
        x = _project(A, [sum(V[i][j] * k[j] for j in range(N)) % d for i in range(N)])
        if not x.is_zero():
            gens.append(x)
    return GeneralSolution(True, particular, SubgroupGens(tuple(gens), A.domain))


def solve(A: HomMatrix, b: GroupElement) -> GeneralSolution:
    """
    All x in the domain with A x = b (mod G), as x_0 + <kernel generators>.
    """
    if b.group != A.codomain:
        raise GroupMismatchError(f"Right-hand side {b} is not in the codomain {A.codomain}")
    return _solve_enlarged(A, b, _enlarge(A))


def count_solutions(A: HomMatrix, b: GroupElement) -> int:
    if b.group != A.codomain:
        raise GroupMismatchError(f"Right-hand side {b} is not in the codomain {A.codomain}")
    system = _enlarge(A)
    if not _solve_enlarged(A, b, system).solvable:
        return 0
    d = system.modulus
    _, enlarged_kernel = diagonal_kernel(system.snf.S, d, ncols=system.N)
    projection_kernel = d ** system.n // A.domain.order
    count = enlarged_kernel // (A.codomain.order * projection_kernel)
    logger.debug(f"Kernel sizes: enlarged {enlarged_kernel}, original {count}")
    return count
