import logging
import math
import os
import random
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from abelian_group import GroupSpec, make_group, solve_character_system
from dense_oracle import gate_matrix, pauli_matrix
from normalizer_gates import (
    Automorphism,
    NonInvertibleAutomorphismError,
    PartialQFT,
    QuadraticEncodingError,
    QuadraticFunction,
    QuadraticPhase,
    bilinear_exponent,
    bilinear_shift,
    conjugate,
    cz_gate,
    eval_quadratic,
    fourier_gate,
    invert_gate,
    make_automorphism,
    make_quadratic,
    mult_gate,
    phase_S_gate,
    qft_gate,
    sum_gate,
    validate_quadratic,
)
from pauli import (
    PauliLabel,
    commutes,
    inverse,
    is_diagonal,
    is_identity,
    make_identity,
    make_X,
    make_Z,
    multiply,
    power,
    with_phase,
)
from selftest import random_gate, random_group, random_pauli, random_quadratic_gate

logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
logger = logging.getLogger("Layer2Test")

# Dense checks stay well below the oracle cap
DENSE_MAX_ORDER = 24
SEEDS = st.integers(min_value=0, max_value=2 ** 32)


def label(G: GroupSpec, a, g, h) -> PauliLabel:
    return PauliLabel(a, G.element(g), G.element(h))


def assert_same_operator(U, V):
    assert np.allclose(U, V, atol=1e-9)


# ---------------------------------------------------------------------------
# pauli-algebra
# ---------------------------------------------------------------------------

def test_multiply_examples():
    Z2 = make_group([2])
    Z, X = make_Z(Z2.element([1])), make_X(Z2.element([1]))
    assert multiply(Z, X) == label(Z2, 0, [1], [1])
    assert multiply(X, Z) == label(Z2, 2, [1], [1])
    p = label(Z2, 3, [1], [0])
    assert multiply(make_identity(Z2), p) == p
    assert Z * X == multiply(Z, X)


def test_power_and_inverse_examples():
    Z2 = make_group([2])
    sigma = label(Z2, 0, [1], [1])
    assert power(sigma, 4) == make_identity(Z2)
    assert power(sigma, 1) == sigma
    assert inverse(sigma) == label(Z2, 2, [1], [1])
    assert inverse(sigma) == power(sigma, 3)
    assert sigma ** -1 == inverse(sigma)


def test_commutes_examples():
    Z2 = make_group([2])
    assert not commutes(make_Z(Z2.element([1])), make_X(Z2.element([1])))
    Z4 = make_group([4])
    assert commutes(make_Z(Z4.element([2])), make_X(Z4.element([2])))
    p = label(Z4, 5, [1], [3])
    assert commutes(p, p)


def test_constructors():
    G = make_group([2, 3])
    assert make_X(G.zero()) == make_identity(G)
    assert is_diagonal(make_Z(G.element([1, 2])))
    assert not is_diagonal(make_X(G.element([1, 0])))
    assert with_phase(make_identity(G), G.phase_modulus) == make_identity(G)
    assert is_identity(with_phase(make_identity(G), 2 * G.phase_modulus))
    assert label(G, -1, [0, 0], [0, 0]).phase == G.phase_modulus - 1


@given(SEEDS)
@settings(max_examples=40, deadline=None)
def test_label_algebra_matches_dense(seed):
    rng = random.Random(seed)
    G = random_group(rng, DENSE_MAX_ORDER)
    p, q = random_pauli(G, rng), random_pauli(G, rng)
    P, Q = pauli_matrix(p), pauli_matrix(q)
    assert_same_operator(pauli_matrix(multiply(p, q)), P @ Q)
    assert_same_operator(pauli_matrix(inverse(p)), np.linalg.inv(P))
    n = rng.randint(-5, 9)
    assert_same_operator(pauli_matrix(power(p, n)), np.linalg.matrix_power(P, n))
    assert commutes(p, q) == bool(np.allclose(P @ Q, Q @ P, atol=1e-9))


@given(SEEDS)
@settings(max_examples=300, deadline=None)
def test_label_group_laws(seed):
    rng = random.Random(seed)
    G = random_group(rng, 64)
    p, q, r = random_pauli(G, rng), random_pauli(G, rng), random_pauli(G, rng)
    assert multiply(multiply(p, q), r) == multiply(p, multiply(q, r))
    assert power(p, G.phase_modulus) == make_identity(G)
    assert multiply(p, inverse(p)) == make_identity(G)
    assert power(p, 3) == multiply(p, multiply(p, p))


# ---------------------------------------------------------------------------
# quadratic functions
# ---------------------------------------------------------------------------

def test_eval_quadratic_examples():
    Z4 = make_group([4])
    qf = make_quadratic(Z4, [2], [0])
    assert eval_quadratic(qf, Z4.zero()).value == 0
    assert eval_quadratic(qf, Z4.element([3])).value == 2

    Z2 = make_group([2])
    qf = make_quadratic(Z2, [1], [0])
    assert eval_quadratic(qf, Z2.element([1])).value == 1


def test_validate_quadratic_examples():
    Z2 = make_group([2])
    make_quadratic(Z2, [0], [0])
    make_quadratic(Z2, [1], [0])
    with pytest.raises(QuadraticEncodingError) as err:
        make_quadratic(Z2, [1], [1])
    assert "generator 0" in str(err.value)


def test_quadratic_table_errors():
    G = make_group([2, 2])
    with pytest.raises(QuadraticEncodingError):
        QuadraticFunction((0,), (0, 0), {}, G)
    with pytest.raises(QuadraticEncodingError):
        QuadraticFunction((0, 0), (0, 0), {(1, 1): 0}, G)
    # CZ value on Z_2 x Z_3 must be a multiple of 2g / gcd = 12
    H = make_group([2, 3])
    with pytest.raises(QuadraticEncodingError):
        make_quadratic(H, [0, 0], [0, 0], {(0, 1): 3})


@given(SEEDS)
@settings(max_examples=40, deadline=None)
def test_quadratic_relation_holds(seed):
    rng = random.Random(seed)
    G = random_group(rng, 36)
    qf = random_quadratic_gate(G, rng).qf
    N = G.phase_modulus
    for _ in range(10):
        g = G.element([rng.randrange(d) for d in G.moduli])
        h = G.element([rng.randrange(d) for d in G.moduli])
        lhs = eval_quadratic(qf, g + h).value - eval_quadratic(qf, g).value - eval_quadratic(qf, h).value
        assert (lhs - bilinear_exponent(qf, g, h)) % N == 0


@given(SEEDS)
@settings(max_examples=40, deadline=None)
def test_bilinear_shift_agrees_with_character_solver(seed):
    rng = random.Random(seed)
    G = random_group(rng, 64)
    qf = random_quadratic_gate(G, rng).qf
    h = G.element([rng.randrange(d) for d in G.moduli])
    f = bilinear_shift(qf, h)
    exponents = [bilinear_exponent(qf, e, h) for e in G.basis_elements()]
    g0, kernel = solve_character_system(G.basis_elements(), exponents, G)
    assert g0 == f
    assert all(k.is_zero() for k in kernel.generators)


# ---------------------------------------------------------------------------
# normalizer-gates
# ---------------------------------------------------------------------------

def test_conjugation_examples():
    Z2 = make_group([2])
    assert conjugate(qft_gate(Z2), make_X(Z2.element([1]))) == make_Z(Z2.element([1]))

    V = make_group([2, 2])
    cnot = make_automorphism([[1, 0], [1, 1]], V)
    assert conjugate(cnot, make_X(V.element([1, 0]))) == make_X(V.element([1, 1]))

    cz = cz_gate(V, 0, 1)
    expected = multiply(make_X(V.element([1, 0])), make_Z(V.element([0, 1])))
    assert conjugate(cz, make_X(V.element([1, 0]))) == expected


def test_gate_library_examples():
    V = make_group([2, 2])
    assert sum_gate(V, 0, 1).matrix.entries == ((1, 0), (1, 1))
    with pytest.raises(ValueError):
        mult_gate(make_group([4]), 0, 2)
    with pytest.raises(ValueError):
        sum_gate(make_group([2, 4]), 0, 1)

    Z2 = make_group([2])
    S = phase_S_gate(Z2, 0)
    assert eval_quadratic(S.qf, Z2.element([1])).value == 3
    # power -1 on a qubit is diag(1, i)
    assert eval_quadratic(phase_S_gate(Z2, 0, power=-1).qf, Z2.element([1])).value == 1


def test_gate_library_matches_dense():
    G = make_group([3, 3])
    omega = np.exp(2j * np.pi / 3)
    cz = np.diag([omega ** (x * y) for x in range(3) for y in range(3)])
    assert_same_operator(gate_matrix(cz_gate(G, 0, 1)), cz)

    Z3 = make_group([3])
    s = np.diag([np.exp(1j * np.pi * x * (x + 3) / 3) for x in range(3)])
    assert_same_operator(gate_matrix(phase_S_gate(Z3, 0)), s)


@given(SEEDS)
@settings(max_examples=100, deadline=None)
def test_library_tables_are_valid(seed):
    rng = random.Random(seed)
    G = random_group(rng, 200)
    i = rng.randrange(G.rank)
    d = G.moduli[i]
    S = phase_S_gate(G, i, power=rng.randrange(-2 * d, 2 * d + 1))
    assert validate_quadratic(S.qf) == S.qf
    assert make_quadratic(G, S.qf.diag, S.qf.double) == S.qf
    qf = random_quadratic_gate(G, rng).qf
    assert validate_quadratic(qf) == qf
    if G.rank > 1:
        j = rng.choice([k for k in range(G.rank) if k != i])
        assert validate_quadratic(cz_gate(G, i, j).qf) == cz_gate(G, i, j).qf
    units = [a for a in range(1, d) if math.gcd(a, d) == 1]
    if units:
        a = rng.choice(units)
        M = mult_gate(G, i, a)
        matrix = [[1 if r == c else 0 for c in range(G.rank)] for r in range(G.rank)]
        matrix[i][i] = a
        assert M.inverse_matrix == make_automorphism(matrix, G).inverse_matrix
    pairs = [(s, t) for s in range(G.rank) for t in range(G.rank) if s != t and G.moduli[s] % G.moduli[t] == 0]
    if pairs:
        s, t = rng.choice(pairs)
        matrix = [[1 if r == c else 0 for c in range(G.rank)] for r in range(G.rank)]
        matrix[t][s] = 1
        assert sum_gate(G, s, t).inverse_matrix == make_automorphism(matrix, G).inverse_matrix


def test_library_tables_on_a_large_group():
    G = GroupSpec((2 ** 128, 3 ** 80, 5 ** 40))
    for i in range(G.rank):
        for power in (1, -1, 7, G.moduli[i] - 3):
            S = phase_S_gate(G, i, power)
            assert validate_quadratic(S.qf) == S.qf
    CZ = cz_gate(G, 0, 2)
    assert validate_quadratic(CZ.qf) == CZ.qf


@given(SEEDS)
@settings(max_examples=300, deadline=None)
def test_conjugation_is_a_homomorphism(seed):
    rng = random.Random(seed)
    G = random_group(rng, 64)
    gate = random_gate(G, rng)
    p, q = random_pauli(G, rng), random_pauli(G, rng)
    assert conjugate(gate, multiply(p, q)) == multiply(conjugate(gate, p), conjugate(gate, q))


def test_invert_gate_examples():
    G = make_group([4, 2])
    p = label(G, 3, [1, 1], [3, 0])
    F = fourier_gate(G, 0)
    assert conjugate(invert_gate(F), conjugate(F, p)) == p
    assert invert_gate(F) == PartialQFT((0,), G, inverse=True)

    A = make_automorphism([[1, 2], [1, 1]], G)
    Ainv = invert_gate(A)
    for e in G.basis_elements():
        assert A.matrix(Ainv.matrix(e)) == e
        assert Ainv.matrix(A.matrix(e)) == e

    Q = phase_S_gate(G, 0)
    Qinv = invert_gate(Q)
    for g in [G.element([x, y]) for x in range(4) for y in range(2)]:
        assert eval_quadratic(Qinv.qf, g).value == (G.phase_modulus - eval_quadratic(Q.qf, g).value) % G.phase_modulus


def test_non_invertible_automorphism():
    with pytest.raises(NonInvertibleAutomorphismError):
        make_automorphism([[2]], make_group([4]))
    with pytest.raises(ValueError):
        make_automorphism([[1]], make_group([2])).matrix(make_group([3]).element([1]))


@given(SEEDS)
@settings(max_examples=500, deadline=None)
def test_conjugation_matches_dense(seed):
    rng = random.Random(seed)
    G = random_group(rng, DENSE_MAX_ORDER)
    gate = random_gate(G, rng)
    p = random_pauli(G, rng)
    U = gate_matrix(gate)
    assert_same_operator(U @ pauli_matrix(p) @ U.conj().T, pauli_matrix(conjugate(gate, p)))
    assert conjugate(invert_gate(gate), conjugate(gate, p)) == p


def test_automorphism_dual_on_mixed_moduli():
    G = make_group([2, 4])
    # (x, y) -> (x, y + 2x)
    A = Automorphism(make_automorphism([[1, 0], [2, 1]], G).matrix)
    U = gate_matrix(A)
    for p in [make_Z(G.element([0, 1])), make_Z(G.element([1, 0])), make_X(G.element([1, 1]))]:
        assert_same_operator(U @ pauli_matrix(p) @ U.conj().T, pauli_matrix(conjugate(A, p)))


def test_quadratic_phase_is_diagonal_dense():
    G = make_group([2, 3])
    gate = QuadraticPhase(make_quadratic(G, [3, 0], [0, 0]))
    U = gate_matrix(gate)
    assert np.allclose(U, np.diag(np.diag(U)))
