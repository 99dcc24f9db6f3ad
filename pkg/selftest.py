"""
Random instances shared by the selftest command and the test suite, and the
oracle comparison loop behind `main.py selftest`.
"""
import logging
import math
import random
from typing import Dict, List

import numpy as np

from abelian_group import GroupElement, GroupSpec, SubgroupGens, subgroup_order
from dense_oracle import (
    compare_state,
    dense_outcome_probabilities,
    gate_matrix,
    pauli_matrix,
    projector_rank,
    stabilizer_projector_dense,
    stabilized_state_dense,
)
from measurement import measure, outcome_distribution
from normalizer_gates import (
    GateEncoding,
    QuadraticFunction,
    QuadraticPhase,
    conjugate,
    cz_gate,
    fourier_gate,
    mult_gate,
    pauli_gate,
    phase_S_gate,
    qft_gate,
    sum_gate,
)
from pauli import PauliLabel
from simulator import coset_prepare, run
from stabilizer import (
    StabilizerGroup,
    amplitude,
    group_order,
    initial_state_stabilizer,
    normal_form,
    reduce_stabilizer,
    structure_test,
)

logger = logging.getLogger(__name__)


def random_group(rng: random.Random, max_order: int = 64, max_rank: int = 3) -> GroupSpec:
    if max_order < 2:
        return GroupSpec((1,))
    while True:
        rank = rng.randint(1, max_rank)
        moduli = tuple(rng.randint(2, 8) for _ in range(rank))
        if math.prod(moduli) <= max_order:
            return GroupSpec(moduli)


def random_element(G: GroupSpec, rng: random.Random) -> GroupElement:
    return G.element([rng.randrange(d) for d in G.moduli])


def random_subgroup(G: GroupSpec, rng: random.Random, max_gens: int = 2) -> SubgroupGens:
    return SubgroupGens(tuple(random_element(G, rng) for _ in range(rng.randint(0, max_gens))), G)


def random_pauli(G: GroupSpec, rng: random.Random) -> PauliLabel:
    return PauliLabel(rng.randrange(G.phase_modulus), random_element(G, rng), random_element(G, rng))


def random_quadratic_gate(G: GroupSpec, rng: random.Random) -> QuadraticPhase:
    """Sum of random S powers and CZ powers, encoded as one table."""
    N = G.phase_modulus
    diag = [0] * G.rank
    double = [0] * G.rank
    pair = {}
    for i, d in enumerate(G.moduli):
        qf = phase_S_gate(G, i, rng.randrange(2 * d)).qf
        diag[i], double[i] = qf.diag[i], qf.double[i]
    for i in range(G.rank):
        for j in range(i + 1, G.rank):
            c = rng.randrange(4)
            if c:
                pair[(i, j)] = (diag[i] + diag[j] + c * (N // math.gcd(G.moduli[i], G.moduli[j]))) % N
    return QuadraticPhase(QuadraticFunction(tuple(diag), tuple(double), pair, G))


def random_unit(d: int, rng: random.Random) -> int:
    while True:
        a = rng.randrange(1, d)
        if math.gcd(a, d) == 1:
            return a


def random_gate(G: GroupSpec, rng: random.Random) -> GateEncoding:
    """One gate of the library, chosen uniformly among those that fit G."""
    m = G.rank
    choices = ["fourier", "qft", "s", "pauli", "quadratic"]
    # Z_2 has no unit besides 1
    mult_factors = [i for i, d in enumerate(G.moduli) if d > 2]
    if mult_factors:
        choices.append("mult")
    sum_pairs = [(i, j) for i in range(m) for j in range(m) if i != j and G.moduli[i] % G.moduli[j] == 0]
    if sum_pairs:
        choices.append("sum")
    if m > 1:
        choices.append("cz")

    kind = rng.choice(choices)
    if kind == "fourier":
        return fourier_gate(G, rng.randrange(m), inverse=rng.random() < 0.5)
    elif kind == "qft":
        return qft_gate(G, inverse=rng.random() < 0.5)
    elif kind == "s":
        i = rng.randrange(m)
        return phase_S_gate(G, i, power=rng.randrange(1, 2 * G.moduli[i] + 1))
    elif kind == "pauli":
        return pauli_gate(random_pauli(G, rng))
    elif kind == "quadratic":
        return random_quadratic_gate(G, rng)
    elif kind == "mult":
        i = rng.choice(mult_factors)
        return mult_gate(G, i, random_unit(G.moduli[i], rng))
    elif kind == "sum":
        i, j = rng.choice(sum_pairs)
        return sum_gate(G, i, j)
    i, j = rng.sample(range(m), 2)
    return cz_gate(G, i, j)


def random_stabilizer_state(G: GroupSpec, rng: random.Random, depth: int = 6) -> StabilizerGroup:
    """
    A random stabilizer state: a basis state pushed through random gates, with
    an occasional Pauli measurement so that coset states show up too.
    """
    S = initial_state_stabilizer(G, random_element(G, rng))
    for _ in range(depth):
        if rng.random() < 0.25:
            _, S = measure(S, random_pauli(G, rng), rng=rng)
        else:
            gate = random_gate(G, rng)
            S = StabilizerGroup(tuple(conjugate(gate, p) for p in S.generators), G)
    return reduce_stabilizer(S)


def _check_conjugation(G: GroupSpec, rng: random.Random) -> bool:
    gate = random_gate(G, rng)
    p = random_pauli(G, rng)
    U = gate_matrix(gate)
    expected = U @ pauli_matrix(p) @ U.conj().T
    return bool(np.allclose(expected, pauli_matrix(conjugate(gate, p)), atol=1e-9))


def _check_state(G: GroupSpec, rng: random.Random) -> bool:
    S = random_stabilizer_state(G, rng)
    P = stabilizer_projector_dense(S)
    if projector_rank(P) != structure_test(S).dim or group_order(S) * projector_rank(P) != G.order:
        return False
    nf = normal_form(S)
    if not compare_state(nf, stabilized_state_dense(S)):
        return False
    p = random_pauli(G, rng)
    exact = outcome_distribution(S, p).as_dict()
    dense = dense_outcome_probabilities(stabilized_state_dense(S), p)
    if set(exact) != set(dense):
        return False
    return all(abs(float(exact[k]) - dense[k]) < 1e-9 for k in exact)


def _check_coset_prepare(G: GroupSpec, rng: random.Random) -> bool:
    # Exact only: the ancilla-enlarged group may exceed the dense cap
    H = random_subgroup(G, rng)
    x = random_element(G, rng)
    nf = run(coset_prepare(G, H, x, reset_ancilla=True), rng.randrange(2 ** 32)).final
    if nf.order != subgroup_order(H):
        return False
    pad = [0] * (nf.group.rank - G.rank)
    support = [x] + [x + h for h in H.generators]
    return all(not amplitude(nf, nf.group.element(list(g.residues) + pad)).is_zero() for g in support)


def run_selftest(max_order: int, trials: int = 50, seed=0) -> Dict[str, object]:
    """
    Random oracle comparisons on groups of order at most max_order. Returns a
    report with per-check counts and failures.
    """
    rng = random.Random(seed)
    checks = {"conjugation": _check_conjugation, "state": _check_state, "coset_prepare": _check_coset_prepare}
    failures: List[str] = []
    for trial in range(trials):
        G = random_group(rng, max_order)
        for name, check in checks.items():
            if not check(G, rng):
                failures.append(f"{name} on {G} (trial {trial})")
                logger.error(f"Selftest {name} failed on {G} (trial {trial})")
    logger.info(f"Selftest finished: {trials * len(checks)} checks, {len(failures)} failures")
    return {"max_order": max_order, "trials": trials, "checks": trials * len(checks),
            "failures": len(failures), "failed": failures}
