import logging
import random
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from abelian_group import GroupElement, GroupSpec
from measurement import ForcedOutcomeError
from normalizer_gates import (
    Automorphism,
    GateEncoding,
    PartialQFT,
    PauliGate,
    QuadraticPhase,
    eval_quadratic,
)
from pauli import PauliLabel
from stabilizer import NormalFormState, StabilizerGroup, amplitude, stabilizer_elements

logger = logging.getLogger(__name__)

DENSE_ORDER_CAP = 4096
ZERO_NORM = 1e-12


class DenseCapExceededError(ValueError):
    pass


@dataclass
class DenseState:
    """State vector indexed in mixed radix, factor 0 most significant."""
    amplitudes: np.ndarray
    group: GroupSpec

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def check_cap(G: GroupSpec, cap: int = DENSE_ORDER_CAP):
    if G.order > cap:
        raise DenseCapExceededError(f"Group order {G.order} exceeds the dense cap {cap}")


def _coords(G: GroupSpec) -> np.ndarray:
    """All elements as rows, in index order."""
    if G.rank == 0:
        return np.zeros((1, 0), dtype=np.int64)
    return np.array(list(np.ndindex(*G.moduli)), dtype=np.int64).reshape(G.order, G.rank)


def _index(G: GroupSpec, coords: np.ndarray) -> np.ndarray:
    if G.rank == 0:
        return np.zeros(len(coords), dtype=np.int64)
    return np.ravel_multi_index(tuple(coords.T), G.moduli)


def all_elements(G: GroupSpec) -> List[GroupElement]:
    check_cap(G)
    return [G.element([int(v) for v in row]) for row in _coords(G)]


def element_index(g: GroupElement) -> int:
    return int(np.ravel_multi_index(g.residues, g.group.moduli)) if g.group.rank else 0


def _gamma(G: GroupSpec, exponents) -> np.ndarray:
    return np.exp(1j * np.pi * (np.asarray(exponents) % G.phase_modulus) / G.order)


def basis_state(x: GroupElement) -> DenseState:
    check_cap(x.group)
    amps = np.zeros(x.group.order, dtype=complex)
    amps[element_index(x)] = 1.0
    return DenseState(amps, x.group)


def pauli_matrix(p: PauliLabel) -> np.ndarray:
    """gamma^a Z(g) X(h): |x> -> gamma^(a + 2 t(g, x + h)) |x + h>."""
    G = p.group
    check_cap(G)
    coords = _coords(G)
    moduli = np.array(G.moduli, dtype=np.int64)
    weights = np.array([G.order // d for d in G.moduli], dtype=np.int64)
    shifted = (coords + np.array(p.x_part.residues, dtype=np.int64)) % moduli
    t = (shifted * np.array(p.z_part.residues, dtype=np.int64) * weights).sum(axis=1) % G.order
    M = np.zeros((G.order, G.order), dtype=complex)
    M[_index(G, shifted), _index(G, coords)] = _gamma(G, p.phase + 2 * t)
    return M


def _fourier_matrix(d: int, inverse: bool) -> np.ndarray:
    x = np.arange(d)
    F = np.exp(2j * np.pi * np.outer(x, x) / d) / np.sqrt(d)
    return F.conj().T if inverse else F


def gate_matrix(gate: GateEncoding) -> np.ndarray:
    G = gate.group
    check_cap(G)
    if isinstance(gate, PartialQFT):
        U = np.ones((1, 1), dtype=complex)
        for i, d in enumerate(G.moduli):
            factor = _fourier_matrix(d, gate.inverse) if i in gate.factors else np.eye(d)
            U = np.kron(U, factor)
        return U
    elif isinstance(gate, Automorphism):
        coords = _coords(G)
        A = np.array(gate.matrix.entries, dtype=np.int64).reshape(G.rank, G.rank)
        images = (coords @ A.T) % np.array(G.moduli, dtype=np.int64)
        U = np.zeros((G.order, G.order), dtype=complex)
        U[_index(G, images), _index(G, coords)] = 1.0
        return U
    elif isinstance(gate, QuadraticPhase):
        phases = [eval_quadratic(gate.qf, g).value for g in all_elements(G)]
        return np.diag(_gamma(G, phases))
    elif isinstance(gate, PauliGate):
        return pauli_matrix(gate.label)
    raise TypeError(f"Unknown gate encoding {type(gate).__name__}")


def apply_gate_dense(state: DenseState, gate: GateEncoding) -> DenseState:
    return DenseState(gate_matrix(gate) @ state.amplitudes, state.group)


def _projected_images(state: DenseState, p: PauliLabel) -> np.ndarray:
    """
    Row k is P_k psi = (1/2g) sum_j gamma^(-jk) sigma^j psi, computed with one
    FFT over j.
    """
    N = state.group.phase_modulus
    sigma = pauli_matrix(p)
    powers = np.empty((N, state.group.order), dtype=complex)
    v = state.amplitudes.copy()
    for j in range(N):
        powers[j] = v
        v = sigma @ v
    return np.fft.fft(powers, axis=0) / N


def dense_outcome_probabilities(state: DenseState, p: PauliLabel) -> Dict[int, float]:
    images = _projected_images(state, p)
    probs = np.real(np.sum(images * images.conj(), axis=1))
    return {k: float(v) for k, v in enumerate(probs) if v > ZERO_NORM}


def measure_dense(state: DenseState, p: PauliLabel, rng: Optional[random.Random] = None,
                  forced: Optional[int] = None) -> Tuple[int, DenseState]:
    images = _projected_images(state, p)
    probs = np.real(np.sum(images * images.conj(), axis=1))
    N = state.group.phase_modulus
    if forced is not None:
        k = forced % N
        if probs[k] < ZERO_NORM:
            raise ForcedOutcomeError(f"forced outcome {k} has squared norm {probs[k]:.3g}")
    elif rng is not None:
        r = rng.random() * probs.sum()
        k = int(np.searchsorted(np.cumsum(probs), r, side="right"))
        k = min(k, N - 1)
        while probs[k] < ZERO_NORM:
            k -= 1
    else:
        raise ValueError("measure_dense needs either a random source or a forced outcome")
    return k, DenseState(images[k] / np.sqrt(probs[k]), state.group)


def stabilizer_projector_dense(S: StabilizerGroup) -> np.ndarray:
    check_cap(S.group)
    elements = stabilizer_elements(S)
    P = sum(pauli_matrix(p) for p in elements) / len(elements)
    return P


def projector_rank(P: np.ndarray) -> int:
    return int(round(float(np.real(np.trace(P)))))


def stabilized_state_dense(S: StabilizerGroup) -> DenseState:
    """A normalized vector in the range of the projector (the state itself when unique)."""
    P = stabilizer_projector_dense(S)
    col = int(np.argmax(np.linalg.norm(P, axis=0)))
    v = P[:, col]
    return DenseState(v / np.linalg.norm(v), S.group)


def normal_form_vector(nf: NormalFormState) -> np.ndarray:
    G = nf.group
    vec = np.zeros(G.order, dtype=complex)
    for g in all_elements(G):
        amp = amplitude(nf, g)
        if not amp.is_zero():
            vec[element_index(g)] = amp.to_complex()
    return vec


def same_up_to_phase(v: np.ndarray, w: np.ndarray, atol: float = 1e-9) -> bool:
    nonzero = np.flatnonzero(np.abs(w) > 1e-9)
    if len(nonzero) == 0:
        return bool(np.allclose(v, 0, atol=atol))
    i = nonzero[0]
    if abs(v[i]) < 1e-9:
        return False
    phase = v[i] / w[i]
    phase /= abs(phase)
    return bool(np.allclose(v, w * phase, atol=atol))


def compare_state(nf: NormalFormState, dense: DenseState) -> bool:
    return same_up_to_phase(normal_form_vector(nf), dense.amplitudes)
