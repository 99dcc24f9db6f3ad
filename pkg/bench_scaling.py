"""
Scaling scenario: a long adaptive run over a group whose order has hundreds
of digits, and a doubling check comparing it with the same run at half the
bit length. Run directly, not collected by pytest:

    python bench_scaling.py [gates] [measurements] [seed]
"""
import logging
import random
import sys
import time

from abelian_group import GroupSpec
from measurement import measure
from normalizer_gates import conjugate
from selftest import random_gate, random_pauli
from stabilizer import StabilizerGroup, initial_state_stabilizer, normal_form

logging.basicConfig(level=logging.WARNING, format='%(asctime)s %(levelname)s %(name)s: %(message)s')
logger = logging.getLogger("Bench")

BENCH_GROUP = GroupSpec((2 ** 128, 3 ** 80, 5 ** 40))
HALF_GROUP = GroupSpec((2 ** 64, 3 ** 40, 5 ** 20))
# Doubling the bit length may cost at most this factor
DOUBLING_LIMIT = 4.0


def scaling_scenario(gates: int = 1000, measurements: int = 100, seed: int = 0,
                     group: GroupSpec = BENCH_GROUP) -> float:
    G = group
    rng = random.Random(seed)
    print(f"\n--- Scaling run over {G.rank} factors, order of {G.order.bit_length()} bits ({len(str(G.order))} digits) ---")
    print(f"{gates} gates, {measurements} measurements, seed {seed}")

    S = initial_state_stabilizer(G, G.element([rng.randrange(d) for d in G.moduli]))
    every = max(1, gates // max(1, measurements))
    done = 0
    start = time.perf_counter()
    gate_time = measure_time = 0.0
    for n in range(gates):
        t0 = time.perf_counter()
        gate = random_gate(G, rng)
        S = StabilizerGroup(tuple(conjugate(gate, p) for p in S.generators), G)
        gate_time += time.perf_counter() - t0
        if (n + 1) % every == 0 and done < measurements:
            t0 = time.perf_counter()
            k, S = measure(S, random_pauli(G, rng), rng=rng)
            measure_time += time.perf_counter() - t0
            done += 1
    nf = normal_form(S)
    elapsed = time.perf_counter() - start
    logger.info(f"Final state has {len(S.generators)} generators after {done} measurements")

    print(f"Gates:        {gate_time:.2f}s")
    print(f"Measurements: {measure_time:.2f}s ({done} done)")
    print(f"Total:        {elapsed:.2f}s, final |H| has {len(str(nf.order))} digits")
    if elapsed < 10.0:
        print("SUCCESS: finished inside 10 seconds")
    else:
        print(f"SLOW: {elapsed:.1f}s")
    return elapsed


def doubling_check(gates: int = 1000, measurements: int = 100, seed: int = 0) -> float:
    half = scaling_scenario(gates, measurements, seed, HALF_GROUP)
    full = scaling_scenario(gates, measurements, seed, BENCH_GROUP)
    ratio = full / half if half > 0 else float("inf")
    print(f"\n--- Doubling bit length: {half:.2f}s -> {full:.2f}s, ratio {ratio:.2f} ---")
    if ratio <= DOUBLING_LIMIT:
        print(f"SUCCESS: ratio within {DOUBLING_LIMIT:.0f}x")
    else:
        print(f"SLOW: ratio above {DOUBLING_LIMIT:.0f}x")
    return ratio


if __name__ == "__main__":
    gates = int(sys.argv[1]) if len(sys.argv) > 1 else 1000
    measurements = int(sys.argv[2]) if len(sys.argv) > 2 else 100
    seed = int(sys.argv[3]) if len(sys.argv) > 3 else 0
    doubling_check(gates, measurements, seed)
