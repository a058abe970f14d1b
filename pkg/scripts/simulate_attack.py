"""Semi-informed attacker EER for each anonymization policy on the standard synthetic fixture.

    python scripts/simulate_attack.py --seeds 5 --trials 10000
"""

import argparse
import time

import numpy as np

from anoneval.attack import (
    IDENTITY,
    AnonymizationPolicy,
    Assignment,
    Strategy,
    run_attack,
    standard_fixture,
)
from anoneval.selection import SelectionParams

POLICIES = {
    "identity": IDENTITY,
    "random/per-utt": AnonymizationPolicy(Strategy.RANDOM, Assignment.PER_UTTERANCE),
    "random/per-spk": AnonymizationPolicy(Strategy.RANDOM, Assignment.PER_SPEAKER),
    "gender/per-utt": AnonymizationPolicy(Strategy.GENDER_PRESERVING, Assignment.PER_UTTERANCE),
    "pseudo/per-spk": AnonymizationPolicy(Strategy.PSEUDO_XVECTOR, Assignment.PER_SPEAKER, 0.0, SelectionParams(200, 20)),
    "pseudo/per-utt": AnonymizationPolicy(Strategy.PSEUDO_XVECTOR, Assignment.PER_UTTERANCE, 0.0, SelectionParams(200, 20)),
}


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--leakage", type=float, nargs="*", default=[0.0, 0.3])
    args = p.parse_args()

    start = time.perf_counter()
    results = {}
    for seed in range(args.seeds):
        population, pool = standard_fixture(seed)
        for name, base in POLICIES.items():
            for alpha in args.leakage if base is not IDENTITY else [1.0]:
                policy = base if base is IDENTITY else AnonymizationPolicy(
                    base.strategy, base.assignment, alpha, base.selection
                )
                eer = run_attack(population, pool, policy, policy, args.trials, seed).eer_value
                results.setdefault((name, alpha), []).append(100 * eer)

    print(f"{'policy':16s} {'leakage':>7s} {'EER mean':>9s} {'sd':>6s}")
    for (name, alpha), eers in results.items():
        print(f"{name:16s} {alpha:7.2f} {np.mean(eers):9.2f} {np.std(eers):6.2f}")
    print(f"\n{args.seeds} seeds x {args.trials} trials in {time.perf_counter() - start:.1f}s")


if __name__ == "__main__":
    main()
