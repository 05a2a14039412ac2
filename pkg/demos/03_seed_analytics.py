#!/usr/bin/env python3
"""Seed-level analytics on a planted corpus.

Plants per-seed success rates (some seeds deliberately better than others),
then recovers them: pooled per-seed alignment rates, standardized scores,
ranks, best/worst selection, and the sample-size convergence curve.
"""

import numpy as np

from tiam import compute_tiam, convergence_curve, per_seed_tiam, select_seeds
from tiam.scoring import Outcome


def plant(prompt_count: int, seeds, rate_of_seed, rng) -> list[Outcome]:
    outcomes = []
    for i in range(prompt_count):
        for seed in seeds:
            success = int(rng.random() < rate_of_seed(seed))
            outcomes.append(
                Outcome(
                    prompt_id=f"p{i:03d}",
                    seed=seed,
                    success=success,
                    position_presence=(bool(success), bool(success)),
                    position_binding=(None, None),
                    matched_detection_ids=(None, None),
                )
            )
    return outcomes


def main() -> None:
    rng = np.random.default_rng(21)
    seeds = range(16)
    rate_of_seed = lambda s: 0.25 + 0.03 * s  # seed 15 is much better than seed 0
    outcomes = plant(120, seeds, rate_of_seed, rng)

    print(f"global alignment rate: {compute_tiam(outcomes):.3f} "
          f"over {len(outcomes)} outcomes\n")

    profiles = per_seed_tiam(outcomes)
    print("seed  rate   z-score  rank   (planted)")
    for p in profiles:
        print(f"{p.seed:4d}  {p.raw_tiam:.3f}  {p.z_score:+.2f}   {p.rank:4d}   "
              f"({rate_of_seed(p.seed):.3f})")

    selection = select_seeds(profiles, 3)
    print(f"\nbest seeds:  {selection['best']}")
    print(f"worst seeds: {selection['worst']}")

    curve = convergence_curve(outcomes, 16)
    print("\nconvergence (first n seeds per prompt):")
    for n, value in curve[::3]:
        print(f"  n={n:2d}  rate={value:.3f}")
    print("\nThe estimate settles well before the 32-images-per-prompt floor the")
    print("pipeline warns about; rankings separate good seeds from bad ones.")


if __name__ == "__main__":
    main()
