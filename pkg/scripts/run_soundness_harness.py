#!/usr/bin/env python3
"""Generate a random corpus and run the derivation/interpreter soundness
harness, printing the agreement report.

Usage: python scripts/run_soundness_harness.py [--seed N] [--transitions N]
       [--oracle-steps N] [--static-states N] [--fuel N]
"""
import argparse
import time

from tapo import corpus, derivations


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=2026)
    parser.add_argument("--transitions", type=int, default=1000)
    parser.add_argument("--oracle-steps", type=int, default=500)
    parser.add_argument("--static-states", type=int, default=50)
    parser.add_argument("--fuel", type=int, default=50)
    args = parser.parse_args()

    start = time.time()
    built = corpus.build_corpus(args.seed, args.transitions, args.oracle_steps,
                                args.static_states)
    report = derivations.soundness_harness(built, fuel=args.fuel)
    elapsed = time.time() - start
    print(report.summary())
    for ce in report.counterexamples:
        print(f"  COUNTEREXAMPLE [{ce.kind}] {ce.detail}")
    print(f"elapsed: {elapsed:.1f}s")
    return 0 if report.ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
