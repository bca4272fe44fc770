#!/usr/bin/env python3
"""Seed sweep of the closed loop: learned epsilon-greedy agent vs a
uniform-random baseline on the same profile, one row per seed.

Usage:
    python3 scripts/run_learning_experiment.py --seeds 10 --decisions 2000 --out sweep.csv
"""

import argparse
import csv
import sys
import time

import numpy as np

from imime import harness
from imime.config import load_config


def fast_config(seed, decisions, random_policy):
    # one frame per decision and the game silenced: pure learning dynamics
    cfg = load_config(None, {"steps": decisions, "seed": seed})
    cfg.frame_rate = 0.5
    cfg.behavior.t_idle = 1e9
    cfg.learning.random_policy = random_policy
    return cfg.validate()


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--decisions", type=int, default=2000)
    ap.add_argument("--window", type=int, default=500, help="final attention window, decisions")
    ap.add_argument("--out", default=None, help="optional CSV path")
    args = ap.parse_args(argv)

    rows = []
    t0 = time.perf_counter()
    for seed in range(args.seeds):
        row = {"seed": seed}
        for kind, rand in (("learned", False), ("random", True)):
            cfg = fast_config(seed, args.decisions, rand)
            log, learner = harness.run_episode(cfg)
            m = harness.metrics(log, learner, cfg.profile)
            rewards = [r["reward"] for r in log.decision_rows()]
            row[f"{kind}_final_attention"] = float(np.mean(rewards[-args.window :]))
            if kind == "learned":
                row["greedy_agreement"] = m["greedy_agreement"]
                row["exploration_rate"] = m["exploration_rate"]
        row["uplift"] = row["learned_final_attention"] - row["random_final_attention"]
        rows.append(row)
        print(
            f"seed {seed}: agreement {row['greedy_agreement']:.3f}  "
            f"attention {row['learned_final_attention']:.3f} vs random {row['random_final_attention']:.3f}  "
            f"uplift {row['uplift']:+.3f}"
        )
    elapsed = time.perf_counter() - t0
    mean_uplift = float(np.mean([r["uplift"] for r in rows]))
    print(f"\nmean uplift {mean_uplift:+.3f} over {args.seeds} seeds in {elapsed:.1f}s")

    if args.out:
        with open(args.out, "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            writer.writerows(rows)
        print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
