#!/usr/bin/env python3
"""Cumulative-reward curve for the energy-constrained medium access model.

For each horizon k the script evaluates the equilibrium pair of expected
numbers of successful transmissions ``R{"r1"}[C<=k] + R{"r2"}[C<=k]`` and
writes one CSV row.  While both users still have energy the welfare grows by
2*q2 per slot; once the budget emax runs out the curve flattens.
"""

import argparse
import csv
import sys
import time
from dataclasses import dataclass
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from csgnash.lang import load_model
from csgnash.nash import evaluate
from csgnash.properties import parse_property


@dataclass
class EnergyConfig:
    model: str
    emax: int
    max_horizon: int


def curve(config: EnergyConfig, out):
    csg = load_model(config.model, {"emax": config.emax})
    writer = csv.writer(out)
    writer.writerow(["horizon", "v1", "v2", "sum", "time"])
    for k in range(1, config.max_horizon + 1):
        text = f'<<p1:p2>>max=? (R{{"r1"}}[C<={k}] + R{{"r2"}}[C<={k}])'
        start = time.perf_counter()
        ev = evaluate(csg, parse_property(text))
        elapsed = time.perf_counter() - start
        v1, v2 = next(iter(ev.initial.values()))
        writer.writerow([k, f"{float(v1):.10g}", f"{float(v2):.10g}",
                         f"{float(v1 + v2):.10g}", f"{elapsed:.4f}"])


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--model", default="models/mac.csg")
    parser.add_argument("--emax", type=int, default=5,
                        help="per-user energy budget")
    parser.add_argument("--max-horizon", type=int, default=10)
    parser.add_argument("--out", help="CSV path (default: stdout)")
    args = parser.parse_args()
    config = EnergyConfig(args.model, args.emax, args.max_horizon)
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as handle:
            curve(config, handle)
    else:
        curve(config, sys.stdout)


if __name__ == "__main__":
    main()
