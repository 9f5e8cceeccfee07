#!/usr/bin/env python3
"""Bounded-horizon value curve for the grid coordination model.

Evaluates ``<<p1:p2>>max=? (P[F<=k goal1] + P[F<=k goal2])`` for a range of
step bounds k and appends the unbounded pair as the limiting row.  Shows how
the equilibrium welfare climbs towards 2 as the robots get enough steps to
take turns crossing the grid.
"""

import argparse
import csv
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from csgnash.lang import load_model
from csgnash.nash import evaluate
from csgnash.properties import parse_property


@dataclass
class CurveConfig:
    model: str
    size: int
    obstacle_prob: Fraction
    max_horizon: int


def pair_at(csg, text):
    start = time.perf_counter()
    ev = evaluate(csg, parse_property(text))
    elapsed = time.perf_counter() - start
    v1, v2 = next(iter(ev.initial.values()))
    return float(v1), float(v2), elapsed


def curve(config: CurveConfig, out):
    csg = load_model(config.model, {"l": config.size,
                                    "q": config.obstacle_prob})
    writer = csv.writer(out)
    writer.writerow(["horizon", "v1", "v2", "sum", "time"])
    for k in range(1, config.max_horizon + 1):
        v1, v2, elapsed = pair_at(
            csg, f"<<p1:p2>>max=? (P[F<={k} goal1] + P[F<={k} goal2])")
        writer.writerow([k, f"{v1:.10g}", f"{v2:.10g}", f"{v1 + v2:.10g}",
                         f"{elapsed:.4f}"])
    v1, v2, elapsed = pair_at(
        csg, "<<p1:p2>>max=? (P[F goal1] + P[F goal2])")
    writer.writerow(["unbounded", f"{v1:.10g}", f"{v2:.10g}",
                     f"{v1 + v2:.10g}", f"{elapsed:.4f}"])


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--model", default="models/robot.csg")
    parser.add_argument("--size", type=int, default=4,
                        help="grid side length l")
    parser.add_argument("--obstacle-prob", type=Fraction,
                        default=Fraction(1, 10))
    parser.add_argument("--max-horizon", type=int, default=8)
    parser.add_argument("--out", help="CSV path (default: stdout)")
    args = parser.parse_args()
    config = CurveConfig(args.model, args.size, args.obstacle_prob,
                         args.max_horizon)
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as handle:
            curve(config, handle)
    else:
        curve(config, sys.stdout)


if __name__ == "__main__":
    main()
