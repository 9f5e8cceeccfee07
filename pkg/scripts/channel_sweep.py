#!/usr/bin/env python3
"""Sweep the second user's success probability on the shared-channel model.

For each value of q2 the script evaluates the one-shot equilibrium pair
``<<p1:p2>>max=? (P[X sent1] + P[X sent2])`` and the eventual-send pair, and
writes one CSV row per point.  The one-shot sum traces q1+q2 while both
transmitting remains the welfare-optimal equilibrium.
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

PROPERTIES = {
    "one_shot": "<<p1:p2>>max=? (P[X sent1] + P[X sent2])",
    "eventual": "<<p1:p2>>max=? (P[F sent1] + P[F sent2])",
}


@dataclass
class SweepConfig:
    model: str
    lo: Fraction = Fraction(1, 20)
    hi: Fraction = Fraction(19, 20)
    step: Fraction = Fraction(1, 20)


def sweep(config: SweepConfig, out):
    writer = csv.writer(out)
    writer.writerow(["q2", "query", "v1", "v2", "sum", "time"])
    value = config.lo
    while value <= config.hi:
        csg = load_model(config.model, {"q2": value})
        for name, text in PROPERTIES.items():
            start = time.perf_counter()
            ev = evaluate(csg, parse_property(text))
            elapsed = time.perf_counter() - start
            v1, v2 = next(iter(ev.initial.values()))
            writer.writerow([f"{float(value):.10g}", name,
                             f"{float(v1):.10g}", f"{float(v2):.10g}",
                             f"{float(v1 + v2):.10g}", f"{elapsed:.4f}"])
        value += config.step


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--model", default="models/fig1.csg")
    parser.add_argument("--lo", type=Fraction, default=Fraction(1, 20))
    parser.add_argument("--hi", type=Fraction, default=Fraction(19, 20))
    parser.add_argument("--step", type=Fraction, default=Fraction(1, 20))
    parser.add_argument("--out", help="CSV path (default: stdout)")
    args = parser.parse_args()
    config = SweepConfig(args.model, args.lo, args.hi, args.step)
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as handle:
            sweep(config, handle)
    else:
        sweep(config, sys.stdout)


if __name__ == "__main__":
    main()
