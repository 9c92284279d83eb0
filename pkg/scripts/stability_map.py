"""Sweep q for the memory-wave cubic and print the verdict table."""
import argparse

import numpy as np

from gpmemory.reductions import stability_interval, stability_map, write_stability_map


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--gamma", type=float, default=1.0)
    ap.add_argument("--convention", choices=["adopted", "as_written"], default="adopted")
    ap.add_argument("--num", type=int, default=21)
    ap.add_argument("--csv", default=None)
    args = ap.parse_args()

    ag = args.alpha * args.gamma
    qs = np.linspace(-1.5 * ag, 1.5 * ag, args.num)
    w2 = [0.01, 1.0, 100.0]
    rows = stability_map(args.alpha, args.gamma, qs, w2, args.convention)
    iv = stability_interval(args.alpha, args.gamma, args.convention)
    print(f"strict interval ({iv.convention}): {iv.strict}")
    for q, w, re, verdict in rows:
        print(f"q={q:+.3f}  omega^2={w:<7g} max Re={re:+.3e}  {verdict}")
    if args.csv:
        write_stability_map(rows, args.csv)


if __name__ == "__main__":
    main()
