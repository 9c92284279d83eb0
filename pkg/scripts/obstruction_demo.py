"""Min-norm control growth for a clustering kernel against a constant one."""
import argparse
from pathlib import Path

from gpmemory.disk import DiskGeometry
from gpmemory.kernels import ConstantKernel, ExpSumKernel
from gpmemory.moments import certify


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--T", type=float, default=4.0)
    ap.add_argument("--schedule", type=int, nargs="+", default=[5, 10, 15, 20, 25, 30])
    ap.add_argument("--out", default=None, help="directory for the CSV tables")
    args = ap.parse_args()

    geom = DiskGeometry(1.0)
    pair = {"two-term": ExpSumKernel(((1.0, 1.0), (1.0, 2.0))), "constant": ConstantKernel(1.0)}
    for name, kernel in pair.items():
        rep = certify(kernel, geom, args.T, args.schedule)
        print(f"{name}: {rep.verdict}  growth={rep.growth:.3g}")
        for n, norm, dps in zip(rep.counts, rep.norms, rep.dps):
            print(f"  N={n:3d}  |v|={norm:.4e}  dps={dps}")
        if args.out:
            Path(args.out).mkdir(parents=True, exist_ok=True)
            rep.to_csv(Path(args.out) / f"growth_{name}.csv")


if __name__ == "__main__":
    main()
