"""Full-size 1D run: 194400 points, radius 8, six workers.

Prints cycles, traffic and reuse, and checks the result bit-for-bit
against the numpy reference.

    python scripts/full_1d.py [--n 194400] [--rx 8] [--workers 6] [--seed 42]
"""

import argparse
import time

from stencilcgra.experiment import ExperimentConfig, spec_from_dict, verify


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--n", type=int, default=194400)
    p.add_argument("--rx", type=int, default=8)
    p.add_argument("--workers", type=int, default=6)
    p.add_argument("--seed", type=int, default=42)
    args = p.parse_args()

    spec = spec_from_dict({"n": args.n, "rx": args.rx, "workers": args.workers,
                           "seed": args.seed})
    t0 = time.perf_counter()
    status, report, _ = verify(ExperimentConfig(spec=spec, seed=args.seed))
    elapsed = time.perf_counter() - t0
    for key in ("outcome", "bit_exact", "cycles", "loads", "loads_expected",
                "stores", "stores_expected", "reuse_factor", "mem_ops_stalled"):
        print(f"{key:>16}: {report.get(key)}")
    print(f"{'wall time':>16}: {elapsed:.1f}s")
    print(f"{'status':>16}: {status}")


if __name__ == "__main__":
    main()
