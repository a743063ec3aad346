"""Sweep the y-chain queue capacity of a 2D stencil and report where runs
stop deadlocking.  Also prints the storage actually used (sum of queue
high-water marks on the y chain) against 2*ry*block_width.

    python scripts/deadlock_sweep.py [--nx 96] [--ny 45] [--r 12] [--workers 5]
"""

import argparse

from stencilcgra.experiment import input_grid, run_stencil
from stencilcgra.generator import (StencilSpec2D, gen_stencil_2d, mandatory_buffer_capacity,
                                   y_chain_edges, y_edge_capacity)
from stencilcgra.simulator import Done, SimConfig


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--nx", type=int, default=96)
    p.add_argument("--ny", type=int, default=45)
    p.add_argument("--r", type=int, default=12)
    p.add_argument("--workers", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    r = args.r
    spec = StencilSpec2D(args.nx, args.ny, r, r, [1.0] * (2 * r + 1), [1.0] * (2 * r + 1),
                         args.workers)
    grid = input_grid(spec, args.seed)
    ids = {e.id for e in y_chain_edges(gen_stencil_2d(spec))}
    need = mandatory_buffer_capacity(r, args.nx)
    mandatory = y_edge_capacity(r, args.nx, args.workers)
    print(f"{len(ids)} y-chain queues, 2*ry*B = {need}, mandatory per queue = {mandatory}")
    print(f"{'cap':>5} {'total':>7} {'outcome':>9} {'cycles':>8} {'used':>6}")
    for cap in range(1, mandatory + 1):
        res = run_stencil(spec, grid, SimConfig(max_cycles=2_000_000), force_buffer=cap)
        st = res.outcome.stats
        used = sum(v for k, v in st.queue_high_water.items() if k in ids)
        print(f"{cap:5d} {cap * len(ids):7d} {type(res.outcome).__name__:>9} "
              f"{st.cycles:8d} {used:6d}")
        if isinstance(res.outcome, Done) and cap >= 3:
            break


if __name__ == "__main__":
    main()
