"""Roofline bounds and worker-count selection for stencils on a CGRA.

Flop accounting: a MAC is 2 flops and the chain's leading MUL is 1, so one
output point of a star stencil costs ``2 * (2rx + 2ry) + 1`` flops.  Memory
traffic is one read of the input grid and one write of the output grid.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass
from typing import Optional

from .reference import BadRadius


@dataclass(frozen=True)
class MachineModel:
    freq_ghz: float = 1.2
    n_mac_pes: int = 256
    bw_gbs: float = 100.0
    bytes_per_elem: int = 8

    def __post_init__(self):
        if min(self.freq_ghz, self.n_mac_pes, self.bw_gbs, self.bytes_per_elem) <= 0:
            raise ValueError("machine parameters must be positive")

    @property
    def roof_gflops(self) -> float:
        return 2 * self.n_mac_pes * self.freq_ghz


def flops_per_point(rx: int, ry: int = 0) -> int:
    return 2 * (2 * rx + 2 * ry) + 1


def ai_1d(n: int, rx: int, bytes_per_elem: int = 8) -> float:
    if rx < 0 or n <= 2 * rx:
        raise BadRadius(f"n={n}, rx={rx}")
    return flops_per_point(rx) * (n - 2 * rx) / (2 * n * bytes_per_elem)


def ai_2d(nx: int, ny: int, rx: int, ry: int, bytes_per_elem: int = 8) -> float:
    if rx < 0 or ry < 0 or nx <= 2 * rx or ny <= 2 * ry:
        raise BadRadius(f"{nx}x{ny}, radii ({rx}, {ry})")
    return (flops_per_point(rx, ry) * (nx - 2 * rx) * (ny - 2 * ry)
            / (2 * nx * ny * bytes_per_elem))


@dataclass
class RooflineReport:
    ai: float
    bw_bound_gflops: float
    macs_per_worker: int
    w_max: int
    recommended_w: int
    compute_bound_gflops: dict[int, float]  # w -> GFLOPS, for w = 1..w_max
    peak_gflops: float
    roof_gflops: float

    def compute_bound(self, w: int) -> float:
        return self.compute_bound_gflops[w]

    def to_json(self) -> str:
        d = asdict(self)
        d["compute_bound_gflops"] = {str(k): v for k, v in self.compute_bound_gflops.items()}
        return json.dumps(d, indent=1, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["w", "compute_bound_gflops", "bw_bound_gflops"])
        for k, v in self.compute_bound_gflops.items():
            w.writerow([k, repr(v), repr(self.bw_bound_gflops)])
        return buf.getvalue()


def compute_bound(w: int, macs_per_worker: int, machine: MachineModel) -> float:
    return machine.freq_ghz * w * (2 * macs_per_worker + 1)


def worker_bounds(machine: MachineModel, *, rx: int, n: Optional[int] = None,
                  nx: Optional[int] = None, ny: Optional[int] = None,
                  ry: int = 0) -> RooflineReport:
    """Bandwidth and compute ceilings for a 1D (``n``) or 2D (``nx``, ``ny``)
    stencil, and the fewest workers that reach the bandwidth ceiling.

    A worker occupies ``macs_per_worker`` MAC PEs plus one MUL PE from the
    same pool, so ``w_max = n_mac_pes // (macs_per_worker + 1)``.
    """
    if n is not None:
        ai = ai_1d(n, rx, machine.bytes_per_elem)
        macs = 2 * rx
    else:
        ai = ai_2d(nx, ny, rx, ry, machine.bytes_per_elem)
        macs = 2 * rx + 2 * ry
    bw_bound = machine.bw_gbs * ai
    w_max = machine.n_mac_pes // (macs + 1)
    if w_max == 0:
        raise ValueError(f"a worker needs {macs + 1} PEs, machine has {machine.n_mac_pes}")
    bounds = {w: compute_bound(w, macs, machine) for w in range(1, w_max + 1)}
    recommended = next((w for w in bounds if bounds[w] >= bw_bound), w_max)
    return RooflineReport(
        ai=ai,
        bw_bound_gflops=bw_bound,
        macs_per_worker=macs,
        w_max=w_max,
        recommended_w=recommended,
        compute_bound_gflops=bounds,
        peak_gflops=min(bw_bound, bounds[recommended]),
        roof_gflops=machine.roof_gflops,
    )
