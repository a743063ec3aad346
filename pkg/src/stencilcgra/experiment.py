"""Experiment configs and end-to-end stencil runs (generate, simulate, check)."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import reference
from .generator import (SpecInvalid, StencilSpec1D, StencilSpec2D,
                        gen_stencil_1d, strip_graphs)
from .roofline import MachineModel
from .simulator import (CycleLimit, Deadlock, Done, MemoryModel, SimConfig,
                        SimOutcome, SimStats, traffic_report)

Spec = Union[StencilSpec1D, StencilSpec2D]


@dataclass
class ExperimentConfig:
    spec: Spec
    machine: MachineModel = field(default_factory=MachineModel)
    sim: SimConfig = field(default_factory=SimConfig)
    seed: int = 0
    mem_ops_per_cycle: Optional[int] = None  # default: one per worker
    force_buffer: Optional[int] = None
    filter_mode: str = "rowid"


def input_grid(spec: Spec, seed: int) -> np.ndarray:
    """Uniform [0, 1) input from numpy's PCG64 generator seeded with ``seed``."""
    rng = np.random.default_rng(seed)
    if isinstance(spec, StencilSpec1D):
        return rng.random(spec.n)
    return rng.random((spec.ny, spec.nx))


def random_coeffs(count: int, rng: np.random.Generator) -> list[float]:
    return rng.uniform(-1.0, 1.0, count).tolist()


def spec_from_dict(d: dict) -> Spec:
    """Build a 1D or 2D spec from config-file keys.

    1D: ``n, rx, coeffs, workers``.  2D: ``nx, ny, rx, ry, coeffs`` (an
    object with ``x`` and ``y`` lists), ``workers``, ``storage_budget``.
    Missing coefficients are drawn uniformly from [-1, 1) with ``seed``.
    """
    rng = np.random.default_rng(int(d.get("seed", 0)))
    try:
        w = int(d.get("workers", d.get("w", 1)))
        if "n" in d:
            if "nx" in d or "ny" in d:
                raise SpecInvalid("config has both 1D and 2D dimensions")
            rx = int(d["rx"])
            coeffs = d.get("coeffs") or random_coeffs(2 * rx + 1, rng)
            return StencilSpec1D(int(d["n"]), rx, coeffs, w)
        rx, ry = int(d["rx"]), int(d.get("ry", 0))
        co = d.get("coeffs") or {}
        cx = co.get("x") or d.get("coeff_x") or random_coeffs(2 * rx + 1, rng)
        cy = co.get("y") or d.get("coeff_y") or random_coeffs(2 * ry + 1, rng)
        budget = d.get("storage_budget")
        return StencilSpec2D(int(d["nx"]), int(d["ny"]), rx, ry, cx, cy, w,
                             None if budget is None else int(budget))
    except KeyError as exc:
        raise SpecInvalid(f"missing key {exc}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, SpecInvalid):
            raise
        raise SpecInvalid(str(exc)) from exc


def config_from_dict(d: dict) -> ExperimentConfig:
    m = d.get("machine", {})
    return ExperimentConfig(
        spec=spec_from_dict(d),
        machine=MachineModel(**m),
        sim=SimConfig(max_cycles=int(d.get("max_cycles", 10_000_000))),
        seed=int(d.get("seed", 0)),
        mem_ops_per_cycle=d.get("mem_ops_per_cycle"),
        force_buffer=d.get("force_buffer"),
        filter_mode=d.get("filter_mode", "rowid"),
    )


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SpecInvalid(f"{path}: {exc}") from exc
    return config_from_dict(d)


@dataclass
class RunResult:
    outcome: SimOutcome
    memory: MemoryModel
    graphs: list


def run_stencil(spec: Spec, grid: np.ndarray, sim: Optional[SimConfig] = None, *,
                mem_ops_per_cycle: Optional[int] = None,
                force_buffer: Optional[int] = None,
                filter_mode: str = "rowid") -> RunResult:
    """Generate, simulate every strip, and return the combined outcome."""
    from .simulator import run

    sim = sim or SimConfig()
    memory = MemoryModel(grid, max_mem_ops_per_cycle=mem_ops_per_cycle or spec.w)
    if isinstance(spec, StencilSpec1D):
        graphs = [gen_stencil_1d(spec, filter_mode)]
    else:
        graphs = [g for _, g in strip_graphs(spec, force_buffer)]
    parts: list[SimStats] = []
    outcome: SimOutcome
    for g in graphs:
        outcome = run(g, memory, sim)
        parts.append(outcome.stats)
        if not isinstance(outcome, Done):
            break
    merged = SimStats.merge(parts)
    if isinstance(outcome, Done):
        outcome = Done(merged)
    elif isinstance(outcome, Deadlock):
        outcome = Deadlock(merged, outcome.starved, outcome.blocked_full)
    else:
        outcome = CycleLimit(merged)
    return RunResult(outcome, memory, graphs)


def oracle(spec: Spec, grid: np.ndarray) -> np.ndarray:
    if isinstance(spec, StencilSpec1D):
        return reference.stencil1d_ref(grid, spec.rx, spec.coeffs)
    return reference.stencil2d_ref(grid, spec.rx, spec.ry, spec.coeff_x, spec.coeff_y)


def first_mismatch(got: np.ndarray, want: np.ndarray) -> Optional[list[int]]:
    """Index of the first cell differing bit-for-bit (NaN equals NaN)."""
    a = got.view(np.uint64) if got.dtype == np.float64 else got
    b = want.view(np.uint64) if want.dtype == np.float64 else want
    same = (a == b) | (np.isnan(got) & np.isnan(want))
    if same.all():
        return None
    return [int(i) for i in np.argwhere(~same)[0]]


def spec_dict(spec: Spec) -> dict:
    if isinstance(spec, StencilSpec1D):
        return {"n": spec.n, "rx": spec.rx, "workers": spec.w}
    return {"nx": spec.nx, "ny": spec.ny, "rx": spec.rx, "ry": spec.ry,
            "workers": spec.w, "storage_budget": spec.storage_budget}


def verify(cfg: ExperimentConfig) -> tuple[str, dict, RunResult]:
    """Run and check one experiment.

    Returns ``(status, report, result)`` where status is ``pass``,
    ``mismatch``, ``deadlock`` or ``cycle_limit``.
    """
    spec = cfg.spec
    grid = input_grid(spec, cfg.seed)
    res = run_stencil(spec, grid, cfg.sim, mem_ops_per_cycle=cfg.mem_ops_per_cycle,
                      force_buffer=cfg.force_buffer, filter_mode=cfg.filter_mode)
    out = res.outcome
    stats = out.stats
    report: dict = {
        "spec": spec_dict(spec),
        "seed": cfg.seed,
        "strips": len(res.graphs),
        "cycles": stats.cycles,
        "loads": stats.loads,
        "stores": stats.stores,
        "mem_ops_stalled": stats.mem_ops_stalled,
    }
    if isinstance(out, Deadlock):
        report.update(outcome="deadlock", starved=out.starved[:20],
                      blocked_full=out.blocked_full[:20])
        return "deadlock", report, res
    if isinstance(out, CycleLimit):
        report["outcome"] = "cycle_limit"
        return "cycle_limit", report, res
    report["outcome"] = "done"
    want = oracle(spec, grid)
    mismatch = first_mismatch(res.memory.output_grid, want)
    traffic = traffic_report(stats, spec)
    report.update(
        bit_exact=mismatch is None,
        first_mismatch=mismatch,
        loads_expected=traffic.loads_expected,
        stores_expected=traffic.stores_expected,
        reuse_factor=round(traffic.reuse_factor, 9),
        traffic_match=traffic.matches,
    )
    status = "pass" if mismatch is None and traffic.matches else "mismatch"
    return status, report, res
