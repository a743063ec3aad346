"""Command line front end.

    stencilcgra gen      --spec cfg.json --out dir [--format json|dot]
    stencilcgra verify   --spec cfg.json --out dir [--seed N] [--max-cycles N]
                         [--force-buffer TOKENS]
    stencilcgra roofline --spec cfg.json --out dir [--format json|csv]

Exit codes: 0 pass, 2 result mismatch, 3 deadlock or cycle limit,
4 configuration or I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .dfg import GraphError, serialize, to_dot
from .experiment import ExperimentConfig, load_config, verify
from .generator import SpecInvalid, StencilSpec1D, block_plan, gen_stencil_1d, strip_graphs
from .reference import BadRadius
from .roofline import worker_bounds

EXIT_PASS, EXIT_MISMATCH, EXIT_DEADLOCK, EXIT_CONFIG = 0, 2, 3, 4

log = logging.getLogger("stencilcgra")


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    log.info("wrote %s", path)


def cmd_gen(cfg: ExperimentConfig, out: Path, fmt: str | None) -> int:
    spec = cfg.spec
    if isinstance(spec, StencilSpec1D):
        graphs = [("graph", gen_stencil_1d(spec, cfg.filter_mode))]
    else:
        strips = strip_graphs(spec, cfg.force_buffer)
        if len(strips) == 1:
            graphs = [("graph", strips[0][1])]
        else:
            graphs = [(f"graph.strip{i}", g) for i, (_, g) in enumerate(strips)]
        plan = block_plan(spec)
        _write(out / "plan.json", json.dumps(
            {"block_width": plan.block_width, "strips": [list(s) for s in plan.strips]},
            indent=1) + "\n")
    for name, g in graphs:
        if fmt in (None, "json"):
            _write(out / f"{name}.json", serialize(g) + "\n")
        if fmt in (None, "dot"):
            _write(out / f"{name}.dot", to_dot(g))
    return EXIT_PASS


def cmd_verify(cfg: ExperimentConfig, out: Path) -> int:
    status, report, res = verify(cfg)
    text = json.dumps(report, indent=1, sort_keys=True) + "\n"
    _write(out / "report.json", text)
    _write(out / "stats.json", res.outcome.stats.to_json() + "\n")
    graph = res.graphs[0] if len(res.graphs) == 1 else None
    _write(out / "highwater.csv", res.outcome.stats.high_water_csv(graph))
    sys.stdout.write(text)
    return {"pass": EXIT_PASS, "mismatch": EXIT_MISMATCH}.get(status, EXIT_DEADLOCK)


def cmd_roofline(cfg: ExperimentConfig, out: Path, fmt: str | None) -> int:
    spec = cfg.spec
    if isinstance(spec, StencilSpec1D):
        rep = worker_bounds(cfg.machine, n=spec.n, rx=spec.rx)
    else:
        rep = worker_bounds(cfg.machine, nx=spec.nx, ny=spec.ny, rx=spec.rx, ry=spec.ry)
    if fmt in (None, "json"):
        _write(out / "roofline.json", rep.to_json() + "\n")
    if fmt in (None, "csv"):
        _write(out / "roofline.csv", rep.to_csv())
    sys.stdout.write(rep.to_json() + "\n")
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stencilcgra", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, formats in (("gen", ["json", "dot"]), ("verify", None),
                          ("roofline", ["json", "csv"])):
        sp = sub.add_parser(name)
        sp.add_argument("--spec", required=True, type=Path, help="experiment config JSON")
        sp.add_argument("--out", type=Path, default=Path("out"))
        sp.add_argument("--seed", type=int, default=None, help="input-grid RNG seed")
        sp.add_argument("--max-cycles", type=int, default=None)
        sp.add_argument("--force-buffer", type=int, default=None,
                        help="override y-chain queue capacity (tokens)")
        if formats:
            sp.add_argument("--format", choices=formats, default=None)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.spec)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.max_cycles is not None:
            cfg.sim.max_cycles = args.max_cycles
        if args.force_buffer is not None:
            cfg.force_buffer = args.force_buffer
        if args.command == "gen":
            return cmd_gen(cfg, args.out, args.format)
        if args.command == "verify":
            return cmd_verify(cfg, args.out)
        return cmd_roofline(cfg, args.out, args.format)
    except (SpecInvalid, BadRadius, GraphError, OSError, TypeError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
