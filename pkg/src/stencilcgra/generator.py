"""Parametric dataflow graphs for 1D and 2D star stencils.

Worker layout (w workers, radius rx along x):

* reader ``r`` loads input columns ``r, r + w, r + 2w, ...`` of every row and
  broadcasts them;
* compute worker ``k`` produces output columns ``rx + k + t*w``.  Its x chain
  is one Mul followed by ``2*rx`` Macs; chain position ``p`` multiplies by
  ``coeff_x[p]`` and takes its data from reader ``(k + p) % w`` through a
  filter that keeps only the stream positions this worker needs;
* writer ``k`` stores the chain result, and a Counter per writer fires once
  all of the worker's stores are acknowledged.  The counters are OR-reduced
  into a single Sink, the graph's done node.

For 2D stencils each worker also has a y chain of ``2*ry`` Macs fed by reader
``(k + rx) % w``, the reader owning the worker's output column.  The chain is
seeded with the x partial sum and adds ``dy = -ry..-1, +1..+ry`` in that
order.  The reader's stream reaches the y Macs through a line of Copy nodes
visited in the order the rows are consumed (``+ry`` first, ``-ry`` last), so
each queue of the line holds about one row of the strip.  Those queues and
the accumulator queues between y Macs are the mandatory buffering.

Wide grids are split into vertical strips (see :func:`block_plan`); one graph
is built per strip and they run one after the other against shared memory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

from .dfg import DEFAULT_CAPACITY, EdgeSpec, Graph, NodeSpec, OpKind, check


class SpecInvalid(ValueError):
    pass


class StorageBudgetTooSmall(SpecInvalid):
    pass


class BoundsError(ValueError):
    pass


@dataclass(frozen=True)
class StencilSpec1D:
    n: int
    rx: int
    coeffs: tuple[float, ...]
    w: int = 1

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if self.rx < 0:
            raise SpecInvalid(f"radius must be >= 0, got {self.rx}")
        if len(self.coeffs) != 2 * self.rx + 1:
            raise SpecInvalid(
                f"need {2 * self.rx + 1} coefficients for radius {self.rx}, "
                f"got {len(self.coeffs)}")
        if self.n <= 2 * self.rx:
            raise SpecInvalid(f"grid length {self.n} must exceed 2*rx = {2 * self.rx}")
        if not 1 <= self.w <= self.n - 2 * self.rx:
            raise SpecInvalid(
                f"worker count {self.w} outside [1, {self.n - 2 * self.rx}]")


@dataclass(frozen=True)
class StencilSpec2D:
    nx: int
    ny: int
    rx: int
    ry: int
    coeff_x: tuple[float, ...]
    coeff_y: tuple[float, ...]
    w: int = 1
    storage_budget: Optional[int] = None  # None: unlimited, single strip

    def __post_init__(self):
        object.__setattr__(self, "coeff_x", tuple(float(c) for c in self.coeff_x))
        object.__setattr__(self, "coeff_y", tuple(float(c) for c in self.coeff_y))
        if self.rx < 0 or self.ry < 0:
            raise SpecInvalid(f"radii must be >= 0, got ({self.rx}, {self.ry})")
        if len(self.coeff_x) != 2 * self.rx + 1:
            raise SpecInvalid(f"coeff_x needs {2 * self.rx + 1} values")
        if len(self.coeff_y) != 2 * self.ry + 1:
            raise SpecInvalid(f"coeff_y needs {2 * self.ry + 1} values")
        if self.nx <= 2 * self.rx or self.ny <= 2 * self.ry:
            raise SpecInvalid(
                f"grid {self.nx}x{self.ny} too small for radii ({self.rx}, {self.ry})")
        if self.w < 1:
            raise SpecInvalid(f"worker count must be >= 1, got {self.w}")
        if self.storage_budget is not None and self.storage_budget < min_storage(self):
            raise StorageBudgetTooSmall(
                f"storage budget {self.storage_budget} < minimum {min_storage(self)}")


def min_storage(spec: StencilSpec2D) -> int:
    return 2 * spec.ry * (2 * spec.rx + 1)


# -- filters -----------------------------------------------------------------

@dataclass(frozen=True)
class BitPattern:
    """Keep stream position k iff bit k of ``0^m 1^n 0^p`` is set."""

    m: int
    n: int
    p: int

    def passes(self, k: int) -> bool:
        return self.m <= k < self.m + self.n

    @property
    def length(self) -> int:
        return self.m + self.n + self.p

    def bits(self) -> str:
        return "0" * self.m + "1" * self.n + "0" * self.p

    def to_range(self) -> "RowIdRange":
        return RowIdRange(self.m, self.m + self.n - 1)


@dataclass(frozen=True)
class RowIdRange:
    """Keep stream position k iff ``lo <= k <= hi``."""

    lo: int
    hi: int

    def passes(self, k: int) -> bool:
        return self.lo <= k <= self.hi

    def to_bits(self, stream_len: int) -> BitPattern:
        lo = max(self.lo, 0)
        hi = min(self.hi, stream_len - 1)
        n = max(hi - lo + 1, 0)
        return BitPattern(lo, n, stream_len - lo - n)


FilterSpec = Union[BitPattern, RowIdRange]


def filter_pattern(chain_pos: int, chain_len: int, stream_len: int,
                   mode: str = "rowid") -> FilterSpec:
    """Filter for position ``chain_pos`` of a single-worker chain of
    ``chain_len`` nodes reading a stream of ``stream_len`` values."""
    if not 0 <= chain_pos < chain_len <= stream_len:
        raise BoundsError(f"need 0 <= {chain_pos} < {chain_len} <= {stream_len}")
    m = chain_pos
    n = stream_len - chain_len + 1
    p = chain_len - 1 - chain_pos
    if mode == "bitpattern":
        return BitPattern(m, n, p)
    if mode == "rowid":
        return RowIdRange(m, m + n - 1)
    raise ValueError(f"unknown filter mode {mode!r}")


def sync_threshold(worker_id: int, n: int, rx: int, w: int) -> int:
    """Number of outputs (stores) owned by ``worker_id`` in a row of ``n``."""
    if w < 1 or not 0 <= worker_id < w:
        raise BoundsError(f"worker {worker_id} not in [0, {w})")
    if rx < 0 or n <= 2 * rx:
        raise BoundsError(f"row of {n} has no interior for radius {rx}")
    outputs = n - 2 * rx
    if worker_id >= outputs:
        return 0
    return -(-(outputs - worker_id) // w)


def mandatory_buffer_capacity(ry: int, block_width: int) -> int:
    return 2 * ry * block_width


def y_edge_capacity(ry: int, block_width: int, w: int) -> int:
    """Capacity given to each queue of a worker's y chain."""
    total = mandatory_buffer_capacity(ry, block_width)
    extra = max(2, math.ceil(total / (w * 2 * ry)))
    return DEFAULT_CAPACITY + extra


# -- blocking ----------------------------------------------------------------

@dataclass(frozen=True)
class BlockPlan:
    strips: tuple[tuple[int, int], ...]
    block_width: int
    rx: int = 0

    def interiors(self) -> list[tuple[int, int]]:
        return [(a + self.rx, b - self.rx) for a, b in self.strips]

    def input_widths(self) -> list[int]:
        return [b - a for a, b in self.strips]


def block_plan(spec: StencilSpec2D) -> BlockPlan:
    nx, rx, ry = spec.nx, spec.rx, spec.ry
    if ry == 0 or spec.storage_budget is None:
        width = nx
    else:
        if spec.storage_budget < min_storage(spec):
            raise StorageBudgetTooSmall(
                f"storage budget {spec.storage_budget} < minimum {min_storage(spec)}")
        width = min(nx, spec.storage_budget // (2 * ry))
    strips = []
    start = 0
    while True:
        end = min(start + width, nx)
        strips.append((start, end))
        if end == nx:
            break
        start = end - 2 * rx
    return BlockPlan(tuple(strips), width, rx)


# -- graph construction -------------------------------------------------------

@dataclass
class _Layout:
    """Everything needed to build the graph of one strip."""

    row_len: int          # elements per row of the full grid
    rows: int             # ny (1 for 1D)
    col0: int             # first input column of the strip
    width: int            # strip input width
    rx: int
    ry: int
    cx: Sequence[float]
    cy: Sequence[float]
    w: int
    y_capacity: int = DEFAULT_CAPACITY
    filter_mode: str = "rowid"

    @property
    def two_d(self) -> bool:
        return self.rows > 1

    def reader_cols(self, r: int) -> int:
        return max(0, -(-(self.width - r) // self.w))

    def outputs(self, k: int) -> int:
        """Output columns of worker k per row of the strip."""
        return sync_threshold(k, self.width, self.rx, self.w) if k < self.w else 0


def _filter_ops(lay: _Layout, r: int, col_lo: int, col_hi: int,
                row_lo: int, row_hi: int) -> tuple[float, ...]:
    if not lay.two_d:
        return (col_lo, col_hi)
    return (col_lo, col_hi, lay.reader_cols(r), row_lo, row_hi)


def _build(lay: _Layout) -> Graph:
    g = Graph()
    w, rx, ry = lay.w, lay.rx, lay.ry
    out_rows = lay.rows - 2 * ry
    loads: dict[int, str] = {}

    for r in range(w):
        cols = lay.reader_cols(r)
        if cols == 0:
            continue
        tag = f"reader:{r}"
        ag = g.add_node(NodeSpec(
            f"r{r}.addr", OpKind.ADDR_GEN,
            (lay.col0 + r, w, cols, lay.row_len, lay.rows),
            worker_tag=tag, grid_pos=(0, 2 * r)))
        ld = g.add_node(NodeSpec(f"r{r}.load", OpKind.LOAD, worker_tag=tag,
                                 grid_pos=(0, 2 * r + 1)))
        g.connect((ag, 0), (ld, 0))
        loads[r] = ld

    def feed(k: int, p: int, r: int, target: str, col_lo: int, col_hi: int,
             row_lo: int, row_hi: int, source: tuple[str, int],
             capacity: int = DEFAULT_CAPACITY) -> None:
        """Connect ``source`` to ``target``'s data input through a filter."""
        name = f"{target}.flt"
        tag = f"compute:{k}"
        if lay.filter_mode == "bitpattern" and not lay.two_d:
            stream_len = lay.reader_cols(r)
            pat = RowIdRange(col_lo, col_hi).to_bits(stream_len)
            bits = g.add_node(NodeSpec(f"{name}.bits", OpKind.BIT_GEN,
                                       (pat.m, pat.n, pat.p), worker_tag=tag))
            gate = g.add_node(NodeSpec(name, OpKind.DEMUX, worker_tag=tag))
            drop = g.add_node(NodeSpec(f"{name}.drop", OpKind.SINK, worker_tag=tag))
            g.connect((bits, 0), (gate, 0))
            g.connect(source, (gate, 1), capacity)
            g.connect((gate, 0), (drop, 0))
            g.connect((gate, 1), (target, 0), capacity)
            return
        flt = g.add_node(NodeSpec(
            name, OpKind.FILTER,
            _filter_ops(lay, r, col_lo, col_hi, row_lo, row_hi), worker_tag=tag))
        g.connect(source, (flt, 0), capacity)
        g.connect((flt, 0), (target, 0), capacity)

    counters: list[str] = []
    for k in range(w):
        per_row = lay.outputs(k)
        if per_row == 0:
            continue
        tag = f"compute:{k}"
        prev = None
        # x chain
        for p in range(2 * rx + 1):
            r = (k + p) % w
            node = g.add_node(NodeSpec(
                f"c{k}.x{p}", OpKind.MUL if p == 0 else OpKind.MAC,
                (lay.cx[p],), worker_tag=tag, grid_pos=(1 + p, 2 * r)))
            s0 = (k + p) // w
            feed(k, p, r, node, s0, s0 + per_row - 1, ry, ry + out_rows - 1,
                 (loads[r], 0))
            if prev is not None:
                g.connect((prev, 0), (node, 1))
            prev = node

        # y chain
        if ry > 0:
            r = (k + rx) % w
            s0 = (k + rx) // w
            cap = lay.y_capacity
            offsets = [*range(-ry, 0), *range(1, ry + 1)]
            macs = {}
            for j, dy in enumerate(offsets):
                macs[dy] = g.add_node(NodeSpec(
                    f"c{k}.y{dy:+d}", OpKind.MAC, (lay.cy[ry + dy],),
                    worker_tag=tag, grid_pos=(2 + 2 * rx + j, 2 * r)))
                g.connect((prev, 0), (macs[dy], 1), cap)
                prev = macs[dy]
            line_src = (loads[r], 0)
            for dy in [*range(ry, 0, -1), *range(-1, -ry - 1, -1)]:
                cp = g.add_node(NodeSpec(f"c{k}.y{dy:+d}.cp", OpKind.COPY,
                                         worker_tag=tag))
                g.connect(line_src, (cp, 0), cap)
                feed(k, dy, r, macs[dy], s0, s0 + per_row - 1,
                     ry + dy, ry + dy + out_rows - 1, (cp, 0), cap)
                line_src = (cp, 0)

        # writer and sync
        wtag = f"writer:{k}"
        base = ry * lay.row_len + lay.col0 + rx + k
        ag = g.add_node(NodeSpec(f"w{k}.addr", OpKind.ADDR_GEN,
                                 (base, w, per_row, lay.row_len, out_rows),
                                 worker_tag=wtag))
        st = g.add_node(NodeSpec(f"w{k}.store", OpKind.STORE, worker_tag=wtag))
        g.connect((ag, 0), (st, 0))
        g.connect((prev, 0), (st, 1))
        cnt = g.add_node(NodeSpec(f"s{k}.count", OpKind.COUNTER,
                                  (per_row * out_rows,), worker_tag=f"sync:{k}"))
        g.connect((st, 0), (cnt, 0))
        counters.append(cnt)

    level = counters
    depth = 0
    while len(level) > 1:
        nxt = []
        for i in range(0, len(level) - 1, 2):
            node = g.add_node(NodeSpec(f"done.or{depth}.{i // 2}", OpKind.OR))
            g.connect((level[i], 0), (node, 0))
            g.connect((level[i + 1], 0), (node, 1))
            nxt.append(node)
        if len(level) % 2:
            nxt.append(level[-1])
        level = nxt
        depth += 1
    done = g.add_node(NodeSpec("done", OpKind.SINK))
    g.connect((level[0], 0), (done, 0))
    g.done_node = done
    check(g)
    return g


def gen_stencil_1d(spec: StencilSpec1D, filter_mode: str = "rowid") -> Graph:
    if filter_mode not in ("rowid", "bitpattern"):
        raise SpecInvalid(f"unknown filter mode {filter_mode!r}")
    return _build(_Layout(
        row_len=spec.n, rows=1, col0=0, width=spec.n, rx=spec.rx, ry=0,
        cx=spec.coeffs, cy=(0.0,), w=spec.w, filter_mode=filter_mode))


def gen_stencil_2d(spec: StencilSpec2D, strip: int = 0,
                   y_capacity: Optional[int] = None) -> Graph:
    """Graph for one strip of ``block_plan(spec)``.

    ``y_capacity`` overrides the mandatory y-chain queue capacity; values
    below :func:`y_edge_capacity` are for deadlock experiments.
    """
    plan = block_plan(spec)
    if not 0 <= strip < len(plan.strips):
        raise BoundsError(f"strip {strip} not in [0, {len(plan.strips)})")
    c0, c1 = plan.strips[strip]
    width = c1 - c0
    if y_capacity is None:
        y_capacity = y_edge_capacity(spec.ry, width, spec.w) if spec.ry else DEFAULT_CAPACITY
    return _build(_Layout(
        row_len=spec.nx, rows=spec.ny, col0=c0, width=width, rx=spec.rx,
        ry=spec.ry, cx=spec.coeff_x, cy=spec.coeff_y, w=spec.w,
        y_capacity=y_capacity))


def strip_graphs(spec: StencilSpec2D,
                 y_capacity: Optional[int] = None) -> list[tuple[tuple[int, int], Graph]]:
    plan = block_plan(spec)
    return [(s, gen_stencil_2d(spec, i, y_capacity)) for i, s in enumerate(plan.strips)]


def compute_nodes(graph: Graph, worker: Optional[int] = None) -> list[NodeSpec]:
    """Mul and Mac nodes, optionally restricted to one compute worker."""
    nodes = graph.nodes_of(OpKind.MUL, OpKind.MAC)
    if worker is None:
        return nodes
    return [n for n in nodes if n.worker_tag == f"compute:{worker}"]


def y_chain_edges(graph: Graph) -> list[EdgeSpec]:
    """Edges into y-chain nodes (Macs, their filters and the Copy line)."""
    return [e for e in graph.edges if ".y" in e.dst[0]]
