"""Cycle-approximate execution of a dataflow graph.

Each cycle visits every node once, in graph insertion order.  A node fires
when each dynamic input queue has a visible token, each output queue it
will write has room, and, for Load/Store, the per-cycle memory-op budget is
not spent.  Queue room is checked against queued plus in-flight tokens, so
a consumer visited earlier in the same cycle frees space for a producer
visited later, but not the other way around.  Results become visible to
consumers ``latency`` cycles after the firing.

Run ends in one of three outcomes: :class:`Done` once the graph's done node
has fired, :class:`Deadlock` when a cycle fires nothing and nothing is in
flight, or :class:`CycleLimit`.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .dfg import Graph, OpKind, Token, check
from .reference import traffic_oracle


class NotCompleted(RuntimeError):
    pass


@dataclass
class MemoryModel:
    input_grid: np.ndarray
    output_grid: Optional[np.ndarray] = None
    max_mem_ops_per_cycle: int = 1
    loads_issued: int = 0
    stores_issued: int = 0

    def __post_init__(self):
        self.input_grid = np.asarray(self.input_grid, dtype=np.float64)
        if self.output_grid is None:
            self.output_grid = np.full(self.input_grid.shape, np.nan)
        if self.max_mem_ops_per_cycle < 1:
            raise ValueError("max_mem_ops_per_cycle must be >= 1")


@dataclass
class SimConfig:
    max_cycles: int = 10_000_000
    # per-kind latency overrides; nodes of other kinds keep NodeSpec.latency
    default_latency: dict[OpKind, int] = field(default_factory=dict)
    rng_seed: int = 0

    def __post_init__(self):
        if self.max_cycles <= 0:
            raise ValueError("max_cycles must be positive")
        if any(v < 1 for v in self.default_latency.values()):
            raise ValueError("latencies must be >= 1")


@dataclass
class SimStats:
    cycles: int = 0
    fires: dict[str, int] = field(default_factory=dict)
    kind_fires: dict[str, int] = field(default_factory=dict)
    loads: int = 0
    stores: int = 0
    queue_high_water: dict[int, int] = field(default_factory=dict)
    busy_fraction: dict[str, float] = field(default_factory=dict)
    mem_ops_stalled: int = 0
    filter_drops: int = 0
    completed: bool = False

    def to_json(self) -> str:
        return json.dumps({
            "cycles": self.cycles,
            "completed": self.completed,
            "loads": self.loads,
            "stores": self.stores,
            "mem_ops_stalled": self.mem_ops_stalled,
            "filter_drops": self.filter_drops,
            "kind_fires": self.kind_fires,
            "fires": self.fires,
            "busy_fraction": {k: round(v, 6) for k, v in self.busy_fraction.items()},
        }, indent=1, sort_keys=True)

    def high_water_csv(self, graph: Optional[Graph] = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["edge", "src", "dst", "capacity", "high_water"])
        for e, hw in sorted(self.queue_high_water.items()):
            if graph is not None:
                edge = graph.edges[e]
                w.writerow([e, f"{edge.src[0]}:{edge.src[1]}",
                            f"{edge.dst[0]}:{edge.dst[1]}", edge.capacity, hw])
            else:
                w.writerow([e, "", "", "", hw])
        return buf.getvalue()

    @classmethod
    def merge(cls, parts: list["SimStats"]) -> "SimStats":
        """Combine stats of graphs run one after another."""
        out = cls(completed=all(p.completed for p in parts) and bool(parts))
        for i, p in enumerate(parts):
            out.cycles += p.cycles
            out.loads += p.loads
            out.stores += p.stores
            out.mem_ops_stalled += p.mem_ops_stalled
            out.filter_drops += p.filter_drops
            for k, v in p.kind_fires.items():
                out.kind_fires[k] = out.kind_fires.get(k, 0) + v
            prefix = f"{i}/" if len(parts) > 1 else ""
            for k, v in p.fires.items():
                out.fires[prefix + k] = v
            for k, v in p.busy_fraction.items():
                out.busy_fraction[prefix + k] = v
            for k, v in p.queue_high_water.items():
                out.queue_high_water[k] = max(out.queue_high_water.get(k, 0), v)
        return out


@dataclass
class Done:
    stats: SimStats


@dataclass
class Deadlock:
    stats: SimStats
    starved: list[str]       # hold some input tokens but miss others
    blocked_full: list[str]  # have all inputs, cannot write an output


@dataclass
class CycleLimit:
    stats: SimStats


SimOutcome = Union[Done, Deadlock, CycleLimit]


class SimState:
    """Mutable execution state of one graph against one memory."""

    def __init__(self, graph: Graph, memory: MemoryModel,
                 config: Optional[SimConfig] = None):
        check(graph)
        self.graph = graph
        self.memory = memory
        self.config = config or SimConfig()
        self.cycle = 0
        self.done = False
        self.done_cycle: Optional[int] = None
        self._mem_src = memory.input_grid.ravel().tolist()
        self._mem_dst = memory.output_grid.ravel().tolist()
        self._written: list[int] = []

        edges = graph.edges
        self.queues = [deque() for _ in edges]
        self.caps = [e.capacity for e in edges]
        self.visible = [0] * len(edges)
        self.dequeued = [0] * len(edges)
        self.high_water = [0] * len(edges)

        self.node_ids = list(graph.nodes)
        self.fires = [0] * len(self.node_ids)
        # emitted[i][port]: tokens produced on that output port
        self.emitted = [[0] * n.kind.n_outputs for n in graph.nodes.values()]
        self._stats = {"loads": 0, "stores": 0, "drops": 0, "stalled": 0}

        lat = {}
        for n in graph.nodes.values():
            lat[n.id] = self.config.default_latency.get(n.kind, n.latency)
        self._ring = deque([] for _ in range(max(lat.values(), default=1)))
        self._mem_budget = [0]
        self._stall_flag = [False]

        self._ins: list[list[int]] = []
        self._outs: list[list[list[int]]] = []
        out_map: dict[tuple[str, int], list[int]] = {}
        for e in edges:
            out_map.setdefault(e.src, []).append(e.id)
        self._fns = []
        for i, n in enumerate(graph.nodes.values()):
            ins = [graph.in_edge(n.id, p) for p in range(n.kind.n_inputs)]
            outs = [out_map.get((n.id, p), []) for p in range(n.kind.n_outputs)]
            self._ins.append(ins)
            self._outs.append(outs)
            fn = self._make(i, n, ins, outs, lat[n.id])
            if n.id == graph.done_node:
                fn = self._wrap_done(fn)
            self._fns.append(fn)

    # -- node behaviours --------------------------------------------------

    def _wrap_done(self, fn):
        def fire():
            if fn():
                if not self.done:
                    self.done = True
                    self.done_cycle = self.cycle
                return True
            return False
        return fire

    def _make(self, i, node, ins, outs, latency):
        queues, caps, visible, dequeued = self.queues, self.caps, self.visible, self.dequeued
        high_water, fires, emitted = self.high_water, self.fires, self.emitted[i]
        ring = self._ring
        slot = latency - 1
        kind = node.kind
        ops = node.static_operands
        stats = self._stats

        def ports(p):
            return [(queues[e], caps[e], e) for e in outs[p]] if p < len(outs) else []

        def make_emit(p):
            targets = ports(p)

            def emit(value):
                pend = ring[slot]
                for q, _, e in targets:
                    q.append(value)
                    if len(q) > high_water[e]:
                        high_water[e] = len(q)
                    pend.append(e)
                emitted[p] += 1
            return emit

        def make_room(p):
            targets = ports(p)

            def room():
                for q, c, _ in targets:
                    if len(q) >= c:
                        return False
                return True
            return room

        emit0 = make_emit(0) if outs else None
        room0 = make_room(0) if outs else None

        def take(e):
            visible[e] -= 1
            dequeued[e] += 1
            return queues[e].popleft()

        if kind in (OpKind.MUL, OpKind.COPY, OpKind.SHIFT):
            (a,) = ins
            if kind is OpKind.MUL:
                c = float(ops[0])
                op = lambda x: c * x
            elif kind is OpKind.COPY:
                op = lambda x: x
            else:
                sh = int(ops[0])
                op = lambda x: math.ldexp(x, sh)

            def fire():
                if not visible[a] or not room0():
                    return False
                emit0(op(take(a)))
                fires[i] += 1
                return True
            return fire

        if kind in (OpKind.MAC, OpKind.ADD, OpKind.CMP, OpKind.OR):
            a, b = ins
            if kind is OpKind.MAC:
                c = float(ops[0])
                op = lambda x, acc: acc + c * x
            elif kind is OpKind.ADD:
                op = lambda x, y: x + y
            elif kind is OpKind.CMP:
                op = lambda x, y: 1.0 if x < y else 0.0
            else:
                op = lambda x, y: 1.0 if (x != 0.0 or y != 0.0) else 0.0
            if room0 is None:
                room0 = lambda: True
                emit0 = lambda v: None

            def fire():
                if not visible[a] or not visible[b] or not room0():
                    return False
                x = take(a)
                emit0(op(x, take(b)))
                fires[i] += 1
                return True
            return fire

        if kind is OpKind.FILTER:
            (a,) = ins
            lo, hi = int(ops[0]), int(ops[1])
            if len(ops) == 5:
                period, row_lo, row_hi = int(ops[2]), int(ops[3]), int(ops[4])
            else:
                period, row_lo, row_hi = 0, 0, 0
            pos = [0, 0]  # column within row, row

            def fire():
                if not visible[a]:
                    return False
                col, row = pos
                keep = lo <= col <= hi and row_lo <= row <= row_hi
                if keep and not room0():
                    return False
                x = take(a)
                col += 1
                if col == period:
                    col = 0
                    row += 1
                pos[0] = col
                pos[1] = row
                if keep:
                    emit0(x)
                else:
                    stats["drops"] += 1
                fires[i] += 1
                return True
            return fire

        if kind is OpKind.LOAD:
            (a,) = ins
            src = self._mem_src
            budget, stall = self._mem_budget, self._stall_flag

            def fire():
                if not visible[a] or not room0():
                    return False
                if budget[0] <= 0:
                    stall[0] = True
                    return False
                budget[0] -= 1
                stats["loads"] += 1
                emit0(src[int(take(a))])
                fires[i] += 1
                return True
            return fire

        if kind is OpKind.STORE:
            a, v = ins
            dst, written = self._mem_dst, self._written
            budget, stall = self._mem_budget, self._stall_flag
            if room0 is None:
                room0 = lambda: True
                emit0 = lambda v: None

            def fire():
                if not visible[a] or not visible[v] or not room0():
                    return False
                if budget[0] <= 0:
                    stall[0] = True
                    return False
                budget[0] -= 1
                stats["stores"] += 1
                addr = int(take(a))
                dst[addr] = take(v)
                written.append(addr)
                emit0(1.0)
                fires[i] += 1
                return True
            return fire

        if kind is OpKind.ADDR_GEN:
            base, cstride, ncols, rstride, nrows = (int(x) for x in ops)
            addrs = (base + r * rstride + c * cstride
                     for r in range(nrows) for c in range(ncols))
            nxt = [next(addrs, None)]

            def fire():
                if nxt[0] is None or not room0():
                    return False
                emit0(nxt[0])
                nxt[0] = next(addrs, None)
                fires[i] += 1
                return True
            return fire

        if kind in (OpKind.BIT_GEN, OpKind.CONST_STREAM):
            if kind is OpKind.BIT_GEN:
                m, n, p = (int(x) for x in ops)
                seq = iter([0.0] * m + [1.0] * n + [0.0] * p)
            else:
                seq = iter([float(ops[0])] * int(ops[1]))
            nxt = [next(seq, None)]

            def fire():
                if nxt[0] is None or not room0():
                    return False
                emit0(nxt[0])
                nxt[0] = next(seq, None)
                fires[i] += 1
                return True
            return fire

        if kind is OpKind.COUNTER:
            (a,) = ins
            threshold = int(ops[0])
            count = [0]

            def fire():
                if not visible[a]:
                    return False
                hit = count[0] + 1 == threshold
                if hit and not room0():
                    return False
                take(a)
                count[0] += 1
                if hit:
                    emit0(float(count[0]))
                fires[i] += 1
                return True
            return fire

        if kind is OpKind.SINK:
            (a,) = ins

            def fire():
                if not visible[a]:
                    return False
                take(a)
                fires[i] += 1
                return True
            return fire

        if kind is OpKind.MUX:
            s, a, b = ins

            def fire():
                if not visible[s]:
                    return False
                pick = a if queues[s][0] == 0.0 else b
                if not visible[pick] or not room0():
                    return False
                take(s)
                emit0(take(pick))
                fires[i] += 1
                return True
            return fire

        if kind is OpKind.DEMUX:
            s, v = ins
            emits = [make_emit(0), make_emit(1)]
            rooms = [make_room(0), make_room(1)]

            def fire():
                if not visible[s] or not visible[v]:
                    return False
                port = 0 if queues[s][0] == 0.0 else 1
                if not rooms[port]():
                    return False
                take(s)
                emits[port](take(v))
                fires[i] += 1
                return True
            return fire

        raise NotImplementedError(kind)

    # -- stepping -----------------------------------------------------------

    def in_flight(self) -> int:
        return sum(len(x) for x in self._ring)

    def step(self) -> int:
        """Advance one cycle; return the number of nodes that fired."""
        due = self._ring.popleft()
        self._ring.append([])
        visible = self.visible
        for e in due:
            visible[e] += 1
        self._mem_budget[0] = self.memory.max_mem_ops_per_cycle
        self._stall_flag[0] = False
        fired = 0
        for fn in self._fns:
            if fn():
                fired += 1
        if self._stall_flag[0]:
            self._stats["stalled"] += 1
        self.cycle += 1
        return fired

    def tokens(self, edge_id: int) -> list[Token]:
        """Tokens queued on an edge, visible ones first, with stream indices."""
        base = self.dequeued[edge_id]
        return [Token(float(v), base + j) for j, v in enumerate(self.queues[edge_id])]

    def occupancy(self, edge_id: int) -> int:
        return len(self.queues[edge_id])

    def enqueued(self, edge_id: int) -> int:
        src, port = self.graph.edges[edge_id].src
        return self.emitted[self.node_ids.index(src)][port]

    def blocked(self) -> tuple[list[str], list[str]]:
        starved, full = [], []
        for i, nid in enumerate(self.node_ids):
            ins = self._ins[i]
            have = [self.visible[e] > 0 for e in ins]
            if ins and any(have) and not all(have):
                starved.append(nid)
            elif all(have) and self._outs[i]:
                if ins and any(len(self.queues[e]) >= self.caps[e]
                               for port in self._outs[i] for e in port):
                    full.append(nid)
        return starved, full

    def stats(self) -> SimStats:
        cycles = self.cycle
        kinds: dict[str, int] = {}
        for nid, n in zip(self.node_ids, self.fires):
            k = self.graph.nodes[nid].kind.value
            kinds[k] = kinds.get(k, 0) + n
        return SimStats(
            cycles=self.done_cycle + 1 if self.done_cycle is not None else cycles,
            fires=dict(zip(self.node_ids, self.fires)),
            kind_fires=kinds,
            loads=self._stats["loads"],
            stores=self._stats["stores"],
            queue_high_water=dict(enumerate(self.high_water)),
            busy_fraction={nid: (f / cycles if cycles else 0.0)
                           for nid, f in zip(self.node_ids, self.fires)},
            mem_ops_stalled=self._stats["stalled"],
            filter_drops=self._stats["drops"],
            completed=self.done,
        )

    def commit(self) -> None:
        """Write stored values and counters back to the memory model."""
        out = self.memory.output_grid.reshape(-1)
        for addr in self._written:
            out[addr] = self._mem_dst[addr]
        self._written.clear()
        self.memory.loads_issued += self._stats["loads"]
        self.memory.stores_issued += self._stats["stores"]
        self._stats["loads"] = self._stats["stores"] = 0


def run(graph: Graph, memory: MemoryModel,
        config: Optional[SimConfig] = None) -> SimOutcome:
    """Execute ``graph`` until done, deadlock, or the cycle limit.

    After the done node fires, the remaining queued tokens (filter drops
    trailing the last useful value) are drained so every queue ends empty.
    """
    config = config or SimConfig()
    state = SimState(graph, memory, config)
    outcome = _drive(state, config.max_cycles)
    return outcome


def _drive(state: SimState, max_cycles: int) -> SimOutcome:
    step = state.step
    while state.cycle < max_cycles:
        fired = step()
        if state.done:
            while state.cycle < max_cycles and (step() or state.in_flight()):
                pass
            break
        if fired == 0 and not state.in_flight():
            stats = state.stats()
            starved, full = state.blocked()
            state.commit()
            return Deadlock(stats, starved, full)
    stats = state.stats()
    state.commit()
    if state.done:
        return Done(stats)
    return CycleLimit(stats)


@dataclass
class TrafficReport:
    loads: int
    stores: int
    loads_expected: int
    stores_expected: int
    reuse_factor: float

    @property
    def matches(self) -> bool:
        return self.loads == self.loads_expected and self.stores == self.stores_expected


def traffic_report(stats: SimStats, spec) -> TrafficReport:
    """Compare measured memory traffic with the analytic expectation.

    ``reuse_factor`` is the number of input values consumed by Mul/Mac nodes
    per value loaded from memory.
    """
    if not stats.completed:
        raise NotCompleted("traffic is only defined for a completed run")
    expected = traffic_oracle(spec)
    consumed = stats.kind_fires.get("Mul", 0) + stats.kind_fires.get("Mac", 0)
    return TrafficReport(
        loads=stats.loads,
        stores=stats.stores,
        loads_expected=expected["loads_expected"],
        stores_expected=expected["stores_expected"],
        reuse_factor=consumed / stats.loads if stats.loads else 0.0,
    )
