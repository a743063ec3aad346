"""Dataflow graph IR for triggered-instruction CGRA programs.

A :class:`Graph` holds instruction nodes (one PE instruction each) and
bounded FIFO edges between (node, port) pairs.  An output port may fan out
to several edges; every edge receives its own copy of each token.  An input
port is fed by exactly one edge.

Node order matters: the simulator sweeps nodes in insertion order, so the
graph keeps nodes in the order they were added and that order survives
serialization.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Any, NamedTuple, Optional

DEFAULT_CAPACITY = 2


class GraphError(ValueError):
    pass


class DuplicateId(GraphError):
    pass


class ArityMismatch(GraphError):
    pass


class UnknownNode(GraphError):
    pass


class PortOccupied(GraphError):
    pass


class ZeroCapacity(GraphError):
    pass


class InvalidGraph(GraphError):
    def __init__(self, violations: list["Violation"]):
        self.violations = violations
        super().__init__("; ".join(str(v) for v in violations))


class ParseError(GraphError):
    def __init__(self, message: str, location: str = ""):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class OpKind(enum.Enum):
    MUL = "Mul"
    MAC = "Mac"
    ADD = "Add"
    MUX = "Mux"
    DEMUX = "Demux"
    CMP = "Cmp"
    OR = "Or"
    COPY = "Copy"
    SHIFT = "Shift"
    LOAD = "Load"
    STORE = "Store"
    ADDR_GEN = "AddrGen"
    FILTER = "Filter"
    BIT_GEN = "BitGen"
    COUNTER = "Counter"
    CONST_STREAM = "ConstStream"
    SINK = "Sink"

    @property
    def n_inputs(self) -> int:
        return _ARITY[self][0]

    @property
    def n_outputs(self) -> int:
        return _ARITY[self][1]

    def accepts_operands(self, count: int) -> bool:
        return count in _ARITY[self][2]


# kind -> (dynamic inputs, outputs, allowed static operand counts)
#   Mul/Mac:     coeff
#   Mac inputs:  0 = data, 1 = accumulator
#   Mux inputs:  0 = select, 1 = a, 2 = b
#   Demux:       in 0 = select, 1 = value; out port chosen by select
#   Store:       in 0 = address, 1 = value; out 0 = ack
#   AddrGen:     base, col_stride, cols, row_stride, rows
#   Filter:      lo, hi [, period, row_lo, row_hi]
#   BitGen:      m, n, p  -> emits 0^m 1^n 0^p
#   ConstStream: value, count
_ARITY: dict[OpKind, tuple[int, int, frozenset[int]]] = {
    OpKind.MUL: (1, 1, frozenset({1})),
    OpKind.MAC: (2, 1, frozenset({1})),
    OpKind.ADD: (2, 1, frozenset({0})),
    OpKind.MUX: (3, 1, frozenset({0})),
    OpKind.DEMUX: (2, 2, frozenset({0})),
    OpKind.CMP: (2, 1, frozenset({0})),
    OpKind.OR: (2, 1, frozenset({0})),
    OpKind.COPY: (1, 1, frozenset({0})),
    OpKind.SHIFT: (1, 1, frozenset({1})),
    OpKind.LOAD: (1, 1, frozenset({0})),
    OpKind.STORE: (2, 1, frozenset({0})),
    OpKind.ADDR_GEN: (0, 1, frozenset({5})),
    OpKind.FILTER: (1, 1, frozenset({2, 5})),
    OpKind.BIT_GEN: (0, 1, frozenset({3})),
    OpKind.COUNTER: (1, 1, frozenset({1})),
    OpKind.CONST_STREAM: (0, 1, frozenset({2})),
    OpKind.SINK: (1, 0, frozenset({0})),
}

DONE_KINDS = frozenset({OpKind.SINK, OpKind.OR, OpKind.ADD})


class Token(NamedTuple):
    value: float
    seq: int


@dataclass(frozen=True)
class NodeSpec:
    id: str
    kind: OpKind
    static_operands: tuple[float, ...] = ()
    latency: int = 1
    worker_tag: Optional[str] = None
    grid_pos: Optional[tuple[int, int]] = None

    def __post_init__(self):
        object.__setattr__(self, "static_operands", tuple(self.static_operands))
        if self.grid_pos is not None:
            object.__setattr__(self, "grid_pos", tuple(self.grid_pos))


@dataclass(frozen=True)
class EdgeSpec:
    id: int
    src: tuple[str, int]
    dst: tuple[str, int]
    capacity: int = DEFAULT_CAPACITY


@dataclass(frozen=True)
class Violation:
    code: str
    detail: str

    def __str__(self):
        return f"{self.code}: {self.detail}"


@dataclass
class Graph:
    nodes: dict[str, NodeSpec] = field(default_factory=dict)
    edges: list[EdgeSpec] = field(default_factory=list)
    done_node: Optional[str] = None

    def __post_init__(self):
        self._in_port: dict[tuple[str, int], int] = {}
        for e in self.edges:
            self._in_port[e.dst] = e.id

    def add_node(self, spec: NodeSpec) -> str:
        if spec.id in self.nodes:
            raise DuplicateId(spec.id)
        if not spec.kind.accepts_operands(len(spec.static_operands)):
            raise ArityMismatch(
                f"{spec.kind.value} node {spec.id!r} given "
                f"{len(spec.static_operands)} static operands"
            )
        if spec.latency < 1:
            raise ArityMismatch(f"latency of {spec.id!r} must be >= 1")
        self.nodes[spec.id] = spec
        return spec.id

    def connect(
        self,
        src: tuple[str, int],
        dst: tuple[str, int],
        capacity: int = DEFAULT_CAPACITY,
    ) -> int:
        src = (src[0], int(src[1]))
        dst = (dst[0], int(dst[1]))
        for node_id, port, side in ((src[0], src[1], "out"), (dst[0], dst[1], "in")):
            if node_id not in self.nodes:
                raise UnknownNode(node_id)
            kind = self.nodes[node_id].kind
            limit = kind.n_outputs if side == "out" else kind.n_inputs
            if not 0 <= port < limit:
                raise UnknownNode(f"{node_id!r} has no {side}put port {port}")
        if capacity < 1:
            raise ZeroCapacity(f"capacity {capacity} on {src}->{dst}")
        if dst in self._in_port:
            raise PortOccupied(f"{dst[0]!r} input {dst[1]}")
        edge = EdgeSpec(len(self.edges), src, dst, int(capacity))
        self.edges.append(edge)
        self._in_port[dst] = edge.id
        return edge.id

    def in_edge(self, node_id: str, port: int) -> Optional[int]:
        return self._in_port.get((node_id, port))

    def out_edges(self, node_id: str, port: int = 0) -> list[int]:
        return [e.id for e in self.edges if e.src == (node_id, port)]

    def set_capacity(self, edge_id: int, capacity: int) -> None:
        if capacity < 1:
            raise ZeroCapacity(f"capacity {capacity} on edge {edge_id}")
        e = self.edges[edge_id]
        self.edges[edge_id] = EdgeSpec(e.id, e.src, e.dst, int(capacity))

    def nodes_of(self, *kinds: OpKind) -> list[NodeSpec]:
        return [n for n in self.nodes.values() if n.kind in kinds]

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            list(self.nodes.values()) == list(other.nodes.values())
            and self.edges == other.edges
            and self.done_node == other.done_node
        )


def validate(graph: Graph) -> list[Violation]:
    """Return every structural problem found in ``graph``; empty means valid."""
    out: list[Violation] = []
    for n in graph.nodes.values():
        if not n.kind.accepts_operands(len(n.static_operands)):
            out.append(Violation(
                "ArityMismatch",
                f"{n.id} ({n.kind.value}) has {len(n.static_operands)} operands"))
        if n.latency < 1:
            out.append(Violation("BadLatency", f"{n.id} latency {n.latency}"))
    seen_dst: set[tuple[str, int]] = set()
    for e in graph.edges:
        for node_id, port, side in ((*e.src, "out"), (*e.dst, "in")):
            n = graph.nodes.get(node_id)
            if n is None:
                out.append(Violation("UnknownNode", f"edge {e.id} -> {node_id}"))
                continue
            limit = n.kind.n_outputs if side == "out" else n.kind.n_inputs
            if not 0 <= port < limit:
                out.append(Violation("UnknownPort", f"edge {e.id}: {node_id}.{side}{port}"))
        if e.capacity < 1:
            out.append(Violation("ZeroCapacity", f"edge {e.id}"))
        if e.dst in seen_dst:
            out.append(Violation("PortOccupied", f"{e.dst[0]} input {e.dst[1]}"))
        seen_dst.add(e.dst)
    for n in graph.nodes.values():
        for port in range(n.kind.n_inputs):
            if (n.id, port) not in seen_dst:
                out.append(Violation("DanglingInput", f"{n.id} input {port}"))
    if graph.done_node is None or graph.done_node not in graph.nodes:
        out.append(Violation("MissingDoneNode", repr(graph.done_node)))
    elif graph.nodes[graph.done_node].kind not in DONE_KINDS:
        out.append(Violation(
            "BadDoneNode",
            f"{graph.done_node} is {graph.nodes[graph.done_node].kind.value}"))
    return out


def check(graph: Graph) -> None:
    violations = validate(graph)
    if violations:
        raise InvalidGraph(violations)


# Graphviz X11 color names
_FILL = {
    OpKind.MUX: "lightyellow",
    OpKind.MUL: "orange",
    OpKind.MAC: "red",
    OpKind.DEMUX: "lightblue",
    OpKind.ADD: "green",
    OpKind.ADDR_GEN: "cyan",
}


def fill_color(kind: OpKind) -> str:
    return _FILL.get(kind, "gray")


NL = "\\n"  # DOT line break inside a label


def _q(s: str) -> str:
    return '"' + s.replace('"', '\\"') + '"'


def _fmt_num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def to_dot(graph: Graph, name: str = "dfg") -> str:
    """Render ``graph`` as a Graphviz digraph.

    Nodes whose worker tag has the form ``role:k`` are grouped into one
    cluster per worker index ``k``.
    """
    check(graph)
    lines = [f"digraph {_q(name)} {{", "  node [shape=oval, style=filled];"]

    clusters: dict[str, list[NodeSpec]] = {}
    loose: list[NodeSpec] = []
    for n in graph.nodes.values():
        if n.worker_tag and ":" in n.worker_tag:
            clusters.setdefault(n.worker_tag.rsplit(":", 1)[1], []).append(n)
        else:
            loose.append(n)

    def node_line(n: NodeSpec, indent: str) -> str:
        label = n.kind.value
        if n.static_operands:
            label += NL + ",".join(_fmt_num(v) for v in n.static_operands)
        attrs = [f"label={_q(n.id + NL + label)}",
                 f"fillcolor={fill_color(n.kind)}"]
        if n.grid_pos is not None:
            attrs.append(f'pos="{n.grid_pos[1]},{-n.grid_pos[0]}!"')
        return f"{indent}{_q(n.id)} [{', '.join(attrs)}];"

    for key in sorted(clusters, key=lambda k: (len(k), k)):
        lines.append(f"  subgraph {_q('cluster_worker_' + key)} {{")
        lines.append(f"    label={_q('worker ' + key)};")
        lines.extend(node_line(n, "    ") for n in clusters[key])
        lines.append("  }")
    lines.extend(node_line(n, "  ") for n in loose)

    for e in graph.edges:
        attrs = [f'taillabel="{e.src[1]}"', f'headlabel="{e.dst[1]}"']
        if e.capacity > DEFAULT_CAPACITY:
            attrs.append(f'label="{e.capacity}"')
        lines.append(f"  {_q(e.src[0])} -> {_q(e.dst[0])} [{', '.join(attrs)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _num(x: float) -> Any:
    x = float(x)
    return int(x) if x.is_integer() and abs(x) < 2**53 else x


def to_json_obj(graph: Graph) -> dict:
    nodes = []
    for n in graph.nodes.values():
        d: dict[str, Any] = {
            "id": n.id,
            "kind": n.kind.value,
            "ops": [_num(v) for v in n.static_operands],
            "latency": n.latency,
        }
        if n.worker_tag is not None:
            d["worker"] = n.worker_tag
        if n.grid_pos is not None:
            d["pos"] = list(n.grid_pos)
        nodes.append(d)
    edges = [{"src": list(e.src), "dst": list(e.dst), "cap": e.capacity}
             for e in graph.edges]
    return {"nodes": nodes, "edges": edges, "done": graph.done_node}


def serialize(graph: Graph) -> str:
    return json.dumps(to_json_obj(graph), indent=1)


def deserialize(text: str) -> Graph:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"line {exc.lineno} col {exc.colno}") from exc
    return from_json_obj(obj)


def from_json_obj(obj: Any) -> Graph:
    if not isinstance(obj, dict):
        raise ParseError("top level must be an object", "$")
    for key in ("nodes", "edges"):
        if not isinstance(obj.get(key), list):
            raise ParseError(f"missing or non-list {key!r}", f"$.{key}")
    g = Graph()
    kinds = {k.value: k for k in OpKind}
    for i, d in enumerate(obj["nodes"]):
        loc = f"$.nodes[{i}]"
        try:
            kind = kinds[d["kind"]]
            pos = d.get("pos")
            g.add_node(NodeSpec(
                id=str(d["id"]),
                kind=kind,
                static_operands=tuple(float(v) for v in d.get("ops", [])),
                latency=int(d.get("latency", 1)),
                worker_tag=d.get("worker"),
                grid_pos=None if pos is None else (int(pos[0]), int(pos[1])),
            ))
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise ParseError(f"bad node: {exc}", loc) from exc
    for i, d in enumerate(obj["edges"]):
        loc = f"$.edges[{i}]"
        try:
            g.connect((str(d["src"][0]), int(d["src"][1])),
                      (str(d["dst"][0]), int(d["dst"][1])),
                      int(d.get("cap", DEFAULT_CAPACITY)))
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise ParseError(f"bad edge: {exc}", loc) from exc
    done = obj.get("done")
    if done is not None and not isinstance(done, str):
        raise ParseError("done must be a string or null", "$.done")
    g.done_node = done
    return g
