"""Map star stencils onto a triggered-instruction CGRA as dataflow graphs,
simulate them, and check results, traffic and roofline bounds."""

from .dfg import Graph, NodeSpec, EdgeSpec, OpKind, Token, validate, to_dot, serialize, deserialize
from .generator import (StencilSpec1D, StencilSpec2D, BlockPlan, BitPattern, RowIdRange,
                        filter_pattern, sync_threshold, mandatory_buffer_capacity,
                        block_plan, gen_stencil_1d, gen_stencil_2d, strip_graphs)
from .simulator import (MemoryModel, SimConfig, SimStats, SimState, Done, Deadlock,
                        CycleLimit, run, traffic_report)
from .reference import stencil1d_ref, stencil2d_ref, traffic_oracle
from .roofline import MachineModel, RooflineReport, ai_1d, ai_2d, worker_bounds

__version__ = "0.1.0"
