"""
Analytical hardware model of an unrolled, fully-pipelined shortcut SC
decoder: complexity recursions, pipeline scheduling with register
reduction/balancing, buffer accounting, and throughput/latency/energy
arithmetic.

The decoder's dataflow is linearized into a chain of primitive steps
(f2 bank, g2 bank, SPC/REP leaf logic) in sequential-decode order;
partial-sum XOR delay folds onto the step whose result bubbles up.  The
unbalanced baseline registers every step; register reduction packs
consecutive steps into stages greedily under a clock-period budget.
Buffer sizes fall out of datum lifetimes: a node's input LLRs live from
their producer's stage to the node's g2 stage, and its partial sums
live from the left sub-decode's last stage to the node's combine.
"""

import json
from dataclasses import dataclass, field, replace

import numpy as np

from . import construction as cons


def time_complexity(N):
    """Sequential f2/g2 steps of fully-parallel plain SC: 2N - 2."""
    if N < 2 or N & (N - 1):
        raise ValueError(f"N must be a power of 2 >= 2, got {N}")
    return 2 * N - 2


def memory_complexity(N, Q):
    """Register bits of the unrolled, fully-pipelined plain SC decoder.

    Evaluates the recursion M(N) = 2 M(N/2) + (Q + 0.5)(N^2 - N) + N Q
    with M(2) = 2 Q + 1: per block, the incoming LLRs are held until the
    g2 bank fires, partial sums are held through the right sub-decode,
    and the f2/g2 banks register their outputs.
    """
    if N < 2 or N & (N - 1):
        raise ValueError(f"N must be a power of 2 >= 2, got {N}")
    if Q < 1:
        raise ValueError(f"Q must be >= 1, got {Q}")
    if N == 2:
        return 2 * Q + 1
    return 2 * memory_complexity(N // 2, Q) + (2 * Q + 1) * (N * N - N) // 2 + N * Q


class InfeasiblePeriodError(ValueError):
    """A primitive's combinational delay exceeds the target period."""


@dataclass(frozen=True)
class DelayModel:
    """Combinational delays of the decoder's primitives, in seconds.

    ``unit`` scales the relative delays; it is the one free parameter
    fitted so that the flagship code meets its pipeline-depth target
    (see ``calibrate``).  Leaf logic grows with segment size as
    ``leaf_base + leaf_per_level * log2(M)``.
    """

    f2: float = 1.0
    g2: float = 1.55
    psul_xor: float = 0.18
    leaf_base: float = 0.6
    leaf_per_level: float = 0.45
    unit: float = 1.0e-10

    def __post_init__(self):
        for name in ("f2", "g2", "psul_xor", "leaf_base", "leaf_per_level", "unit"):
            if getattr(self, name) <= 0:
                raise ValueError(f"delay {name} must be positive")

    def scaled(self, unit):
        return replace(self, unit=unit)

    def f2_delay(self):
        return self.f2 * self.unit

    def g2_delay(self):
        return self.g2 * self.unit

    def xor_delay(self):
        return self.psul_xor * self.unit

    def leaf_delay(self, length):
        levels = max(length.bit_length() - 1, 1)
        return (self.leaf_base + self.leaf_per_level * levels) * self.unit


@dataclass
class _Op:
    role: str               # "f2", "g2", or a leaf kind
    node: tuple             # (offset, length) of the owning tree node
    delay: float
    out_bits: int
    src: int                # op index producing this op's input, -1 = channel


@dataclass
class _NodeRec:
    node: tuple
    length: int
    width_in: int
    input_src: int
    g_op: int
    z_src: int = None       # None when the left child is all-frozen
    end_op: int = None


def _build_chain(tree, profile, delays):
    """Linearize the tree into primitive ops plus per-branch records."""
    ops = []
    recs = []
    leaf_streams = []       # (src_op, op_idx, in_bits) for SPC/REP inputs

    def emit(op):
        ops.append(op)
        return len(ops) - 1

    def build(node, width, input_src, in_bits):
        """Returns the index of the subtree's last op (or input_src)."""
        if node.kind in (cons.R0, cons.R1):
            return input_src
        if node.kind in (cons.SPC, cons.REP):
            idx = emit(_Op(node.kind, (node.offset, node.length),
                           delays.leaf_delay(node.length), node.length, input_src))
            leaf_streams.append((input_src, idx, in_bits))
            return idx

        half = node.length // 2
        w_f = profile.edge_width(node.offset, node.length, "F")
        w_g = profile.edge_width(node.offset, node.length, "G")
        rec = _NodeRec((node.offset, node.length), node.length, width,
                       input_src, g_op=-1)
        if node.left.kind != cons.R0:
            f_idx = emit(_Op("f2", rec.node, delays.f2_delay(), half * w_f,
                             input_src))
            rec.z_src = build(node.left, w_f, f_idx, half * w_f)
        g_idx = emit(_Op("g2", rec.node, delays.g2_delay(), half * w_g,
                         input_src))
        rec.g_op = g_idx
        end = build(node.right, w_g, g_idx, half * w_g)
        if node.left.kind != cons.R0:
            # the combine XOR rides on whichever step finishes the node
            ops[end].delay += delays.xor_delay()
        rec.end_op = end
        recs.append(rec)
        return end

    root_width = profile.root_width
    build(tree, root_width, -1, tree.length * root_width)
    return ops, recs, leaf_streams


@dataclass
class Stage:
    ops: list
    delay: float
    register_bits: int = 0


@dataclass
class PipelineSchedule:
    """Stage assignment of the decoder chain plus derived buffer sizes."""

    block_length: int
    stages: list
    op_stage: np.ndarray
    target_period: float
    llr_depth: dict = field(default_factory=dict)   # (offset, length) -> stages
    psul_depth: dict = field(default_factory=dict)
    llr_bits: dict = field(default_factory=dict)    # (offset, length) -> bits
    psul_bits: dict = field(default_factory=dict)

    @property
    def depth(self):
        return len(self.stages)

    @property
    def llr_buffer_bits(self):
        return sum(self.llr_bits.values())

    @property
    def psul_buffer_bits(self):
        return sum(self.psul_bits.values())

    @property
    def register_bits(self):
        return sum(s.register_bits for s in self.stages)

    def depth_by_length(self, table):
        out = {}
        for (off, length), depth in table.items():
            out[length] = out.get(length, 0) + depth
        return out


def _finish_schedule(tree, ops, recs, leaf_streams, op_stage, period):
    sched = PipelineSchedule(tree.length, [], op_stage, period)
    depth = int(op_stage.max()) if len(ops) else 0
    stages = [Stage([], 0.0) for _ in range(depth)]
    for i, op in enumerate(ops):
        st = stages[op_stage[i] - 1]
        st.ops.append(i)
        st.delay += op.delay

    def stage_of(src):
        return 0 if src < 0 else int(op_stage[src])

    datums = []
    for rec in recs:
        s_in, s_g = stage_of(rec.input_src), stage_of(rec.g_op)
        sched.llr_depth[rec.node] = s_g - s_in
        bits = rec.length * rec.width_in * (s_g - s_in)
        sched.llr_bits[rec.node] = bits
        datums.append((s_in, s_g, rec.length * rec.width_in))
        if rec.z_src is not None:
            s_z, s_c = stage_of(rec.z_src), stage_of(rec.end_op)
            sched.psul_depth[rec.node] = s_c - s_z
            sched.psul_bits[rec.node] = (rec.length // 2) * (s_c - s_z)
            datums.append((s_z, s_c, rec.length // 2))
    for src, idx, in_bits in leaf_streams:
        s_p, s_l = stage_of(src), stage_of(idx)
        node = ops[idx].node
        sched.llr_depth[node] = s_l - s_p
        sched.llr_bits[node] = in_bits * (s_l - s_p)
        datums.append((s_p, s_l, in_bits))

    for produce, consume, bits in datums:
        for k in range(produce, consume):
            if 1 <= k <= depth:
                stages[k - 1].register_bits += bits
    sched.stages = stages
    return sched


def unbalanced_schedule(tree, profile, delays=None):
    """Baseline pipeline: one register stage per primitive step."""
    delays = delays or DelayModel()
    ops, recs, streams = _build_chain(tree, profile, delays)
    op_stage = np.arange(1, len(ops) + 1)
    period = max((op.delay for op in ops), default=0.0)
    return _finish_schedule(tree, ops, recs, streams, op_stage, period)


def pack_delays(delays, target_period):
    """Greedy forward packing of a delay chain into pipeline stages.

    Returns 1-based stage indices; consecutive entries share a stage
    while their accumulated delay fits the period.  Raises
    ``InfeasiblePeriodError`` if a single entry cannot fit.
    """
    stages = np.zeros(len(delays), dtype=np.int64)
    stage, acc = 1, 0.0
    for i, d in enumerate(delays):
        if d > target_period:
            raise InfeasiblePeriodError(
                f"step delay {d:.3e}s exceeds period {target_period:.3e}s")
        if acc + d > target_period:
            stage += 1
            acc = 0.0
        acc += d
        stages[i] = stage
    return stages


def schedule_pipeline(tree, profile, delays, target_period):
    """Register-reduced pipeline: pack consecutive steps greedily.

    Steps are taken in dataflow order and merged into the current stage
    while the accumulated combinational delay fits the target period.
    """
    ops, recs, streams = _build_chain(tree, profile, delays)
    op_stage = pack_delays([op.delay for op in ops], target_period)
    return _finish_schedule(tree, ops, recs, streams, op_stage, target_period)


def calibrate(tree, profile, period, target_depth, base=None):
    """Scale a delay model so the scheduled depth hits ``target_depth``.

    One free parameter (the time unit) is fitted by bisection; the
    returned model is the midpoint of the unit interval that yields the
    requested depth.  Raises if no unit does (the greedy depth would
    jump over the target).
    """
    base = base or DelayModel()

    def depth_at(unit):
        return schedule_pipeline(tree, profile, base.scaled(unit), period).depth

    lo = 1e-15
    hi = period / max(base.f2, base.g2 + base.psul_xor,
                      base.leaf_base + base.leaf_per_level *
                      max(l.length.bit_length() - 1 for l in tree.leaves()))
    if depth_at(lo) > target_depth or depth_at(hi) < target_depth:
        raise ValueError(f"depth {target_depth} outside achievable range "
                         f"[{depth_at(lo)}, {depth_at(hi)}]")

    def boundary(wanted):
        # smallest unit with depth >= wanted
        a, b = lo, hi
        for _ in range(80):
            mid = 0.5 * (a + b)
            if depth_at(mid) >= wanted:
                b = mid
            else:
                a = mid
        return b

    start = boundary(target_depth)
    end = boundary(target_depth + 1)
    unit = 0.5 * (start + end)
    got = depth_at(unit)
    if got != target_depth:
        below = depth_at(start * (1.0 - 1e-9))
        raise ValueError(
            f"no delay unit yields depth {target_depth}: greedy packing "
            f"jumps from {below} to {got} on this tree")
    return base.scaled(unit)


@dataclass
class CostReport:
    """Throughput/latency/energy arithmetic for one frame per cycle."""

    block_length: int
    pipeline_depth: int
    llr_buffer_bits: int
    psul_buffer_bits: int
    register_bits: int
    f2_count: int
    g2_count: int
    xor_count: int
    f_clk_hz: float
    coded_throughput_bps: float
    latency_cycles: int
    latency_s: float
    power_w: float = None
    energy_per_bit_j: float = None

    def to_json(self, **extra):
        payload = {
            "block_length": self.block_length,
            "pipeline_depth": self.pipeline_depth,
            "llr_buffer_bits": self.llr_buffer_bits,
            "psul_buffer_bits": self.psul_buffer_bits,
            "register_bits": self.register_bits,
            "f2_count": self.f2_count,
            "g2_count": self.g2_count,
            "xor_count": self.xor_count,
            "f_clk_hz": self.f_clk_hz,
            "coded_throughput_gbps": self.coded_throughput_bps / 1e9,
            "latency_cycles": self.latency_cycles,
            "latency_us": self.latency_s * 1e6,
        }
        if self.power_w is not None:
            payload["power_w"] = self.power_w
            payload["energy_per_bit_pj"] = self.energy_per_bit_j * 1e12
        payload.update(extra)
        return json.dumps(payload, indent=2, sort_keys=True)


def cost_report(schedule, census, f_clk, power=None):
    """Combine a schedule and a census into the headline numbers.

    The unrolled decoder accepts one frame per cycle, so coded
    throughput is N * f_clk; latency is the pipeline depth; energy per
    bit is power over throughput when power is given.
    """
    throughput = schedule.block_length * f_clk
    return CostReport(
        block_length=schedule.block_length,
        pipeline_depth=schedule.depth,
        llr_buffer_bits=schedule.llr_buffer_bits,
        psul_buffer_bits=schedule.psul_buffer_bits,
        register_bits=schedule.register_bits,
        f2_count=census.f2_total,
        g2_count=census.g2_total,
        xor_count=census.xor_total,
        f_clk_hz=f_clk,
        coded_throughput_bps=throughput,
        latency_cycles=schedule.depth,
        latency_s=schedule.depth / f_clk,
        power_w=power,
        energy_per_bit_j=None if power is None else power / throughput,
    )


def render_buffer_table(unbalanced, reduced):
    """Side-by-side per-node-length buffer depths, baseline vs reduced."""
    lengths = sorted({length for (_, length) in
                      list(unbalanced.llr_depth) + list(unbalanced.psul_depth)})
    lines = ["length   llr-depth  psul-depth | rrb-llr  rrb-psul"]
    ud_l = unbalanced.depth_by_length(unbalanced.llr_depth)
    ud_p = unbalanced.depth_by_length(unbalanced.psul_depth)
    rd_l = reduced.depth_by_length(reduced.llr_depth)
    rd_p = reduced.depth_by_length(reduced.psul_depth)
    for m in lengths:
        lines.append(f"{m:6d} {ud_l.get(m, 0):11d} {ud_p.get(m, 0):11d} |"
                     f" {rd_l.get(m, 0):7d} {rd_p.get(m, 0):9d}")
    lines.append(f"total bits: llr {unbalanced.llr_buffer_bits} -> "
                 f"{reduced.llr_buffer_bits}, psul {unbalanced.psul_buffer_bits}"
                 f" -> {reduced.psul_buffer_bits}")
    return "\n".join(lines)
