"""
Sign-magnitude fixed-point LLR arithmetic for min-sum decoding.

LLR vectors are carried as float64 arrays whose IEEE sign bit is the
sign-magnitude sign and whose absolute value is the magnitude.  In
fixed-point mode the magnitudes are integers bounded by the width cap;
in floating mode they are unrestricted reals.  Carrying the sign in the
float sign bit keeps negative zero representable, which matters: the
hard-decision rule and the f2 sign product inspect the sign bit even
when the magnitude is zero, exactly like sign-magnitude hardware.

Kernel conventions (these pin down every tie case so that one-shot
shortcut decoders agree bit for bit with sequential decoding):

* hard decision: sign bit set -> 1, clear -> 0, magnitude ignored;
* f2: sign = XOR of sign bits, magnitude = min of magnitudes;
* g2: exact signed sum, saturated to the width cap; an exact-zero sum
  takes the sign of the second operand;
* requantize: magnitude right-shift, sign preserved.
"""

import math
from dataclasses import dataclass

import numpy as np

MAX_WIDTH = 8
DEFAULT_WIDTH = 5
DEFAULT_STEP = 0.5


def mag_cap(width):
    """Largest representable magnitude at ``width`` bits (sign included)."""
    if not 1 <= width <= MAX_WIDTH:
        raise ValueError(f"width must be in 1..{MAX_WIDTH}, got {width}")
    return (1 << (width - 1)) - 1


@dataclass(frozen=True)
class QLlr:
    """A single sign-magnitude LLR value.

    Attributes
    ----------
    sign : int
        +1 or -1.  A zero magnitude still carries a definite sign.
    mag : int
        Unsigned magnitude, at most ``mag_cap(width)``.
    width : int
        Bit width including the sign bit, 1..8.  Width 1 encodes the
        sign only (magnitude fixed at 0).
    """

    sign: int
    mag: int
    width: int

    def __post_init__(self):
        if self.sign not in (-1, 1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")
        cap = mag_cap(self.width)
        if not 0 <= self.mag <= cap:
            raise ValueError(f"mag {self.mag} out of range 0..{cap} at width {self.width}")

    @property
    def value(self):
        return self.sign * self.mag

    def to_float(self):
        """Float carrier with the sign held in the IEEE sign bit."""
        return math.copysign(float(self.mag), self.sign)

    @classmethod
    def from_float(cls, x, width):
        sign = -1 if np.signbit(x) else 1
        return cls(sign, int(abs(x)), width)


def quantize(llr, width, step=DEFAULT_STEP):
    """Quantize a real LLR to sign-magnitude fixed point.

    Magnitude is ``round(|llr| / step)`` (half away from zero) saturated
    to the width cap.  The sign of an exactly-zero input is +.
    """
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    cap = mag_cap(width)
    mag = min(int(math.floor(abs(llr) / step + 0.5)), cap)
    sign = 1 if (llr == 0 or llr > 0) else -1
    return QLlr(sign, mag, width)


def f2(a, b):
    """Min-sum check-node kernel: sign product, magnitude minimum."""
    if a.width != b.width:
        raise ValueError(f"width mismatch: {a.width} vs {b.width}")
    return QLlr(a.sign * b.sign, min(a.mag, b.mag), a.width)


def g2(a, b, z):
    """Variable-node kernel with hard feedback: (1-2z)*a + b, saturated.

    The sum is formed exactly and then clipped to the common width's
    magnitude range.  An exact-zero sum takes b's sign.
    """
    if a.width != b.width:
        raise ValueError(f"width mismatch: {a.width} vs {b.width}")
    if z not in (0, 1):
        raise ValueError(f"feedback bit must be 0 or 1, got {z}")
    v = (1 - 2 * z) * a.value + b.value
    cap = mag_cap(a.width)
    if v == 0:
        return QLlr(b.sign, 0, a.width)
    sign = 1 if v > 0 else -1
    return QLlr(sign, min(abs(v), cap), a.width)


def requantize(x, to):
    """Reduce the width of ``x`` by right-shifting its magnitude.

    Each dropped bit doubles the quantization step.  Sign is preserved
    even when the shifted magnitude reaches zero.
    """
    if to > x.width:
        raise ValueError(f"cannot widen: {x.width} -> {to}")
    return QLlr(x.sign, x.mag >> (x.width - to), to)


def demap_llr(y, sigma2):
    """Channel LLR of a unit-energy BPSK symbol over AWGN: 2*y/sigma^2."""
    if sigma2 <= 0:
        raise ValueError(f"noise variance must be positive, got {sigma2}")
    return 2.0 * y / sigma2


# ---------------------------------------------------------------------------
# Vectorized kernels on float-carried sign-magnitude arrays.
# ---------------------------------------------------------------------------

def vquantize(llr, width, step=DEFAULT_STEP):
    """Vectorized ``quantize``; returns a float-carried array."""
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    cap = float(mag_cap(width))
    mag = np.minimum(np.floor(np.abs(llr) / step + 0.5), cap)
    out = np.copysign(mag, llr)
    # exact zero input maps to +0 regardless of the float's sign bit
    return np.where(llr == 0, 0.0, out)


def vf2(a, b):
    # IEEE multiplication XORs sign bits even for zeros, so a*b carries
    # exactly the sign-magnitude product sign
    return np.copysign(np.minimum(np.abs(a), np.abs(b)), a * b)


def vg2(a, b, z, cap=np.inf):
    v = np.where(z, b - a, a + b)
    if cap == np.inf:
        # exact-zero sums inherit b's sign bit
        return np.where(v != 0, v, np.copysign(0.0, b))
    mag = np.minimum(np.abs(v), cap)
    return np.copysign(mag, np.where(v != 0, v, b))


def vrequantize(x, shift):
    if shift == 0:
        return x
    return np.copysign(np.floor(np.abs(x) / (1 << shift)), x)


def vhard(x):
    """Hard decisions from sign bits (negative zero decides 1)."""
    return np.signbit(x).astype(np.uint8)


# ---------------------------------------------------------------------------
# Per-edge LLR statistics and adaptive width assignment.
# ---------------------------------------------------------------------------

ROOT_EDGE = ("root",)


class LlrStats:
    """Histograms of |LLR| values observed on each tree edge.

    Edges are keyed by ``(offset, length, side)`` of the branch node the
    value leaves, with side "F" or "G"; the channel input is keyed by
    ``ROOT_EDGE``.  Values are binned at ``bin_width`` resolution with a
    final overflow bin, so the histograms can be re-quantized exactly to
    any step that is a multiple of ``bin_width``.
    """

    def __init__(self, bin_width=DEFAULT_STEP / 2.0, n_bins=256):
        self.bin_width = bin_width
        self.n_bins = n_bins
        self.frames = 0
        self.counts = {}

    def record(self, edge, values):
        idx = np.minimum((np.abs(values) / self.bin_width).astype(np.int64),
                         self.n_bins - 1)
        hist = np.bincount(idx.ravel(), minlength=self.n_bins)
        if edge in self.counts:
            self.counts[edge] += hist
        else:
            self.counts[edge] = hist

    def merge(self, other):
        if other.bin_width != self.bin_width or other.n_bins != self.n_bins:
            raise ValueError("cannot merge stats with different binning")
        self.frames += other.frames
        for edge, hist in other.counts.items():
            if edge in self.counts:
                self.counts[edge] += hist
            else:
                self.counts[edge] = hist.copy()

    def samples(self, edge):
        return int(self.counts[edge].sum())

    def saturation_rate(self, edge, threshold):
        """Fraction of observed |values| at or above ``threshold``."""
        hist = self.counts[edge]
        total = hist.sum()
        if total == 0:
            return 0.0
        first = int(math.ceil(threshold / self.bin_width))
        return float(hist[first:].sum()) / float(total)

    def level_distribution(self, edge, width, step=DEFAULT_STEP):
        """Distribution over quantized magnitude levels at ``width``.

        Requires ``step / 2`` to be a multiple of the histogram bin
        width so level boundaries land on bin boundaries.
        """
        ratio = (step / 2.0) / self.bin_width
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("step/2 must be a multiple of the bin width")
        half = int(round(ratio))
        hist = self.counts[edge].astype(np.float64)
        cap = mag_cap(width)
        levels = np.zeros(cap + 1)
        # level k covers |v|/step in [k-0.5, k+0.5); level 0 is one-sided
        levels[0] = hist[:half].sum()
        for k in range(1, cap + 1):
            lo = (2 * k - 1) * half
            hi = (2 * k + 1) * half
            levels[k] = hist[lo:hi].sum()
        levels[cap] += hist[(2 * cap + 1) * half:].sum()
        total = levels.sum()
        return levels / total if total > 0 else levels

    def to_csv(self, path):
        with open(path, "w") as f:
            f.write(f"# bin_width={self.bin_width} n_bins={self.n_bins} frames={self.frames}\n")
            f.write("offset,length,side,bin,count\n")
            for edge in sorted(self.counts, key=str):
                off, length, side = ("", "", edge[0]) if edge == ROOT_EDGE else edge
                hist = self.counts[edge]
                for b in np.flatnonzero(hist):
                    f.write(f"{off},{length},{side},{b},{hist[b]}\n")


def _entropy_bits(p):
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum())


@dataclass(frozen=True)
class AqProfile:
    """Per-edge bit-width assignment over a shortcut tree.

    ``widths`` maps ``(offset, length, side)`` of each branch node to
    the width of the LLRs handed to the corresponding child; widths
    never increase from the root toward the leaves.
    """

    root_width: int
    widths: dict

    def edge_width(self, offset, length, side):
        return self.widths[(offset, length, side)]

    def is_uniform(self):
        return all(w == self.root_width for w in self.widths.values())

    @classmethod
    def uniform(cls, tree, width):
        widths = {}
        for node in tree.branches():
            widths[(node.offset, node.length, "F")] = width
            widths[(node.offset, node.length, "G")] = width
        return cls(width, widths)

    def validate(self, tree):
        """Check full edge coverage and root-to-leaf monotonicity."""
        def walk(node, incoming):
            if node.kind != "branch":
                return
            for side in ("F", "G"):
                key = (node.offset, node.length, side)
                if key not in self.widths:
                    raise ValueError(f"profile missing edge {key}")
                if self.widths[key] > incoming:
                    raise ValueError(f"profile width increases on edge {key}")
            walk(node.left, self.widths[(node.offset, node.length, "F")])
            walk(node.right, self.widths[(node.offset, node.length, "G")])

        walk(tree, self.root_width)

    def average_width(self, tree, min_length=1):
        """Mean stored-LLR width weighted by per-edge LLR counts.

        Counts the root input plus every edge whose child segment has at
        least ``min_length`` bits.
        """
        bits = self.root_width * tree.length
        llrs = tree.length
        for node in tree.branches():
            child = node.length // 2
            if child < min_length:
                continue
            for side in ("F", "G"):
                bits += self.widths[(node.offset, node.length, side)] * child
                llrs += child
        return bits / llrs

    def save(self, path):
        with open(path, "w") as f:
            f.write(f"root {self.root_width}\n")
            for (off, length, side) in sorted(self.widths):
                f.write(f"{off} {length} {side} {self.widths[(off, length, side)]}\n")

    @classmethod
    def load(cls, path):
        widths = {}
        root_width = None
        with open(path) as f:
            for line in f:
                parts = line.split()
                if not parts:
                    continue
                if parts[0] == "root":
                    root_width = int(parts[1])
                    continue
                off, length, side, w = int(parts[0]), int(parts[1]), parts[2], int(parts[3])
                if side not in ("F", "G"):
                    raise ValueError(f"bad edge side {side!r} in {path}")
                widths[(off, length, side)] = w
        if root_width is None:
            raise ValueError(f"profile {path} has no root width line")
        return cls(root_width, widths)


def optimize_aq(stats, tree, base_width=DEFAULT_WIDTH, loss_budget=0.05,
                step=DEFAULT_STEP):
    """Assign per-edge widths by greedy entropy-guided reduction.

    Starting from ``base_width``, each edge is narrowed while the
    entropy lost by the coarser magnitude grid, relative to the base
    quantization of that edge's observed distribution, stays within
    ``loss_budget`` bits, and while the width stays monotone under the
    parent edge's width.  Magnitudes still steer Wagner flips and
    repetition sums deeper in the tree, so an edge only drops to 1 bit
    when that costs nothing: its decisions are provably sign-only (the
    child is a rate-1 leaf), or its magnitude histogram carries no
    entropy at all (fully saturated).  Deterministic given the stats.

    Parameters
    ----------
    stats : LlrStats
        Must cover every branch edge of ``tree``.
    loss_budget : float
        Per-edge entropy-loss allowance in bits; 0 forbids reduction
        on any edge whose histogram distinguishes adjacent levels.
    """
    widths = {}

    def reduce_edge(edge, cap_width, child):
        if edge not in stats.counts:
            raise ValueError(f"no statistics recorded for edge {edge}")
        if child.kind == "r1":
            return 1
        base = stats.level_distribution(edge, base_width, step)
        h_base = _entropy_bits(base)
        w = cap_width
        while w > 1:
            cand = _shift_distribution(base, base_width, w - 1)
            loss = h_base - _entropy_bits(cand)
            if loss > loss_budget or (w - 1 == 1 and loss > 0):
                break
            w -= 1
        return w

    def walk(node, incoming):
        if node.kind != "branch":
            return
        for side, child in (("F", node.left), ("G", node.right)):
            key = (node.offset, node.length, side)
            widths[key] = min(reduce_edge(key, incoming, child), incoming)
        walk(node.left, widths[(node.offset, node.length, "F")])
        walk(node.right, widths[(node.offset, node.length, "G")])

    walk(tree, base_width)
    return AqProfile(base_width, widths)


def _shift_distribution(levels, from_width, to_width):
    """Level distribution after a magnitude right-shift to ``to_width``."""
    shift = from_width - to_width
    cap = mag_cap(to_width)
    out = np.zeros(cap + 1)
    for k in range(levels.shape[0]):
        out[min(k >> shift, cap)] += levels[k]
    return out


def collect_stats(code, tree, ebno_db, frames, seed=0, batch_size=256,
                  systematic=True):
    """Measure per-edge LLR statistics with an instrumented float decode.

    Runs the full source/encode/AWGN/demap chain at ``ebno_db`` (Eb/No)
    for ``frames`` frames and records post-F/post-G magnitudes at every
    tree edge plus the channel LLRs at the root.
    """
    from . import codec, simulation

    stats = LlrStats()
    sigma2 = simulation.ebno_to_sigma2(ebno_db, code.K / code.N)
    done = 0
    batch_idx = 0
    while done < frames:
        b = min(batch_size, frames - done)
        rng = simulation.batch_generator(seed, 0, batch_idx)
        data = simulation.lfsr_frame_bits(seed, batch_idx * batch_size, b, code.K)
        x = codec.systematic_encode_batch(data, code) if systematic \
            else codec.encode_batch(data, code)
        y = simulation.awgn(simulation.bpsk_map(x), sigma2, rng)
        llr = demap_llr(y, sigma2)
        stats.record(ROOT_EDGE, llr)
        codec.decode_tree_batch(llr, tree, profile=None, stats=stats)
        stats.frames += b
        done += b
        batch_idx += 1
    return stats
