"""
Polar code construction and shortcut-tree classification.

Codes are built by Gaussian-approximation density evolution over the
BPSK/AWGN channel: every synthetic channel is tracked by the mean of
its LLR distribution, the check-side transform going through the usual
phi function and the variable-side transform doubling the mean.  The
N - K channels with the smallest means are frozen.

The code tree is then segmented greedily into one-shot-decodable nodes:
rate-0 (all frozen), rate-1 (no frozen), single-parity-check and
repetition patterns, with SPC/REP capped at a configurable segment
length.  Everything downstream (decoders, hardware model) consumes this
tree.
"""

from dataclasses import dataclass, field

import numpy as np

N_LIM_DEFAULT = 32

R0 = "r0"
R1 = "r1"
SPC = "spc"
REP = "rep"
BRANCH = "branch"
LEAF_KINDS = (R0, R1, SPC, REP)


@dataclass(frozen=True)
class PolarCode:
    """A polar code: block length, payload size and frozen set.

    Attributes
    ----------
    n : int
        Block-length exponent, N = 2**n.
    N : int
        Block length in bits.
    K : int
        Payload size in bits; exactly N - K positions are frozen.
    frozen : np.ndarray
        Boolean indicator over the N transform inputs, True = frozen.
    design_snr_db : float
        Es/No operating point the frozen set was designed for.
    """

    n: int
    N: int
    K: int
    frozen: np.ndarray
    design_snr_db: float
    means: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.N != 1 << self.n:
            raise ValueError(f"N={self.N} is not 2**{self.n}")
        if not 1 <= self.K <= self.N:
            raise ValueError(f"K={self.K} out of range 1..{self.N}")
        if self.frozen.shape != (self.N,) or self.frozen.dtype != bool:
            raise ValueError("frozen must be a length-N boolean vector")
        if int(self.frozen.sum()) != self.N - self.K:
            raise ValueError("frozen count does not match N - K")

    @property
    def rate(self):
        return self.K / self.N

    @property
    def info_set(self):
        """Information positions in increasing order (0-based)."""
        return np.flatnonzero(~self.frozen)

    def save(self, path):
        """Write the frozen-set file: header ``N K design_snr_db``, then
        one '0'/'1' character per position ('1' = frozen)."""
        with open(path, "w") as f:
            f.write(f"{self.N} {self.K} {self.design_snr_db:g}\n")
            f.write("".join("1" if v else "0" for v in self.frozen))
            f.write("\n")

    @classmethod
    def load(cls, path):
        with open(path) as f:
            header = f.readline().split()
            if len(header) != 3:
                raise ValueError(f"bad frozen-set header in {path}")
            N, K, snr = int(header[0]), int(header[1]), float(header[2])
            bits = f.readline().strip()
        if len(bits) != N or set(bits) - {"0", "1"}:
            raise ValueError(f"bad frozen-set body in {path}")
        frozen = np.frombuffer(bits.encode(), dtype=np.uint8) == ord("1")
        n = N.bit_length() - 1
        return cls(n, N, K, frozen, snr)


# ---------------------------------------------------------------------------
# Gaussian-approximation density evolution.
#
# phi(x) = 1 - E[tanh(L/2)] for L ~ N(x, 2x), in the standard three-piece
# closed form with a matching piecewise inverse, so mean evolution is
# deterministic and needs no quadrature.
# ---------------------------------------------------------------------------

_PHI_A = 0.6357
_PHI_B = 9.2254


def _phi(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    lo = x <= _PHI_A
    hi = x >= _PHI_B
    mid = ~lo & ~hi
    out[lo] = np.exp(0.06725 * x[lo] ** 2 - 0.4908 * x[lo])
    out[mid] = np.exp(-0.4527 * x[mid] ** 0.86 + 0.0218)
    out[hi] = np.exp(-0.2832 * x[hi] - 0.4254)
    return out


def _phi_inv(y):
    y = np.asarray(y, dtype=np.float64)
    out = np.empty_like(y)
    y_a = float(_phi(np.array(_PHI_A)))
    y_b = float(_phi(np.array(_PHI_B)))
    hi = y <= y_b
    lo = y >= y_a
    mid = ~lo & ~hi
    out[hi] = -(np.log(y[hi]) + 0.4254) / 0.2832
    out[mid] = ((0.0218 - np.log(y[mid])) / 0.4527) ** (1.0 / 0.86)
    # small-x piece: root of 0.06725 x^2 - 0.4908 x - ln(y) in [0, _PHI_A]
    c2, c1 = 0.06725, -0.4908
    c0 = -np.log(np.maximum(y[lo], 1e-300))
    disc = np.sqrt(c1 * c1 - 4 * c2 * c0)
    out[lo] = (-c1 - disc) / (2 * c2)
    return out


_CHECK_LINEAR_TAU = 11.673
_CHECK_LINEAR_OFF = 2.4476


def _check_transform(m):
    """Mean after the check-side (F) combination of two equal channels."""
    m = np.asarray(m, dtype=np.float64)
    out = np.empty_like(m)
    big = m > _CHECK_LINEAR_TAU
    out[big] = m[big] - _CHECK_LINEAR_OFF
    small = ~big
    if small.any():
        p = _phi(m[small])
        out[small] = _phi_inv(1.0 - (1.0 - p) ** 2)
    return np.maximum(out, 0.0)


def ga_means(n, design_snr_db):
    """LLR means of all 2**n synthetic channels at the given Es/No (dB).

    Index i's mean is produced by applying, from the most significant
    bit of i downward, the check transform for a 0 bit and mean doubling
    for a 1 bit, matching the decoder's first-half/second-half
    recursion.
    """
    es_no = 10.0 ** (design_snr_db / 10.0)
    sigma2 = 1.0 / (2.0 * es_no)
    means = np.array([2.0 / sigma2])
    for _ in range(n):
        nxt = np.empty(2 * means.shape[0])
        nxt[0::2] = _check_transform(means)
        nxt[1::2] = 2.0 * means
        means = nxt
    return means


def construct_frozen_set(n, K, design_snr_db):
    """Build a polar code by freezing the N-K least reliable channels.

    Reliability is the GA-DE mean; ties freeze the lower index first.
    Deterministic for fixed arguments.
    """
    N = 1 << n
    if not 1 <= K <= N:
        raise ValueError(f"K={K} out of range 1..{N}")
    means = ga_means(n, design_snr_db)
    order = np.argsort(means, kind="stable")
    frozen = np.zeros(N, dtype=bool)
    frozen[order[: N - K]] = True
    return PolarCode(n, N, K, frozen, design_snr_db, means=means)


# ---------------------------------------------------------------------------
# Shortcut tree.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TreeNode:
    """A segment of the code tree.

    ``offset`` and ``length`` locate the segment inside the transform
    input vector; branch nodes split it into two contiguous halves.
    """

    kind: str
    offset: int
    length: int
    left: "TreeNode" = None
    right: "TreeNode" = None

    def leaves(self):
        if self.kind != BRANCH:
            yield self
        else:
            yield from self.left.leaves()
            yield from self.right.leaves()

    def branches(self):
        if self.kind == BRANCH:
            yield self
            yield from self.left.branches()
            yield from self.right.branches()


def classify_segment(v, n_lim):
    """Leaf kind for a frozen-indicator slice, or None for a branch.

    Guards are checked in precedence order: all-frozen (R0), all-info
    (R1), then for segments up to ``n_lim`` the single-parity-check
    pattern (first position frozen, rest info) and the repetition
    pattern (all frozen but the last).
    """
    m = len(v)
    if v.all():
        return R0
    if not v.any():
        return R1
    if m <= n_lim and m >= 2:
        if v[0] and not v[1:].any():
            return SPC
        if v[:-1].all() and not v[-1]:
            return REP
    return None


def build_shortcut_tree(code, n_lim=N_LIM_DEFAULT):
    """Segment a code greedily top-down into shortcut leaves.

    ``code`` is a PolarCode or a plain boolean frozen-indicator vector.
    A node becomes a leaf as soon as one of the four guards matches;
    otherwise it splits into two half-length children.  Length-1
    segments always terminate as R0/R1.
    """
    frozen = code.frozen if hasattr(code, "frozen") else np.asarray(code, dtype=bool)
    N = frozen.shape[0]
    if n_lim & (n_lim - 1) or not 2 <= n_lim <= N:
        raise ValueError(f"n_lim must be a power of 2 in 2..{N}, got {n_lim}")

    def build(offset, length):
        kind = classify_segment(frozen[offset:offset + length], n_lim)
        if kind is not None:
            return TreeNode(kind, offset, length)
        half = length // 2
        return TreeNode(BRANCH, offset, length,
                        left=build(offset, half),
                        right=build(offset + half, half))

    return build(0, N)


def tree_frozen_vector(tree):
    """Reconstruct the frozen indicator a tree encodes (tiling check)."""
    v = np.zeros(tree.length, dtype=bool)
    seen = np.zeros(tree.length, dtype=bool)
    for leaf in tree.leaves():
        lo, hi = leaf.offset - tree.offset, leaf.offset - tree.offset + leaf.length
        if seen[lo:hi].any():
            raise ValueError("leaf segments overlap")
        seen[lo:hi] = True
        if leaf.kind == R0:
            v[lo:hi] = True
        elif leaf.kind == SPC:
            v[lo] = True
        elif leaf.kind == REP:
            v[lo:hi - 1] = True
    if not seen.all():
        raise ValueError("leaf segments do not tile the code")
    return v


# ---------------------------------------------------------------------------
# Resource census.
# ---------------------------------------------------------------------------

@dataclass
class ResourceCensus:
    """Hardware primitive counts implied by a shortcut tree.

    Per node length: shortcut leaf counts by kind, the bits those leaves
    cover, and f2/g2/XOR unit counts.  A branch of length M contributes
    M/2 g2 adders and M/2 partial-sum XORs always, and M/2 f2 units
    unless its left child is all-frozen (the left decisions are then
    known zero and only the zero-feedback adders remain).
    """

    shortcuts: dict = field(default_factory=dict)   # (kind, length) -> count
    f2_units: dict = field(default_factory=dict)    # length -> count
    g2_units: dict = field(default_factory=dict)
    xor_units: dict = field(default_factory=dict)

    def _bump(self, table, key, amount):
        table[key] = table.get(key, 0) + amount

    @property
    def f2_total(self):
        return sum(self.f2_units.values())

    @property
    def g2_total(self):
        return sum(self.g2_units.values())

    @property
    def fg_total(self):
        return self.f2_total + self.g2_total

    @property
    def xor_total(self):
        return sum(self.xor_units.values())

    def shortcut_bits(self):
        """Bits of the code covered per shortcut kind."""
        bits = {}
        for (kind, length), count in self.shortcuts.items():
            bits[kind] = bits.get(kind, 0) + count * length
        return bits

    def node_lengths(self):
        lengths = set(self.f2_units) | set(self.g2_units) | set(self.xor_units)
        lengths |= {length for (_, length) in self.shortcuts}
        return sorted(lengths)

    def render(self):
        lines = ["length  r0  r1 spc rep    f2    g2   xor"]
        for m in self.node_lengths():
            row = [f"{m:6d}"]
            for kind in LEAF_KINDS:
                row.append(f"{self.shortcuts.get((kind, m), 0):3d}")
            row.append(f"{self.f2_units.get(m, 0):5d}")
            row.append(f"{self.g2_units.get(m, 0):5d}")
            row.append(f"{self.xor_units.get(m, 0):5d}")
            lines.append(" ".join(row))
        bits = self.shortcut_bits()
        lines.append("bits covered: " + " ".join(
            f"{kind}={bits.get(kind, 0)}" for kind in LEAF_KINDS))
        lines.append(f"total f2+g2={self.fg_total} xor={self.xor_total}")
        return "\n".join(lines)


def census(tree):
    """Count shortcut leaves and f2/g2/XOR units over a shortcut tree."""
    out = ResourceCensus()

    def walk(node):
        if node.kind != BRANCH:
            out._bump(out.shortcuts, (node.kind, node.length), 1)
            return
        half = node.length // 2
        if node.left.kind != R0:
            out._bump(out.f2_units, node.length, half)
        out._bump(out.g2_units, node.length, half)
        out._bump(out.xor_units, node.length, half)
        walk(node.left)
        walk(node.right)

    walk(tree)
    return out
