"""
Polar transform, encoders, and successive-cancellation decoders.

Two decoders are provided.  ``sc_decode_reference`` is plain min-sum SC:
the full binary recursion down to single bits, frozen bits forced to
zero.  ``sc_decode_shortcut`` walks a shortcut tree instead and resolves
R0/R1/SPC/REP leaves in one shot (threshold, Wagner, sum-threshold),
optionally narrowing LLR widths per edge from an AQ profile.  With a
uniform profile the two produce bit-identical results in both float and
fixed-point arithmetic; the leaf tie-break rules in ``fixedpoint`` are
chosen to make that exact.

Decoders work internally on the codeword domain: every node returns the
hard estimate of its segment's sub-codeword, the left child's estimate
feeds the g2 functions, and the transform-domain estimate is recovered
at the root with one extra polar transform (the transform is its own
inverse).

All core routines are batched: bit and LLR arrays carry frames along
axis 0.
"""

from dataclasses import dataclass

import numpy as np

from . import construction as cons
from . import fixedpoint as fp


def polar_transform(u):
    """Multiply by the n-fold Kronecker power of [[1,0],[1,1]] over GF(2).

    Accepts one frame (length N) or a batch (frames, N); N must be a
    power of two.  The transform is an involution.
    """
    u = np.asarray(u, dtype=np.uint8)
    single = u.ndim == 1
    x = u.reshape(1, -1).copy() if single else u.copy()
    n_bits = x.shape[1]
    if n_bits & (n_bits - 1):
        raise ValueError(f"block length {n_bits} is not a power of 2")
    m = 1
    while m < n_bits:
        blocks = x.reshape(x.shape[0], -1, 2 * m)
        blocks[:, :, :m] ^= blocks[:, :, m:]
        m *= 2
    return x[0] if single else x


def encode_batch(data, code):
    """Non-systematic encoding: payload into the information set, transform."""
    u = np.zeros((data.shape[0], code.N), dtype=np.uint8)
    u[:, code.info_set] = data
    return polar_transform(u)


def systematic_encode_batch(data, code):
    """Systematic encoding by the two-transform construction.

    Embed the payload at the information positions, transform, clear the
    frozen-image positions, transform again.  The payload then appears
    verbatim at the information positions of the codeword and the
    codeword's transform has all-zero frozen coordinates.
    """
    if data.shape[1] != code.K:
        raise ValueError(f"payload must have {code.K} bits, got {data.shape[1]}")
    t = encode_batch(data, code)
    t[:, code.frozen] = 0
    return polar_transform(t)


def systematic_encode(data, code):
    """Single-frame ``systematic_encode_batch``."""
    data = np.asarray(data, dtype=np.uint8)
    return systematic_encode_batch(data.reshape(1, -1), code)[0]


def extract_payload(u_hat, code, systematic=True):
    """Recover the payload from a transform-domain estimate.

    Non-systematic: the information positions of ``u_hat``.  Systematic:
    re-encode (one transform) and take the information positions of the
    resulting codeword.
    """
    u_hat = np.asarray(u_hat, dtype=np.uint8)
    bits = polar_transform(u_hat) if systematic else u_hat
    return bits[..., code.info_set]


# ---------------------------------------------------------------------------
# Reference decoder: plain min-sum SC.
# ---------------------------------------------------------------------------

def decode_reference_batch(llr, frozen, cap=np.inf):
    """Plain SC over a batch; returns codeword-domain hard estimates.

    ``llr`` is (frames, N) in the float-carried sign-magnitude
    convention; ``cap`` bounds g2 magnitudes (finite for fixed point).
    """
    def rec(vals, v):
        m = vals.shape[1]
        if m == 1:
            if v[0]:
                return np.zeros((vals.shape[0], 1), dtype=np.uint8)
            return fp.vhard(vals)
        half = m // 2
        a, b = vals[:, :half], vals[:, half:]
        z = rec(fp.vf2(a, b), v[:half])
        x = rec(fp.vg2(a, b, z, cap), v[half:])
        return np.concatenate([z ^ x, x], axis=1)

    return rec(llr, frozen)


# ---------------------------------------------------------------------------
# Shortcut decoder.
# ---------------------------------------------------------------------------

def bit_reversal(m):
    """Positions of a power-of-two block in bit-reversed index order."""
    order = np.zeros(m, dtype=np.int64)
    bits = m.bit_length() - 1
    for i in range(m):
        order[i] = int(f"{i:0{bits}b}"[::-1], 2) if bits else 0
    return order


def wagner_decode_batch(llr, tie_order=None):
    """Wagner decoding of single-parity-check segments, batched.

    Threshold decisions; rows with odd parity flip the bit with the
    smallest |LLR|.  Ties go to the lowest index, or to the earliest
    position of ``tie_order`` when given.  Output parity is even.
    """
    bits = fp.vhard(llr)
    parity = np.bitwise_xor.reduce(bits, axis=1)
    mags = np.abs(llr)
    if tie_order is None:
        flip = np.argmin(mags, axis=1)
    else:
        flip = tie_order[np.argmin(mags[:, tie_order], axis=1)]
    rows = np.flatnonzero(parity)
    bits[rows, flip[rows]] ^= 1
    return bits


def _spc_tie_order(m):
    """Tie-break order that reproduces sequential SC flips exactly.

    With first-half/second-half pairing, the sequential decoder settles
    the flipped pair in its left sub-decode before it can compare the
    two positions inside the pair, so equal-magnitude candidates resolve
    in bit-reversed index order rather than plain index order.
    """
    return bit_reversal(m)


def wagner_decode(qllrs):
    """Single-frame Wagner decode; accepts QLlr values or reals.

    Ties on the flip position go to the lowest index.
    """
    vals = np.array([x.to_float() if isinstance(x, fp.QLlr) else float(x)
                     for x in qllrs])
    if vals.shape[0] < 2:
        raise ValueError("SPC segments need at least 2 values")
    return wagner_decode_batch(vals.reshape(1, -1))[0]


def rep_decode_batch(llr, cap=np.inf):
    """Repetition segments: saturating adder-tree sum, then threshold.

    The sum is folded exactly as the sequential decoder would form it
    (first half against second half at every level, each partial sum
    clipped to ``cap``), so fixed-point decisions match plain SC.
    """
    vals = llr
    while vals.shape[1] > 1:
        half = vals.shape[1] // 2
        vals = fp.vg2(vals[:, :half], vals[:, half:], 0, cap)
    bit = fp.vhard(vals)
    return np.repeat(bit, llr.shape[1], axis=1)


def decode_tree_batch(llr, tree, profile=None, stats=None):
    """Shortcut-tree SC decode of a batch; returns codeword estimates.

    With ``profile`` None the arithmetic is floating point.  Otherwise
    inputs must be quantized to the profile's root width and every edge
    narrows magnitudes to its assigned width; g2 saturates at the width
    of the node it sits in.

    ``stats``, if given, records post-f2/post-g2 magnitudes per edge at
    whatever precision the decode runs at (use float for profiling).
    When an all-frozen left child would let the decoder skip the f2
    stage entirely, instrumented runs still evaluate it so that every
    edge ends up covered.
    """
    def cap_of(width):
        return np.inf if width is None else fp.mag_cap(width)

    def rec(vals, node, width):
        if node.kind == cons.R0:
            return np.zeros(vals.shape, dtype=np.uint8)
        if node.kind == cons.R1:
            return fp.vhard(vals)
        if node.kind == cons.SPC:
            return wagner_decode_batch(vals, _spc_tie_order(node.length))
        if node.kind == cons.REP:
            return rep_decode_batch(vals, cap_of(width))

        half = node.length // 2
        a, b = vals[:, :half], vals[:, half:]

        def edge(side, out):
            if stats is not None:
                stats.record((node.offset, node.length, side), out)
            if profile is None:
                return out, None
            w = profile.edge_width(node.offset, node.length, side)
            return fp.vrequantize(out, width - w), w

        if node.left.kind == cons.R0:
            if stats is not None:
                edge("F", fp.vf2(a, b))
            z = np.zeros((vals.shape[0], half), dtype=np.uint8)
        else:
            f_vals, f_w = edge("F", fp.vf2(a, b))
            z = rec(f_vals, node.left, f_w)
        g_vals, g_w = edge("G", fp.vg2(a, b, z, cap_of(width)))
        x = rec(g_vals, node.right, g_w)
        return np.concatenate([z ^ x, x], axis=1)

    width = None if profile is None else profile.root_width
    return rec(llr, tree, width)


@dataclass
class DecodeResult:
    """Output of one decode: transform bits, payload, and bookkeeping."""

    u_hat: np.ndarray
    x_hat: np.ndarray
    d_hat: np.ndarray
    metadata: dict


def _tree_metadata(tree):
    activations = {}
    visits = 0
    for leaf in tree.leaves():
        visits += 1
        activations[leaf.kind] = activations.get(leaf.kind, 0) + 1
    visits += sum(1 for _ in tree.branches())
    return {"node_visits": visits, "shortcut_activations": activations}


def sc_decode_reference(llrs, code, qwidth=None, systematic=True):
    """Plain min-sum SC decode of one frame.

    ``llrs`` are reals; with ``qwidth`` set they must already be
    quantized sign-magnitude values (integer magnitudes) and the
    recursion saturates at that width.  Frozen positions are forced to
    zero; information bits are threshold decisions.
    """
    vals = np.asarray(llrs, dtype=np.float64)
    if vals.shape != (code.N,):
        raise ValueError(f"expected {code.N} LLRs, got {vals.shape}")
    cap = np.inf if qwidth is None else fp.mag_cap(qwidth)
    x = decode_reference_batch(vals.reshape(1, -1), code.frozen, cap)[0]
    u = polar_transform(x)
    d = extract_payload(u, code, systematic)
    return DecodeResult(u, x, d, {"node_visits": 2 * code.N - 1,
                                  "shortcut_activations": {}})


def sc_decode_shortcut(qllrs, tree, profile, code, stats=None, systematic=True):
    """Shortcut SC decode of one frame.

    ``qllrs`` may be QLlr values or float-carried reals; with a profile
    they must match its root width.  See ``decode_tree_batch`` for the
    arithmetic rules.
    """
    if tree.length != code.N:
        raise ValueError("tree does not match the code's block length")
    if profile is not None:
        for x in qllrs:
            if isinstance(x, fp.QLlr) and x.width != profile.root_width:
                raise ValueError(f"input width {x.width} does not match the "
                                 f"profile root width {profile.root_width}")
    vals = np.array([x.to_float() if isinstance(x, fp.QLlr) else float(x)
                     for x in qllrs])
    if vals.shape != (code.N,):
        raise ValueError(f"expected {code.N} LLRs, got {vals.shape}")
    x = decode_tree_batch(vals.reshape(1, -1), tree, profile, stats)[0]
    u = polar_transform(x)
    d = extract_payload(u, code, systematic)
    return DecodeResult(u, x, d, _tree_metadata(tree))
