"""Independent scalar oracles used to cross-check the vectorized library.

Everything here is deliberately naive: per-bit successive cancellation
that recomputes its LLR from scratch for every decision (feedback by
re-encoding the decided prefix), a recursive scalar transform, and an
explicit stage-by-stage register enumeration for the pipelined-decoder
memory recursion.  No code is shared with the package internals beyond
the documented arithmetic conventions.
"""

import math


def scalar_f2(a, b):
    mag = min(abs(a), abs(b))
    neg = (math.copysign(1.0, a) < 0) != (math.copysign(1.0, b) < 0)
    return -mag if neg else mag


def scalar_g2(a, b, z, cap=math.inf):
    v = (b - a) if z else (a + b)
    if v == 0:
        return math.copysign(0.0, b)
    return math.copysign(min(abs(v), cap), v)


def scalar_hard(x):
    return 1 if math.copysign(1.0, x) < 0 else 0


def scalar_transform(u):
    if len(u) == 1:
        return list(u)
    h = len(u) // 2
    return scalar_transform([a ^ b for a, b in zip(u[:h], u[h:])]) + \
        scalar_transform(list(u[h:]))


def _next_bit_llr(y, u_prev, cap):
    n = len(y)
    if n == 1:
        return y[0]
    h = n // 2
    if len(u_prev) < h:
        f = [scalar_f2(y[j], y[j + h]) for j in range(h)]
        return _next_bit_llr(f, u_prev, cap)
    z = scalar_transform(list(u_prev[:h]))
    g = [scalar_g2(y[j], y[j + h], z[j], cap) for j in range(h)]
    return _next_bit_llr(g, u_prev[h:], cap)


def straight_sc(y, frozen, cap=math.inf):
    """Bit-by-bit min-sum SC; returns (u_hat, x_hat) as bit lists."""
    u = []
    for i in range(len(y)):
        llr = _next_bit_llr(list(y), u, cap)
        u.append(0 if frozen[i] else scalar_hard(llr))
    return u, scalar_transform(u)


def memory_enumeration(N, Q):
    """Register bits of the unrolled plain-SC pipeline, by layout walk.

    Stages are laid out one primitive step at a time (f2 bank, left
    sub-decode, g2 bank, right sub-decode); each datum contributes its
    bit count times the number of stage boundaries it crosses.  Size-2
    blocks consume their inputs combinationally (only their own output
    registers and the one decision bit count).
    """
    total = 0

    def walk(m, f_stage):
        nonlocal total
        total += (m // 2) * Q * 2              # f2 and g2 bank outputs
        if m == 2:
            g_stage = f_stage + 1
            total += g_stage - f_stage         # left decision bit
            return g_stage
        left_end = walk(m // 2, f_stage + 1)
        g_stage = left_end + 1
        end = walk(m // 2, g_stage + 1)
        total += m * Q * (g_stage - f_stage)   # inputs held for the g2 bank
        total += (m // 2) * (end - left_end)   # partial sums held to combine
        return end

    walk(N, 1)
    return total
