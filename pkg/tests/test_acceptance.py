"""Acceptance suite: one test per shipped criterion, each printing a
PASS/FAIL line (run with ``pytest tests/test_acceptance.py -s``).

The error-rate criteria run real Monte-Carlo sweeps and take a few
minutes each; everything else is instantaneous.
"""

import math

import numpy as np
import pytest

from polarsc import cli, codec
from polarsc import construction as cons
from polarsc import fixedpoint as fp
from polarsc import hwmodel as hw
from polarsc import simulation as sim

from oracles import memory_enumeration

PERIOD = 1.0 / 1.2e9


def report(cid, ok, detail):
    print(f"\nACCEPTANCE {cid}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"{cid}: {detail}"


def noisy_llrs(rng, code_bits, sigma2):
    y = sim.awgn(sim.bpsk_map(code_bits), sigma2, rng)
    return fp.demap_llr(y, sigma2)


# ---------------------------------------------------------------------------
# 1. Shortcut equivalence, bit for bit.
# ---------------------------------------------------------------------------

def _equivalent(llr, frozen, tree, fixed):
    if fixed:
        vals = fp.vquantize(llr, 5, fp.DEFAULT_STEP)
        got = codec.decode_tree_batch(vals, tree, fp.AqProfile.uniform(tree, 5))
        ref = codec.decode_reference_batch(vals, frozen, cap=fp.mag_cap(5))
    else:
        got = codec.decode_tree_batch(llr, tree)
        ref = codec.decode_reference_batch(llr, frozen)
    return int((got != ref).any(axis=1).sum())


def test_c1_shortcut_equivalence(flagship_code, flagship_tree):
    rng = np.random.default_rng(2024)
    mismatches = 0
    frames_run = 0

    # every frozen pattern at N = 4 and N = 8
    for n in (2, 3):
        N = 1 << n
        for pattern in range(1 << N):
            frozen = (pattern >> np.arange(N)) & 1 == 1
            tree = cons.build_shortcut_tree(frozen, min(32, N))
            x = np.zeros((128, N), dtype=np.uint8)
            llr = noisy_llrs(rng, x, sigma2=0.7)
            for fixed in (False, True):
                mismatches += _equivalent(llr, frozen, tree, fixed)
            frames_run += llr.shape[0]

    # 10^4 noisy frames over random frozen sets at N = 64
    for _ in range(25):
        frozen = rng.random(64) < rng.uniform(0.1, 0.9)
        tree = cons.build_shortcut_tree(frozen, 32)
        x = np.zeros((400, 64), dtype=np.uint8)
        llr = noisy_llrs(rng, x, sigma2=0.5)
        for fixed in (False, True):
            mismatches += _equivalent(llr, frozen, tree, fixed)
        frames_run += 400

    # 10^4 noisy frames on the flagship code
    sigma2 = sim.ebno_to_sigma2(5.0, flagship_code.rate)
    for _ in range(10):
        data = rng.integers(0, 2, size=(1000, flagship_code.K)).astype(np.uint8)
        x = codec.systematic_encode_batch(data, flagship_code)
        llr = noisy_llrs(rng, x, sigma2)
        for fixed in (False, True):
            mismatches += _equivalent(llr, flagship_code.frozen, flagship_tree, fixed)
        frames_run += 1000

    report("1 shortcut-equivalence", mismatches == 0,
           f"{mismatches} mismatching frames over {frames_run} frames "
           f"x 2 arithmetics (float and 5-bit)")


# ---------------------------------------------------------------------------
# 2. Quantization loss at FER 1e-2 and 1e-3.
# ---------------------------------------------------------------------------

def _fer_curve(code, mode, profile, seed):
    """Walk up in 0.3 dB steps until FER drops below 7e-4; keep points
    with at least 100 frame errors."""
    points = []
    ebno = 4.7
    while ebno < 6.6:
        cfg = sim.SimConfig(ebno_db=(ebno,), max_frames=2_000_000,
                            max_frame_errors=300, seed=seed, mode=mode,
                            profile=profile, batch_size=2048)
        p = sim.run_montecarlo(code, cfg).points[ebno]
        if p.frame_errors >= 100:
            points.append((ebno, p.fer()))
        if p.fer() < 7e-4:
            break
        ebno = round(ebno + 0.3, 10)
    return points


def _ebno_at_fer(points, target):
    for (e0, f0), (e1, f1) in zip(points, points[1:]):
        if f0 >= target >= f1:
            t = (math.log10(f0) - math.log10(target)) / \
                (math.log10(f0) - math.log10(f1))
            return e0 + t * (e1 - e0)
    raise AssertionError(f"FER {target} not bracketed by {points}")


def test_c2_quantization_loss(flagship_code, flagship_tree):
    stats = fp.collect_stats(flagship_code, flagship_tree, 5.2, 3000, seed=11)
    aq_profile = fp.optimize_aq(stats, flagship_tree, 5, loss_budget=0.05)
    avg_width = aq_profile.average_width(flagship_tree, min_length=128)

    curves = {
        "float": _fer_curve(flagship_code, "float", None, seed=31),
        "fixed": _fer_curve(flagship_code, "fixed", None, seed=31),
        "aq": _fer_curve(flagship_code, "aq", aq_profile, seed=31),
    }
    gaps = {}
    for mode in ("fixed", "aq"):
        for target in (1e-2, 1e-3):
            gaps[(mode, target)] = (_ebno_at_fer(curves[mode], target) -
                                    _ebno_at_fer(curves["float"], target))
    detail = "; ".join(f"{m} @FER={t:g}: {g:+.3f} dB"
                       for (m, t), g in gaps.items())
    ok = (gaps[("fixed", 1e-2)] <= 0.15 and gaps[("fixed", 1e-3)] <= 0.15 and
          gaps[("aq", 1e-2)] <= 0.25 and gaps[("aq", 1e-3)] <= 0.25)
    report("2 quantization-loss", ok,
           detail + f" (limits: fixed 0.15, aq 0.25); profile averages "
                    f"{avg_width:.2f} stored bits over 128+ segments "
                    f"(reference 4.25)")


# ---------------------------------------------------------------------------
# 3. Complexity identities.
# ---------------------------------------------------------------------------

def test_c3_complexity_identities():
    ok = hw.time_complexity(1024) == 2046
    ok &= hw.memory_complexity(2, 5) == 11
    oracle_ok = all(hw.memory_complexity(1 << n, 5) ==
                    memory_enumeration(1 << n, 5) for n in range(1, 7))
    report("3 complexity-identities", ok and oracle_ok,
           f"time(1024)={hw.time_complexity(1024)}, mem(2,5)="
           f"{hw.memory_complexity(2, 5)}, enumeration oracle to N=64: "
           f"{'exact' if oracle_ok else 'mismatch'}")


def test_c3_quadratic_ratio_band():
    # Stated band: M(N)/M(N/4) in [14, 16] for N >= 256.  The normative
    # recursion gives M(N) = (2Q+1) N^2 - N log2(N) / 2 - (3Q+1) N, whose
    # subtractive lower-order terms make the ratio approach 16 from
    # above, so the band as written cannot hold; see the decisions
    # ledger for the analysis.  The assertion is kept as specified.
    ratios = {N: hw.memory_complexity(N, 5) / hw.memory_complexity(N // 4, 5)
              for N in (256, 512, 1024)}
    ok = all(14.0 <= r <= 16.0 for r in ratios.values())
    report("3 quadratic-ratio-band", ok,
           "M(N)/M(N/4) = " + ", ".join(f"{N}: {r:.4f}"
                                        for N, r in ratios.items()) +
           " (stated band [14, 16])")


# ---------------------------------------------------------------------------
# 4. Resource census.
# ---------------------------------------------------------------------------

def test_c4_resource_census(flagship_tree):
    out = cons.census(flagship_tree)
    fg_dev = abs(out.fg_total - 5276) / 5276
    xor_dev = abs(out.xor_total - 2672) / 2672
    report("4 resource-census", fg_dev < 0.10 and xor_dev < 0.10,
           f"f2+g2 {out.fg_total} vs reference 5276 ({fg_dev:+.1%}), "
           f"XOR {out.xor_total} vs 2672 ({xor_dev:+.1%})")


# ---------------------------------------------------------------------------
# 5. Register reduction/balancing.
# ---------------------------------------------------------------------------

def test_c5_register_reduction(flagship_tree, flagship_profile_q5):
    unbal = hw.unbalanced_schedule(flagship_tree, flagship_profile_q5)
    delays = hw.calibrate(flagship_tree, flagship_profile_q5, PERIOD, 60)
    rrb = hw.schedule_pipeline(flagship_tree, flagship_profile_q5, delays, PERIOD)
    ratio = rrb.llr_buffer_bits / unbal.llr_buffer_bits
    report("5 register-reduction", ratio <= 0.40 and rrb.depth == 60,
           f"LLR buffer {unbal.llr_buffer_bits/1e3:.0f} Kb -> "
           f"{rrb.llr_buffer_bits/1e3:.0f} Kb ({ratio:.1%} of baseline, "
           f"limit 40%); calibrated depth {rrb.depth} (target 60)")


# ---------------------------------------------------------------------------
# 6. Throughput / latency / energy arithmetic.
# ---------------------------------------------------------------------------

def test_c6_cost_arithmetic(flagship_tree, flagship_profile_q5):
    delays = hw.calibrate(flagship_tree, flagship_profile_q5, PERIOD, 60)
    sched = hw.schedule_pipeline(flagship_tree, flagship_profile_q5, delays, PERIOD)
    rep = hw.cost_report(sched, cons.census(flagship_tree), 1.2e9, power=1.167)
    gbps = rep.coded_throughput_bps / 1e9
    latency_us = rep.latency_s * 1e6
    pj = rep.energy_per_bit_j * 1e12
    ok = (f"{gbps:.4g}" == "1229" and gbps == pytest.approx(1228.8) and
          latency_us == pytest.approx(0.05) and f"{pj:.2f}" == "0.95")
    report("6 cost-arithmetic", ok,
           f"throughput {gbps:.1f} Gb/s (4 s.f. {gbps:.4g}), latency "
           f"{latency_us:.3f} us, energy {pj:.4f} pJ/bit")


# ---------------------------------------------------------------------------
# 7. Channel sanity.
# ---------------------------------------------------------------------------

def test_c7_uncoded_channel_sanity():
    checks = []
    ok = True
    for ebno in (3.0, 6.0, 9.0):
        p = sim.uncoded_ber(ebno)
        n = 10 ** 7
        measured = sim.run_uncoded_ber(ebno, n, seed=17)
        se = math.sqrt(p * (1 - p) / n)
        ok &= abs(measured - p) <= 3 * se
        checks.append(f"{ebno:g} dB: {measured:.3e} vs {p:.3e} "
                      f"({abs(measured - p) / se:.2f} se)")
    report("7 channel-sanity", ok, "; ".join(checks))


# ---------------------------------------------------------------------------
# 8. Coding-gain trend.
# ---------------------------------------------------------------------------

def test_c8_coding_gain_trend(flagship_code):
    cfg = sim.SimConfig(ebno_db=(7.0,), max_frames=1_000_000,
                        max_frame_errors=10 ** 9, seed=23, batch_size=4096)
    point = sim.run_montecarlo(flagship_code, cfg).points[7.0]
    coded = point.ber(flagship_code.K)
    uncoded = sim.uncoded_ber(7.0)
    gain_ok = coded <= uncoded / 1000.0

    sweep = tuple(5.0 + 0.5 * i for i in range(7))
    cfg = sim.SimConfig(ebno_db=sweep, max_frames=300_000,
                        max_frame_errors=300, seed=29, batch_size=2048)
    stats = sim.run_montecarlo(flagship_code, cfg)
    fers = [stats.points[e].fer() for e in sweep]
    monotone = all(a >= b for a, b in zip(fers, fers[1:]))

    report("8 coding-gain-trend", gain_ok and monotone,
           f"coded BER {coded:.3e} vs uncoded {uncoded:.3e} at 7 dB "
           f"({point.bit_errors} bit errors / {point.frames} frames); "
           f"FER sweep 5..8 dB: {['%.2e' % f for f in fers]} "
           f"({'monotone' if monotone else 'NOT monotone'})")


# ---------------------------------------------------------------------------
# 9. Determinism across worker counts.
# ---------------------------------------------------------------------------

def test_c9_worker_determinism(flagship_code, tmp_path):
    code_path = tmp_path / "flagship.pc"
    flagship_code.save(code_path)
    outputs = []
    for workers in (1, 4):
        out = tmp_path / f"workers{workers}.csv"
        rc = cli.main(["simulate", "--code", str(code_path),
                       "--ebno", "4.5:0.5:5.5", "--mode", "fixed",
                       "--frames", "20000", "--max-errors", "150",
                       "--seed", "77", "--workers", str(workers),
                       "--batch-size", "512", "-o", str(out), "--quiet"])
        assert rc == 0
        outputs.append(out.read_bytes())
    report("9 worker-determinism", outputs[0] == outputs[1],
           f"CSV bytes identical across workers=1 and workers=4 "
           f"({len(outputs[0])} bytes)")
