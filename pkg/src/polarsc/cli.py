"""Command-line front end: code construction, encoding/decoding, AQ
profiling, Monte-Carlo simulation, hardware reports, and the channel
quantizer step sweep."""

import argparse
import json
import math
import os
import sys

import numpy as np

from . import codec
from . import construction as cons
from . import fixedpoint as fp
from . import hwmodel as hw
from . import simulation as sim

SEED_ENV = "POLARSC_SEED"


def _default_seed():
    return int(os.environ.get(SEED_ENV, "0"))


def parse_sweep(text):
    """Parse an Eb/No sweep: 'a:step:b' (inclusive), 'x,y,z', or 'x'."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"bad sweep {text!r}, want start:step:stop")
        start, step, stop = (float(p) for p in parts)
        if step <= 0:
            raise argparse.ArgumentTypeError("sweep step must be positive")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        if count < 1:
            raise argparse.ArgumentTypeError(f"empty sweep {text!r}")
        return tuple(round(start + i * step, 10) for i in range(count))
    return tuple(float(p) for p in text.split(","))


def bits_to_hex(bits):
    """Pack a bit vector into a hex line, first bit most significant."""
    bits = np.asarray(bits, dtype=np.uint8)
    pad = (-len(bits)) % 4
    padded = np.concatenate([bits, np.zeros(pad, dtype=np.uint8)])
    nibbles = padded.reshape(-1, 4) @ np.array([8, 4, 2, 1], dtype=np.uint8)
    return "".join(f"{v:x}" for v in nibbles)


def hex_to_bits(line, nbits):
    digits = line.strip()
    if len(digits) != (nbits + 3) // 4:
        raise ValueError(f"expected {(nbits + 3) // 4} hex digits, got {len(digits)}")
    vals = np.array([int(c, 16) for c in digits], dtype=np.uint8)
    bits = ((vals[:, None] >> np.array([3, 2, 1, 0])) & 1).reshape(-1)
    return bits[:nbits].astype(np.uint8)


def _read_lines(path):
    f = sys.stdin if path in (None, "-") else open(path)
    try:
        return [line for line in f if line.strip()]
    finally:
        if f is not sys.stdin:
            f.close()


def _write_text(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as f:
            f.write(text)


def _load_runtime(args, need_profile=False):
    code = cons.PolarCode.load(args.code)
    tree = cons.build_shortcut_tree(code, min(args.n_lim, code.N))
    profile = None
    if getattr(args, "profile", None):
        profile = fp.AqProfile.load(args.profile)
        profile.validate(tree)
    elif need_profile:
        profile = fp.AqProfile.uniform(tree, args.qbits)
    return code, tree, profile


# ---------------------------------------------------------------------------
# Subcommands.
# ---------------------------------------------------------------------------

def _summary(args, text, **payload):
    if args.quiet:
        return
    if getattr(args, "json", False):
        print(json.dumps(payload, sort_keys=True))
    else:
        print(text)


def cmd_construct(args):
    n = int(round(math.log2(args.N)))
    if 1 << n != args.N:
        raise ValueError(f"N must be a power of 2, got {args.N}")
    code = cons.construct_frozen_set(n, args.K, args.snr)
    code.save(args.output)
    _summary(args, f"wrote ({code.N},{code.K}) frozen set at {args.snr:g} dB "
                   f"Es/No to {args.output}",
             N=code.N, K=code.K, design_snr_db=args.snr, output=args.output)
    return 0


def cmd_encode(args):
    code, _, _ = _load_runtime(args)
    lines = _read_lines(args.input)
    data = np.array([hex_to_bits(l, code.K) for l in lines], dtype=np.uint8)
    x = codec.systematic_encode_batch(data, code) if args.systematic \
        else codec.encode_batch(data, code)
    _write_text(args.output, "".join(bits_to_hex(row) + "\n" for row in x))
    return 0


def cmd_decode(args):
    code, tree, profile = _load_runtime(args, need_profile=args.mode != "float")
    if args.mode == "float":
        profile = None
    lines = _read_lines(args.input)
    if args.llr:
        llr = np.array([[float(v) for v in l.split()] for l in lines])
        if llr.shape[1] != code.N:
            raise ValueError(f"expected {code.N} LLRs per line")
    else:
        hard = np.array([hex_to_bits(l, code.N) for l in lines], dtype=np.uint8)
        llr = np.where(hard == 0, 50.0, -50.0)
    if profile is not None:
        llr = fp.vquantize(llr, profile.root_width, args.step)
    x_hat = codec.decode_tree_batch(llr, tree, profile)
    u_hat = codec.polar_transform(x_hat)
    d_hat = x_hat[:, code.info_set] if args.systematic \
        else u_hat[:, code.info_set]
    _write_text(args.output, "".join(bits_to_hex(row) + "\n" for row in d_hat))
    info = {"frames": len(lines), "mode": args.mode, **codec._tree_metadata(tree)}
    if not args.quiet:
        stream = sys.stdout if args.output not in (None, "-") else sys.stderr
        json.dump(info, stream)
        stream.write("\n")
    return 0


def cmd_profile_aq(args):
    code, tree, _ = _load_runtime(args)
    stats = fp.collect_stats(code, tree, args.ebno, args.frames,
                             seed=args.seed, systematic=args.systematic)
    profile = fp.optimize_aq(stats, tree, base_width=args.base,
                             loss_budget=args.budget, step=args.step)
    profile.save(args.output)
    if args.stats_csv:
        stats.to_csv(args.stats_csv)
    avg = profile.average_width(tree, min_length=128)
    _summary(args, f"wrote profile to {args.output}; average width {avg:.2f} "
                   f"bits over segments of 128+ bits",
             output=args.output, average_width_128=round(avg, 4),
             root_width=profile.root_width)
    return 0


def cmd_simulate(args):
    code, tree, profile = _load_runtime(args)
    cfg = sim.SimConfig(
        ebno_db=args.ebno, max_frames=args.frames,
        max_frame_errors=args.max_errors, seed=args.seed, mode=args.mode,
        qbits=args.qbits, step=args.step, profile=profile,
        systematic=args.systematic, n_lim=args.n_lim,
        batch_size=args.batch_size, workers=args.workers)
    stats = sim.run_montecarlo(code, cfg)
    text = stats.to_csv()
    _write_text(args.output, text)
    if args.stats_csv:
        # per-point LLR histograms for the width optimizer
        frames = min(cfg.max_frames, 2000)
        for ebno in args.ebno:
            point_stats = fp.collect_stats(code, tree, ebno, frames,
                                           seed=args.seed,
                                           systematic=args.systematic)
            point_stats.to_csv(f"{args.stats_csv}.{ebno:g}dB.csv")
    if args.output not in (None, "-"):
        _summary(args, f"wrote {len(stats.points)} sweep points to "
                       f"{args.output}",
                 points=len(stats.points), output=args.output)
    return 0


def cmd_hwreport(args):
    code, tree, profile = _load_runtime(args, need_profile=True)
    cen = cons.census(tree)
    unbal = hw.unbalanced_schedule(tree, profile)
    period = 1.0 / args.fclk
    if args.period_from_depth:
        delays = hw.calibrate(tree, profile, period, args.period_from_depth)
    else:
        delays = hw.DelayModel()
    sched = hw.schedule_pipeline(tree, profile, delays, period)
    report = hw.cost_report(sched, cen, args.fclk, power=args.power)
    _write_text(args.output,
                report.to_json(unbalanced_llr_buffer_bits=unbal.llr_buffer_bits,
                               unbalanced_psul_buffer_bits=unbal.psul_buffer_bits,
                               unbalanced_depth=unbal.depth) + "\n")
    if not args.quiet:
        out = sys.stdout if args.output not in (None, "-") else sys.stderr
        out.write(hw.render_buffer_table(unbal, sched) + "\n")
        out.write(cen.render() + "\n")
    return 0


def cmd_sweep_step(args):
    code, tree, _ = _load_runtime(args)
    ebno = args.esno - 10.0 * math.log10(code.rate)
    rows = ["step,frames,frame_errors,fer"]
    best = (None, None)
    for step in args.steps:
        cfg = sim.SimConfig(ebno_db=(ebno,), max_frames=args.frames,
                            max_frame_errors=args.max_errors, seed=args.seed,
                            mode="fixed", qbits=args.qbits, step=step,
                            workers=args.workers)
        point = sim.run_montecarlo(code, cfg).points[ebno]
        fer = point.fer()
        rows.append(f"{step:.10g},{point.frames},{point.frame_errors},{fer:.10g}")
        if best[1] is None or fer < best[1]:
            best = (step, fer)
    _write_text(args.output, "\n".join(rows) + "\n")
    _summary(args, f"lowest FER {best[1]:.3g} at step {best[0]:g} "
                   f"({args.esno:g} dB Es/No, Q={args.qbits})",
             best_step=best[0], best_fer=best[1], esno_db=args.esno,
             qbits=args.qbits)
    return 0


# ---------------------------------------------------------------------------
# Parser.
# ---------------------------------------------------------------------------

def build_parser():
    top = argparse.ArgumentParser(
        prog="polarsc",
        description="Polar-code construction, SC decoding, and simulation")
    sub = top.add_subparsers(dest="command", required=True)

    def common(p, code=True):
        p.add_argument("--quiet", action="store_true", help="suppress summaries")
        p.add_argument("--json", action="store_true",
                       help="machine-readable summaries")
        p.add_argument("--seed", type=int, default=_default_seed(),
                       help=f"RNG seed (default ${SEED_ENV} or 0)")
        p.add_argument("--n-lim", type=int, default=cons.N_LIM_DEFAULT,
                       help="largest SPC/REP segment (default 32)")
        if code:
            p.add_argument("--code", required=True, help="frozen-set (.pc) file")

    p = sub.add_parser("construct", help="build a frozen set")
    common(p, code=False)
    p.add_argument("-N", type=int, required=True, help="block length")
    p.add_argument("-K", type=int, required=True, help="payload bits")
    p.add_argument("--snr", type=float, required=True, help="design Es/No in dB")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(run=cmd_construct)

    p = sub.add_parser("encode", help="encode hex payload lines")
    common(p)
    p.add_argument("-i", "--input", default="-", help="hex payload lines")
    p.add_argument("-o", "--output", default="-")
    p.add_argument("--non-systematic", dest="systematic", action="store_false")
    p.set_defaults(run=cmd_encode)

    p = sub.add_parser("decode", help="decode received frames")
    common(p)
    p.add_argument("-i", "--input", default="-",
                   help="hex codeword lines, or LLR lines with --llr")
    p.add_argument("-o", "--output", default="-")
    p.add_argument("--llr", action="store_true",
                   help="input lines are N whitespace-separated LLRs")
    p.add_argument("--mode", choices=("float", "fixed", "aq"), default="float")
    p.add_argument("--profile", help=".aq width profile (aq mode)")
    p.add_argument("--qbits", type=int, default=fp.DEFAULT_WIDTH)
    p.add_argument("--step", type=float, default=fp.DEFAULT_STEP)
    p.add_argument("--non-systematic", dest="systematic", action="store_false")
    p.set_defaults(run=cmd_decode)

    p = sub.add_parser("profile-aq", help="measure stats and fit a width profile")
    common(p)
    p.add_argument("--ebno", type=float, default=6.5, help="Eb/No in dB")
    p.add_argument("--frames", type=int, default=2000)
    p.add_argument("--base", type=int, default=fp.DEFAULT_WIDTH)
    p.add_argument("--budget", type=float, default=0.05,
                   help="per-edge entropy loss allowance in bits")
    p.add_argument("--step", type=float, default=fp.DEFAULT_STEP)
    p.add_argument("--stats-csv", help="also dump histograms")
    p.add_argument("--non-systematic", dest="systematic", action="store_false")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(run=cmd_profile_aq)

    p = sub.add_parser("simulate", help="Monte-Carlo error-rate sweep")
    common(p)
    p.add_argument("--ebno", type=parse_sweep, required=True,
                   help="Eb/No sweep, e.g. 5:0.5:8")
    p.add_argument("--mode", choices=sim.MODES, default="float")
    p.add_argument("--profile", help=".aq width profile (aq mode)")
    p.add_argument("--qbits", type=int, default=fp.DEFAULT_WIDTH)
    p.add_argument("--step", type=float, default=fp.DEFAULT_STEP)
    p.add_argument("--frames", type=int, default=100000, help="max frames/point")
    p.add_argument("--max-errors", type=int, default=100,
                   help="stop a point after this many frame errors")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--batch-size", type=int, default=1024)
    p.add_argument("--non-systematic", dest="systematic", action="store_false")
    p.add_argument("--stats-csv", metavar="PREFIX",
                   help="dump per-point LLR histograms to PREFIX.<ebno>dB.csv")
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(run=cmd_simulate)

    p = sub.add_parser("hwreport", help="pipeline schedule and cost report")
    common(p)
    p.add_argument("--fclk", type=float, default=1.2e9, help="clock in Hz")
    p.add_argument("--power", type=float, help="total power in watts")
    p.add_argument("--period-from-depth", type=int, metavar="DEPTH",
                   help="calibrate delays so the pipeline depth equals DEPTH")
    p.add_argument("--profile", help=".aq width profile")
    p.add_argument("--qbits", type=int, default=fp.DEFAULT_WIDTH,
                   help="uniform width when no profile is given")
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(run=cmd_hwreport)

    p = sub.add_parser("sweep-step", help="sweep the channel quantizer step")
    common(p)
    p.add_argument("--esno", type=float, default=6.5, help="Es/No in dB")
    p.add_argument("--steps", type=parse_sweep, default=parse_sweep("0.25:0.25:2"))
    p.add_argument("--qbits", type=int, default=fp.DEFAULT_WIDTH)
    p.add_argument("--frames", type=int, default=20000)
    p.add_argument("--max-errors", type=int, default=200)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(run=cmd_sweep_step)

    return top


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.run(args)
    except (ValueError, OSError) as exc:
        print(f"polarsc: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
