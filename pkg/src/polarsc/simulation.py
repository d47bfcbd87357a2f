"""
Link-level Monte-Carlo harness: LFSR data source, systematic polar
encoder, BPSK over AWGN, LLR demapping/quantization, shortcut SC
decoding, and error statistics.

Reproducibility contract: every frame's data bits and noise derive only
from (seed, frame index) through counter-based generators, frames are
processed in fixed-size batches, and early stopping is decided at batch
boundaries in batch order.  Results are therefore byte-identical for
any worker count.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import codec
from . import construction as cons
from . import fixedpoint as fp

DEFAULT_LFSR_DEGREE = 31
DEFAULT_LFSR_TAPS = (31, 28)   # primitive: x^31 + x^28 + 1


class LfsrSource:
    """Fibonacci linear feedback shift register over GF(2).

    ``taps`` lists the polynomial exponents with nonzero coefficients
    (the implicit +1 excluded); a primitive polynomial gives the maximal
    period 2**degree - 1.  The all-zero state is forbidden.
    """

    def __init__(self, degree=DEFAULT_LFSR_DEGREE, taps=DEFAULT_LFSR_TAPS):
        if not taps or max(taps) != degree or min(taps) < 1:
            raise ValueError(f"taps {taps} do not fit degree {degree}")
        self.degree = degree
        self.taps = tuple(sorted(taps, reverse=True))

    def seed_states(self, raw):
        """Map arbitrary 64-bit values to valid (nonzero) states."""
        states = np.asarray(raw, dtype=np.uint64) & np.uint64((1 << self.degree) - 1)
        return np.where(states == 0, np.uint64(1), states)

    def step(self, states):
        """Advance each state once; returns (output bits, new states)."""
        out = (states & np.uint64(1)).astype(np.uint8)
        fb = np.zeros_like(states)
        for t in self.taps:
            fb ^= states >> np.uint64(self.degree - t)
        fb &= np.uint64(1)
        new = (states >> np.uint64(1)) | (fb << np.uint64(self.degree - 1))
        return out, new

    def generate(self, states, nbits):
        """Generate ``nbits`` output bits per state; shape (len(states), nbits)."""
        states = np.asarray(states, dtype=np.uint64)
        if len(self.taps) == 2 and self.taps[1] >= (self.degree + 1) // 2:
            return self._generate_blocked(states, nbits)
        out = np.empty((states.shape[0], nbits), dtype=np.uint8)
        for k in range(nbits):
            out[:, k], states = self.step(states)
        return out

    def _generate_blocked(self, states, nbits):
        # Two-term polynomial x^L + x^t + 1: the register holds the next
        # L outputs, and the L outputs after that are s[k] ^ s[k+L-t],
        # so whole register loads can be advanced with two shifted XORs.
        L = self.degree
        shift = np.uint64(L - self.taps[1])
        mask = np.uint64((1 << L) - 1)
        low = np.uint64((1 << int(shift)) - 1)
        cols = np.arange(L, dtype=np.uint64)
        out = np.empty((states.shape[0], nbits), dtype=np.uint8)
        for k0 in range(0, nbits, L):
            bits = ((states[:, None] >> cols) & np.uint64(1)).astype(np.uint8)
            out[:, k0:k0 + L] = bits[:, : nbits - k0]
            states = (states ^ (states >> shift)) & mask
            states ^= (states & low) << np.uint64(L - int(shift))
        return out


def _splitmix64(x):
    mask = np.uint64(0xFFFFFFFFFFFFFFFF)
    x = (x + np.uint64(0x9E3779B97F4A7C15)) & mask
    x = ((x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & mask
    x = ((x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & mask
    return x ^ (x >> np.uint64(31))


def lfsr_frame_bits(seed, first_frame, nframes, nbits, source=None):
    """Per-frame pseudo-random payloads, keyed by (seed, frame index)."""
    source = source or LfsrSource()
    idx = np.arange(first_frame, first_frame + nframes, dtype=np.uint64)
    raw = _splitmix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) ^ _splitmix64(idx))
    return source.generate(source.seed_states(raw), nbits)


def batch_generator(seed, point_index, batch_index):
    """Counter-based normal sampler for one (sweep point, batch) cell."""
    key = (int(seed) & 0xFFFFFFFFFFFFFFFF, int(point_index))
    return np.random.Generator(np.random.Philox(key=key,
                                                counter=int(batch_index) << 64))


def bpsk_map(bits):
    """Antipodal mapping: bit 0 -> +1, bit 1 -> -1."""
    return 1.0 - 2.0 * np.asarray(bits, dtype=np.float64)


def awgn(symbols, sigma2, rng):
    """Add white Gaussian noise of variance ``sigma2``."""
    if sigma2 < 0:
        raise ValueError(f"noise variance must be >= 0, got {sigma2}")
    if sigma2 == 0:
        return np.array(symbols, dtype=np.float64, copy=True)
    return symbols + math.sqrt(sigma2) * rng.standard_normal(np.shape(symbols))


def ebno_to_sigma2(ebno_db, rate):
    """Noise variance for unit-energy BPSK at a given Eb/No and code rate.

    sigma^2 = 1 / (2 R 10^(Eb/No / 10)); Es/No relates as Es/No = R Eb/No.
    """
    if not 0 < rate <= 1:
        raise ValueError(f"rate must be in (0, 1], got {rate}")
    if not math.isfinite(ebno_db):
        raise ValueError(f"Eb/No must be finite, got {ebno_db}")
    return 1.0 / (2.0 * rate * 10.0 ** (ebno_db / 10.0))


def uncoded_ber(ebno_db):
    """Analytic BPSK bit error rate: the Gaussian tail at sqrt(2 Eb/No)."""
    return 0.5 * math.erfc(math.sqrt(10.0 ** (ebno_db / 10.0)))


# ---------------------------------------------------------------------------
# Monte-Carlo runner.
# ---------------------------------------------------------------------------

MODES = ("float", "fixed", "aq")


@dataclass(frozen=True)
class SimConfig:
    """Sweep description for ``run_montecarlo``."""

    ebno_db: tuple
    max_frames: int
    max_frame_errors: int = 100
    seed: int = 0
    mode: str = "float"
    qbits: int = fp.DEFAULT_WIDTH
    step: float = fp.DEFAULT_STEP
    profile: fp.AqProfile = None
    systematic: bool = True
    n_lim: int = cons.N_LIM_DEFAULT
    batch_size: int = 512
    workers: int = 1

    def __post_init__(self):
        if not self.ebno_db:
            raise ValueError("Eb/No sweep must not be empty")
        if self.max_frames < 1:
            raise ValueError("max_frames must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "aq" and self.profile is None:
            raise ValueError("aq mode needs a width profile")


@dataclass
class PointStats:
    """Error counts accumulated at one sweep point."""

    frames: int = 0
    bit_errors: int = 0
    frame_errors: int = 0

    def add(self, frames, bit_errors, frame_errors):
        self.frames += frames
        self.bit_errors += bit_errors
        self.frame_errors += frame_errors

    def ber(self, k):
        return self.bit_errors / (self.frames * k) if self.frames else 0.0

    def fer(self):
        return self.frame_errors / self.frames if self.frames else 0.0

    def _ci(self, p, n):
        # normal-approximation 95% half-width
        return 1.96 * math.sqrt(p * (1.0 - p) / n) if n else 0.0

    def ber_ci(self, k):
        return self._ci(self.ber(k), self.frames * k)

    def fer_ci(self):
        return self._ci(self.fer(), self.frames)


@dataclass
class ErrorStats:
    """Per-Eb/No error statistics for one simulation run."""

    K: int
    points: dict = field(default_factory=dict)  # ebno_db -> PointStats

    def merge(self, other):
        if other.K != self.K:
            raise ValueError("cannot merge stats for different payload sizes")
        for ebno, stats in other.points.items():
            mine = self.points.setdefault(ebno, PointStats())
            mine.add(stats.frames, stats.bit_errors, stats.frame_errors)

    def to_csv(self, path=None):
        lines = ["ebno_db,frames,bit_errors,frame_errors,ber,fer,ber_ci,fer_ci"]
        for ebno in sorted(self.points):
            p = self.points[ebno]
            lines.append(",".join([
                f"{ebno:.10g}", str(p.frames), str(p.bit_errors),
                str(p.frame_errors), f"{p.ber(self.K):.10g}",
                f"{p.fer():.10g}", f"{p.ber_ci(self.K):.10g}",
                f"{p.fer_ci():.10g}",
            ]))
        text = "\n".join(lines) + "\n"
        if path is not None:
            with open(path, "w") as f:
                f.write(text)
        return text


_RUNTIME = None


def _init_runtime(code, cfg):
    global _RUNTIME
    tree = cons.build_shortcut_tree(code, min(cfg.n_lim, code.N))
    if cfg.mode == "float":
        profile, width = None, None
    elif cfg.mode == "fixed":
        profile = fp.AqProfile.uniform(tree, cfg.qbits)
        width = cfg.qbits
    else:
        profile, width = cfg.profile, cfg.profile.root_width
    _RUNTIME = (code, cfg, tree, profile, width)


def _run_batch(args):
    point_index, ebno_db, batch_index = args
    code, cfg, tree, profile, width = _RUNTIME
    first = batch_index * cfg.batch_size
    nframes = min(cfg.batch_size, cfg.max_frames - first)
    sigma2 = ebno_to_sigma2(ebno_db, code.rate)

    data = lfsr_frame_bits(cfg.seed, first, nframes, code.K)
    x = codec.systematic_encode_batch(data, code) if cfg.systematic \
        else codec.encode_batch(data, code)
    rng = batch_generator(cfg.seed, point_index, batch_index)
    y = awgn(bpsk_map(x), sigma2, rng)
    llr = fp.demap_llr(y, sigma2)
    if width is not None:
        llr = fp.vquantize(llr, width, cfg.step)

    # float32 halves decode bandwidth; quantized magnitudes stay exact
    x_hat = codec.decode_tree_batch(llr.astype(np.float32), tree, profile)
    if cfg.systematic:
        d_hat = x_hat[:, code.info_set]
    else:
        d_hat = codec.polar_transform(x_hat)[:, code.info_set]
    wrong = d_hat != data
    return nframes, int(wrong.sum()), int(wrong.any(axis=1).sum())


def run_montecarlo(code, cfg):
    """Sweep Eb/No points, decoding frames in deterministic batches.

    Each point stops at ``max_frames`` or once ``max_frame_errors``
    frame errors have accumulated at a batch boundary, whichever comes
    first.  Identical (seed, config) give identical statistics for any
    ``workers`` value.
    """
    stats = ErrorStats(code.K)
    n_batches = -(-cfg.max_frames // cfg.batch_size)

    def consume(point):
        point_index, ebno_db = point
        acc = stats.points.setdefault(ebno_db, PointStats())
        jobs = ((point_index, ebno_db, b) for b in range(n_batches))
        if cfg.workers > 1:
            with ProcessPoolExecutor(cfg.workers, initializer=_init_runtime,
                                     initargs=(code, cfg)) as pool:
                for res in pool.map(_run_batch, jobs):
                    acc.add(*res)
                    if acc.frame_errors >= cfg.max_frame_errors:
                        break
        else:
            _init_runtime(code, cfg)
            for job in jobs:
                acc.add(*_run_batch(job))
                if acc.frame_errors >= cfg.max_frame_errors:
                    break

    for point in enumerate(cfg.ebno_db):
        consume(point)
    return stats


def run_uncoded_ber(ebno_db, nbits, seed=0, batch_size=1 << 20):
    """Measured BPSK BER over AWGN, for channel sanity checks."""
    sigma2 = ebno_to_sigma2(ebno_db, 1.0)
    errors = 0
    done = 0
    batch = 0
    while done < nbits:
        n = min(batch_size, nbits - done)
        rng = batch_generator(seed, 0, batch)
        bits = (rng.random(n) < 0.5).astype(np.uint8)
        y = awgn(bpsk_map(bits), sigma2, rng)
        errors += int((fp.vhard(fp.demap_llr(y, sigma2)) != bits).sum())
        done += n
        batch += 1
    return errors / nbits
