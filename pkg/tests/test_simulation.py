import math

import numpy as np
import pytest

from polarsc import construction as cons
from polarsc import fixedpoint as fp
from polarsc import simulation as sim


class TestLfsr:
    def test_full_period_small_degrees(self):
        # primitive polynomials reach every nonzero state
        for degree, taps, period in ((4, (4, 3), 15), (7, (7, 6), 127)):
            src = sim.LfsrSource(degree, taps)
            state = np.array([1], dtype=np.uint64)
            seen = set()
            for _ in range(period):
                assert int(state[0]) != 0
                assert int(state[0]) not in seen
                seen.add(int(state[0]))
                _, state = src.step(state)
            assert int(state[0]) == 1  # wrapped around

    def test_blocked_generation_matches_stepping(self):
        for degree, taps in ((31, (31, 28)), (4, (4, 3))):
            src = sim.LfsrSource(degree, taps)
            states = src.seed_states(sim._splitmix64(np.arange(1, 33, dtype=np.uint64)))
            fast = src.generate(states.copy(), 173)
            slow = np.empty_like(fast)
            st = states.copy()
            for k in range(173):
                slow[:, k], st = src.step(st)
            assert np.array_equal(fast, slow)

    def test_zero_seed_is_remapped(self):
        src = sim.LfsrSource()
        assert int(src.seed_states(np.array([0], dtype=np.uint64))[0]) != 0

    def test_bad_taps(self):
        with pytest.raises(ValueError):
            sim.LfsrSource(8, (4, 3))

    def test_frame_bits_depend_only_on_seed_and_index(self):
        a = sim.lfsr_frame_bits(7, 100, 5, 50)
        b = sim.lfsr_frame_bits(7, 102, 3, 50)
        assert np.array_equal(a[2:], b)


class TestChannel:
    def test_bpsk_mapping(self):
        assert sim.bpsk_map(np.array([0, 1])).tolist() == [1.0, -1.0]

    def test_bpsk_round_trip(self):
        bits = np.array([0, 1, 1, 0], dtype=np.uint8)
        assert np.array_equal(fp.vhard(sim.bpsk_map(bits)), bits)

    def test_zero_noise_is_exact(self):
        rng = sim.batch_generator(0, 0, 0)
        s = sim.bpsk_map(np.array([0, 1, 0]))
        assert np.array_equal(sim.awgn(s, 0.0, rng), s)

    def test_noise_moments(self):
        rng = sim.batch_generator(1, 0, 0)
        n = sim.awgn(np.zeros(10 ** 6), 0.25, rng)
        assert abs(n.mean()) < 4 * 0.5 / 1e3
        assert abs(n.var() / 0.25 - 1.0) < 0.01

    def test_ebno_conversion(self):
        assert sim.ebno_to_sigma2(0.0, 1.0) == pytest.approx(0.5)
        assert sim.ebno_to_sigma2(10 * math.log10(2), 1.0) == pytest.approx(0.25)
        # Es/No = R * Eb/No: halving the rate doubles the allowed variance
        assert sim.ebno_to_sigma2(3.0, 0.5) == pytest.approx(
            2 * sim.ebno_to_sigma2(3.0, 1.0))

    def test_validation(self):
        with pytest.raises(ValueError):
            sim.ebno_to_sigma2(1.0, 0.0)
        with pytest.raises(ValueError):
            sim.ebno_to_sigma2(math.inf, 0.5)
        with pytest.raises(ValueError):
            sim.awgn(np.zeros(3), -1.0, sim.batch_generator(0, 0, 0))

    def test_uncoded_ber_against_gaussian_tail(self):
        for ebno in (2.0, 4.0):
            p = sim.uncoded_ber(ebno)
            n = 10 ** 6
            measured = sim.run_uncoded_ber(ebno, n, seed=3)
            se = math.sqrt(p * (1 - p) / n)
            assert abs(measured - p) < 3 * se


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            sim.SimConfig(ebno_db=(), max_frames=10)
        with pytest.raises(ValueError):
            sim.SimConfig(ebno_db=(1.0,), max_frames=0)
        with pytest.raises(ValueError):
            sim.SimConfig(ebno_db=(1.0,), max_frames=10, mode="bogus")
        with pytest.raises(ValueError):
            sim.SimConfig(ebno_db=(1.0,), max_frames=10, mode="aq")


@pytest.fixture(scope="module")
def code():
    return cons.construct_frozen_set(6, 48, 4.0)


class TestMonteCarlo:

    def test_high_snr_is_error_free(self, code):
        cfg = sim.SimConfig(ebno_db=(20.0,), max_frames=500, seed=0,
                            batch_size=128)
        stats = sim.run_montecarlo(code, cfg)
        point = stats.points[20.0]
        assert point.frames == 500
        assert point.frame_errors == 0 and point.bit_errors == 0
        assert "20,500,0,0,0,0,0,0" in stats.to_csv()

    def test_fer_bounds_ber(self, code):
        cfg = sim.SimConfig(ebno_db=(2.0,), max_frames=2000,
                            max_frame_errors=10 ** 9, seed=1, batch_size=256)
        p = sim.run_montecarlo(code, cfg).points[2.0]
        assert 0 < p.fer() <= 1.0
        assert p.ber(code.K) <= p.fer()
        assert p.frame_errors <= p.frames
        assert p.bit_errors <= p.frames * code.K

    def test_early_stop_counts_whole_batches(self, code):
        cfg = sim.SimConfig(ebno_db=(1.0,), max_frames=10 ** 6,
                            max_frame_errors=5, seed=2, batch_size=64)
        p = sim.run_montecarlo(code, cfg).points[1.0]
        assert p.frames % 64 == 0
        assert p.frame_errors >= 5
        assert p.frames < 10 ** 6

    def test_worker_count_does_not_change_results(self, code):
        base = dict(ebno_db=(2.0, 3.0), max_frames=1024, max_frame_errors=30,
                    seed=3, batch_size=128)
        serial = sim.run_montecarlo(code, sim.SimConfig(**base, workers=1))
        threaded = sim.run_montecarlo(code, sim.SimConfig(**base, workers=3))
        assert serial.to_csv() == threaded.to_csv()

    def test_modes_share_the_channel(self, code):
        # same seed: the fixed-point run sees the same noise as float
        tree = cons.build_shortcut_tree(code)
        stats = fp.LlrStats()
        base = dict(ebno_db=(3.0,), max_frames=512, max_frame_errors=10 ** 9,
                    seed=4, batch_size=128)
        f = sim.run_montecarlo(code, sim.SimConfig(**base, mode="float"))
        q = sim.run_montecarlo(code, sim.SimConfig(**base, mode="fixed"))
        prof = fp.AqProfile.uniform(tree, 5)
        a = sim.run_montecarlo(code, sim.SimConfig(**base, mode="aq",
                                                   profile=prof))
        assert f.points[3.0].frames == q.points[3.0].frames == 512
        # uniform "aq" profile is plain fixed-point decoding
        assert q.to_csv() == a.to_csv()

    def test_merge_is_additive(self, code):
        cfg = sim.SimConfig(ebno_db=(2.0,), max_frames=256,
                            max_frame_errors=10 ** 9, seed=5, batch_size=64)
        a = sim.run_montecarlo(code, cfg)
        b = sim.run_montecarlo(code, cfg)
        frames = a.points[2.0].frames
        a.merge(b)
        assert a.points[2.0].frames == 2 * frames
