import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from umac.ldpc.bp import HardDecision, bp_decode
from umac.phy import (ReceivedFrame, SignatureDictionary, SystemParams, derive_noise_variance,
                      modulate, random_scenario, scenario_from_messages, transmit)
from umac.receiver import (DecodeOutcome, ReceiverConfig, decode, format_trace, inner_loop,
                           per_user_error, subtract_valid)

QUIET = derive_noise_variance(30000, 100, 0.0) * 1e-6


def orthogonal_columns(n_p, J, energy, seed):
    q, _ = np.linalg.qr(np.random.default_rng(seed).standard_normal((n_p, n_p)))
    return np.sqrt(energy) * q[:, :J]


def single_scenario(code, dictionary, rng, ka, sigma2, distinct=True):
    params = SystemParams(ka=ka)
    while True:
        sc = random_scenario(params, code, rng)
        if not distinct or not sc.collisions:
            break
    return sc, transmit(sc, dictionary, sigma2, rng)


class TestConfig:
    @pytest.mark.parametrize("kw", [{"joint_iters": 0}, {"bp_iters_per_mmse": 0},
                                    {"max_outer_iters": 0}, {"llr_clip": 0.0},
                                    {"gamma_min": 0.0}, {"gamma_min": 0.5}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            ReceiverConfig(**kw)

    def test_defaults(self):
        cfg = ReceiverConfig()
        assert (cfg.joint_iters, cfg.bp_iters_per_mmse, cfg.max_outer_iters) == (20, 1, 15)


class TestInnerLoop:
    def test_single_user_noiseless(self, paper_code, paper_dictionary, rng):
        sc, fr = single_scenario(paper_code, paper_dictionary, rng, 1, QUIET)
        S = paper_dictionary.A[:, sorted(sc.active)]
        _, dec, used = inner_loop(fr.Y, S, fr.sigma2, paper_code, ReceiverConfig())
        assert used == 1
        assert dec.syndrome_ok.all()
        assert np.array_equal(dec.bits[0], sc.codewords[0])

    def test_pure_noise(self, paper_code, paper_dictionary, rng):
        Y = 100.0 * rng.standard_normal((84, 357))
        S = paper_dictionary.A[:, :3]
        cfg = ReceiverConfig(joint_iters=6)
        _, dec, used = inner_loop(Y, S, 1e4, paper_code, cfg)
        assert not dec.syndrome_ok.any()
        assert used == cfg.joint_iters

    def test_orthogonal_users_decouple(self, paper_code, rng):
        energy, sigma2 = 84.0, 84.0 / 1.1**2  # single-user LLRs at sigma_eff = 1.1
        S = orthogonal_columns(84, 2, energy, seed=5)
        words = paper_code.encode(rng.integers(0, 2, (2, 88)))
        Y = S @ modulate(words) + np.sqrt(sigma2) * rng.standard_normal((84, 357))
        cfg = ReceiverConfig(joint_iters=4)
        state, _, used = inner_loop(Y, S, sigma2, paper_code, cfg)
        assert used == 4
        for j in range(2):
            llr = 2 * S[:, j] @ Y / sigma2
            _, alone, _ = bp_decode(paper_code, llr, max_iters=4, early_stop=False)
            assert np.allclose(state.c2v[j], alone.c2v[0], rtol=0, atol=1e-9)
            assert np.allclose(state.from_mac[j], np.clip(llr, -30, 30), rtol=0, atol=1e-9)

    def test_orthogonal_users_decoded(self, paper_code, rng):
        S = orthogonal_columns(84, 2, 84.0, seed=6)
        words = paper_code.encode(rng.integers(0, 2, (2, 88)))
        Y = S @ modulate(words) + 0.5 * rng.standard_normal((84, 357))
        _, dec, _ = inner_loop(Y, S, 0.25, paper_code, ReceiverConfig())
        assert dec.syndrome_ok.all()
        assert np.array_equal(dec.bits, words)


class TestSubtract:
    def test_exact_removal(self, paper_code, paper_dictionary, rng):
        sc, fr = single_scenario(paper_code, paper_dictionary, rng, 1, 0.0)
        S = paper_dictionary.A[:, list(sc.active)]
        dec = HardDecision(sc.codewords.copy(), np.array([True]))
        assert np.allclose(subtract_valid(fr.Y, S, dec), 0.0, atol=1e-9)

    def test_empty_valid_set(self, rng):
        Y = rng.standard_normal((4, 6))
        dec = HardDecision(rng.integers(0, 2, (2, 6)).astype(np.uint8), np.array([False, False]))
        out = subtract_valid(Y, rng.standard_normal((4, 2)), dec)
        assert np.array_equal(out, Y)

    def test_brute_force(self, rng):
        Y, S = rng.standard_normal((5, 6)), rng.standard_normal((5, 3))
        bits = rng.integers(0, 2, (3, 6)).astype(np.uint8)
        ok = np.array([True, False, True])
        expect = Y.copy()
        for j in (0, 2):
            for i in range(6):
                expect[:, i] -= S[:, j] * (1 - 2 * int(bits[j, i]))
        assert np.allclose(subtract_valid(Y, S, HardDecision(bits, ok)), expect)


class TestDecode:
    def test_ka1_high_snr(self, paper_code, paper_dictionary, rng):
        sc, fr = single_scenario(paper_code, paper_dictionary, rng, 1,
                                 derive_noise_variance(30000, 100, 10.0))
        out = decode(fr, paper_dictionary, paper_code, 1)
        assert len(out.rounds) == 1
        assert out.reason == "all users decoded"
        assert out.message_set() == {sc.messages[0].tobytes()}

    def test_all_noise(self, paper_code, paper_dictionary, rng):
        fr = ReceivedFrame(100.0 * rng.standard_normal((84, 357)), 1e4)
        out = decode(fr, paper_dictionary, paper_code, 3, ReceiverConfig(joint_iters=5))
        assert out.messages == []
        assert out.reason == "no valid codewords"
        assert len(out.rounds) == 1

    def test_collision_redetected(self, paper_code, paper_dictionary):
        # two users on one column whose payloads differ in a single bit; the
        # codewords differ in 36 positions, so BP locks onto one of them
        r = np.random.default_rng(3)
        m = r.integers(0, 2, (2, 100), dtype=np.uint8)
        m[1] = m[0]
        m[1, 15] ^= 1
        sc = scenario_from_messages(m, paper_code, 12)
        assert int((sc.codewords[0] ^ sc.codewords[1]).sum()) == 36
        fr = transmit(sc, paper_dictionary, derive_noise_variance(30000, 100, 2.0), r)
        out = decode(fr, paper_dictionary, paper_code, 2)
        col = int(sc.columns[0])
        assert out.rounds[0].valid == [col]
        assert col in out.rounds[1].detected
        assert per_user_error(sc, out) == 0.0

    def test_deterministic(self, paper_code, paper_dictionary):
        outs = []
        for _ in range(2):
            r = np.random.default_rng(4)
            _, fr = single_scenario(paper_code, paper_dictionary, r, 5,
                                    derive_noise_variance(30000, 100, 1.0), distinct=False)
            outs.append(decode(fr, paper_dictionary, paper_code, 5))
        assert format_trace(outs[0]) == format_trace(outs[1])
        assert [m.tobytes() for m in outs[0].messages] == [m.tobytes() for m in outs[1].messages]

    @settings(max_examples=8, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.floats(-1.0, 3.0))
    def test_list_invariants(self, paper_code, paper_dictionary, seed, ka, ebn0):
        r = np.random.default_rng(seed)
        _, fr = single_scenario(paper_code, paper_dictionary, r, ka,
                                derive_noise_variance(30000, 100, ebn0), distinct=False)
        out = decode(fr, paper_dictionary, paper_code, ka, ReceiverConfig(joint_iters=8))
        assert len(out.messages) <= ka
        assert len(out.message_set()) == len(out.messages)
        detected = set().union(*(set(rd.detected) for rd in out.rounds))
        for m in out.messages:
            assert int("".join(map(str, m[:12])), 2) in detected

    def test_residual_decreases(self, paper_code, paper_dictionary):
        r = np.random.default_rng(11)
        for _ in range(3):
            _, fr = single_scenario(paper_code, paper_dictionary, r, 4, QUIET)
            out = decode(fr, paper_dictionary, paper_code, 4)
            prev = float(np.sum(fr.Y**2))
            for rd in out.rounds:
                if rd.valid:
                    assert rd.residual_energy < prev
                prev = rd.residual_energy

    def test_orthogonal_dictionary_decouples(self, paper_code, rng):
        # 84 orthogonal columns of energy 84: every user sees its own AWGN link
        A = orthogonal_columns(84, 64, 84.0, seed=9)
        d = SignatureDictionary(A, 84.0)
        msgs = rng.integers(0, 2, (3, 94), dtype=np.uint8)
        msgs[:, :6] = [[0, 0, 0, 0, 0, 1], [0, 1, 0, 0, 0, 0], [1, 1, 0, 0, 1, 1]]
        sc = scenario_from_messages(msgs, paper_code, 6)
        sigma2 = 84.0
        fr = transmit(sc, d, sigma2, rng)
        out = decode(fr, d, paper_code, 3, ReceiverConfig(joint_iters=30))
        for k in range(3):
            llr = 2 * A[:, sc.columns[k]] @ fr.Y / sigma2
            single, _, _ = bp_decode(paper_code, llr, max_iters=30)
            got = msgs[k].tobytes() in out.message_set()
            assert got == bool(single.syndrome_ok[0] and np.array_equal(single.bits[0], sc.codewords[k]))

    def test_bad_ka(self, paper_code, paper_dictionary):
        with pytest.raises(ValueError):
            decode(ReceivedFrame(np.zeros((84, 357)), 1.0), paper_dictionary, paper_code, 0)


class TestPerUserError:
    def _scenario(self, paper_code):
        return scenario_from_messages(np.eye(2, 100, dtype=np.uint8), paper_code, 12)

    def test_examples(self, paper_code):
        sc = self._scenario(paper_code)
        both = DecodeOutcome(list(sc.messages))
        assert per_user_error(sc, both) == 0.0
        assert per_user_error(sc, DecodeOutcome()) == 1.0
        assert per_user_error(sc, DecodeOutcome([sc.messages[1]])) == 0.5


def test_trace_format(paper_code, paper_dictionary, rng):
    sc, fr = single_scenario(paper_code, paper_dictionary, rng, 2, QUIET)
    text = format_trace(decode(fr, paper_dictionary, paper_code, 2))
    lines = text.splitlines()
    assert lines[0] == "round,detected,valid,residual_energy"
    rnd, det, val, energy = lines[1].split(",")
    assert rnd == "1"
    assert sorted(int(x) for x in det.split(";")) == sorted(c + 1 for c in sc.active)
    assert float(energy) >= 0.0
