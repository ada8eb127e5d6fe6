"""Tests for constellations, pilot plans, and the phase-noise channel."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pnrx.modem import (
    Bursts,
    ChannelParams,
    Constellation,
    Distributed,
    FramePlan,
    PreamblePostambleOnly,
    apply_channel,
    build_frame,
    ebn0_to_sigma2,
    generate_phase,
    make_plan,
    plan_for_payload,
)


class TestConstellation:
    @pytest.mark.parametrize("name", ["QPSK", "QAM16"])
    def test_unit_average_energy(self, name):
        c = Constellation.by_name(name)
        assert np.mean(np.abs(c.points) ** 2) == pytest.approx(1.0, rel=1e-14)

    @pytest.mark.parametrize("name", ["QPSK", "QAM16"])
    def test_nearest_neighbours_differ_in_one_bit(self, name):
        c = Constellation.by_name(name)
        d = np.abs(c.points[:, None] - c.points[None, :])
        np.fill_diagonal(d, np.inf)
        dmin = d.min()
        for i in range(c.M):
            for j in range(c.M):
                if abs(d[i, j] - dmin) < 1e-9:
                    assert int((c.bits[i] ^ c.bits[j]).sum()) == 1

    @pytest.mark.parametrize("name", ["QPSK", "QAM16"])
    def test_map_demap_round_trip(self, name):
        c = Constellation.by_name(name)
        bits = np.random.default_rng(0).integers(0, 2, 30 * c.bits_per_symbol)
        assert np.array_equal(c.demap_hard(c.map_bits(bits)), bits.astype(np.uint8))

    def test_sizes(self):
        assert Constellation.qpsk().M == 4
        assert Constellation.qpsk().bits_per_symbol == 2
        assert Constellation.qam16().M == 16
        assert Constellation.qam16().bits_per_symbol == 4

    def test_unknown_name_rejected(self):
        with pytest.raises(ValueError):
            Constellation.by_name("8PSK")

    def test_map_rejects_ragged_length(self):
        with pytest.raises(ValueError):
            Constellation.qpsk().map_bits(np.zeros(3, dtype=np.uint8))


class TestPlans:
    def test_distributed_for_payload(self):
        plan = plan_for_payload(Distributed(1, 19), 2000)
        assert plan.total_len == 2106
        assert plan.n_pilots == 106
        assert plan.n_payload == 2000
        # period structure: one pilot then nineteen payload symbols
        assert plan.pilot_mask[0] and not plan.pilot_mask[1:20].any()
        assert plan.pilot_mask[20]

    def test_bursts_for_payload(self):
        plan = plan_for_payload(Bursts(90, 36, 1440, 90), 2000)
        assert plan.total_len == 2216
        assert plan.n_pilots == 216
        assert plan.pilot_mask[:90].all()
        assert plan.pilot_mask[-90:].all()
        # after the preamble: 1440 payload then a 36-symbol pilot burst
        assert not plan.pilot_mask[90 : 90 + 1440].any()
        assert plan.pilot_mask[90 + 1440 : 90 + 1440 + 36].all()

    def test_preamble_postamble_for_payload(self):
        plan = plan_for_payload(PreamblePostambleOnly(45), 2000)
        assert plan.total_len == 2090
        assert plan.n_pilots == 90
        assert plan.pilot_mask[:45].all()
        assert plan.pilot_mask[-45:].all()
        assert not plan.pilot_mask[45:-45].any()

    def test_all_pilot_plan_has_zero_payload(self):
        plan = make_plan(Distributed(1, 0), 128)
        assert plan.n_payload == 0
        assert plan.pilot_mask.all()

    def test_payload_fraction(self):
        plan = plan_for_payload(Distributed(1, 19), 2000)
        assert plan.payload_fraction == pytest.approx(2000 / 2106)

    def test_invalid_descriptors_rejected(self):
        with pytest.raises(ValueError):
            make_plan(PreamblePostambleOnly(40), 60)
        with pytest.raises(ValueError):
            make_plan(Distributed(-1, 5), 10)
        with pytest.raises(ValueError):
            plan_for_payload(Distributed(1, 0), 100)

    @settings(max_examples=120, deadline=None)
    @given(
        st.integers(min_value=1, max_value=8),
        st.integers(min_value=1, max_value=40),
        st.integers(min_value=1, max_value=3000),
    )
    def test_distributed_payload_arithmetic(self, block, gap, n_payload):
        plan = plan_for_payload(Distributed(block, gap), n_payload)
        assert plan.n_payload == n_payload
        # minimality: shaving the last symbol loses a payload position
        # unless it is a pilot, which the construction never leaves trailing
        assert not plan.pilot_mask[-1]

    @settings(max_examples=120, deadline=None)
    @given(
        st.integers(min_value=0, max_value=100),
        st.integers(min_value=1, max_value=50),
        st.integers(min_value=1, max_value=2000),
        st.integers(min_value=0, max_value=100),
        st.integers(min_value=1, max_value=4000),
    )
    def test_bursts_payload_arithmetic(self, pre, bl, bg, post, n_payload):
        plan = plan_for_payload(Bursts(pre, bl, bg, post), n_payload)
        assert plan.n_payload == n_payload


class TestChannel:
    def test_params_validation(self):
        with pytest.raises(ValueError):
            ChannelParams(sigma2=0.0, sigma_delta=0.1)
        with pytest.raises(ValueError):
            ChannelParams(sigma2=0.1, sigma_delta=-0.1)

    def test_initial_phase_uniform(self):
        params = ChannelParams(1.0, 0.0)
        rng = np.random.default_rng(1)
        th0 = np.array([generate_phase(1, params, rng)[0] for _ in range(4000)])
        assert th0.min() >= 0.0 and th0.max() < 2 * math.pi
        assert th0.mean() == pytest.approx(math.pi, abs=0.1)
        # circular resultant of a uniform sample is near zero
        assert abs(np.mean(np.exp(1j * th0))) < 0.05

    def test_increments_are_gaussian_walk(self):
        sd = math.radians(6.0)
        params = ChannelParams(1.0, sd)
        th = generate_phase(200_000, params, np.random.default_rng(2))
        inc = np.diff(th)
        assert inc.std() == pytest.approx(sd, rel=0.01)
        assert abs(inc.mean()) < 4 * sd / math.sqrt(inc.size)
        # excess kurtosis of a Gaussian is zero
        kurt = np.mean(((inc - inc.mean()) / inc.std()) ** 4) - 3.0
        assert abs(kurt) < 0.05

    def test_zero_linewidth_freezes_phase(self):
        th = generate_phase(50, ChannelParams(1.0, 0.0), np.random.default_rng(3))
        assert np.allclose(th, th[0])

    def test_noise_variance_per_component(self):
        params = ChannelParams(0.3, 0.0)
        c = np.ones(100_000, dtype=np.complex128)
        th = np.zeros(100_000)
        r = apply_channel(c, th, params, np.random.default_rng(4))
        n = r - c
        assert n.real.var() == pytest.approx(0.3, rel=0.02)
        assert n.imag.var() == pytest.approx(0.3, rel=0.02)
        assert abs(n.mean()) < 0.02

    def test_phase_rotation_applied(self):
        params = ChannelParams(1e-12, 0.0)
        c = np.array([1.0 + 0.0j])
        th = np.array([math.pi / 3])
        r = apply_channel(c, th, params, np.random.default_rng(5))
        assert np.angle(r[0]) == pytest.approx(math.pi / 3, abs=1e-5)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            apply_channel(np.ones(3, complex), np.zeros(4), ChannelParams(1.0, 0.0), np.random.default_rng(0))


class TestSnrAccounting:
    def test_reference_value(self):
        # Eb/N0 = 3 dB, rate 1/2, 2 bits/symbol, no pilot overhead: the
        # product rate * bits cancels and sigma2 = 1 / (2 * 10^0.3).
        assert ebn0_to_sigma2(3.0, 0.5, 2, 1.0) == pytest.approx(
            1.0 / (2.0 * 10**0.3), rel=1e-14
        )
        assert ebn0_to_sigma2(3.0, 0.5, 2, 1.0) == pytest.approx(0.2505936, abs=1e-7)

    def test_monotone_in_snr(self):
        s = [ebn0_to_sigma2(x, 0.5, 2, 0.95) for x in (0.0, 2.0, 4.0)]
        assert s[0] > s[1] > s[2]

    def test_pilot_overhead_penalty(self):
        full = ebn0_to_sigma2(3.0, 0.5, 2, 1.0)
        half = ebn0_to_sigma2(3.0, 0.5, 2, 0.5)
        assert half == pytest.approx(2.0 * full, rel=1e-12)

    def test_rejects_bad_arguments(self):
        for bad in (
            dict(code_rate=0.0),
            dict(bits_per_symbol=0),
            dict(payload_fraction=0.0),
            dict(payload_fraction=1.5),
        ):
            kw = dict(code_rate=0.5, bits_per_symbol=2, payload_fraction=1.0)
            kw.update(bad)
            with pytest.raises(ValueError):
                ebn0_to_sigma2(3.0, **kw)


class TestBuildFrame:
    def setup_method(self):
        self.plan = plan_for_payload(Distributed(1, 19), 200)
        self.const = Constellation.qpsk()
        self.bits = np.random.default_rng(10).integers(0, 2, 400).astype(np.uint8)

    def test_payload_positions_carry_mapped_bits(self):
        frame = build_frame(self.plan, self.const, self.bits, np.random.default_rng(1))
        payload = frame.coded_symbols[~self.plan.pilot_mask]
        assert np.array_equal(payload, self.const.map_bits(self.bits))
        assert np.array_equal(frame.payload_bits, self.bits)

    def test_pilots_are_constellation_points(self):
        frame = build_frame(self.plan, self.const, self.bits, np.random.default_rng(1))
        pilots = frame.pilot_values
        assert pilots.shape == (self.plan.n_pilots,)
        d = np.abs(pilots[:, None] - self.const.points[None, :]).min(axis=1)
        assert np.all(d < 1e-14)

    def test_deterministic_given_generator_seed(self):
        f1 = build_frame(self.plan, self.const, self.bits, np.random.default_rng(42))
        f2 = build_frame(self.plan, self.const, self.bits, np.random.default_rng(42))
        assert np.array_equal(f1.coded_symbols, f2.coded_symbols)

    def test_pilot_stream_independent_of_payload_bits(self):
        other = 1 - self.bits
        f1 = build_frame(self.plan, self.const, self.bits, np.random.default_rng(42))
        f2 = build_frame(self.plan, self.const, other, np.random.default_rng(42))
        assert np.array_equal(f1.pilot_values, f2.pilot_values)

    def test_fixed_pilot_symbols_honoured(self):
        pilots = np.full(self.plan.n_pilots, self.const.points[2])
        plan = FramePlan(
            self.plan.total_len, self.plan.pilot_mask, self.plan.descriptor, pilots
        )
        frame = build_frame(plan, self.const, self.bits, np.random.default_rng(0))
        assert np.array_equal(frame.pilot_values, pilots)

    def test_wrong_bit_count_rejected(self):
        with pytest.raises(ValueError):
            build_frame(self.plan, self.const, self.bits[:-2], np.random.default_rng(0))
