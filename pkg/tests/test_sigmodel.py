"""Tests for constellations, pulse vectors, and the AWGN channel."""

import math

import numpy as np
import pytest

from phasevb.sigmodel import (
    Batch,
    ChannelParams,
    Constellation,
    build_pulse,
    make_constellation,
    snr_to_noise_variance,
    transmit,
)


def _rng(seed=0):
    return np.random.Generator(np.random.Philox(key=[seed, 0xABCD]))


class TestMakeConstellation:
    def test_qpsk_convention(self):
        c = make_constellation("psk", 4)
        expected = np.exp(1j * np.array([np.pi / 4, 3 * np.pi / 4, 5 * np.pi / 4, 7 * np.pi / 4]))
        np.testing.assert_allclose(c.symbols, expected, atol=1e-15)
        np.testing.assert_allclose(c.priors, 0.25)
        assert c.name == "psk4"

    def test_bpsk_is_plus_minus_one(self):
        c = make_constellation("psk", 2)
        np.testing.assert_allclose(c.symbols, [1.0, -1.0], atol=1e-15)

    def test_qam16_grid_and_energy(self):
        c = make_constellation("qam", 16)
        assert c.order == 16
        scaled = c.symbols * math.sqrt(10.0)
        levels = sorted(set(np.round(scaled.real, 9)))
        assert levels == [-3.0, -1.0, 1.0, 3.0]
        assert np.mean(np.abs(c.symbols) ** 2) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("order", [16, 64])
    def test_qam_gray_one_bit_adjacency(self, order):
        c = make_constellation("qam", order)
        scale = math.sqrt((order - 1) * 2.0 / 3.0)
        pts = c.symbols * scale
        for i in range(order):
            for j in range(i + 1, order):
                if abs(abs(pts[i] - pts[j]) - 2.0) < 1e-9:
                    xor = i ^ j
                    assert xor & (xor - 1) == 0, f"indices {i},{j} differ in >1 bit"

    @pytest.mark.parametrize("kind,order", [("qam", 8), ("qam", 2), ("psk", 1), ("qam", 36), ("pam", 4)])
    def test_rejects_unsupported(self, kind, order):
        with pytest.raises(ValueError):
            make_constellation(kind, order)

    def test_constellation_invariants_enforced(self):
        with pytest.raises(ValueError):
            Constellation(symbols=np.array([1.0 + 0j, -1.0 + 0j]), priors=np.array([0.6, 0.6]))
        with pytest.raises(ValueError):
            Constellation(symbols=np.array([2.0 + 0j, -2.0 + 0j]), priors=np.array([0.5, 0.5]))


class TestBuildPulse:
    def test_single_tap(self):
        p = build_pulse([1.0], 0.0)
        np.testing.assert_allclose(p.g, [1.0 + 0j], atol=1e-15)

    def test_quarter_turn(self):
        p = build_pulse([1.0, 1.0], np.pi / 2)
        np.testing.assert_allclose(p.g, [1j, -1.0 + 0j], atol=1e-15)

    def test_energy(self):
        p = build_pulse([2.0, 1.0], 0.0)
        np.testing.assert_allclose(p.g, [2.0, 1.0], atol=1e-15)
        assert p.energy == 5.0
        assert np.sum(np.abs(p.g) ** 2) == pytest.approx(5.0, rel=1e-15)

    def test_rejects_bad_pulse(self):
        with pytest.raises(ValueError):
            build_pulse([], 0.0)
        with pytest.raises(ValueError):
            build_pulse([1.0, 0.0], 0.0)
        with pytest.raises(ValueError):
            build_pulse([1.0, -1.0], 0.0)


class TestSnrMapping:
    def test_unit_configuration(self):
        c = make_constellation("psk", 4)
        p = build_pulse([1.0], 0.0)
        assert snr_to_noise_variance(0.0, c, p) == pytest.approx(1.0, rel=1e-12)
        assert snr_to_noise_variance(10.0, c, p) == pytest.approx(0.1, rel=1e-12)
        assert snr_to_noise_variance(-10.0, c, p) == pytest.approx(10.0, rel=1e-12)

    def test_default_pulse_preserves_mapping(self):
        # ||g||^2/n = 1 for the all-ones pulse, so r = 10^(-snr/10) still.
        c = make_constellation("psk", 4)
        p = build_pulse([1.0] * 4, np.pi / 2)
        assert snr_to_noise_variance(5.0, c, p) == pytest.approx(10 ** (-0.5), rel=1e-12)


class TestTransmit:
    def setup_method(self):
        self.c = make_constellation("psk", 4)
        self.p = build_pulse([1.0, 1.0, 1.0, 1.0], np.pi / 2)

    def test_noiseless_limit(self):
        ch = ChannelParams(phi=0.7, r=1e-30)
        b = transmit(self.c, self.p, ch, 8, None, _rng(1))
        clean = self.c.symbols[b.truth][:, None] * self.p.g[None, :] * np.exp(1j * 0.7)
        np.testing.assert_allclose(b.observations, clean, atol=1e-13)

    def test_pilot_noise_moment(self):
        c = self.c
        p = build_pulse([1.0], 0.0)
        r = 0.8
        ch = ChannelParams(phi=0.0, r=r)
        pilots = {i: 0 for i in range(100_000)}
        b = transmit(c, p, ch, 100_000, pilots, _rng(2))
        err = b.observations[:, 0] - c.symbols[0]
        assert np.mean(np.abs(err) ** 2) == pytest.approx(r, rel=0.02)

    def test_seed_determinism(self):
        ch = ChannelParams(phi=0.2, r=0.5)
        b1 = transmit(self.c, self.p, ch, 50, {0: 1}, _rng(3))
        b2 = transmit(self.c, self.p, ch, 50, {0: 1}, _rng(3))
        np.testing.assert_array_equal(b1.observations, b2.observations)
        np.testing.assert_array_equal(b1.truth, b2.truth)

    def test_phase_offset_is_pure_rotation(self):
        # Pathwise identity, not merely in distribution; the only slack
        # is the rounding of exp(1j*(phi+delta)) vs the two-factor form.
        r = 2.0
        delta = 0.9
        b1 = transmit(self.c, self.p, ChannelParams(phi=0.3, r=r), 40, None, _rng(4))
        b2 = transmit(self.c, self.p, ChannelParams(phi=0.3 + delta, r=r), 40, None, _rng(4))
        np.testing.assert_allclose(
            b2.observations, b1.observations * np.exp(1j * delta), rtol=1e-13, atol=1e-13
        )

    def test_label_frequencies(self):
        ch = ChannelParams(phi=0.0, r=1.0)
        b = transmit(self.c, self.p, ch, 100_000, None, _rng(5))
        counts = np.bincount(b.truth, minlength=4)
        # 3-sigma multinomial bound around 25000
        sigma = np.sqrt(100_000 * 0.25 * 0.75)
        assert np.all(np.abs(counts - 25_000) < 3 * sigma)

    def test_noise_covariance(self):
        r = 1.7
        ch = ChannelParams(phi=0.0, r=r)
        pilots = {i: 0 for i in range(100_000)}
        p = build_pulse([1.0], 0.0)
        b = transmit(self.c, p, ch, 100_000, pilots, _rng(6))
        w = b.observations[:, 0] - self.c.symbols[0]
        assert np.var(w.real) == pytest.approx(r / 2, rel=0.02)
        assert np.var(w.imag) == pytest.approx(r / 2, rel=0.02)
        assert abs(np.mean(w.real * w.imag)) < 0.02 * r

    def test_validation(self):
        ch = ChannelParams(phi=0.0, r=1.0)
        with pytest.raises(ValueError):
            transmit(self.c, self.p, ch, 0, None, _rng(7))
        with pytest.raises(ValueError):
            transmit(self.c, self.p, ch, 4, {7: 0}, _rng(7))
        with pytest.raises(ValueError):
            transmit(self.c, self.p, ch, 4, {0: 9}, _rng(7))
        with pytest.raises(ValueError):
            transmit(self.c, self.p, ch, 4, None, None)


class TestTypes:
    def test_channel_params_validation(self):
        with pytest.raises(ValueError):
            ChannelParams(phi=0.0, r=0.0)
        with pytest.raises(ValueError):
            ChannelParams(phi=0.0, r=-1.0)
        assert ChannelParams(phi=3 * np.pi, r=1.0).phi == pytest.approx(np.pi)

    def test_batch_validation(self):
        obs = np.zeros((3, 2), dtype=complex)
        with pytest.raises(ValueError):
            Batch(observations=obs, truth=np.array([0, 1]))
        with pytest.raises(ValueError):
            Batch(observations=obs, pilots={5: 0})
        b = Batch(observations=obs, truth=np.array([0, 1, 2]), pilots={0: 0})
        assert b.k == 3 and b.n == 2
