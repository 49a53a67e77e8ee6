import math
from dataclasses import replace

import numpy as np
import pytest

from starsec import channel
from starsec.channel import (
    ChannelFormatError,
    assemble_channels,
    dump_channels,
    effective_cu_channel,
    load_channels,
    pathloss,
    sample_channels,
    steering_vector,
    upa_rows,
    upa_steering,
)
from starsec.metrics import no_ris_profile, star_random_profile
from starsec.scenario import desk_default


class TestSteering:
    def test_broadside_all_ones(self):
        assert np.allclose(steering_vector(0.0, 4), np.ones(4))

    def test_thirty_degrees(self):
        v = steering_vector(math.radians(30.0), 2, spacing=0.5)
        assert v[0] == pytest.approx(1.0)
        assert v[1] == pytest.approx(1j, abs=1e-12)

    def test_unit_modulus(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            v = steering_vector(rng.uniform(-np.pi, np.pi), 16, 0.5)
            assert np.max(np.abs(np.abs(v) - 1.0)) < 1e-12

    def test_upa_factorization(self):
        assert upa_rows(32) == 4
        assert upa_rows(8) == 2
        assert upa_rows(9) == 3
        assert upa_rows(1) == 1

    def test_upa_unit_modulus(self):
        v = upa_steering(0.7, 32, 0.5)
        assert v.shape == (32,)
        assert np.max(np.abs(np.abs(v) - 1.0)) < 1e-12


class TestPathloss:
    def test_reference_at_one_meter(self):
        assert pathloss(1.0, 2.2, 1e-3) == pytest.approx(1e-3)

    def test_inverse_square_decade(self):
        assert pathloss(10.0, 2.0, 1e-3) == pytest.approx(1e-5)

    def test_bs_ris_link_length(self):
        d = 30.0 * math.sqrt(2.0)
        assert pathloss(d, 2.2, 1e-3) == pytest.approx(1e-3 * d ** (-2.2), rel=1e-12)

    def test_below_validity_rejected(self):
        with pytest.raises(ValueError):
            pathloss(0.5, 2.0, 1e-3)


class TestSampling:
    def test_deterministic(self, desk_config, desk_geometry):
        a = sample_channels(desk_config, desk_geometry, 5)
        b = sample_channels(desk_config, desk_geometry, 5)
        for name in ("h_bs_ris", "h_bs_cu", "h_ris_cu", "h_bs_target", "g_cu"):
            assert np.array_equal(getattr(a, name), getattr(b, name))

    def test_shapes(self, desk_config, desk_channels):
        cfg, ch = desk_config, desk_channels
        assert ch.h_bs_ris.shape == (cfg.n_ris_elements, cfg.n_bs_antennas)
        assert ch.h_bs_cu.shape == (cfg.n_comm_users, cfg.n_bs_antennas)
        assert ch.h_ris_cu.shape == (cfg.n_comm_users, cfg.n_ris_elements)
        assert ch.g_cu.shape == (
            cfg.n_comm_users, cfg.n_ris_elements + 1, cfg.n_bs_antennas
        )
        assert ch.g_target.shape == (cfg.n_sense_targets, cfg.n_bs_antennas)

    def test_pure_los_limit(self, desk_geometry):
        cfg = replace(desk_default(), rician_k_db=300.0)
        ch = sample_channels(cfg, desk_geometry, 7)
        d = np.linalg.norm(desk_geometry.cu_positions[0] - desk_geometry.bs_position)
        expected = math.sqrt(pathloss(d, cfg.pathloss_exp_bs_cu, cfg.pathloss_ref))
        assert np.allclose(np.abs(ch.h_bs_cu[0]), expected, rtol=1e-6)

    def test_fading_second_moment(self):
        # per-entry second moment of a Rician mix equals the path-loss gain
        gain = 2.5e-7
        k_factor = 10 ** 0.5
        los = steering_vector(0.3, 4, 0.5)
        rng = np.random.default_rng(11)
        draws = np.stack(
            [channel._rician(los, gain, k_factor, rng) for _ in range(10_000)]
        )
        moments = np.mean(np.abs(draws) ** 2, axis=0)
        assert np.allclose(moments, gain, rtol=0.03)

    def test_target_proportionality(self, desk_channels):
        for j in range(desk_channels.n_sense_targets):
            ratio = desk_channels.g_target[j] / desk_channels.steer_target[j]
            assert np.max(np.abs(ratio - ratio[0])) < 1e-10 * abs(ratio[0])

    def test_noise_scaling(self, desk_geometry):
        cfg = desk_default()
        louder = replace(cfg, noise_comm_dbm=cfg.noise_comm_dbm + 20.0)
        a = sample_channels(cfg, desk_geometry, 3)
        b = sample_channels(louder, desk_geometry, 3)
        assert np.allclose(a.g_cu, 10.0 * b.g_cu)
        assert np.allclose(a.g_target, b.g_target)


class TestEffectiveChannel:
    def test_selector_profile_keeps_direct_path(self, desk_config, desk_channels):
        profile = no_ris_profile(desk_config.n_ris_elements)
        sigma = math.sqrt(desk_config.noise_comm_w)
        for k in range(desk_config.n_comm_users):
            eff = effective_cu_channel(desk_channels, profile, k)
            assert np.allclose(eff, desk_channels.h_bs_cu[k] / sigma)

    def test_zero_cascade_ignores_profile(self, desk_config, desk_geometry):
        cfg = desk_config
        ch = sample_channels(cfg, desk_geometry, 13)
        zeroed = assemble_channels(
            cfg, ch.h_bs_ris, ch.h_bs_cu, np.zeros_like(ch.h_ris_cu),
            ch.h_bs_target, ch.steer_target, ch.cu_regions,
        )
        rng = np.random.default_rng(0)
        p1 = star_random_profile(cfg.n_ris_elements, rng)
        p2 = star_random_profile(cfg.n_ris_elements, rng)
        for k in range(cfg.n_comm_users):
            assert np.allclose(
                effective_cu_channel(zeroed, p1, k),
                effective_cu_channel(zeroed, p2, k),
            )

    def test_matches_expanded_form(self, desk_config, desk_channels):
        # composite-matrix route against the explicit direct-plus-cascade sum
        cfg, ch = desk_config, desk_channels
        rng = np.random.default_rng(21)
        sigma = math.sqrt(cfg.noise_comm_w)
        for _ in range(100):
            profile = star_random_profile(cfg.n_ris_elements, rng)
            k = int(rng.integers(cfg.n_comm_users))
            # the physical element coefficients are the conjugates of the
            # stacked composite-vector entries
            coeff = (
                profile.v_t if ch.cu_regions[k] == "T" else profile.v_r
            )[: cfg.n_ris_elements].conj()
            row = (
                ch.h_bs_cu[k].conj()
                + coeff @ np.diag(ch.h_ris_cu[k]).conj().T @ ch.h_bs_ris
            ) / sigma
            eff = effective_cu_channel(ch, profile, k)
            assert np.max(np.abs(eff - row.conj())) < 1e-12 * np.linalg.norm(row)


class TestArchive:
    def test_round_trip(self, desk_channels, tmp_path):
        path = tmp_path / "channels.npz"
        dump_channels(desk_channels, path)
        back = load_channels(path)
        assert np.array_equal(back.g_cu, desk_channels.g_cu)
        assert back.cu_regions == desk_channels.cu_regions

    def test_version_check(self, desk_channels, tmp_path):
        path = tmp_path / "channels.npz"
        dump_channels(desk_channels, path)
        import numpy as np_

        data = dict(np_.load(path, allow_pickle=False))
        data["format_version"] = "bogus"
        np_.savez(path, **data)
        with pytest.raises(ChannelFormatError):
            load_channels(path)
