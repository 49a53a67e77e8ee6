import math

import numpy as np
import pytest

from starsec import scenario
from starsec.scenario import (
    ConfigError,
    GeometryParams,
    SystemConfig,
    config_from_dict,
    config_to_dict,
    db_to_linear,
    dbm_to_watts,
    derive_run_seed,
    desk_default,
    linear_to_db,
    load_config,
    paper_default,
    sample_geometry,
    save_config,
)


class TestConversions:
    def test_dbm_to_watts_reference(self):
        assert dbm_to_watts(30.0) == pytest.approx(1.0, abs=1e-15)

    def test_zero_db_identity(self):
        assert db_to_linear(0.0) == 1.0

    def test_minus_one_db(self):
        assert db_to_linear(-1.0) == pytest.approx(0.79433, abs=5e-6)

    def test_round_trip(self):
        for x in np.linspace(-100.0, 100.0, 201):
            assert abs(linear_to_db(db_to_linear(x)) - x) < 1e-12

    def test_nonpositive_rejected(self):
        with pytest.raises(ValueError):
            linear_to_db(0.0)


class TestConfig:
    def test_paper_default_values(self):
        cfg = paper_default()
        assert cfg.n_bs_antennas == 8
        assert cfg.n_ris_elements == 32
        assert cfg.n_comm_users == 6
        assert cfg.n_sense_targets == 2
        assert cfg.power_budget_dbm == 30.0
        assert cfg.noise_comm_dbm == -80.0
        assert cfg.noise_sense_dbm == -80.0
        assert cfg.beampattern_ratio_db == -1.0
        assert cfg.rician_k_db == 5.0
        assert cfg.pathloss_ref == 1e-3
        assert cfg.pathloss_exp_default == 2.2
        assert cfg.pathloss_exp_bs_cu == 4.0
        assert cfg.max_iters == 20
        assert cfg.tol == 1e-4
        assert tuple(cfg.geometry.bs_position) == (0.0, 0.0)
        assert tuple(cfg.geometry.ris_position) == (30.0, 30.0)
        assert cfg.geometry.cu_radius_m == 10.0
        assert np.allclose(
            cfg.geometry.target_angles, [math.radians(30), math.radians(-30)]
        )

    def test_odd_ris_count_rejected(self):
        with pytest.raises(ConfigError):
            SystemConfig(n_ris_elements=7).validate()

    def test_bad_ratio_rejected(self):
        with pytest.raises(ConfigError):
            SystemConfig(beampattern_ratio_db=1.0).validate()

    def test_yaml_round_trip(self, tmp_path):
        cfg = desk_default(master_seed=777)
        path = tmp_path / "cfg.yaml"
        save_config(cfg, path)
        back = load_config(path)
        assert back == cfg

    def test_dict_round_trip_degrees(self):
        cfg = paper_default()
        data = config_to_dict(cfg)
        assert data["geometry"]["target_angles_deg"] == pytest.approx([30.0, -30.0])
        assert config_from_dict(data) == cfg


class TestSeeding:
    def test_injective_in_index(self):
        assert derive_run_seed(7, 0) != derive_run_seed(7, 1)

    def test_deterministic(self):
        assert derive_run_seed(123, 45) == derive_run_seed(123, 45)

    def test_disjoint_streams(self):
        a = {derive_run_seed(1, i) for i in range(1000)}
        b = {derive_run_seed(2, i) for i in range(1000)}
        assert len(a) == 1000 and len(b) == 1000
        assert not (a & b)

    def test_negative_index_rejected(self):
        with pytest.raises(ValueError):
            derive_run_seed(1, -1)


class TestGeometry:
    def test_region_quota_paper(self):
        cfg = paper_default()
        geo = sample_geometry(cfg, 3)
        assert geo.cu_regions.count("T") == 3
        assert geo.cu_regions.count("R") == 3

    def test_determinism(self):
        cfg = desk_default()
        g1 = sample_geometry(cfg, 99)
        g2 = sample_geometry(cfg, 99)
        assert np.array_equal(g1.cu_positions, g2.cu_positions)
        assert g1.cu_regions == g2.cu_regions

    def test_quota_and_radius_many_seeds(self):
        cfg = desk_default()
        for i in range(1000):
            geo = sample_geometry(cfg, derive_run_seed(5, i))
            assert geo.cu_regions.count("T") == cfg.n_transmission_users
            assert geo.cu_regions.count("R") == cfg.n_reflection_users
            d = geo.cu_distances_to(geo.ris_position)
            assert np.all(d <= cfg.geometry.cu_radius_m + 1e-12)
            assert np.all(d >= cfg.geometry.cu_min_distance_m - 1e-12)

    def test_target_placement(self):
        cfg = desk_default()
        geo = sample_geometry(cfg, 1)
        pos = geo.target_positions
        assert pos.shape == (2, 2)
        d = np.linalg.norm(pos - geo.bs_position[None, :], axis=1)
        assert d == pytest.approx([50.0, 50.0])

    def test_degenerate_config_fails(self):
        cfg = desk_default()
        geo = GeometryParams(bs_position=(0.0, 0.0), ris_position=(0.0, 0.0))
        bad = scenario.replace(cfg, geometry=geo)
        with pytest.raises(ConfigError):
            sample_geometry(bad, 0)
