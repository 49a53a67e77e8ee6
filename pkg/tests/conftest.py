"""Shared fixtures: one desk-scale realization reused across test modules."""

import numpy as np
import pytest

import starsec
from starsec.subproblems import apply_baseline, initial_design, restore_feasibility, sensing_only


@pytest.fixture(scope="session")
def desk_config():
    return starsec.desk_default()


@pytest.fixture(scope="session")
def desk_seed(desk_config):
    return starsec.derive_run_seed(desk_config.master_seed, 0)


@pytest.fixture(scope="session")
def desk_geometry(desk_config, desk_seed):
    return starsec.sample_geometry(desk_config, desk_seed)


@pytest.fixture(scope="session")
def desk_channels(desk_config, desk_geometry, desk_seed):
    return starsec.sample_channels(desk_config, desk_geometry, desk_seed)


@pytest.fixture(scope="session")
def desk_consts(desk_channels, desk_config):
    return sensing_only(desk_channels, desk_config)


@pytest.fixture(scope="session")
def desk_plan():
    return apply_baseline("rsma-star-opt")


@pytest.fixture(scope="session")
def desk_init(desk_channels, desk_config, desk_plan, desk_seed):
    return initial_design(desk_channels, desk_config, desk_plan, desk_seed)


@pytest.fixture(scope="session")
def desk_restored(desk_channels, desk_config, desk_plan, desk_consts, desk_init):
    sol, _ = restore_feasibility(
        desk_channels, desk_init, desk_consts, desk_config, desk_plan
    )
    assert sol.status == "optimal"
    return sol.design


def random_design(channels, config, rng, power_fraction=0.9):
    """Random power-feasible design point for oracle-style checks."""
    from starsec.metrics import DesignPoint, star_random_profile

    n_b = config.n_bs_antennas
    k_c = channels.n_comm_users
    p = config.power_budget_w * power_fraction
    a = rng.standard_normal((n_b, n_b)) + 1j * rng.standard_normal((n_b, n_b))
    an = a @ a.conj().T
    an *= 0.3 * p / np.real(np.trace(an))
    w_c = rng.standard_normal(n_b) + 1j * rng.standard_normal(n_b)
    w_c *= np.sqrt(0.2 * p) / np.linalg.norm(w_c)
    w_p = rng.standard_normal((k_c, n_b)) + 1j * rng.standard_normal((k_c, n_b))
    w_p *= np.sqrt(0.5 * p / k_c) / np.linalg.norm(w_p, axis=1)[:, None]
    return DesignPoint(
        an_covariance=an,
        w_common=w_c,
        w_private=w_p,
        star=star_random_profile(config.n_ris_elements, rng),
        rate_split=rng.uniform(0.0, 0.2, k_c),
    )
