"""System configuration, unit conversions, deterministic seeding, and 2-D geometry."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import yaml


class ConfigError(ValueError):
    """Raised when a configuration violates a model invariant."""


class GeometryError(RuntimeError):
    """Raised when geometry sampling cannot satisfy the region quotas."""


# ---------------------------------------------------------------------------
# unit conversions
# ---------------------------------------------------------------------------

def db_to_linear(value_db: float) -> float:
    """Convert a dB ratio to a linear ratio."""
    return 10.0 ** (value_db / 10.0)


def linear_to_db(value: float) -> float:
    """Convert a linear ratio to dB."""
    if value <= 0.0:
        raise ValueError("linear ratio must be positive")
    return 10.0 * math.log10(value)


def dbm_to_watts(value_dbm: float) -> float:
    """Convert a dBm power level to watts."""
    return 10.0 ** (value_dbm / 10.0) * 1e-3


def watts_to_dbm(value_w: float) -> float:
    """Convert watts to dBm."""
    if value_w <= 0.0:
        raise ValueError("power must be positive")
    return 10.0 * math.log10(value_w * 1e3)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GeometryParams:
    """Scenario placement parameters (2-D, units of meters / radians)."""

    bs_position: tuple[float, float] = (0.0, 0.0)
    ris_position: tuple[float, float] = (30.0, 30.0)
    cu_radius_m: float = 10.0
    cu_min_distance_m: float = 1.0
    target_angles: tuple[float, ...] = (math.radians(30.0), math.radians(-30.0))
    target_distances_m: tuple[float, ...] = (50.0, 50.0)


def default_target_angles(n_targets: int) -> tuple[float, ...]:
    """Evenly spaced target bearings in [-30deg, 30deg] as seen from the BS."""
    if n_targets == 1:
        return (0.0,)
    lo, hi = math.radians(-30.0), math.radians(30.0)
    return tuple(lo + (hi - lo) * i / (n_targets - 1) for i in range(n_targets))


@dataclass(frozen=True)
class SystemConfig:
    """All scalar scenario parameters.

    Angles are stored in radians; powers in dBm fields are converted to watts
    via properties. Immutable, so one instance can be shared across parallel
    Monte Carlo runs.
    """

    n_bs_antennas: int = 8
    n_ris_elements: int = 32
    n_comm_users: int = 6
    n_sense_targets: int = 2
    power_budget_dbm: float = 30.0
    noise_comm_dbm: float = -80.0
    noise_sense_dbm: float = -80.0
    beampattern_ratio_db: float = -1.0
    rician_k_db: float = 5.0
    pathloss_ref: float = 1e-3
    pathloss_exp_default: float = 2.2
    pathloss_exp_bs_cu: float = 4.0
    element_spacing_wavelengths: float = 0.5
    max_iters: int = 20
    tol: float = 1e-4
    master_seed: int = 20250101
    geometry: GeometryParams = field(default_factory=GeometryParams)

    # derived quantities -----------------------------------------------------

    @property
    def power_budget_w(self) -> float:
        return dbm_to_watts(self.power_budget_dbm)

    @property
    def noise_comm_w(self) -> float:
        return dbm_to_watts(self.noise_comm_dbm)

    @property
    def noise_sense_w(self) -> float:
        return dbm_to_watts(self.noise_sense_dbm)

    @property
    def beampattern_ratio_linear(self) -> float:
        return db_to_linear(self.beampattern_ratio_db)

    @property
    def rician_k_linear(self) -> float:
        return db_to_linear(self.rician_k_db)

    @property
    def n_transmission_users(self) -> int:
        return (self.n_comm_users + 1) // 2

    @property
    def n_reflection_users(self) -> int:
        return self.n_comm_users // 2

    def validate(self) -> "SystemConfig":
        """Check every structural invariant; return self for chaining."""
        counts = {
            "n_bs_antennas": self.n_bs_antennas,
            "n_ris_elements": self.n_ris_elements,
            "n_comm_users": self.n_comm_users,
            "n_sense_targets": self.n_sense_targets,
        }
        for name, value in counts.items():
            if value < 1:
                raise ConfigError(f"{name} must be >= 1, got {value}")
        # the mode-switching RIS variant splits elements into two halves
        if self.n_ris_elements % 2 != 0:
            raise ConfigError("n_ris_elements must be even")
        if self.power_budget_w <= 0.0:
            raise ConfigError("power budget must be positive")
        if self.tol <= 0.0:
            raise ConfigError("tol must be positive")
        if not 0.0 < self.beampattern_ratio_linear < 1.0:
            raise ConfigError("beampattern ratio must lie in (0, 1) linear")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be >= 1")
        if len(self.geometry.target_angles) != self.n_sense_targets:
            raise ConfigError("target_angles length must equal n_sense_targets")
        if len(self.geometry.target_distances_m) != self.n_sense_targets:
            raise ConfigError("target_distances_m length must equal n_sense_targets")
        return self


def paper_default(master_seed: int = 20250101) -> SystemConfig:
    """The default full-scale scenario preset."""
    return SystemConfig(master_seed=master_seed).validate()


def desk_default(master_seed: int = 20250101) -> SystemConfig:
    """Shrunken scenario for fast desk-scale experiments and tests."""
    return replace(
        paper_default(master_seed),
        n_bs_antennas=4,
        n_ris_elements=8,
        n_comm_users=2,
        n_sense_targets=2,
    ).validate()


PRESETS = {
    "paper-default": paper_default,
    "desk-default": desk_default,
}


def with_targets(config: SystemConfig, n_targets: int) -> SystemConfig:
    """Return a copy with ``n_targets`` sensing targets at default bearings."""
    geo = replace(
        config.geometry,
        target_angles=default_target_angles(n_targets),
        target_distances_m=tuple([config.geometry.target_distances_m[0]] * n_targets),
    )
    return replace(config, n_sense_targets=n_targets, geometry=geo).validate()


# ---------------------------------------------------------------------------
# config file I/O (YAML, angles in degrees on disk)
# ---------------------------------------------------------------------------

def config_to_dict(config: SystemConfig) -> dict:
    geo = config.geometry
    return {
        "system": {
            "n_bs_antennas": config.n_bs_antennas,
            "n_ris_elements": config.n_ris_elements,
            "n_comm_users": config.n_comm_users,
            "n_sense_targets": config.n_sense_targets,
            "power_budget_dbm": config.power_budget_dbm,
            "noise_comm_dbm": config.noise_comm_dbm,
            "noise_sense_dbm": config.noise_sense_dbm,
            "beampattern_ratio_db": config.beampattern_ratio_db,
            "rician_k_db": config.rician_k_db,
            "pathloss_ref": config.pathloss_ref,
            "pathloss_exp_default": config.pathloss_exp_default,
            "pathloss_exp_bs_cu": config.pathloss_exp_bs_cu,
            "element_spacing_wavelengths": config.element_spacing_wavelengths,
            "max_iters": config.max_iters,
            "tol": config.tol,
            "master_seed": config.master_seed,
        },
        "geometry": {
            "bs_position": list(geo.bs_position),
            "ris_position": list(geo.ris_position),
            "cu_radius_m": geo.cu_radius_m,
            "cu_min_distance_m": geo.cu_min_distance_m,
            "target_angles_deg": [math.degrees(a) for a in geo.target_angles],
            "target_distances_m": list(geo.target_distances_m),
        },
    }


def config_from_dict(data: dict) -> SystemConfig:
    sys_d = dict(data.get("system", {}))
    geo_d = dict(data.get("geometry", {}))
    geo_kwargs = {}
    if "bs_position" in geo_d:
        geo_kwargs["bs_position"] = tuple(float(x) for x in geo_d["bs_position"])
    if "ris_position" in geo_d:
        geo_kwargs["ris_position"] = tuple(float(x) for x in geo_d["ris_position"])
    if "cu_radius_m" in geo_d:
        geo_kwargs["cu_radius_m"] = float(geo_d["cu_radius_m"])
    if "cu_min_distance_m" in geo_d:
        geo_kwargs["cu_min_distance_m"] = float(geo_d["cu_min_distance_m"])
    if "target_angles_deg" in geo_d:
        geo_kwargs["target_angles"] = tuple(
            math.radians(float(a)) for a in geo_d["target_angles_deg"]
        )
    if "target_distances_m" in geo_d:
        geo_kwargs["target_distances_m"] = tuple(
            float(d) for d in geo_d["target_distances_m"]
        )
    return SystemConfig(**sys_d, geometry=GeometryParams(**geo_kwargs)).validate()


def save_config(config: SystemConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(config_to_dict(config), fh, sort_keys=False)


def load_config(path) -> SystemConfig:
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    return config_from_dict(data or {})


# ---------------------------------------------------------------------------
# seeding
# ---------------------------------------------------------------------------

def derive_run_seed(master_seed: int, run_index: int) -> int:
    """Derive a stable 64-bit per-run seed from the master seed.

    Injective in ``run_index`` for a fixed master seed and reproducible
    across processes (pure hashing, no global state).
    """
    if run_index < 0:
        raise ValueError("run_index must be >= 0")
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(run_index,))
    hi, lo = ss.generate_state(2, dtype=np.uint32)
    return (int(hi) << 32) | int(lo)


def stream_rng(seed: int, *stream: int) -> np.random.Generator:
    """Named independent RNG substream of a run seed."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=stream))


# ---------------------------------------------------------------------------
# geometry sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Geometry:
    """One concrete node placement.

    ``cu_regions[k]`` is ``"T"`` when user k sits on the far side of the RIS
    plane (transmission region) and ``"R"`` on the BS side (reflection region);
    the plane is perpendicular to the BS-RIS line through the RIS.
    """

    bs_position: np.ndarray
    ris_position: np.ndarray
    cu_positions: np.ndarray          # (K_c, 2)
    cu_regions: tuple[str, ...]
    target_angles: np.ndarray         # (K_s,) radians, bearings from the BS
    target_distances: np.ndarray      # (K_s,) meters

    @property
    def n_comm_users(self) -> int:
        return self.cu_positions.shape[0]

    @property
    def target_positions(self) -> np.ndarray:
        d = self.target_distances[:, None]
        a = self.target_angles[:, None]
        return self.bs_position[None, :] + d * np.hstack([np.cos(a), np.sin(a)])

    def cu_distances_to(self, point: np.ndarray) -> np.ndarray:
        return np.linalg.norm(self.cu_positions - point[None, :], axis=1)


_MAX_GEOMETRY_ATTEMPTS = 10_000


def sample_geometry(config: SystemConfig, seed: int) -> Geometry:
    """Draw CU positions uniformly in a disc around the RIS.

    Users are assigned to the transmission/reflection region by the side of
    the RIS plane they land on; whole batches are redrawn until the per-region
    quotas (ceil(K_c/2) transmission, floor(K_c/2) reflection) are met.
    """
    geo = config.geometry
    bs = np.asarray(geo.bs_position, dtype=float)
    ris = np.asarray(geo.ris_position, dtype=float)
    axis = ris - bs
    norm = np.linalg.norm(axis)
    if norm <= 0.0:
        raise ConfigError("BS and RIS positions must differ")
    axis = axis / norm

    k = config.n_comm_users
    want_t = config.n_transmission_users
    rng = stream_rng(seed, 1)
    for _ in range(_MAX_GEOMETRY_ATTEMPTS):
        radius = geo.cu_radius_m * np.sqrt(rng.uniform(size=k))
        phi = rng.uniform(0.0, 2.0 * np.pi, size=k)
        pts = ris[None, :] + radius[:, None] * np.stack(
            [np.cos(phi), np.sin(phi)], axis=1
        )
        if np.any(np.linalg.norm(pts - ris[None, :], axis=1) < geo.cu_min_distance_m):
            continue
        side = (pts - ris[None, :]) @ axis
        if np.any(side == 0.0):
            continue
        n_t = int(np.sum(side > 0.0))
        if n_t != want_t:
            continue
        regions = tuple("T" if s > 0.0 else "R" for s in side)
        return Geometry(
            bs_position=bs,
            ris_position=ris,
            cu_positions=pts,
            cu_regions=regions,
            target_angles=np.asarray(geo.target_angles, dtype=float),
            target_distances=np.asarray(geo.target_distances_m, dtype=float),
        )
    raise GeometryError(
        f"could not meet region quotas T={want_t} after {_MAX_GEOMETRY_ATTEMPTS} draws"
    )
