"""Channel synthesis: Rician fading with path loss and noise-normalized composites."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .scenario import Geometry, SystemConfig, stream_rng

if TYPE_CHECKING:  # pragma: no cover
    from .metrics import StarProfile


class ChannelFormatError(RuntimeError):
    """Raised when a channel archive fails shape or version checks."""


_ARCHIVE_VERSION = "starsec-channels-1"

# RNG substream ids inside a run seed (keep stable: regression fixtures depend on them)
_STREAM_BS_RIS = 10
_STREAM_BS_CU = 11
_STREAM_RIS_CU = 12


@dataclass(frozen=True)
class ChannelSet:
    """One realization of every link plus the derived normalized composites.

    ``g_cu[k]`` is the (N_S+1) x N_B composite matrix whose conjugated left
    product with the RIS coefficient vector yields user k's effective channel
    row (noise folded in, so rate formulas see unit-power noise). ``g_target``
    and ``steer_target`` stay exactly proportional because target links are
    pure line of sight.
    """

    h_bs_ris: np.ndarray      # (N_S, N_B)
    h_bs_cu: np.ndarray       # (K_c, N_B)
    h_ris_cu: np.ndarray      # (K_c, N_S)
    h_bs_target: np.ndarray   # (K_s, N_B)
    g_cu: np.ndarray          # (K_c, N_S+1, N_B)
    g_target: np.ndarray      # (K_s, N_B)
    steer_target: np.ndarray  # (K_s, N_B)
    cu_regions: tuple[str, ...]

    @property
    def n_bs_antennas(self) -> int:
        return self.h_bs_ris.shape[1]

    @property
    def n_ris_elements(self) -> int:
        return self.h_bs_ris.shape[0]

    @property
    def n_comm_users(self) -> int:
        return self.h_bs_cu.shape[0]

    @property
    def n_sense_targets(self) -> int:
        return self.h_bs_target.shape[0]


# ---------------------------------------------------------------------------
# primitives
# ---------------------------------------------------------------------------

def steering_vector(theta: float, n: int, spacing: float = 0.5) -> np.ndarray:
    """Uniform linear array response at bearing ``theta`` (radians)."""
    if n < 1:
        raise ValueError("array size must be >= 1")
    m = np.arange(n)
    return np.exp(1j * 2.0 * np.pi * spacing * math.sin(theta) * m)


def upa_rows(n: int) -> int:
    """Largest divisor of ``n`` not exceeding sqrt(n) (planar factorization)."""
    best = 1
    for d in range(1, int(math.isqrt(n)) + 1):
        if n % d == 0:
            best = d
    return best


def upa_steering(theta: float, n: int, spacing: float = 0.5) -> np.ndarray:
    """Planar array response for an azimuth-only (zero elevation) direction.

    The n = n_y * n_z grid puts the azimuth phase progression on the n_y axis;
    the vertical axis sees broadside and contributes constant phase.
    """
    n_y = upa_rows(n)
    n_z = n // n_y
    return np.kron(steering_vector(theta, n_y, spacing), np.ones(n_z, dtype=complex))


def pathloss(distance_m: float, exponent: float, ref_gain: float) -> float:
    """Power-law large-scale gain ``ref_gain * d^-exponent``; valid for d >= 1 m."""
    if distance_m < 1.0:
        raise ValueError(f"pathloss model invalid below 1 m (d={distance_m:.3g})")
    return ref_gain * distance_m ** (-exponent)


def _bearing(src: np.ndarray, dst: np.ndarray) -> float:
    d = dst - src
    return math.atan2(d[1], d[0])


def _rician(
    los: np.ndarray, gain: float, k_factor: float, rng: np.random.Generator
) -> np.ndarray:
    nlos = (rng.standard_normal(los.shape) + 1j * rng.standard_normal(los.shape)) / math.sqrt(2.0)
    mix = math.sqrt(k_factor / (k_factor + 1.0)) * los + math.sqrt(1.0 / (k_factor + 1.0)) * nlos
    return math.sqrt(gain) * mix


# ---------------------------------------------------------------------------
# realization
# ---------------------------------------------------------------------------

def sample_channels(config: SystemConfig, geometry: Geometry, seed: int) -> ChannelSet:
    """Draw one full channel realization.

    Every fading link mixes a geometry-derived LoS term with unit-variance
    complex Gaussian scatter at the configured Rician factor; BS-target links
    are pure LoS. Each link family uses its own RNG substream so that, e.g.,
    direct BS-CU draws do not change when the RIS size is swept.
    """
    n_b = config.n_bs_antennas
    n_s = config.n_ris_elements
    spacing = config.element_spacing_wavelengths
    kf = config.rician_k_linear
    ref = config.pathloss_ref
    exp_def = config.pathloss_exp_default
    exp_direct = config.pathloss_exp_bs_cu
    bs, ris = geometry.bs_position, geometry.ris_position

    # BS -> RIS
    d_br = float(np.linalg.norm(ris - bs))
    a_dep = steering_vector(_bearing(bs, ris), n_b, spacing)
    a_arr = upa_steering(_bearing(ris, bs), n_s, spacing)
    los_br = np.outer(a_arr, a_dep.conj())
    h_bs_ris = _rician(
        los_br, pathloss(d_br, exp_def, ref), kf, stream_rng(seed, _STREAM_BS_RIS)
    )

    # per-user links
    k_c = geometry.n_comm_users
    h_bs_cu = np.zeros((k_c, n_b), dtype=complex)
    h_ris_cu = np.zeros((k_c, n_s), dtype=complex)
    for k in range(k_c):
        pos = geometry.cu_positions[k]
        d_bk = float(np.linalg.norm(pos - bs))
        d_sk = float(np.linalg.norm(pos - ris))
        h_bs_cu[k] = _rician(
            steering_vector(_bearing(bs, pos), n_b, spacing),
            pathloss(d_bk, exp_direct, ref),
            kf,
            stream_rng(seed, _STREAM_BS_CU, k),
        )
        h_ris_cu[k] = _rician(
            upa_steering(_bearing(ris, pos), n_s, spacing),
            pathloss(d_sk, exp_def, ref),
            kf,
            stream_rng(seed, _STREAM_RIS_CU, k),
        )

    # pure-LoS target links
    k_s = geometry.target_angles.shape[0]
    steer_target = np.zeros((k_s, n_b), dtype=complex)
    h_bs_target = np.zeros((k_s, n_b), dtype=complex)
    for j in range(k_s):
        steer_target[j] = steering_vector(float(geometry.target_angles[j]), n_b, spacing)
        gain = pathloss(float(geometry.target_distances[j]), exp_def, ref)
        h_bs_target[j] = math.sqrt(gain) * steer_target[j]

    return assemble_channels(
        config, h_bs_ris, h_bs_cu, h_ris_cu, h_bs_target, steer_target,
        geometry.cu_regions,
    )


def assemble_channels(
    config: SystemConfig,
    h_bs_ris: np.ndarray,
    h_bs_cu: np.ndarray,
    h_ris_cu: np.ndarray,
    h_bs_target: np.ndarray,
    steer_target: np.ndarray,
    cu_regions: tuple[str, ...],
) -> ChannelSet:
    """Build the noise-normalized composites from raw link matrices."""
    sigma_c = math.sqrt(config.noise_comm_w)
    sigma_s = math.sqrt(config.noise_sense_w)
    k_c, n_b = h_bs_cu.shape
    n_s = h_bs_ris.shape[0]
    g_cu = np.zeros((k_c, n_s + 1, n_b), dtype=complex)
    for k in range(k_c):
        cascade = np.diag(h_ris_cu[k]).conj().T @ h_bs_ris
        g_cu[k, :n_s, :] = cascade / sigma_c
        g_cu[k, n_s, :] = h_bs_cu[k].conj() / sigma_c
    g_target = h_bs_target / sigma_s
    return ChannelSet(
        h_bs_ris=h_bs_ris,
        h_bs_cu=h_bs_cu,
        h_ris_cu=h_ris_cu,
        h_bs_target=h_bs_target,
        g_cu=g_cu,
        g_target=g_target,
        steer_target=steer_target,
        cu_regions=tuple(cu_regions),
    )


def composite_vector(channels: ChannelSet, star: "StarProfile", user: int) -> np.ndarray:
    """RIS coefficient vector acting on user ``user`` (region-selected, with fixed tail)."""
    return star.v_t if channels.cu_regions[user] == "T" else star.v_r


def effective_cu_channel(channels: ChannelSet, star: "StarProfile", user: int) -> np.ndarray:
    """Noise-normalized effective BS->user channel (column vector, length N_B)."""
    v = composite_vector(channels, star, user)
    return channels.g_cu[user].conj().T @ v


# ---------------------------------------------------------------------------
# archive I/O (regression fixtures)
# ---------------------------------------------------------------------------

def dump_channels(channels: ChannelSet, path) -> None:
    np.savez(
        path,
        format_version=_ARCHIVE_VERSION,
        h_bs_ris=channels.h_bs_ris,
        h_bs_cu=channels.h_bs_cu,
        h_ris_cu=channels.h_ris_cu,
        h_bs_target=channels.h_bs_target,
        g_cu=channels.g_cu,
        g_target=channels.g_target,
        steer_target=channels.steer_target,
        cu_regions=np.array(list(channels.cu_regions)),
    )


def load_channels(path) -> ChannelSet:
    with np.load(path, allow_pickle=False) as data:
        version = str(data["format_version"])
        if version != _ARCHIVE_VERSION:
            raise ChannelFormatError(f"unsupported archive version {version!r}")
        cs = ChannelSet(
            h_bs_ris=data["h_bs_ris"],
            h_bs_cu=data["h_bs_cu"],
            h_ris_cu=data["h_ris_cu"],
            h_bs_target=data["h_bs_target"],
            g_cu=data["g_cu"],
            g_target=data["g_target"],
            steer_target=data["steer_target"],
            cu_regions=tuple(str(r) for r in data["cu_regions"]),
        )
    n_s, n_b = cs.h_bs_ris.shape
    if cs.g_cu.shape != (cs.n_comm_users, n_s + 1, n_b):
        raise ChannelFormatError("composite matrix shape mismatch")
    if cs.g_target.shape != cs.steer_target.shape:
        raise ChannelFormatError("target channel shape mismatch")
    return cs
