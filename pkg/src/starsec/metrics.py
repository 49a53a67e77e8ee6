"""Ground-truth evaluation of powers, rates, secrecy rates, and beampattern gains.

Everything here works on noise-normalized channels, so the "+1" noise terms in
the interference totals are literal constants. These routines are the oracle
against which surrogates and solver outputs are verified; nothing in this
module touches a solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .channel import ChannelSet, composite_vector

LOG2 = math.log(2.0)


# ---------------------------------------------------------------------------
# design variables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StarProfile:
    """RIS transmission/reflection coefficient vectors, length N_S + 1.

    The final entry of both vectors is pinned to 1 so that composite channel
    expressions absorb the direct BS-user path. ``mode`` records how the
    profile is constrained: ``star`` (energy-split per element), ``conventional``
    (first half reflect-only, second half transmit-only), ``random`` (frozen
    random energy split), or ``none`` (RIS absent).
    """

    v_t: np.ndarray
    v_r: np.ndarray
    mode: str = "star"

    @property
    def n_elements(self) -> int:
        return self.v_t.shape[0] - 1

    def validate(self, tol: float = 1e-8) -> "StarProfile":
        n = self.n_elements
        if self.v_r.shape != self.v_t.shape:
            raise ValueError("v_t and v_r must have equal length")
        if abs(self.v_t[n] - 1.0) > tol or abs(self.v_r[n] - 1.0) > tol:
            raise ValueError("last profile entries must equal 1")
        energy = np.abs(self.v_t[:n]) ** 2 + np.abs(self.v_r[:n]) ** 2
        if np.any(energy > 1.0 + tol):
            raise ValueError("per-element energy conservation violated")
        if self.mode == "conventional":
            half = n // 2
            if np.any(np.abs(self.v_t[:half]) > tol) or np.any(
                np.abs(self.v_r[half:n]) > tol
            ):
                raise ValueError("conventional profile zero pattern violated")
        if self.mode == "none" and np.any(np.abs(self.v_t[:n]) + np.abs(self.v_r[:n]) > tol):
            raise ValueError("mode 'none' requires zero RIS entries")
        return self


def star_random_profile(n_elements: int, rng: np.random.Generator) -> StarProfile:
    """Uniform random phases with an equal 1/sqrt(2) energy split per element."""
    amp = 1.0 / math.sqrt(2.0)
    v_t = np.ones(n_elements + 1, dtype=complex)
    v_r = np.ones(n_elements + 1, dtype=complex)
    v_t[:n_elements] = amp * np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, n_elements))
    v_r[:n_elements] = amp * np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, n_elements))
    return StarProfile(v_t=v_t, v_r=v_r, mode="random")


def conventional_random_profile(n_elements: int, rng: np.random.Generator) -> StarProfile:
    """Random-phase mode-switching profile: first half reflects, second half transmits."""
    if n_elements % 2 != 0:
        raise ValueError("conventional profile needs an even element count")
    half = n_elements // 2
    v_t = np.zeros(n_elements + 1, dtype=complex)
    v_r = np.zeros(n_elements + 1, dtype=complex)
    v_t[n_elements] = 1.0
    v_r[n_elements] = 1.0
    v_r[:half] = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, half))
    v_t[half:n_elements] = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, half))
    return StarProfile(v_t=v_t, v_r=v_r, mode="conventional")


def no_ris_profile(n_elements: int) -> StarProfile:
    """Selector profile that keeps only the direct BS-user path."""
    v = np.zeros(n_elements + 1, dtype=complex)
    v[n_elements] = 1.0
    return StarProfile(v_t=v.copy(), v_r=v.copy(), mode="none")


@dataclass(frozen=True)
class DesignPoint:
    """One full set of optimization variables."""

    an_covariance: np.ndarray   # (N_B, N_B) Hermitian PSD
    w_common: np.ndarray        # (N_B,)
    w_private: np.ndarray       # (K_c, N_B)
    star: StarProfile
    rate_split: np.ndarray      # (K_c,) nonnegative

    def validate(self, tol: float = 1e-8) -> "DesignPoint":
        r = self.an_covariance
        if np.max(np.abs(r - r.conj().T)) > 1e-10:
            raise ValueError("AN covariance must be Hermitian")
        min_eig = float(np.min(np.linalg.eigvalsh((r + r.conj().T) / 2.0)))
        if min_eig < -tol:
            raise ValueError(f"AN covariance must be PSD (min eig {min_eig:.3g})")
        if np.any(self.rate_split < -tol):
            raise ValueError("rate split entries must be nonnegative")
        self.star.validate()
        return self

    def with_updates(self, **kwargs) -> "DesignPoint":
        return replace(self, **kwargs)


def zero_design(n_bs: int, n_users: int, star: StarProfile) -> DesignPoint:
    return DesignPoint(
        an_covariance=np.zeros((n_bs, n_bs), dtype=complex),
        w_common=np.zeros(n_bs, dtype=complex),
        w_private=np.zeros((n_users, n_bs), dtype=complex),
        star=star,
        rate_split=np.zeros(n_users),
    )


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RateReport:
    """Per-user and per-target rate quantities (bits/s/Hz) plus the
    interference totals they derive from. Populated in stages: communication
    part, eavesdropping part, then secrecy part."""

    common_rate: Optional[np.ndarray] = None        # (K,)
    private_rate: Optional[np.ndarray] = None       # (K,)
    e_common: Optional[np.ndarray] = None           # (K,) total common-stream denominator
    e_private: Optional[np.ndarray] = None          # (K,)
    eaves_common: Optional[np.ndarray] = None       # (J,)
    eaves_private: Optional[np.ndarray] = None      # (K, J)
    d_target: Optional[np.ndarray] = None           # (J,)
    secrecy_common: Optional[np.ndarray] = None     # (K,)
    secrecy_private: Optional[np.ndarray] = None    # (K,)
    total_secrecy: Optional[np.ndarray] = None      # (K,)

    @property
    def min_total_secrecy(self) -> float:
        return float(np.min(self.total_secrecy))


@dataclass(frozen=True)
class SensingReport:
    """Beampattern gain per target against the sensing-only optimum."""

    gain: np.ndarray        # (J,)
    gain_opt: np.ndarray    # (J,)
    d_opt: np.ndarray       # (J,) eavesdropper-side constant at the optimum
    ratio: np.ndarray       # (J,) gain / gain_opt


# ---------------------------------------------------------------------------
# power and rate evaluation
# ---------------------------------------------------------------------------

def transmit_power(dp: DesignPoint) -> float:
    """Total radiated power: AN covariance trace plus beam energies."""
    return float(
        np.real(np.trace(dp.an_covariance))
        + np.sum(np.abs(dp.w_common) ** 2)
        + np.sum(np.abs(dp.w_private) ** 2)
    )


def stream_quadratics(channels: ChannelSet, dp: DesignPoint):
    """Per-user signal amplitudes and interference totals.

    Returns ``(u_c, u_p, e_c, e_p)`` where ``u_c[k]`` / ``u_p[k]`` are the
    complex common/private signal amplitudes at user k and ``e_c`` / ``e_p``
    the corresponding total received powers (signal + interference + unit
    noise) entering the rate denominators.
    """
    k_c = channels.n_comm_users
    u_c = np.zeros(k_c, dtype=complex)
    u_p = np.zeros(k_c, dtype=complex)
    e_c = np.zeros(k_c)
    e_p = np.zeros(k_c)
    for k in range(k_c):
        v = composite_vector(channels, dp.star, k)
        row = v.conj() @ channels.g_cu[k]          # effective channel row
        u_c[k] = row @ dp.w_common
        u_all = dp.w_private @ row                  # (K,) private amplitudes
        u_p[k] = u_all[k]
        an = float(np.real(row @ dp.an_covariance @ row.conj()))
        private_power = float(np.sum(np.abs(u_all) ** 2))
        e_p[k] = an + private_power + 1.0
        e_c[k] = e_p[k] + abs(u_c[k]) ** 2
    return u_c, u_p, e_c, e_p


def stream_rates(channels: ChannelSet, dp: DesignPoint) -> RateReport:
    """Common and private achievable rates under SIC decoding."""
    u_c, u_p, e_c, e_p = stream_quadratics(channels, dp)
    common = np.log2(e_c / (e_c - np.abs(u_c) ** 2))
    private = np.log2(e_p / (e_p - np.abs(u_p) ** 2))
    return RateReport(
        common_rate=common, private_rate=private, e_common=e_c, e_private=e_p
    )


def target_quadratics(channels: ChannelSet, dp: DesignPoint):
    """Per-target amplitudes and totals: ``(uc, up, d)`` with ``up[k, j]``."""
    k_s = channels.n_sense_targets
    k_c = channels.n_comm_users
    uc = np.zeros(k_s, dtype=complex)
    up = np.zeros((k_c, k_s), dtype=complex)
    d = np.zeros(k_s)
    for j in range(k_s):
        g = channels.g_target[j]
        uc[j] = g.conj() @ dp.w_common
        up[:, j] = dp.w_private @ g.conj()
        an = float(np.real(g.conj() @ dp.an_covariance @ g))
        d[j] = an + abs(uc[j]) ** 2 + float(np.sum(np.abs(up[:, j]) ** 2)) + 1.0
    return uc, up, d


def eavesdrop_rates(
    channels: ChannelSet, dp: DesignPoint, report: Optional[RateReport] = None
) -> RateReport:
    """Worst-case overhearing rates at each sensing target."""
    uc, up, d = target_quadratics(channels, dp)
    eaves_common = np.log2(d / (d - np.abs(uc) ** 2))
    eaves_private = np.log2(d[None, :] / (d[None, :] - np.abs(up) ** 2))
    base = report if report is not None else RateReport()
    return replace(
        base, eaves_common=eaves_common, eaves_private=eaves_private, d_target=d
    )


def secrecy_rates(report: RateReport, rate_split: np.ndarray) -> RateReport:
    """Clamp-to-zero secrecy rates and the per-user totals."""
    worst_common = float(np.max(report.eaves_common))
    sec_common = np.maximum(report.common_rate - worst_common, 0.0)
    worst_private = np.max(report.eaves_private, axis=1)
    sec_private = np.maximum(report.private_rate - worst_private, 0.0)
    total = np.asarray(rate_split, dtype=float) + sec_private
    return replace(
        report,
        secrecy_common=sec_common,
        secrecy_private=sec_private,
        total_secrecy=total,
    )


def rate_report(channels: ChannelSet, dp: DesignPoint) -> RateReport:
    """Full oracle report: communication, eavesdropping, and secrecy parts."""
    report = stream_rates(channels, dp)
    report = eavesdrop_rates(channels, dp, report)
    return secrecy_rates(report, dp.rate_split)


# ---------------------------------------------------------------------------
# sensing
# ---------------------------------------------------------------------------

def transmit_covariance(dp: DesignPoint) -> np.ndarray:
    """Second-order statistics of the transmitted signal."""
    cov = dp.an_covariance + np.outer(dp.w_common, dp.w_common.conj())
    for w in dp.w_private:
        cov = cov + np.outer(w, w.conj())
    return cov


def beampattern_gain(channels: ChannelSet, dp: DesignPoint, target: int) -> float:
    """Transmit power projected onto one target's steering direction."""
    a = channels.steer_target[target]
    return float(np.real(a.conj() @ transmit_covariance(dp) @ a))


def beampattern_gains(channels: ChannelSet, dp: DesignPoint) -> np.ndarray:
    return np.array(
        [beampattern_gain(channels, dp, j) for j in range(channels.n_sense_targets)]
    )


def sensing_report(
    channels: ChannelSet, dp: DesignPoint, gain_opt: np.ndarray, d_opt: np.ndarray
) -> SensingReport:
    gain = beampattern_gains(channels, dp)
    return SensingReport(
        gain=gain,
        gain_opt=np.asarray(gain_opt, dtype=float),
        d_opt=np.asarray(d_opt, dtype=float),
        ratio=gain / np.asarray(gain_opt, dtype=float),
    )


# ---------------------------------------------------------------------------
# feasibility
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FeasibilityReport:
    """Signed slack per constraint of the original design problem.

    A nonnegative slack means satisfied; the point is feasible at tolerance
    ``tol`` when every slack is >= -tol.
    """

    slacks: dict

    @property
    def worst(self) -> float:
        return min(self.slacks.values())

    def feasible(self, tol: float = 1e-5) -> bool:
        return self.worst >= -tol

    def violations(self, tol: float = 1e-5) -> dict:
        return {k: v for k, v in self.slacks.items() if v < -tol}


def check_feasibility(
    channels: ChannelSet,
    dp: DesignPoint,
    report: RateReport,
    sensing: SensingReport,
    config,
) -> FeasibilityReport:
    """Audit every constraint of the max-min secrecy design problem.

    Nonnegative-secrecy slacks are evaluated before clamping (rate minus worst
    overhearing rate), since the clamped quantities are nonnegative by
    construction.
    """
    slacks: dict = {}
    k_c = channels.n_comm_users
    r = np.asarray(dp.rate_split, dtype=float)

    worst_private = np.max(report.eaves_private, axis=1)
    for k in range(k_c):
        slacks[f"private_secrecy_nonneg[{k}]"] = float(
            report.private_rate[k] - worst_private[k]
        )
    split_total = float(np.sum(r))
    for k in range(k_c):
        slacks[f"common_split[{k}]"] = float(
            report.secrecy_common[k] - split_total
        )
    for k in range(k_c):
        slacks[f"rate_nonneg[{k}]"] = float(r[k])

    eta = config.beampattern_ratio_linear
    for j in range(channels.n_sense_targets):
        slacks[f"beampattern[{j}]"] = float(sensing.gain[j] - eta * sensing.gain_opt[j])

    slacks["power"] = float(config.power_budget_w - transmit_power(dp))

    n = dp.star.n_elements
    energy = np.abs(dp.star.v_t[:n]) ** 2 + np.abs(dp.star.v_r[:n]) ** 2
    for i in range(n):
        slacks[f"star_energy[{i}]"] = float(1.0 - energy[i])
    slacks["star_fixed_t"] = -float(abs(dp.star.v_t[n] - 1.0))
    slacks["star_fixed_r"] = -float(abs(dp.star.v_r[n] - 1.0))

    return FeasibilityReport(slacks=slacks)
