"""Concrete convex programs for the alternating design loop.

Four programs are built here: the sensing-only covariance benchmark, the
beamformer/noise step at a fixed RIS profile, the RIS-coefficient step at
fixed beamformers (energy-splitting and mode-switching variants), plus the
baseline restrictions and a slack-based feasibility-restoration phase used to
produce the first feasible iterate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import conic
from .channel import ChannelSet, effective_cu_channel
from .conic import (
    AffineExpr,
    ComplexExpr,
    ConicProgram,
    SolveResult,
    SolveSettings,
    cinner,
    cmatvec,
    herm_quad,
    herm_trace,
    two_re,
)
from .metrics import (
    DesignPoint,
    StarProfile,
    conventional_random_profile,
    no_ris_profile,
    star_random_profile,
)
from .scenario import SystemConfig, stream_rng
from .surrogate import AuxState, mm_coefficients, tight_aux

RESTORED_SLACK_TOL = 1e-8
_PENALTY_LADDER = (1e3, 1e4, 1e5, 1e6)


class SubproblemError(RuntimeError):
    """Raised when a required solve cannot produce a usable point."""


# ---------------------------------------------------------------------------
# baselines
# ---------------------------------------------------------------------------

BASELINES = (
    "rsma-star-opt",
    "rsma-ris-conv",
    "rsma-star-rand",
    "rsma-no-ris",
    "sdma-star-opt",
)


@dataclass(frozen=True)
class BuildPlan:
    """How a baseline restricts the design problem."""

    baseline: str
    use_common: bool      # rate splitting on, common stream carries rate
    optimize_ris: bool    # run the RIS step (else the profile stays frozen)
    ris_mode: str         # star | conventional | random | none


def apply_baseline(baseline: str) -> BuildPlan:
    table = {
        "rsma-star-opt": BuildPlan(baseline, True, True, "star"),
        "rsma-ris-conv": BuildPlan(baseline, True, True, "conventional"),
        "rsma-star-rand": BuildPlan(baseline, True, False, "random"),
        "rsma-no-ris": BuildPlan(baseline, True, False, "none"),
        "sdma-star-opt": BuildPlan(baseline, False, True, "star"),
    }
    plan = table.get(baseline)
    if plan is None:
        raise ValueError(f"unknown baseline {baseline!r}; expected one of {BASELINES}")
    return plan


# ---------------------------------------------------------------------------
# sensing-only benchmark
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SensingConstants:
    """Optimal sensing covariance and the per-target gain constants."""

    r_opt: np.ndarray
    gain_opt: np.ndarray
    d_opt: np.ndarray


def build_sensing_only(channels: ChannelSet, config: SystemConfig) -> ConicProgram:
    prog = ConicProgram("sensing-only")
    r_var = prog.add_hermitian("R", config.n_bs_antennas)
    t_var = prog.add_real("t", 1)
    t = prog.expr(t_var)
    for j in range(channels.n_sense_targets):
        gain = herm_quad(r_var, channels.steer_target[j])
        prog.add_nonneg(gain - t, f"gain[{j}]")
    prog.add_nonneg(
        AffineExpr.constant([config.power_budget_w]) - herm_trace(r_var), "power"
    )
    prog.add_psd(r_var, "an-psd")
    prog.set_objective_max(t)
    return prog


def sensing_only(
    channels: ChannelSet,
    config: SystemConfig,
    settings: Optional[SolveSettings] = None,
) -> SensingConstants:
    """Max-min beampattern covariance under the power budget alone."""
    res = conic.solve(build_sensing_only(channels, config), settings)
    if not res.ok:
        raise SubproblemError(f"sensing-only solve failed with status {res.status}")
    r_opt = res.primal["R"]
    gain_opt = np.array(
        [
            float(np.real(a.conj() @ r_opt @ a))
            for a in channels.steer_target
        ]
    )
    d_opt = np.array(
        [
            float(np.real(g.conj() @ r_opt @ g))
            for g in channels.g_target
        ]
    )
    return SensingConstants(r_opt=r_opt, gain_opt=gain_opt, d_opt=d_opt)


# ---------------------------------------------------------------------------
# shared builder pieces
# ---------------------------------------------------------------------------

def _sum(expr: AffineExpr) -> AffineExpr:
    ones = np.ones((1, expr.dim))
    return AffineExpr(
        1,
        {k: ones @ v for k, v in expr.coeffs.items()},
        np.array([float(np.sum(expr.const))]),
    )


def _const_complex(value: complex) -> ComplexExpr:
    return ComplexExpr(
        AffineExpr.constant([value.real]), AffineExpr.constant([value.imag])
    )


def _psd_factor(matrix: np.ndarray) -> np.ndarray:
    """L with L L^H = matrix (eigen-based; tolerates tiny negative eigenvalues)."""
    vals, vecs = np.linalg.eigh((matrix + matrix.conj().T) / 2.0)
    vals = np.clip(vals, 0.0, None)
    return vecs * np.sqrt(vals)[None, :]


@dataclass
class _AuxVars:
    r: object
    alpha_p: object
    beta_p: object
    delta: object
    mu: object
    omega: object
    alpha_c: Optional[object]
    beta_c: Optional[object]
    slack_gain: Optional[object]
    slack_sec: Optional[object]
    slack_split: Optional[object]


def _add_aux_variables(
    prog: ConicProgram, k_c: int, k_s: int, use_common: bool, restore: bool
) -> _AuxVars:
    aux = _AuxVars(
        r=prog.add_real("r", k_c),
        alpha_p=prog.add_real("alpha_p", k_c),
        beta_p=prog.add_real("beta_p", k_c),
        delta=prog.add_real("delta", k_s),
        mu=prog.add_real("mu", k_s),
        omega=prog.add_real("omega", 1),
        alpha_c=prog.add_real("alpha_c", 1) if use_common else None,
        beta_c=prog.add_real("beta_c", 1) if use_common else None,
        slack_gain=prog.add_real("slack_gain", k_s) if restore else None,
        slack_sec=prog.add_real("slack_sec", k_c) if restore else None,
        slack_split=prog.add_real("slack_split", 1) if (restore and use_common) else None,
    )
    return aux


def _add_rate_split_block(
    prog: ConicProgram, aux: _AuxVars, k_c: int, use_common: bool
) -> None:
    """Min-secrecy epigraph, nonnegative pre-clamp secrecy, and the rate split."""
    omega = prog.expr(aux.omega)
    for k in range(k_c):
        rk = prog.expr(aux.r, [k])
        gap = prog.expr(aux.alpha_p, [k]) - prog.expr(aux.beta_p, [k])
        prog.add_nonneg(rk + gap - omega, f"min-secrecy[{k}]")
        floor = gap
        if aux.slack_sec is not None:
            floor = floor + prog.expr(aux.slack_sec, [k])
        prog.add_nonneg(floor, f"secrecy-floor[{k}]")
        prog.add_nonneg(rk, f"rate-nonneg[{k}]")
    if use_common:
        split = prog.expr(aux.alpha_c) - prog.expr(aux.beta_c) - _sum(prog.expr(aux.r))
        if aux.slack_split is not None:
            split = split + prog.expr(aux.slack_split)
        prog.add_nonneg(split, "common-split")
    else:
        prog.add_zero(prog.expr(aux.r), "sdma-pin-r")


def _delta_scales(config: SystemConfig, consts: SensingConstants) -> np.ndarray:
    """Per-target floor values, used as units for the delta variables.

    The solver sees delta in floor units (O(1) magnitudes); all rows touching
    delta are divided by the scale so that the conic data stays well
    conditioned despite the large noise-normalized target gains.
    """
    eta = config.beampattern_ratio_linear
    return 1.0 + eta * np.asarray(consts.d_opt, dtype=float)


def _add_delta_block(
    prog: ConicProgram,
    aux: _AuxVars,
    delta_bar: np.ndarray,
    scales: np.ndarray,
) -> None:
    """Tangent bound on the log of the eavesdropper total plus its floor."""
    for j in range(delta_bar.shape[0]):
        dj = prog.expr(aux.delta, [j]) * float(scales[j])   # physical units
        db = float(delta_bar[j])
        tangent = math.log2(db) + (dj - db) * (1.0 / (db * math.log(2.0)))
        prog.add_nonneg(prog.expr(aux.mu, [j]) - tangent, f"tangent-logdelta[{j}]")
        floor = prog.expr(aux.delta, [j]) - 1.0
        if aux.slack_gain is not None:
            floor = floor + prog.expr(aux.slack_gain, [j])
        prog.add_nonneg(floor, f"gain-floor[{j}]")


def _set_objective(prog: ConicProgram, aux: _AuxVars, penalty: float) -> None:
    obj = prog.expr(aux.omega)
    for slack in (aux.slack_gain, aux.slack_sec, aux.slack_split):
        if slack is not None:
            prog.add_nonneg(prog.expr(slack), f"slack-nonneg[{slack.name}]")
            obj = obj - penalty * _sum(prog.expr(slack))
    prog.set_objective_max(obj)


# ---------------------------------------------------------------------------
# beamformer / noise step
# ---------------------------------------------------------------------------

def build_w_step(
    channels: ChannelSet,
    expansion: DesignPoint,
    consts: SensingConstants,
    config: SystemConfig,
    plan: Optional[BuildPlan] = None,
    restore: bool = False,
    penalty: float = _PENALTY_LADDER[0],
) -> ConicProgram:
    """Convex step over the AN covariance, beamformers, and rate split.

    The RIS profile is frozen at the expansion point's; legitimate rates enter
    through their concave surrogates, overhearing rates through the
    delta/mu/log chain, and the beampattern floor through the affine minorant
    of each leaked beam power.
    """
    plan = plan or apply_baseline("rsma-star-opt")
    k_c = channels.n_comm_users
    k_s = channels.n_sense_targets
    n_b = channels.n_bs_antennas
    coeffs = mm_coefficients(channels, expansion)
    aux_bar = tight_aux(channels, expansion)

    prog = ConicProgram("w-step")
    r_s = prog.add_hermitian("R_s", n_b)
    w_c = prog.add_complex("w_c", n_b)
    w_p = [prog.add_complex(f"w_p[{k}]", n_b) for k in range(k_c)]
    t_ep = prog.add_real("t_ep", k_c)
    t_ec = prog.add_real("t_ec", k_c) if plan.use_common else None
    s_p = prog.add_real("s_p", k_s * k_c)
    s_c = prog.add_real("s_c", k_s) if plan.use_common else None
    aux = _add_aux_variables(prog, k_c, k_s, plan.use_common, restore)

    # legitimate-rate surrogates at the frozen RIS profile
    for k in range(k_c):
        g_eff = effective_cu_channel(channels, expansion.star, k)
        u_c = cinner(g_eff, prog.cexpr(w_c))
        u_all = [cinner(g_eff, prog.cexpr(wv)) for wv in w_p]
        an_term = herm_quad(r_s, g_eff)

        f_p, q_p, b_p = coeffs.stream("p", k)
        z_p = AffineExpr.concat([u.stacked() for u in u_all])
        tp = prog.expr(t_ep, [k])
        prog.soc_of_quadratic(z_p, tp, f"rate-surrogate-private[{k}]")
        rate_p = f_p + two_re(b_p, u_all[k]) - q_p * (an_term + tp + 1.0)
        prog.add_nonneg(
            rate_p - prog.expr(aux.alpha_p, [k]), f"rate-surrogate-private[{k}]"
        )

        if plan.use_common:
            f_c, q_c, b_c = coeffs.stream("c", k)
            z_c = AffineExpr.concat([u_c.stacked()] + [u.stacked() for u in u_all])
            tc = prog.expr(t_ec, [k])
            prog.soc_of_quadratic(z_c, tc, f"rate-surrogate-common[{k}]")
            rate_c = f_c + two_re(b_c, u_c) - q_c * (an_term + tc + 1.0)
            prog.add_nonneg(
                rate_c - prog.expr(aux.alpha_c), f"rate-surrogate-common[{k}]"
            )

    # eavesdropper-side chains and the beampattern floor
    scales = _delta_scales(config, consts)
    _add_delta_block(prog, aux, aux_bar.delta, scales)
    for j in range(k_s):
        g = channels.g_target[j]
        cj = float(scales[j])
        dj = prog.expr(aux.delta, [j])           # delta in floor units
        mj = prog.expr(aux.mu, [j])

        # affine minorant of the exact interference total at this target,
        # expressed in the same floor units as delta
        minorant = (1.0 / cj) * (herm_quad(r_s, g) + 1.0) - dj
        beams = [(w_c, expansion.w_common)] if plan.use_common else []
        beams += [(w_p[k], expansion.w_private[k]) for k in range(k_c)]
        for var, w_bar in beams:
            u_bar = complex(g.conj() @ w_bar)
            term = two_re(u_bar, cinner(g, prog.cexpr(var))) - abs(u_bar) ** 2
            minorant = minorant + (1.0 / cj) * term
        prog.add_nonneg(minorant, f"gain-minorant[{j}]")

        inv_sqrt = 1.0 / math.sqrt(cj)
        if plan.use_common:
            sc = prog.expr(s_c, [j])
            u = cinner(g, prog.cexpr(w_c))
            prog.soc_of_quadratic(inv_sqrt * u.stacked(), dj - sc, f"eaves-common[{j}]")
            prog.hypograph_log(
                sc, mj - prog.expr(aux.beta_c) - math.log2(cj), f"eaves-common[{j}]"
            )
        for k in range(k_c):
            sp = prog.expr(s_p, [j * k_c + k])
            u = cinner(g, prog.cexpr(w_p[k]))
            prog.soc_of_quadratic(
                inv_sqrt * u.stacked(), dj - sp, f"eaves-private[{j},{k}]"
            )
            prog.hypograph_log(
                sp, mj - prog.expr(aux.beta_p, [k]) - math.log2(cj),
                f"eaves-private[{j},{k}]",
            )

    _add_rate_split_block(prog, aux, k_c, plan.use_common)
    if not plan.use_common:
        prog.add_complex_zero(prog.cexpr(w_c), "sdma-pin-wc")

    z_pow = AffineExpr.concat(
        [prog.cexpr(w_c).stacked()] + [prog.cexpr(wv).stacked() for wv in w_p]
    )
    bound = AffineExpr.constant([config.power_budget_w]) - herm_trace(r_s)
    prog.soc_of_quadratic(z_pow, bound, "power-budget")
    prog.add_psd(r_s, "an-psd")

    _set_objective(prog, aux, penalty)
    return prog


# ---------------------------------------------------------------------------
# RIS-coefficient step
# ---------------------------------------------------------------------------

def rate_quadratic_matrix(
    channels: ChannelSet, expansion: DesignPoint, stream: str, user: int
) -> np.ndarray:
    """PSD middle matrix M with E(V) = v^H M v for the given stream/user.

    Contains the AN covariance and beam outer products pushed through the
    composite channel, plus the structural unit-noise term on the fixed last
    coordinate.
    """
    g = channels.g_cu[user]
    cov = expansion.an_covariance.copy()
    for w in expansion.w_private:
        cov = cov + np.outer(w, w.conj())
    if stream == "c":
        cov = cov + np.outer(expansion.w_common, expansion.w_common.conj())
    m = g @ cov @ g.conj().T
    noise = np.zeros_like(m)
    noise[-1, -1] = 1.0
    return m + noise


def build_v_step(
    channels: ChannelSet,
    expansion: DesignPoint,
    consts: SensingConstants,
    config: SystemConfig,
    plan: Optional[BuildPlan] = None,
    conventional: bool = False,
    restore: bool = False,
    penalty: float = _PENALTY_LADDER[0],
) -> ConicProgram:
    """Convex step over the RIS transmission/reflection coefficients.

    Beamformers and AN are frozen, so each rate's interference total becomes a
    PSD quadratic form in the region's coefficient vector and the eavesdropper
    totals become constants capping delta from above.
    """
    plan = plan or apply_baseline("rsma-star-opt")
    k_c = channels.n_comm_users
    k_s = channels.n_sense_targets
    n_s = channels.n_ris_elements
    coeffs = mm_coefficients(channels, expansion)
    aux_bar = tight_aux(channels, expansion)

    prog = ConicProgram("v-step-conventional" if conventional else "v-step")
    v_t = prog.add_complex("v_t", n_s + 1)
    v_r = prog.add_complex("v_r", n_s + 1)
    t_ep = prog.add_real("t_ep", k_c)
    t_ec = prog.add_real("t_ec", k_c) if plan.use_common else None
    s_p = prog.add_real("s_p", k_s * k_c)
    s_c = prog.add_real("s_c", k_s) if plan.use_common else None
    aux = _add_aux_variables(prog, k_c, k_s, plan.use_common, restore)

    # fixed last coordinate of both coefficient vectors
    one = _const_complex(1.0 + 0.0j)
    prog.add_complex_zero(prog.cexpr(v_t, [n_s]) - one, "star-fixed-t")
    prog.add_complex_zero(prog.cexpr(v_r, [n_s]) - one, "star-fixed-r")

    # per-element energy conservation
    for n in range(n_s):
        vec = AffineExpr.concat(
            [prog.cexpr(v_t, [n]).stacked(), prog.cexpr(v_r, [n]).stacked()]
        )
        prog.add_soc(AffineExpr.constant([1.0]), vec, f"star-energy[{n}]")

    if conventional:
        if n_s % 2 != 0:
            raise SubproblemError("mode-switching variant needs an even element count")
        half = n_s // 2
        prog.add_complex_zero(prog.cexpr(v_t, list(range(half))), "conv-zero-t")
        prog.add_complex_zero(prog.cexpr(v_r, list(range(half, n_s))), "conv-zero-r")

    # legitimate-rate surrogates, quadratic in the coefficient vector
    for k in range(k_c):
        var = v_t if channels.cu_regions[k] == "T" else v_r
        vz = prog.cexpr(var)
        g = channels.g_cu[k]

        m_p = rate_quadratic_matrix(channels, expansion, "p", k)
        z_p = cmatvec(_psd_factor(m_p).conj().T, vz).stacked()
        tp = prog.expr(t_ep, [k])
        prog.soc_of_quadratic(z_p, tp, f"rate-surrogate-private[{k}]")
        f_p, q_p, b_p = coeffs.stream("p", k)
        u_p = cinner(g @ expansion.w_private[k], vz).conj()
        rate_p = f_p + two_re(b_p, u_p) - q_p * tp
        prog.add_nonneg(
            rate_p - prog.expr(aux.alpha_p, [k]), f"rate-surrogate-private[{k}]"
        )

        if plan.use_common:
            m_c = rate_quadratic_matrix(channels, expansion, "c", k)
            z_c = cmatvec(_psd_factor(m_c).conj().T, vz).stacked()
            tc = prog.expr(t_ec, [k])
            prog.soc_of_quadratic(z_c, tc, f"rate-surrogate-common[{k}]")
            f_c, q_c, b_c = coeffs.stream("c", k)
            u_c = cinner(g @ expansion.w_common, vz).conj()
            rate_c = f_c + two_re(b_c, u_c) - q_c * tc
            prog.add_nonneg(
                rate_c - prog.expr(aux.alpha_c), f"rate-surrogate-common[{k}]"
            )

    # eavesdropper totals are constants here
    scales = _delta_scales(config, consts)
    _add_delta_block(prog, aux, aux_bar.delta, scales)
    for j in range(k_s):
        g = channels.g_target[j]
        cj = float(scales[j])
        dj = prog.expr(aux.delta, [j])           # delta in floor units
        mj = prog.expr(aux.mu, [j])
        prog.add_nonneg(
            AffineExpr.constant([float(aux_bar.delta[j]) / cj]) - dj, f"delta-cap[{j}]"
        )
        if plan.use_common:
            leak = float(abs(g.conj() @ expansion.w_common) ** 2) / cj
            sc = prog.expr(s_c, [j])
            prog.add_nonneg(dj - sc - leak, f"eaves-common[{j}]")
            prog.hypograph_log(
                sc, mj - prog.expr(aux.beta_c) - math.log2(cj), f"eaves-common[{j}]"
            )
        for k in range(k_c):
            leak = float(abs(g.conj() @ expansion.w_private[k]) ** 2) / cj
            sp = prog.expr(s_p, [j * k_c + k])
            prog.add_nonneg(dj - sp - leak, f"eaves-private[{j},{k}]")
            prog.hypograph_log(
                sp, mj - prog.expr(aux.beta_p, [k]) - math.log2(cj),
                f"eaves-private[{j},{k}]",
            )

    _add_rate_split_block(prog, aux, k_c, plan.use_common)
    _set_objective(prog, aux, penalty)
    return prog


def build_v_step_conventional(
    channels: ChannelSet,
    expansion: DesignPoint,
    consts: SensingConstants,
    config: SystemConfig,
    plan: Optional[BuildPlan] = None,
    restore: bool = False,
    penalty: float = _PENALTY_LADDER[0],
) -> ConicProgram:
    """RIS step with the mode-switching zero patterns added."""
    return build_v_step(
        channels, expansion, consts, config, plan,
        conventional=True, restore=restore, penalty=penalty,
    )


# ---------------------------------------------------------------------------
# solving and extraction
# ---------------------------------------------------------------------------

@dataclass
class SubproblemSolution:
    """Solved fragment of the design plus the auxiliary state and slack audit."""

    design: DesignPoint
    aux: AuxState
    omega: float
    slack_total: float
    status: str
    result: SolveResult


def _solve_with_retry(prog: ConicProgram, settings: Optional[SolveSettings]) -> SolveResult:
    """Interior-point solve with a bounded fallback ladder.

    A numerical-limit outcome retries once at a slightly relaxed tolerance,
    then falls back to the first-order engine; genuine infeasible/unbounded
    statuses are surfaced immediately.
    """
    settings = settings or SolveSettings()
    canon = prog.canonicalize()
    res = conic.solve_canonical(canon, settings)
    if res.status != "numerical-limit":
        return res
    # stronger static regularization stabilizes nearly-flat KKT systems
    retry = replace(settings, static_reg=1e-6, max_iters=400)
    res = conic.solve_canonical(canon, retry)
    if res.status != "numerical-limit":
        return res
    retry = replace(retry, tol=max(settings.tol, 1e-7))
    res = conic.solve_canonical(canon, retry)
    if res.status != "numerical-limit":
        return res
    fallback = replace(settings, backend="scs", tol=1e-8, max_iters=200_000)
    return conic.solve_canonical(canon, fallback)


def _extract_aux(primal: dict, use_common: bool, scales: np.ndarray) -> AuxState:
    return AuxState(
        alpha_c=float(primal["alpha_c"][0]) if use_common else 0.0,
        alpha_p=np.asarray(primal["alpha_p"], dtype=float),
        beta_c=float(primal["beta_c"][0]) if use_common else 0.0,
        beta_p=np.asarray(primal["beta_p"], dtype=float),
        delta=np.asarray(primal["delta"], dtype=float) * scales,
        mu=np.asarray(primal["mu"], dtype=float),
        omega=float(primal["omega"][0]),
    )


def _slack_total(primal: dict) -> float:
    total = 0.0
    for name in ("slack_gain", "slack_sec", "slack_split"):
        if name in primal:
            total += float(np.sum(np.maximum(primal[name], 0.0)))
    return total


def solve_w_step(
    channels: ChannelSet,
    expansion: DesignPoint,
    consts: SensingConstants,
    config: SystemConfig,
    plan: BuildPlan,
    settings: Optional[SolveSettings] = None,
    restore: bool = False,
    penalty: float = _PENALTY_LADDER[0],
) -> SubproblemSolution:
    prog = build_w_step(channels, expansion, consts, config, plan, restore, penalty)
    res = _solve_with_retry(prog, settings)
    if not res.ok:
        return SubproblemSolution(
            design=expansion, aux=tight_aux(channels, expansion),
            omega=float("nan"), slack_total=float("inf"), status=res.status, result=res,
        )
    k_c = channels.n_comm_users
    w_private = np.stack([res.primal[f"w_p[{k}]"] for k in range(k_c)])
    design = expansion.with_updates(
        an_covariance=res.primal["R_s"],
        w_common=res.primal["w_c"],
        w_private=w_private,
        rate_split=np.maximum(res.primal["r"], 0.0),
    )
    aux = _extract_aux(res.primal, plan.use_common, _delta_scales(config, consts))
    return SubproblemSolution(
        design=design, aux=aux, omega=aux.omega,
        slack_total=_slack_total(res.primal), status=res.status, result=res,
    )


def solve_v_step(
    channels: ChannelSet,
    expansion: DesignPoint,
    consts: SensingConstants,
    config: SystemConfig,
    plan: BuildPlan,
    settings: Optional[SolveSettings] = None,
    restore: bool = False,
    penalty: float = _PENALTY_LADDER[0],
) -> SubproblemSolution:
    conventional = plan.ris_mode == "conventional"
    prog = build_v_step(
        channels, expansion, consts, config, plan,
        conventional=conventional, restore=restore, penalty=penalty,
    )
    res = _solve_with_retry(prog, settings)
    if not res.ok:
        return SubproblemSolution(
            design=expansion, aux=tight_aux(channels, expansion),
            omega=float("nan"), slack_total=float("inf"), status=res.status, result=res,
        )
    v_t = res.primal["v_t"].copy()
    v_r = res.primal["v_r"].copy()
    n_s = channels.n_ris_elements
    v_t[n_s] = 1.0
    v_r[n_s] = 1.0
    if conventional:
        half = n_s // 2
        v_t[:half] = 0.0
        v_r[half:n_s] = 0.0
    # clip roundoff excess so the profile passes the exact energy audit
    energy = np.abs(v_t[:n_s]) ** 2 + np.abs(v_r[:n_s]) ** 2
    over = energy > 1.0
    if np.any(over):
        scale = np.sqrt(np.minimum(1.0 / energy[over], 1.0))
        v_t[:n_s][over] *= scale
        v_r[:n_s][over] *= scale
    star = StarProfile(v_t=v_t, v_r=v_r, mode=expansion.star.mode)
    design = expansion.with_updates(
        star=star, rate_split=np.maximum(res.primal["r"], 0.0)
    )
    aux = _extract_aux(res.primal, plan.use_common, _delta_scales(config, consts))
    return SubproblemSolution(
        design=design, aux=aux, omega=aux.omega,
        slack_total=_slack_total(res.primal), status=res.status, result=res,
    )


_RESTORE_INNER_ITERS = 12


def restore_feasibility(
    channels: ChannelSet,
    expansion: DesignPoint,
    consts: SensingConstants,
    config: SystemConfig,
    plan: BuildPlan,
    step: str = "w",
    settings: Optional[SolveSettings] = None,
):
    """Slack-penalized solves, re-expanded until the hard couplings close.

    Augments the beampattern floor, the nonnegative-secrecy floor, and the
    common-rate split with nonnegative slack and maximizes
    ``omega - penalty * total_slack``. The surrogates are refreshed at each
    solution (a weak starting point makes the tangent bounds loose, so a
    single solve may legitimately need slack even for a feasible scenario);
    the point is declared restored once the total slack drops below
    ``RESTORED_SLACK_TOL``. The penalty escalates a bounded number of times
    before the scenario is diagnosed infeasible.

    Returns ``(solution, slack_history)``.
    """
    solver = solve_w_step if step == "w" else solve_v_step
    history: list[float] = []
    best: Optional[SubproblemSolution] = None
    point = expansion
    for penalty in _PENALTY_LADDER:
        for _ in range(_RESTORE_INNER_ITERS):
            sol = solver(
                channels, point, consts, config, plan,
                settings=settings, restore=True, penalty=penalty,
            )
            if not math.isfinite(sol.slack_total):
                history.append(float("inf"))
                best = best or sol
                break
            history.append(sol.slack_total)
            best = sol
            point = sol.design
            if sol.slack_total < RESTORED_SLACK_TOL:
                return sol, history
            if len(history) >= 2 and history[-1] > history[-2] - RESTORED_SLACK_TOL:
                break   # stalled at this penalty level, escalate
    if best is not None and math.isfinite(best.slack_total):
        best.status = "infeasible"
    return best, history


# ---------------------------------------------------------------------------
# initialization
# ---------------------------------------------------------------------------

_RANDOM_PROFILE_CANDIDATES = 8


def initial_profile(
    plan: BuildPlan,
    n_elements: int,
    rng: np.random.Generator,
    channels: Optional[ChannelSet] = None,
) -> StarProfile:
    if plan.ris_mode == "star":
        return replace(star_random_profile(n_elements, rng), mode="star")
    if plan.ris_mode == "random":
        if channels is None:
            return star_random_profile(n_elements, rng)
        # the frozen baseline keeps the best of a few random energy splits,
        # judged by the weakest user's effective channel gain; a single draw
        # can cancel the direct path outright on unlucky realizations
        best, best_score = None, -math.inf
        for _ in range(_RANDOM_PROFILE_CANDIDATES):
            profile = star_random_profile(n_elements, rng)
            score = min(
                float(np.linalg.norm(effective_cu_channel(channels, profile, k)) ** 2)
                for k in range(channels.n_comm_users)
            )
            if score > best_score:
                best, best_score = profile, score
        return best
    if plan.ris_mode == "conventional":
        return conventional_random_profile(n_elements, rng)
    if plan.ris_mode == "none":
        return no_ris_profile(n_elements)
    raise ValueError(f"unknown RIS mode {plan.ris_mode!r}")


def initial_design(
    channels: ChannelSet,
    config: SystemConfig,
    plan: BuildPlan,
    seed: int,
) -> DesignPoint:
    """Deterministic power-feasible starting point.

    Private beams are matched filters along the effective channels carrying
    half the budget split equally; the common beam takes 20% along the
    dominant direction of the stacked effective channels; the remaining 30%
    goes to an isotropic AN covariance.
    """
    rng = stream_rng(seed, 3)
    n_b = config.n_bs_antennas
    k_c = channels.n_comm_users
    p = config.power_budget_w
    star = initial_profile(plan, config.n_ris_elements, rng, channels)

    eff = np.stack([effective_cu_channel(channels, star, k) for k in range(k_c)])
    w_private = np.zeros((k_c, n_b), dtype=complex)
    for k in range(k_c):
        norm = np.linalg.norm(eff[k])
        direction = eff[k] / norm if norm > 0 else np.ones(n_b) / math.sqrt(n_b)
        w_private[k] = math.sqrt(0.5 * p / k_c) * direction

    if plan.use_common:
        u, _, _ = np.linalg.svd(eff.T, full_matrices=False)
        w_common = math.sqrt(0.2 * p) * u[:, 0]
    else:
        w_common = np.zeros(n_b, dtype=complex)

    an = 0.3 * p / n_b * np.eye(n_b, dtype=complex)
    return DesignPoint(
        an_covariance=an,
        w_common=w_common,
        w_private=w_private,
        star=star,
        rate_split=np.zeros(k_c),
    )


# ---------------------------------------------------------------------------
# audits
# ---------------------------------------------------------------------------

def tag_counts(prog: ConicProgram) -> dict:
    """Distinct provenance tags per family prefix (audit helper)."""
    groups: dict[str, set] = {}
    for con in prog.constraints:
        prefix = con.tag.split("[")[0]
        groups.setdefault(prefix, set()).add(con.tag)
    return {prefix: len(tags) for prefix, tags in groups.items()}


def expected_w_step_tags(k_c: int, k_s: int) -> int:
    """Deterministic tag count for the full rate-splitting beamformer step."""
    surrogate = 2 * k_c
    tangent = k_s
    eaves = k_s * (1 + k_c)
    minorant = k_s
    gain_floor = k_s
    rate_split = 2 * k_c + 1
    scalars = k_c + 2
    return surrogate + tangent + eaves + minorant + gain_floor + rate_split + scalars
