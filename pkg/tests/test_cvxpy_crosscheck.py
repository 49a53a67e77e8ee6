"""Differential modeling check: the same convex steps rebuilt in CVXPY.

This is a second, fully independent construction path (complex variables,
DCP rules, CVXPY's own canonicalization) for the two alternating steps; the
optimal objectives must match the native conic layer's.
"""

import numpy as np
import pytest

cp = pytest.importorskip("cvxpy")

from starsec.channel import effective_cu_channel
from starsec.subproblems import (
    rate_quadratic_matrix,
    solve_v_step,
    solve_w_step,
)
from starsec.surrogate import mm_coefficients, tight_aux

LN2 = np.log(2.0)


def cvxpy_w_step(channels, dp, consts, config):
    k_c, k_s = channels.n_comm_users, channels.n_sense_targets
    n_b = channels.n_bs_antennas
    co = mm_coefficients(channels, dp)
    ab = tight_aux(channels, dp)
    eta = config.beampattern_ratio_linear

    r_s = cp.Variable((n_b, n_b), hermitian=True)
    w_c = cp.Variable(n_b, complex=True)
    w_p = [cp.Variable(n_b, complex=True) for _ in range(k_c)]
    r = cp.Variable(k_c)
    a_c, b_c = cp.Variable(), cp.Variable()
    a_p, b_p = cp.Variable(k_c), cp.Variable(k_c)
    delta, mu = cp.Variable(k_s), cp.Variable(k_s)
    om = cp.Variable()

    cons = [
        r_s >> 0,
        r >= 0,
        cp.real(cp.trace(r_s)) + cp.sum_squares(w_c)
        + sum(cp.sum_squares(w) for w in w_p) <= config.power_budget_w,
    ]
    for k in range(k_c):
        g = effective_cu_channel(channels, dp.star, k)
        an = cp.real(cp.quad_form(g, r_s))
        quad_p = sum(cp.square(cp.abs(g.conj() @ w)) for w in w_p)
        quad_c = quad_p + cp.square(cp.abs(g.conj() @ w_c))
        f, q, b = co.stream("p", k)
        cons.append(
            f + 2 * cp.real(np.conj(b) * (g.conj() @ w_p[k]))
            - q * (an + quad_p + 1) >= a_p[k]
        )
        f, q, b = co.stream("c", k)
        cons.append(
            f + 2 * cp.real(np.conj(b) * (g.conj() @ w_c))
            - q * (an + quad_c + 1) >= a_c
        )
    for j in range(k_s):
        g = channels.g_target[j]
        db = float(ab.delta[j])
        cons.append(mu[j] >= np.log2(db) + (delta[j] - db) / (db * LN2))
        cons.append(delta[j] >= 1 + eta * float(consts.d_opt[j]))
        minorant = cp.real(cp.quad_form(g, r_s)) + 1
        beams = [(w_c, dp.w_common)] + [(w_p[k], dp.w_private[k]) for k in range(k_c)]
        for wv, w_bar in beams:
            u_bar = complex(g.conj() @ w_bar)
            minorant = minorant + 2 * cp.real(np.conj(u_bar) * (g.conj() @ wv)) - abs(u_bar) ** 2
        cons.append(minorant >= delta[j])
        cons.append(mu[j] - cp.log(delta[j] - cp.square(cp.abs(g.conj() @ w_c))) / LN2 <= b_c)
        for k in range(k_c):
            cons.append(
                mu[j] - cp.log(delta[j] - cp.square(cp.abs(g.conj() @ w_p[k]))) / LN2
                <= b_p[k]
            )
    for k in range(k_c):
        cons.append(r[k] + a_p[k] - b_p[k] >= om)
        cons.append(a_p[k] - b_p[k] >= 0)
    cons.append(cp.sum(r) <= a_c - b_c)
    prob = cp.Problem(cp.Maximize(om), cons)
    prob.solve(solver=cp.CLARABEL)
    return prob.status, float(prob.value)


def cvxpy_v_step(channels, dp, consts, config):
    k_c, k_s = channels.n_comm_users, channels.n_sense_targets
    n_s = channels.n_ris_elements
    co = mm_coefficients(channels, dp)
    ab = tight_aux(channels, dp)
    eta = config.beampattern_ratio_linear

    v_t = cp.Variable(n_s + 1, complex=True)
    v_r = cp.Variable(n_s + 1, complex=True)
    r = cp.Variable(k_c)
    a_c, b_c = cp.Variable(), cp.Variable()
    a_p, b_p = cp.Variable(k_c), cp.Variable(k_c)
    delta, mu = cp.Variable(k_s), cp.Variable(k_s)
    om = cp.Variable()

    cons = [
        v_t[n_s] == 1, v_r[n_s] == 1, r >= 0,
        cp.square(cp.abs(v_t[:n_s])) + cp.square(cp.abs(v_r[:n_s])) <= 1,
    ]
    for k in range(k_c):
        var = v_t if channels.cu_regions[k] == "T" else v_r
        g = channels.g_cu[k]
        m_p = rate_quadratic_matrix(channels, dp, "p", k)
        m_c = rate_quadratic_matrix(channels, dp, "c", k)
        f, q, b = co.stream("p", k)
        u = cp.conj(cp.conj(var) @ (g @ dp.w_private[k]))
        cons.append(
            f + 2 * cp.real(np.conj(b) * cp.conj(u)) - q * cp.real(cp.quad_form(var, m_p))
            >= a_p[k]
        )
        f, q, b = co.stream("c", k)
        u_c = cp.conj(var) @ (g @ dp.w_common)
        cons.append(
            f + 2 * cp.real(np.conj(b) * u_c) - q * cp.real(cp.quad_form(var, m_c))
            >= a_c
        )
    for j in range(k_s):
        g = channels.g_target[j]
        d_bar = float(ab.delta[j])
        cons.append(delta[j] <= d_bar)
        cons.append(mu[j] >= np.log2(d_bar) + (delta[j] - d_bar) / (d_bar * LN2))
        cons.append(delta[j] >= 1 + eta * float(consts.d_opt[j]))
        leak_c = float(abs(g.conj() @ dp.w_common) ** 2)
        cons.append(mu[j] - cp.log(delta[j] - leak_c) / LN2 <= b_c)
        for k in range(k_c):
            leak = float(abs(g.conj() @ dp.w_private[k]) ** 2)
            cons.append(mu[j] - cp.log(delta[j] - leak) / LN2 <= b_p[k])
    for k in range(k_c):
        cons.append(r[k] + a_p[k] - b_p[k] >= om)
        cons.append(a_p[k] - b_p[k] >= 0)
    cons.append(cp.sum(r) <= a_c - b_c)
    prob = cp.Problem(cp.Maximize(om), cons)
    prob.solve(solver=cp.CLARABEL)
    return prob.status, float(prob.value)


class TestIndependentModeling:
    def test_w_step_objective_agreement(self, desk_channels, desk_config,
                                        desk_restored, desk_consts, desk_plan):
        status, reference = cvxpy_w_step(
            desk_channels, desk_restored, desk_consts, desk_config
        )
        assert status in ("optimal", "optimal_inaccurate")
        mine = solve_w_step(
            desk_channels, desk_restored, desk_consts, desk_config, desk_plan
        )
        assert mine.result.ok
        assert mine.omega == pytest.approx(reference, abs=2e-4)

    def test_v_step_objective_agreement(self, desk_channels, desk_config,
                                        desk_restored, desk_consts, desk_plan):
        status, reference = cvxpy_v_step(
            desk_channels, desk_restored, desk_consts, desk_config
        )
        assert status in ("optimal", "optimal_inaccurate")
        mine = solve_v_step(
            desk_channels, desk_restored, desk_consts, desk_config, desk_plan
        )
        assert mine.result.ok
        assert mine.omega == pytest.approx(reference, abs=2e-4)
