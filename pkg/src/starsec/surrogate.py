"""Concave minorants and linearizations used to convexify the design problem.

Each achievable rate log2(E / (E - |u|^2)) is lower-bounded around an
expansion point by an expression that is affine in the signal amplitude u and
in the interference total E; the expansion coefficients have closed forms.
Together with a tangent-line bound on log2 and a quadratic minorant of |g^H w|^2
these make both alternating-optimization subproblems convex.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .metrics import DesignPoint, stream_quadratics, target_quadratics

LOG2E = math.log2(math.e)

INFEASIBLE = float("inf")
"""Distinguished sentinel for a nonpositive log argument (never solver data)."""


class SurrogateError(ValueError):
    """Raised when an expansion point is numerically degenerate."""


@dataclass(frozen=True)
class SurrogateCoefficients:
    """Closed-form expansion coefficients per stream and user.

    For stream m and user k the true rate satisfies
    ``rate >= f + 2 Re(conj(b) * u) - q * E`` with equality at the expansion
    point; ``q >= 0`` whenever the expansion is valid (E exceeds |u|^2 by at
    least the unit noise power), which keeps the bound concave.
    """

    f_c: np.ndarray
    f_p: np.ndarray
    q_c: np.ndarray
    q_p: np.ndarray
    b_c: np.ndarray
    b_p: np.ndarray
    e_bar_c: np.ndarray
    e_bar_p: np.ndarray
    u_bar_c: np.ndarray
    u_bar_p: np.ndarray

    def stream(self, stream: str, user: int):
        """(f, q, b) for one stream/user pair."""
        if stream == "c":
            return float(self.f_c[user]), float(self.q_c[user]), complex(self.b_c[user])
        if stream == "p":
            return float(self.f_p[user]), float(self.q_p[user]), complex(self.b_p[user])
        raise ValueError(f"unknown stream {stream!r}")


@dataclass(frozen=True)
class AuxState:
    """Auxiliary variables attached to a design point.

    ``alpha`` bounds legitimate rates from below, ``beta`` bounds overhearing
    rates from above, ``delta``/``mu`` carry the eavesdropper-side interference
    totals and their logs, and ``omega`` is the min-secrecy objective value.
    """

    alpha_c: float
    alpha_p: np.ndarray
    beta_c: float
    beta_p: np.ndarray
    delta: np.ndarray
    mu: np.ndarray
    omega: float


def _coefficients(e_bar: np.ndarray, u_bar: np.ndarray):
    gap = e_bar - np.abs(u_bar) ** 2
    if np.any(gap <= 0.0) or np.any(e_bar <= 0.0):
        raise SurrogateError(
            "interference total must exceed signal power at the expansion point"
        )
    f = np.log2(e_bar / gap) - np.abs(u_bar) ** 2 * LOG2E / gap
    q = LOG2E / gap - LOG2E / e_bar
    b = u_bar * LOG2E / gap
    return f, q, b


def mm_coefficients(channels: ChannelSet, expansion: DesignPoint) -> SurrogateCoefficients:
    """Expansion coefficients for both streams of every user."""
    u_c, u_p, e_c, e_p = stream_quadratics(channels, expansion)
    f_c, q_c, b_c = _coefficients(e_c, u_c)
    f_p, q_p, b_p = _coefficients(e_p, u_p)
    return SurrogateCoefficients(
        f_c=f_c, f_p=f_p, q_c=q_c, q_p=q_p, b_c=b_c, b_p=b_p,
        e_bar_c=e_c, e_bar_p=e_p, u_bar_c=u_c, u_bar_p=u_p,
    )


def surrogate_rate(
    coeffs: SurrogateCoefficients,
    channels: ChannelSet,
    dp: DesignPoint,
    stream: str,
    user: int,
) -> float:
    """Evaluate the concave rate bound at an arbitrary design point."""
    f, q, b = coeffs.stream(stream, user)
    u_c, u_p, e_c, e_p = stream_quadratics(channels, dp)
    u = u_c[user] if stream == "c" else u_p[user]
    e = e_c[user] if stream == "c" else e_p[user]
    return f + 2.0 * (b.conjugate() * u).real - q * e


def eavesdrop_upper_bound(
    channels: ChannelSet,
    dp: DesignPoint,
    delta_j: float,
    target: int,
    beam: np.ndarray,
) -> float:
    """Overhearing-rate bound for one beam at one target, at a fixed total.

    Valid (i.e. an upper bound on the true rate) whenever ``delta_j`` does not
    exceed the target's actual interference total; returns the infeasibility
    sentinel when the log argument is nonpositive.
    """
    g = channels.g_target[target]
    leak = abs(g.conj() @ np.asarray(beam)) ** 2
    gap = delta_j - leak
    if gap <= 0.0 or delta_j <= 0.0:
        return INFEASIBLE
    return math.log2(delta_j) - math.log2(gap)


def tangent_log(delta: float, delta_bar: float) -> float:
    """First-order expansion of log2 at ``delta_bar`` (dominates log2 by concavity)."""
    if delta_bar <= 0.0:
        raise ValueError("expansion point must be positive")
    return math.log2(delta_bar) + (delta - delta_bar) / (delta_bar * math.log(2.0))


def quadratic_minorant(w: np.ndarray, w_bar: np.ndarray, g: np.ndarray) -> float:
    """Affine lower bound on |g^H w|^2, tight at w = w_bar."""
    u = complex(np.asarray(g).conj() @ np.asarray(w))
    u_bar = complex(np.asarray(g).conj() @ np.asarray(w_bar))
    return 2.0 * (u_bar.conjugate() * u).real - abs(u_bar) ** 2


def tight_aux(channels: ChannelSet, dp: DesignPoint) -> AuxState:
    """Auxiliary variables that make every bound tight at ``dp``.

    Rate bounds are set to the true rates, the eavesdropper totals to their
    actual values, and the overhearing bounds to the (then exact) log
    differences; the resulting state is feasible for a subproblem built at
    ``dp`` whenever ``dp`` itself is feasible.
    """
    u_c, u_p, e_c, e_p = stream_quadratics(channels, dp)
    uc_t, up_t, d = target_quadratics(channels, dp)
    alpha_c = float(np.min(np.log2(e_c / (e_c - np.abs(u_c) ** 2))))
    alpha_p = np.log2(e_p / (e_p - np.abs(u_p) ** 2))
    beta_c = float(np.max(np.log2(d) - np.log2(d - np.abs(uc_t) ** 2)))
    beta_p = np.max(
        np.log2(d[None, :]) - np.log2(d[None, :] - np.abs(up_t) ** 2), axis=1
    )
    omega = float(np.min(dp.rate_split + alpha_p - beta_p))
    return AuxState(
        alpha_c=alpha_c,
        alpha_p=alpha_p,
        beta_c=beta_c,
        beta_p=beta_p,
        delta=d.copy(),
        mu=np.log2(d),
        omega=omega,
    )
