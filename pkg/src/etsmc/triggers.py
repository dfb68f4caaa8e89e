"""Event-triggering rules and guaranteed inter-event time bounds.

Three trigger strategies are supported (CLI tokens in parentheses):

* ``HYBRID_MIN`` ("thm1") — sample when EITHER the direction rule or the
  magnitude rule fires; the guaranteed dwell time is the smaller of the two
  per-rule bounds.
* ``SWITCHING`` ("thm3") — magnitude rule only while reaching, direction
  rule only once the supervisor has latched cone membership.
* ``PRACTICAL`` ("thm5") — magnitude rule while reaching; inside the
  practical cone both the direction rule and the level-nu magnitude rule
  must have fired (each one latches) before a sample is taken.

All rules compare quantities derived from the *held* sample x(t_i) with the
current state, so they are cheap to evaluate densely along a trajectory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigurationError, ContractError, DesignError
from .geometry import SlidingConfig, in_ideal_cone, in_practical_cone
from .linalg import DEFAULT_TOLS, induced_norm2
from .plant import LtiModel

__all__ = [
    "Strategy",
    "EtmConfig",
    "TriggerState",
    "direction_rule",
    "magnitude_rule",
    "practical_magnitude_rule",
    "should_trigger",
    "rules_fired",
    "would_trigger",
    "update_latches",
    "commit_trigger",
    "rho_gamma_mu",
    "BoundPair",
    "PracticalBounds",
    "bound_T_i1",
    "bound_T_i2",
    "bound_practical",
    "asymptotic_floor_direction",
]


class Strategy(Enum):
    """Trigger strategy; the value is the CLI/JSON token."""

    HYBRID_MIN = "thm1"
    SWITCHING = "thm3"
    PRACTICAL = "thm5"


_STRATEGY_ALIASES = {
    "thm1": Strategy.HYBRID_MIN,
    "hybrid-min": Strategy.HYBRID_MIN,
    "hybrid_min": Strategy.HYBRID_MIN,
    "thm3": Strategy.SWITCHING,
    "switching": Strategy.SWITCHING,
    "thm5": Strategy.PRACTICAL,
    "practical": Strategy.PRACTICAL,
}


def parse_strategy(token) -> Strategy:
    if isinstance(token, Strategy):
        return token
    try:
        return _STRATEGY_ALIASES[str(token).lower()]
    except KeyError:
        raise ConfigurationError(
            f"strategy: unknown token {token!r} (expected thm1, thm3 or thm5)"
        ) from None


@dataclass(frozen=True)
class EtmConfig:
    """Triggering thresholds.

    sigma, beta parameterise the reaching-phase magnitude rule
    |c.A e| >= sigma ||x_i|| + beta; nu is the level of the practical
    magnitude rule; n_div divides the cone angle for the direction rule;
    eps_x disables the direction rule below that state norm so it cannot
    chatter at the origin.
    """

    sigma: float
    beta: float
    nu: float
    n_div: int
    strategy: Strategy
    eps_x: float = 1e-9

    def __post_init__(self):
        object.__setattr__(self, "strategy", parse_strategy(self.strategy))
        if self.sigma < 0.0:
            raise ConfigurationError("etm.sigma: must be >= 0")
        if self.beta <= 0.0:
            raise ConfigurationError("etm.beta: must be > 0")
        if self.nu <= 0.0:
            raise ConfigurationError("etm.nu: must be > 0")
        if int(self.n_div) != self.n_div or self.n_div < 1:
            raise ConfigurationError("etm.n_div: must be an integer >= 1")
        if self.eps_x <= 0.0:
            raise ConfigurationError("etm.eps_x: must be > 0")

    def validate_against_theta(self, theta: float) -> None:
        """The direction-rule threshold cos(theta / (2 n_div)) must lie in (0, 1)."""
        half = theta / (2.0 * self.n_div)
        if not 0.0 < half < 0.5 * math.pi:
            raise ConfigurationError(
                f"etm.n_div: cos(theta/(2 n_div)) not in (0, 1) for theta={theta}"
            )


@dataclass
class TriggerState:
    """Mutable bookkeeping between samples."""

    t_last: float
    x_last: np.ndarray
    dir_fired: bool = False
    mag_fired: bool = False
    trigger_count: int = 0


def direction_rule(x, x_last, theta: float, n_div: int, eps_x: float) -> bool:
    """Fire when the state direction has rotated by at least theta/(2 n_div).

    Disabled (returns False) whenever either vector is shorter than eps_x.
    Scale-invariant in both arguments above that guard.
    """
    xv = np.asarray(x, dtype=float)
    xl = np.asarray(x_last, dtype=float)
    norm_x = math.sqrt(float(xv @ xv))
    norm_l = math.sqrt(float(xl @ xl))
    if norm_x < eps_x or norm_l < eps_x:
        return False
    cosine = float(xv @ xl) / (norm_x * norm_l)
    return cosine <= math.cos(theta / (2.0 * n_div))


def magnitude_rule(e, x_last, c, a, sigma: float, beta: float) -> bool:
    """Fire when |c . (A e)| >= sigma ||x_last|| + beta."""
    ev = np.asarray(e, dtype=float)
    xl = np.asarray(x_last, dtype=float)
    cv = np.asarray(c, dtype=float)
    lhs = abs(float(cv @ (np.asarray(a, dtype=float) @ ev)))
    return lhs >= sigma * math.sqrt(float(xl @ xl)) + beta


def practical_magnitude_rule(e, c, a, nu: float) -> bool:
    """Fire when |c . (A e)| >= nu."""
    ev = np.asarray(e, dtype=float)
    cv = np.asarray(c, dtype=float)
    return abs(float(cv @ (np.asarray(a, dtype=float) @ ev))) >= nu


def rules_fired(
    cfg: EtmConfig,
    st: TriggerState,
    x,
    cone_mode: bool,
    model: LtiModel,
    sliding: SlidingConfig,
) -> tuple[bool, bool]:
    """Instantaneous (direction, magnitude) rule evaluations for the active set.

    ``cone_mode`` selects the rule set: False = reaching phase, True = the
    supervisor has latched cone membership.  Rules that are inactive for the
    current strategy/mode evaluate to False.
    """
    xv = np.asarray(x, dtype=float)
    e = st.x_last - xv
    strat = cfg.strategy
    dir_now = False
    mag_now = False
    if strat is Strategy.HYBRID_MIN:
        dir_now = direction_rule(xv, st.x_last, sliding.theta, cfg.n_div, cfg.eps_x)
        mag_now = magnitude_rule(e, st.x_last, sliding.c, model.a, cfg.sigma, cfg.beta)
    elif strat is Strategy.SWITCHING:
        if cone_mode:
            dir_now = direction_rule(xv, st.x_last, sliding.theta, cfg.n_div, cfg.eps_x)
        else:
            mag_now = magnitude_rule(
                e, st.x_last, sliding.c, model.a, cfg.sigma, cfg.beta
            )
    else:  # PRACTICAL
        if cone_mode:
            dir_now = direction_rule(xv, st.x_last, sliding.theta, cfg.n_div, cfg.eps_x)
            mag_now = practical_magnitude_rule(e, sliding.c, model.a, cfg.nu)
        else:
            mag_now = magnitude_rule(
                e, st.x_last, sliding.c, model.a, cfg.sigma, cfg.beta
            )
    return dir_now, mag_now


def would_trigger(
    cfg: EtmConfig,
    st: TriggerState,
    x,
    cone_mode: bool,
    model: LtiModel,
    sliding: SlidingConfig,
) -> bool:
    """Pure trigger predicate: does a sample fire at state x right now?

    Uses (but does not modify) the latches in ``st`` for the PRACTICAL
    strategy, where the sample happens once BOTH rules have fired.
    """
    dir_now, mag_now = rules_fired(cfg, st, x, cone_mode, model, sliding)
    if cfg.strategy is Strategy.PRACTICAL and cone_mode:
        return (st.dir_fired or dir_now) and (st.mag_fired or mag_now)
    return dir_now or mag_now


def update_latches(st: TriggerState, dir_now: bool, mag_now: bool) -> None:
    st.dir_fired = st.dir_fired or dir_now
    st.mag_fired = st.mag_fired or mag_now


def commit_trigger(st: TriggerState, t: float, x) -> None:
    st.t_last = t
    st.x_last = np.array(x, dtype=float, copy=True)
    st.dir_fired = False
    st.mag_fired = False
    st.trigger_count += 1


def should_trigger(
    cfg: EtmConfig,
    st: TriggerState,
    t: float,
    x,
    cone_mode: bool,
    model: LtiModel,
    sliding: SlidingConfig,
) -> bool:
    """Evaluate the active rule set at (t, x); commit the sample if it fires.

    Returns True exactly when a new sample was taken (st is then updated
    and the PRACTICAL latches cleared); otherwise latches are accumulated.
    Never fires at the sample instant itself, since e = 0 and the direction
    cosine is 1 there while beta > 0 and cos(theta/(2 n_div)) < 1.
    """
    dir_now, mag_now = rules_fired(cfg, st, x, cone_mode, model, sliding)
    if cfg.strategy is Strategy.PRACTICAL and cone_mode:
        fired = (st.dir_fired or dir_now) and (st.mag_fired or mag_now)
    else:
        fired = dir_now or mag_now
    if fired:
        commit_trigger(st, t, x)
    elif cfg.strategy is Strategy.PRACTICAL and cone_mode:
        update_latches(st, dir_now, mag_now)
    return fired


# ---------------------------------------------------------------------------
# Guaranteed inter-event time bounds
# ---------------------------------------------------------------------------


def rho_gamma_mu(model: LtiModel, c, k_at: float, d_max: float):
    """Error-growth constants for the held-control interval analysis.

    rho = ||A - B (c^T B)^{-1} c^T A||  (the ZOH feedback mismatch gain),
    gamma = ||B (c^T B)^{-1}|| * K + ||B|| * d_max evaluated at the passed
    gain value, and mu = the same expression (callers pass the constant
    cone-law gain to obtain mu, the reaching-law gain to obtain gamma).
    In regular form B = e_n and c^T B = 1, so gamma = K + d_max.
    """
    cv = np.asarray(c, dtype=float)
    b = model.b
    ctb = float(cv @ b)
    if ctb == 0.0:
        raise DesignError("c^T B is zero; the input channel is singular")
    cta = cv @ model.a
    m = model.a - np.outer(b / ctb, cta)
    rho = induced_norm2(m)
    b_over = induced_norm2(b / ctb)
    b_norm = induced_norm2(b)
    gamma = b_over * abs(k_at) + b_norm * d_max
    return rho, gamma, gamma


@dataclass(frozen=True)
class BoundPair:
    """A guaranteed dwell-time bound in its assertable and printed forms.

    ``derived`` is the tight value used in verification; ``printed`` is the
    looser reporting variant, or None when its logarithm argument is not
    positive at this state (the printed form can be vacuous for small
    states).
    """

    derived: float
    printed: float | None


@dataclass(frozen=True)
class PracticalBounds:
    direction: BoundPair
    magnitude: BoundPair


def _check_growth_params(rho: float, gamma: float, a_norm: float) -> None:
    if a_norm <= 0.0:
        raise ContractError("bounds: ||A|| must be > 0")
    if rho < 0.0 or gamma < 0.0:
        raise ContractError("bounds: rho and gamma must be >= 0")
    if rho == 0.0 and gamma == 0.0:
        raise ContractError("bounds: rho and gamma cannot both be 0")


def bound_T_i1(
    x_norm: float, theta: float, n_div: int, rho: float, gamma: float, a_norm: float
) -> BoundPair:
    """Dwell-time bound for the direction rule.

    derived: T = ln(1 + ||A|| sin(theta/(2n)) x / (rho x + gamma)) / ||A||.
    printed: T = ln(1 + ||A|| sin(theta/(2n))/rho
                     - (gamma ||A||/rho) / (rho x + gamma)) / ||A||,
    which lacks a sin factor on its correction term and can go vacuous
    (non-positive log argument) at small x; both converge to the same
    positive floor as x grows.
    """
    _check_growth_params(rho, gamma, a_norm)
    if x_norm < 0.0:
        raise ContractError("bounds: ||x|| must be >= 0")
    sin_half = math.sin(theta / (2.0 * n_div))
    denom = rho * x_norm + gamma
    if denom == 0.0:
        return BoundPair(derived=math.inf, printed=None)
    derived = math.log1p(a_norm * sin_half * x_norm / denom) / a_norm
    printed = None
    if rho > 0.0:
        arg = 1.0 + a_norm * sin_half / rho - (gamma * a_norm / rho) / denom
        if arg > 0.0:
            printed = math.log(arg) / a_norm
    return BoundPair(derived=derived, printed=printed)


def bound_T_i2(
    x_norm: float,
    sigma: float,
    beta: float,
    c_norm: float,
    rho: float,
    gamma: float,
    a_norm: float,
) -> BoundPair:
    """Dwell-time bound for the reaching-phase magnitude rule.

    derived: T = ln(1 + (sigma x + beta) / (||c|| (rho x + gamma))) / ||A||.
    printed groups the denominator as ||c|| rho x + gamma instead.
    Strictly positive for beta > 0.
    """
    _check_growth_params(rho, gamma, a_norm)
    if x_norm < 0.0 or sigma < 0.0 or beta <= 0.0 or c_norm <= 0.0:
        raise ContractError("bounds: invalid magnitude-rule parameters")
    numer = sigma * x_norm + beta
    derived = math.log1p(numer / (c_norm * (rho * x_norm + gamma))) / a_norm
    printed_denom = c_norm * rho * x_norm + gamma
    printed = (
        math.log1p(numer / printed_denom) / a_norm if printed_denom > 0.0 else None
    )
    return BoundPair(derived=derived, printed=printed)


def bound_practical(
    x_norm: float,
    nu: float,
    theta: float,
    n_div: int,
    c_norm: float,
    rho: float,
    gamma: float,
    mu: float,
    a_norm: float,
) -> PracticalBounds:
    """Per-rule dwell-time bounds inside the practical cone.

    The direction bound reuses the reaching-form expression with gamma;
    the level-nu magnitude bound uses mu:
    T = ln(1 + nu / (||c|| (rho x + mu))) / ||A||.  The guaranteed dwell
    time of the latched pair is the LARGER of the two (both rules must
    fire).
    """
    if nu <= 0.0:
        raise ContractError("bounds: nu must be > 0")
    direction = bound_T_i1(x_norm, theta, n_div, rho, gamma, a_norm)
    _check_growth_params(rho, mu, a_norm)
    if c_norm <= 0.0:
        raise ContractError("bounds: ||c|| must be > 0")
    derived = math.log1p(nu / (c_norm * (rho * x_norm + mu))) / a_norm
    printed_denom = c_norm * rho * x_norm + mu
    printed = math.log1p(nu / printed_denom) / a_norm if printed_denom > 0.0 else None
    return PracticalBounds(
        direction=direction, magnitude=BoundPair(derived=derived, printed=printed)
    )


def asymptotic_floor_direction(
    theta: float, n_div: int, rho: float, a_norm: float
) -> float:
    """Large-state limit of the direction-rule bound: stays positive, so the
    triggering cannot Zeno out at any state magnitude."""
    if rho <= 0.0 or a_norm <= 0.0:
        raise ContractError("floor: rho and ||A|| must be > 0")
    return math.log1p(a_norm * math.sin(theta / (2.0 * n_div)) / rho) / a_norm
