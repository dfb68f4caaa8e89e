"""Zero-order-hold sliding-mode control laws and the mode supervisor.

Two laws are used, both computed from the most recent sample x_i:

* state-gain law      u = -(c^T B)^{-1} (c^T A x_i + K(x_i) sign(c^T x_i))
* constant-gain law   u = -(c^T B)^{-1} (c^T A x_i + K sign(c^T x_i))

with sign(0) = 0.  The supervisor is a one-way switch from the reaching
mode to the cone mode; once the state is observed inside the (ideal or
practical, depending on strategy) cone it never switches back — a monitor
records any later cone exit as a violation instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigurationError, DesignError
from .geometry import SlidingConfig, in_ideal_cone, in_practical_cone, sliding_value
from .plant import LtiModel
from .triggers import Strategy

__all__ = [
    "GainSchedule",
    "GainCheck",
    "Mode",
    "ControlLaw",
    "RuleSet",
    "SupervisorMode",
    "gain_value",
    "check_gain_condition",
    "control_law_state_gain",
    "control_law_const",
    "supervisor_step",
]


@dataclass(frozen=True)
class GainSchedule:
    """Switching-gain schedule.

    kind 'state': reaching gain K(x) = k0 + k1 ||x||, cone gain k_const.
    kind 'constant': k_const everywhere.
    k_const defaults to k0 when not given.
    """

    kind: str
    k0: float = 0.0
    k1: float = 0.0
    k_const: float | None = None

    def __post_init__(self):
        if self.kind not in ("state", "constant"):
            raise ConfigurationError(f"gain.kind: unknown kind {self.kind!r}")
        if self.k0 < 0.0 or self.k1 < 0.0:
            raise ConfigurationError("gain.k0/k1: must be >= 0")
        if self.k_const is None:
            object.__setattr__(self, "k_const", self.k0)
        if self.k_const <= 0.0:
            raise ConfigurationError("gain.k_const: must be > 0")


def gain_value(g: GainSchedule, x_last) -> float:
    """Reaching-law gain evaluated at the held sample."""
    if g.kind == "constant":
        return float(g.k_const)
    xl = np.asarray(x_last, dtype=float)
    return g.k0 + g.k1 * math.sqrt(float(xl @ xl))


@dataclass(frozen=True)
class GainCheck:
    ok: bool
    margin: float           # min over ||x|| >= 0 of K(x) - (|c^T B| d_max + sigma ||x|| + beta)
    required_offset: float  # |c^T B| d_max + beta
    slope_ok: bool          # k1 >= sigma (dominance at large states)


def check_gain_condition(
    g: GainSchedule, c, b, d_max: float, sigma: float, beta: float
) -> GainCheck:
    """Verify K(x) > |c^T B| d_max + sigma ||x|| + beta for every state.

    For the affine schedule this reduces to k1 >= sigma together with
    k0 > |c^T B| d_max + beta; the margin reported is the infimum gap,
    attained at x = 0 when the slope condition holds (and -inf otherwise).
    """
    cv = np.asarray(c, dtype=float)
    bv = np.asarray(b, dtype=float)
    ctb = abs(float(cv @ bv))
    required = ctb * d_max + beta
    if g.kind == "constant":
        slope_ok = sigma == 0.0
        offset = float(g.k_const)
    else:
        slope_ok = g.k1 >= sigma
        offset = g.k0
    margin = offset - required if slope_ok else -math.inf
    return GainCheck(
        ok=slope_ok and margin > 0.0,
        margin=margin,
        required_offset=required,
        slope_ok=slope_ok,
    )


def _sign(v: float) -> float:
    if v > 0.0:
        return 1.0
    if v < 0.0:
        return -1.0
    return 0.0


def _law(model: LtiModel, c, k: float, x_last) -> float:
    cv = np.asarray(c, dtype=float)
    xl = np.asarray(x_last, dtype=float)
    ctb = float(cv @ model.b)
    if ctb == 0.0:
        raise DesignError("c^T B is zero; the input channel is singular")
    s_last = float(cv @ xl)
    cta_x = float(cv @ (model.a @ xl))
    return -(cta_x + k * _sign(s_last)) / ctb


def control_law_state_gain(model: LtiModel, c, g: GainSchedule, x_last) -> float:
    """Zero-order-hold input from the state-gain reaching law."""
    return _law(model, c, gain_value(g, x_last), x_last)


def control_law_const(model: LtiModel, c, k_const: float, x_last) -> float:
    """Zero-order-hold input from the constant-gain cone law."""
    return _law(model, c, float(k_const), x_last)


class Mode(Enum):
    REACH = "reach"
    CONE = "cone"


class ControlLaw(Enum):
    STATE_GAIN = "state-gain"
    CONSTANT = "constant"


class RuleSet(Enum):
    HYBRID_MIN = "hybrid-min"
    MAGNITUDE = "magnitude"
    DIRECTION = "direction"
    LATCHED_MAX = "latched-max"


@dataclass
class SupervisorMode:
    strategy: Strategy
    mode: Mode = Mode.REACH
    switch_time: float | None = None


def supervisor_step(
    sup: SupervisorMode, sliding: SlidingConfig, x, t: float
) -> tuple[ControlLaw, RuleSet]:
    """Update the one-way mode switch and select (law, rule set).

    HYBRID_MIN never changes law or rules.  SWITCHING flips to the cone
    mode at the first sample inside the ideal cone, PRACTICAL at the first
    sample inside the practical cone; the switch instant is recorded once
    and the mode never reverts.  Idempotent on repeated identical samples.
    """
    strat = sup.strategy
    if strat is Strategy.HYBRID_MIN:
        return ControlLaw.STATE_GAIN, RuleSet.HYBRID_MIN

    if sup.mode is Mode.REACH:
        inside = (
            in_ideal_cone(sliding, x)
            if strat is Strategy.SWITCHING
            else in_practical_cone(sliding, x)
        )
        if inside:
            sup.mode = Mode.CONE
            sup.switch_time = t

    if sup.mode is Mode.REACH:
        return ControlLaw.STATE_GAIN, RuleSet.MAGNITUDE
    if strat is Strategy.SWITCHING:
        return ControlLaw.CONSTANT, RuleSet.DIRECTION
    return ControlLaw.CONSTANT, RuleSet.LATCHED_MAX
