"""Hold-and-sample control laws, the gain condition, and the mode supervisor."""

import math

import numpy as np
import pytest

from etsmc.controller import (
    ControlLaw,
    GainSchedule,
    Mode,
    RuleSet,
    SupervisorMode,
    check_gain_condition,
    control_law_const,
    control_law_state_gain,
    gain_value,
    supervisor_step,
)
from etsmc.errors import ConfigurationError, DesignError
from etsmc.geometry import SlidingConfig
from etsmc.scenarios import builtin_scenario
from etsmc.triggers import Strategy

# frozen by hand for the first builtin scenario: ||x0|| and the inputs the
# reaching law produces at that sample
EX1_X0_NORM = 290.17236257093816
EX1_K_AT_X0 = 143.97445765975968
EX1_U_AT_X0 = -195.97445765975968


def test_gain_schedule_validation():
    with pytest.raises(ConfigurationError):
        GainSchedule(kind="affine", k0=1.0)
    with pytest.raises(ConfigurationError):
        GainSchedule(kind="state", k0=-0.1, k1=0.2)
    with pytest.raises(ConfigurationError):
        GainSchedule(kind="state", k0=1.0, k1=-0.2)
    # the cone gain defaults to the reaching offset
    g = GainSchedule(kind="state", k0=1.79, k1=0.49)
    assert g.k_const == 1.79
    # and must end up strictly positive under either kind
    with pytest.raises(ConfigurationError):
        GainSchedule(kind="constant", k0=0.0)
    with pytest.raises(ConfigurationError):
        GainSchedule(kind="state", k0=1.0, k1=0.1, k_const=0.0)


def test_gain_value():
    sc = builtin_scenario("example1")
    assert abs(gain_value(sc.gain, sc.sim.x0) - EX1_K_AT_X0) < 1e-12
    const = GainSchedule(kind="constant", k0=3.25)
    assert gain_value(const, [100.0, -100.0]) == 3.25
    assert gain_value(const, [0.0, 0.0]) == 3.25


def test_gain_condition_margins_for_builtin_scenarios():
    # (scenario, expected margin, expected required offset)
    cases = [
        ("example1", 1.21, 0.58),
        ("example2", 0.60, 0.35),
        ("example3", 745.5, 169.5),
    ]
    for name, margin, required in cases:
        sc = builtin_scenario(name)
        chk = check_gain_condition(
            sc.gain, sc.sliding.c, sc.model.b,
            sc.sim.disturbance.d_max, sc.etm.sigma, sc.etm.beta,
        )
        assert chk.ok and chk.slope_ok
        assert abs(chk.margin - margin) < 1e-12
        assert abs(chk.required_offset - required) < 1e-12


def test_gain_condition_failure_modes():
    c = np.array([3.0, 1.0])
    b = np.array([0.0, 1.0])
    # slope too small: the gap is unbounded below
    weak = GainSchedule(kind="state", k0=10.0, k1=0.1)
    chk = check_gain_condition(weak, c, b, 0.1, sigma=0.5, beta=0.2)
    assert not chk.ok and not chk.slope_ok and chk.margin == -math.inf
    # offset too small: finite negative margin
    low = GainSchedule(kind="state", k0=0.25, k1=1.0)
    chk = check_gain_condition(low, c, b, 0.1, sigma=0.5, beta=0.2)
    assert not chk.ok and chk.slope_ok
    assert abs(chk.margin - (0.25 - 0.3)) < 1e-15
    # constant gain only dominates a sigma-free rule
    const = GainSchedule(kind="constant", k0=5.0)
    assert check_gain_condition(const, c, b, 0.1, sigma=0.0, beta=0.2).ok
    assert not check_gain_condition(const, c, b, 0.1, sigma=0.5, beta=0.2).ok


def test_state_gain_law_frozen_value():
    sc = builtin_scenario("example1")
    u = control_law_state_gain(sc.model, sc.sliding.c, sc.gain, sc.sim.x0)
    assert abs(u - EX1_U_AT_X0) < 1e-12


def test_laws_agree_when_sample_sits_on_the_surface():
    # c . x = 0 makes sign(s) = 0, so the gain drops out of both laws
    sc = builtin_scenario("remark1")
    x = np.array([1.0, -3.0])
    assert abs(float(sc.sliding.c @ x)) < 1e-15
    u_state = control_law_state_gain(sc.model, sc.sliding.c, sc.gain, x)
    u_const = control_law_const(sc.model, sc.sliding.c, 77.0, x)
    want = -float(sc.sliding.c @ (sc.model.a @ x)) / float(sc.sliding.c @ sc.model.b)
    assert abs(u_state - want) < 1e-12
    assert abs(u_const - want) < 1e-12


def test_constant_law_formula():
    sc = builtin_scenario("remark1")
    x = np.array([2.0, 1.0])
    ctb = float(sc.sliding.c @ sc.model.b)
    s = float(sc.sliding.c @ x)
    want = -(float(sc.sliding.c @ (sc.model.a @ x)) + 4.5 * math.copysign(1.0, s)) / ctb
    assert abs(control_law_const(sc.model, sc.sliding.c, 4.5, x) - want) < 1e-12


def test_singular_input_channel_rejected():
    sc = builtin_scenario("remark1")
    with pytest.raises(DesignError):
        control_law_const(sc.model, np.array([1.0, 0.0]), 1.0, np.array([1.0, 1.0]))


def _wedge():
    # a small planar wedge with a practical band: s = 2 x1 + x2
    return SlidingConfig(
        c=(2.0, 1.0), c_hat=(1.0, 1.0), c_check=(3.0, 1.0), delta=0.5
    )


def test_supervisor_is_one_way():
    sl = _wedge()
    sup = SupervisorMode(strategy=Strategy.SWITCHING)
    outside = np.array([1.0, 0.0])       # both surface values positive
    inside = np.array([1.0, -2.0])       # s_hat = -1, s_check = 1
    assert supervisor_step(sup, sl, outside, 0.0) == (
        ControlLaw.STATE_GAIN, RuleSet.MAGNITUDE,
    )
    assert sup.mode is Mode.REACH and sup.switch_time is None
    assert supervisor_step(sup, sl, inside, 0.25) == (
        ControlLaw.CONSTANT, RuleSet.DIRECTION,
    )
    assert sup.mode is Mode.CONE and sup.switch_time == 0.25
    # repeated and even exiting samples never undo the switch
    supervisor_step(sup, sl, inside, 0.5)
    supervisor_step(sup, sl, outside, 0.75)
    assert sup.mode is Mode.CONE and sup.switch_time == 0.25


def test_hybrid_supervisor_never_switches():
    sl = _wedge()
    sup = SupervisorMode(strategy=Strategy.HYBRID_MIN)
    inside = np.array([1.0, -2.0])
    assert supervisor_step(sup, sl, inside, 0.1) == (
        ControlLaw.STATE_GAIN, RuleSet.HYBRID_MIN,
    )
    assert sup.mode is Mode.REACH and sup.switch_time is None


def test_practical_supervisor_accepts_the_delta_band():
    sl = _wedge()
    # outside the ideal wedge but |s| = 0.2 <= delta: only the practical
    # strategy treats this as arrival
    band = np.array([0.1, 0.0])
    strict = SupervisorMode(strategy=Strategy.SWITCHING)
    supervisor_step(strict, sl, band, 0.0)
    assert strict.mode is Mode.REACH
    prac = SupervisorMode(strategy=Strategy.PRACTICAL)
    assert supervisor_step(prac, sl, band, 0.0) == (
        ControlLaw.CONSTANT, RuleSet.LATCHED_MAX,
    )
    assert prac.mode is Mode.CONE and prac.switch_time == 0.0
