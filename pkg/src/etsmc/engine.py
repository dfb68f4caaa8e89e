"""Fixed-step hybrid simulation engine.

The continuous flow is integrated with classical RK4 on a fixed grid
t0 + k*dt; the trigger rules are evaluated at every step boundary, so a
rule can fire up to one step late.  When a boundary evaluation fires,
the firing instant is refined by bisection (re-integrating from the
step start) down to ``refine_tol``, the controller is re-sampled there,
and the remainder of the step is integrated under the new hold.  At
most one rule-driven update happens per grid step; the control input is
held constant between updates (zero-order hold).

The mode supervisor is evaluated at every recorded sample.  Its one-way
switch into the cone region changes the control law, so the moment it
flips the held input is re-sampled immediately and logged as a trigger
record with rule ``"switch"`` (such records mark law changes, not rule
firings, and are exempt from inter-event bound checks).

Monitors are observational: cone membership after entry, the quadratic
form V1 = x1^T P x1 after entry, and the ultimate-bound ball for the
practical strategy are recorded and summarised, never enforced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .controller import (
    ControlLaw,
    GainSchedule,
    Mode,
    SupervisorMode,
    check_gain_condition,
    control_law_const,
    control_law_state_gain,
    gain_value,
    supervisor_step,
)
from .errors import ConfigurationError, DesignError, SimulationError
from .geometry import SlidingConfig, validate_surfaces
from .linalg import DEFAULT_TOLS, Tolerances, as_vector, solve_lyapunov, symmetric_eigs
from .plant import DisturbanceSpec, LtiModel, disturbance_eval
from .triggers import (
    EtmConfig,
    Strategy,
    TriggerState,
    commit_trigger,
    parse_strategy,
    rules_fired,
    update_latches,
    would_trigger,
)

__all__ = [
    "SimConfig",
    "TriggerRecord",
    "MonitorReport",
    "SimResult",
    "rk4_step",
    "refine_trigger_time",
    "simulate",
]

# Tolerant cone-membership slack used by the monitors (the strict tests are
# what the rules and supervisor use; the monitors allow numerical dust that
# scales with the state magnitude).
CONE_MONITOR_SLACK = 1e-9


@dataclass(frozen=True)
class SimConfig:
    """Time grid, initial state and disturbance for one run."""

    t_final: float
    x0: np.ndarray
    disturbance: DisturbanceSpec
    t0: float = 0.0
    dt: float = 1e-3
    refine_tol: float = 1e-6
    record_stride: int = 1

    def __post_init__(self):
        object.__setattr__(self, "x0", as_vector(self.x0, "x0"))
        if not self.t_final > self.t0:
            raise ConfigurationError("sim.t_final: must exceed t0")
        if self.dt <= 0.0:
            raise ConfigurationError("sim.dt: must be > 0")
        if not 0.0 < self.refine_tol <= self.dt:
            raise ConfigurationError("sim.refine_tol: must lie in (0, dt]")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ConfigurationError("sim.record_stride: must be an integer >= 1")


@dataclass(frozen=True)
class TriggerRecord:
    """One control update: where, why, and what was applied afterwards."""

    index: int
    t: float
    x: np.ndarray
    x_norm: float
    rule: str            # "init"|"switch"|"direction"|"magnitude"|"practical"|"both"
    rules: tuple         # the individual rules satisfied at the firing instant
    mode: str            # supervisor mode right after the update
    law: str
    u: float
    gain_held: float
    latched_fire: bool   # True when fired by the latched pair (practical cone)
    dt_prev: float       # time since the previous trigger (nan for the first)


@dataclass(frozen=True)
class MonitorReport:
    cone_entry_time: float | None   # start of the maximal all-inside suffix
    first_entry_time: float | None  # first sample inside the strategy cone
    switch_time: float | None
    cone_violations: int
    first_violation_time: float | None
    v1_max_step_increase: float | None
    omega_radius: float | None
    omega_tail_contained: bool | None
    companion_q_min_eig: float | None


@dataclass
class SimResult:
    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    d: np.ndarray
    s: np.ndarray
    s_hat: np.ndarray
    s_check: np.ndarray
    mode: np.ndarray          # 0 = reach, 1 = cone
    in_cone: np.ndarray       # strict ideal-cone membership per sample
    in_practical: np.ndarray
    v: np.ndarray             # s^2 / 2
    v1: np.ndarray            # x1^T P x1 with P from the hat-surface solve
    lam1: np.ndarray          # convex cone weights (nan outside the cone)
    lam2: np.ndarray
    triggers: list
    monitors: MonitorReport
    summary: dict


def rk4_step(model: LtiModel, dist: DisturbanceSpec, t: float, x, u: float, h: float):
    """One classical RK4 step of the held-input flow  dx = A x + e_n (u + d)."""
    a = model.a
    xv = np.asarray(x, dtype=float)
    d1 = disturbance_eval(dist, t)
    dm = disturbance_eval(dist, t + 0.5 * h)
    d4 = disturbance_eval(dist, t + h)

    k1 = a @ xv
    k1[-1] += u + d1
    x2 = xv + (0.5 * h) * k1
    k2 = a @ x2
    k2[-1] += u + dm
    x3 = xv + (0.5 * h) * k2
    k3 = a @ x3
    k3[-1] += u + dm
    x4 = xv + h * k3
    k4 = a @ x4
    k4[-1] += u + d4
    return xv + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def refine_trigger_time(predicate, t_a: float, t_b: float, tol: float) -> float:
    """Earliest instant in (t_a, t_b] where ``predicate`` holds, within tol.

    Assumes predicate(t_b) is True; if the predicate already holds at t_a
    that instant is returned directly.  Plain bisection — the returned
    instant always satisfies the predicate.
    """
    if predicate(t_a):
        return t_a
    lo, hi = t_a, t_b
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break  # float resolution exhausted
        if predicate(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _rule_labels(strategy, cone_mode, st, dir_now, mag_now):
    """Names of the rule(s) satisfied at a firing instant."""
    if strategy is Strategy.PRACTICAL and cone_mode:
        fired = []
        if dir_now and not st.dir_fired:
            fired.append("direction")
        if mag_now and not st.mag_fired:
            fired.append("practical")
        if not fired:
            fired = ["direction", "practical"]
        return tuple(fired)
    fired = []
    if dir_now:
        fired.append("direction")
    if mag_now:
        fired.append(
            "practical" if strategy is Strategy.PRACTICAL and cone_mode else "magnitude"
        )
    return tuple(fired)


def _label_string(rules: tuple) -> str:
    return "both" if len(rules) > 1 else rules[0]


def simulate(
    model: LtiModel,
    sliding: SlidingConfig,
    etm: EtmConfig,
    gain: GainSchedule,
    sim: SimConfig,
    strategy=None,
    input_scale: float = 1.0,
    tols: Tolerances = DEFAULT_TOLS,
) -> SimResult:
    """Run one event-triggered closed-loop simulation.

    All configuration is validated up front: the three reduced closed
    loops must be Hurwitz, the gain schedule must dominate the disturbance
    and trigger thresholds at every state, and the direction-rule divisor
    must keep its cosine threshold in (0, 1).  DesignError or
    ConfigurationError is raised otherwise, before any integration.

    ``input_scale`` multiplies the applied input (1.0 is the consistent
    default; it exists for comparison experiments) — the guarantees and
    bound checks are only meaningful at 1.0.
    """
    strat = parse_strategy(strategy) if strategy is not None else etm.strategy
    if strat is not etm.strategy:
        etm = replace(etm, strategy=strat)

    if sim.x0.shape[0] != model.n:
        raise ConfigurationError(
            f"sim.x0: length {sim.x0.shape[0]} does not match model dimension {model.n}"
        )
    surf = validate_surfaces(model, sliding)
    if not surf.passed:
        bad = [v.label for v in surf.surfaces if not v.hurwitz]
        if bad:
            raise DesignError(
                f"reduced closed loop not Hurwitz for surface(s): {', '.join(bad)}"
            )
        raise DesignError(f"degenerate cone: theta = {surf.theta}")
    etm.validate_against_theta(sliding.theta)
    gc = check_gain_condition(
        gain, sliding.c, model.b, sim.disturbance.d_max, etm.sigma, etm.beta
    )
    if not gc.ok:
        raise DesignError(
            f"gain schedule does not dominate the trigger thresholds "
            f"(margin {gc.margin}, slope_ok={gc.slope_ok})"
        )

    # Quadratic monitor for the reduced state: P from the hat-surface loop.
    acl_hat = model.a11 - np.outer(model.a12[:, 0], sliding.c1_hat)
    p_mon = solve_lyapunov(acl_hat, np.eye(model.n - 1), tols)
    acl_check = model.a11 - np.outer(model.a12[:, 0], sliding.c1_check)
    q_comp = -(acl_check.T @ p_mon + p_mon @ acl_check)
    q_comp_min = float(symmetric_eigs(q_comp, tols)[0][0])

    dist = sim.disturbance
    c = sliding.c
    c_hat = sliding.c_hat
    c_check = sliding.c_check
    delta = sliding.delta

    def compute_u(law: ControlLaw, x_now):
        if law is ControlLaw.CONSTANT:
            k = float(gain.k_const)
            return control_law_const(model, c, k, x_now), k
        k = gain_value(gain, x_now)
        return control_law_state_gain(model, c, gain, x_now), k

    ts, xs, us, dvals = [], [], [], []
    s_arr, sh_arr, sc_arr = [], [], []
    mode_arr, cone_arr, prac_arr = [], [], []
    v_arr, v1_arr, l1_arr, l2_arr = [], [], [], []

    def record(t_now, x_now, u_now):
        s_v = float(c @ x_now)
        sh = float(c_hat @ x_now)
        scheck = float(c_check @ x_now)
        ideal = (sh <= 0.0 <= scheck) or (scheck <= 0.0 <= sh)
        x1 = x_now[:-1]
        ts.append(t_now)
        xs.append(x_now.copy())
        us.append(u_now)
        dvals.append(disturbance_eval(dist, t_now))
        s_arr.append(s_v)
        sh_arr.append(sh)
        sc_arr.append(scheck)
        mode_arr.append(1 if sup.mode is Mode.CONE else 0)
        cone_arr.append(ideal)
        prac_arr.append(ideal or abs(s_v) <= delta)
        v_arr.append(0.5 * s_v * s_v)
        v1_arr.append(float(x1 @ (p_mon @ x1)))
        if ideal:
            den = scheck - sh
            if den == 0.0:
                l1_arr.append(0.5)
                l2_arr.append(0.5)
            else:
                l1_arr.append(scheck / den)
                l2_arr.append(-sh / den)
        else:
            l1_arr.append(math.nan)
            l2_arr.append(math.nan)

    t = float(sim.t0)
    t_final = float(sim.t_final)
    x = sim.x0.copy()
    sup = SupervisorMode(strategy=strat)
    law, _ = supervisor_step(sup, sliding, x, t)
    u_raw, k_held = compute_u(law, x)
    u = input_scale * u_raw

    st = TriggerState(t_last=t, x_last=x.copy())
    st.trigger_count = 1
    triggers = [
        TriggerRecord(
            index=0,
            t=t,
            x=x.copy(),
            x_norm=math.sqrt(float(x @ x)),
            rule="init",
            rules=("init",),
            mode=sup.mode.value,
            law=law.value,
            u=u,
            gain_held=k_held,
            latched_fire=False,
            dt_prev=math.nan,
        )
    ]
    record(t, x, u)

    def switch_resample(t_now, x_now, u_prev):
        """Advance the supervisor; on its REACH->CONE flip re-sample the hold.

        The flip changes the control law, so holding the reach-phase input
        any longer would steer against the cone-phase geometry.  The update
        is logged with rule "switch"; returns the (possibly new) held input
        and whether the flip happened.
        """
        was_reach = sup.mode is Mode.REACH
        law_now, _ = supervisor_step(sup, sliding, x_now, t_now)
        if not (was_reach and sup.mode is Mode.CONE):
            return u_prev, False
        dt_prev = t_now - st.t_last
        commit_trigger(st, t_now, x_now)
        u_raw_s, k_s = compute_u(law_now, x_now)
        u_new = input_scale * u_raw_s
        triggers.append(
            TriggerRecord(
                index=len(triggers),
                t=t_now,
                x=x_now.copy(),
                x_norm=math.sqrt(float(x_now @ x_now)),
                rule="switch",
                rules=("switch",),
                mode=sup.mode.value,
                law=law_now.value,
                u=u_new,
                gain_held=k_s,
                latched_fire=False,
                dt_prev=dt_prev,
            )
        )
        return u_new, True

    t0_f = float(sim.t0)
    time_scale = max(1.0, abs(t_final))
    tiny = 1e-12 * time_scale
    k_step = 0
    while t_final - t > tiny:
        k_step += 1
        t_next = t0_f + k_step * sim.dt
        if t_next >= t_final - tiny:
            t_next = t_final
        x_end = rk4_step(model, dist, t, x, u, t_next - t)
        if not np.all(np.isfinite(x_end)):
            raise SimulationError(
                f"state diverged to a non-finite value near t = {t_next}",
                t_last=t,
                x_last=x.copy(),
            )
        cone_mode = sup.mode is Mode.CONE
        if would_trigger(etm, st, x_end, cone_mode, model, sliding):
            t_seg, x_seg, u_seg = t, x, u

            def predicate(tau):
                xm = rk4_step(model, dist, t_seg, x_seg, u_seg, tau - t_seg)
                return would_trigger(etm, st, xm, cone_mode, model, sliding)

            t_star = refine_trigger_time(predicate, t, t_next, sim.refine_tol)
            x_star = (
                rk4_step(model, dist, t, x, u, t_star - t) if t_star > t else x.copy()
            )
            dir_now, mag_now = rules_fired(etm, st, x_star, cone_mode, model, sliding)
            rules = _rule_labels(strat, cone_mode, st, dir_now, mag_now)
            t, x = t_star, np.asarray(x_star, dtype=float)
            dt_prev = t - st.t_last
            commit_trigger(st, t, x)
            law, _ = supervisor_step(sup, sliding, x, t)
            u_raw, k_held = compute_u(law, x)
            u = input_scale * u_raw
            triggers.append(
                TriggerRecord(
                    index=len(triggers),
                    t=t,
                    x=x.copy(),
                    x_norm=math.sqrt(float(x @ x)),
                    rule=_label_string(rules),
                    rules=rules,
                    mode=sup.mode.value,
                    law=law.value,
                    u=u,
                    gain_held=k_held,
                    latched_fire=strat is Strategy.PRACTICAL and cone_mode,
                    dt_prev=dt_prev,
                )
            )
            record(t, x, u)
            if t_next - t > tiny:
                # Finish the step under the refreshed hold; the next rule
                # evaluation happens at the next grid boundary.
                x_end = rk4_step(model, dist, t, x, u, t_next - t)
                if not np.all(np.isfinite(x_end)):
                    raise SimulationError(
                        f"state diverged to a non-finite value near t = {t_next}",
                        t_last=t,
                        x_last=x.copy(),
                    )
                t, x = t_next, x_end
                u, switched = switch_resample(t, x, u)
                if (
                    not switched
                    and strat is Strategy.PRACTICAL
                    and sup.mode is Mode.CONE
                ):
                    dir_now, mag_now = rules_fired(etm, st, x, True, model, sliding)
                    update_latches(st, dir_now, mag_now)
                record(t, x, u)
            else:
                t = t_next
        else:
            if strat is Strategy.PRACTICAL and cone_mode:
                dir_now, mag_now = rules_fired(etm, st, x_end, True, model, sliding)
                update_latches(st, dir_now, mag_now)
            t, x = t_next, x_end
            u, _ = switch_resample(t, x, u)
            record(t, x, u)

    t_np = np.asarray(ts)
    x_np = np.asarray(xs)
    result = SimResult(
        t=t_np,
        x=x_np,
        u=np.asarray(us),
        d=np.asarray(dvals),
        s=np.asarray(s_arr),
        s_hat=np.asarray(sh_arr),
        s_check=np.asarray(sc_arr),
        mode=np.asarray(mode_arr, dtype=np.int8),
        in_cone=np.asarray(cone_arr, dtype=bool),
        in_practical=np.asarray(prac_arr, dtype=bool),
        v=np.asarray(v_arr),
        v1=np.asarray(v1_arr),
        lam1=np.asarray(l1_arr),
        lam2=np.asarray(l2_arr),
        triggers=triggers,
        monitors=None,
        summary={},
    )
    result.monitors = _run_monitors(
        result, model, sliding, etm, strat, sup, q_comp_min, tols
    )
    result.summary = _summarise(result, strat, sup)
    return result


def _tolerant_membership(result: SimResult, sliding: SlidingConfig, practical: bool):
    x_sq = np.sum(result.x * result.x, axis=1)
    slack = CONE_MONITOR_SLACK * (1.0 + x_sq)
    ideal = result.s_hat * result.s_check <= slack
    if not practical:
        return ideal
    band = np.abs(result.s) <= sliding.delta + CONE_MONITOR_SLACK * (1.0 + np.sqrt(x_sq))
    return ideal | band


def _run_monitors(
    result: SimResult,
    model: LtiModel,
    sliding: SlidingConfig,
    etm: EtmConfig,
    strat: Strategy,
    sup: SupervisorMode,
    q_comp_min: float,
    tols: Tolerances,
) -> MonitorReport:
    practical = strat is Strategy.PRACTICAL
    member = _tolerant_membership(result, sliding, practical)

    # Entry time: start of the maximal all-inside suffix of the run.
    if not member[-1]:
        entry = None
    else:
        outside = np.nonzero(~member)[0]
        entry = float(result.t[0]) if outside.size == 0 else float(
            result.t[outside[-1] + 1]
        )

    inside = np.nonzero(member)[0]
    first_entry = float(result.t[inside[0]]) if inside.size else None

    # Violations: samples outside the cone after the supervisor committed to
    # it (switching strategies) or after the first entry (hybrid rule, which
    # never switches laws but is expected to hold the cone once reached).
    marker = sup.switch_time if sup.switch_time is not None else first_entry
    violations = 0
    first_violation = None
    if marker is not None:
        after = result.t >= marker
        bad = after & ~member
        violations = int(np.count_nonzero(bad))
        if violations:
            first_violation = float(result.t[np.nonzero(bad)[0][0]])

    v1_max_inc = None
    if entry is not None:
        tail = result.t >= entry
        v1_tail = result.v1[tail]
        if v1_tail.size >= 2:
            v1_max_inc = float(np.max(np.diff(v1_tail)))
        else:
            v1_max_inc = 0.0

    omega_radius = None
    omega_ok = None
    if practical:
        from .geometry import omega_bound

        omega_radius = omega_bound(model, sliding, etm.nu, None, tols)
        t0, t_end = float(result.t[0]), float(result.t[-1])
        tail = result.t >= t_end - 0.2 * (t_end - t0)
        norms = np.sqrt(np.sum(result.x[tail] * result.x[tail], axis=1))
        omega_ok = bool(
            np.all(norms <= omega_radius + 1e-12 * (1.0 + omega_radius))
        )

    return MonitorReport(
        cone_entry_time=entry,
        first_entry_time=first_entry,
        switch_time=sup.switch_time,
        cone_violations=violations,
        first_violation_time=first_violation,
        v1_max_step_increase=v1_max_inc,
        omega_radius=omega_radius,
        omega_tail_contained=omega_ok,
        companion_q_min_eig=q_comp_min,
    )


def _summarise(result: SimResult, strat: Strategy, sup: SupervisorMode) -> dict:
    trig_times = [rec.t for rec in result.triggers]
    dts = [b - a for a, b in zip(trig_times, trig_times[1:])]
    mon = result.monitors
    x_final = result.x[-1]
    return {
        "strategy": strat.value,
        "t0": float(result.t[0]),
        "t_final": float(result.t[-1]),
        "sample_count": int(result.t.shape[0]),
        "trigger_count": len(result.triggers),
        "min_inter_event": min(dts) if dts else math.nan,
        "mean_inter_event": (sum(dts) / len(dts)) if dts else math.nan,
        "max_inter_event": max(dts) if dts else math.nan,
        "final_state_norm": math.sqrt(float(x_final @ x_final)),
        "cone_entry_time": mon.cone_entry_time,
        "first_entry_time": mon.first_entry_time,
        "switch_time": mon.switch_time,
        "cone_violations": mon.cone_violations,
        "first_violation_time": mon.first_violation_time,
        "v1_max_step_increase": mon.v1_max_step_increase,
        "omega_radius": mon.omega_radius,
        "omega_tail_contained": mon.omega_tail_contained,
        "companion_q_min_eig": mon.companion_q_min_eig,
    }
