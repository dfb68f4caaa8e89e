"""Design reports, bound-verification tables and deterministic exports.

Everything here is presentation: the numbers come from the design
helpers and the simulation result.  CSV files use fixed column sets and
17-significant-digit decimal text so identical runs serialize to
byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
from fractions import Fraction

import numpy as np

from .controller import check_gain_condition, gain_value
from .geometry import omega_bound, validate_surfaces
from .linalg import DEFAULT_TOLS, Tolerances, induced_norm2
from .triggers import (
    Strategy,
    asymptotic_floor_direction,
    bound_practical,
    bound_T_i1,
    bound_T_i2,
    rho_gamma_mu,
)

__all__ = [
    "format_float",
    "theta_fraction",
    "design_report",
    "render_design_report",
    "bound_rows",
    "verification_report",
    "render_verification_report",
    "write_trajectory_csv",
    "write_triggers_csv",
    "write_summary_json",
]

# Denominators considered when flagging the cone angle as a familiar
# fraction of pi.  Round values only: the label is for humans, and a
# slightly-closer fraction with an arbitrary denominator (say 163/212)
# reads worse than 173/225.
_FRACTION_DENOMINATORS = (
    2, 3, 4, 5, 6, 8, 9, 10, 12, 15, 16, 18, 20, 24, 25, 30, 36, 40, 45,
    50, 60, 72, 75, 80, 90, 100, 120, 144, 150, 180, 200, 225, 240, 300, 360,
)


def format_float(v) -> str:
    """Decimal text with 17 significant digits (round-trip exact)."""
    if v is None:
        return ""
    v = float(v)
    if math.isnan(v):
        return "nan"
    return format(v, ".17g")


def theta_fraction(theta: float):
    """Nearest round fraction k*pi/m to the given angle.

    Returns (k, m, error_radians, label); the fraction is reduced for
    display (174/200 reads as 87/100).
    """
    ratio = theta / math.pi
    best = None
    for m in _FRACTION_DENOMINATORS:
        k = max(1, round(ratio * m))
        err = abs(theta - k * math.pi / m)
        if best is None or err < best[2]:
            best = (k, m, err)
    k, m, err = best
    frac = Fraction(k, m)
    label = f"{frac.numerator}π/{frac.denominator}"
    return frac.numerator, frac.denominator, err, label


# ---------------------------------------------------------------------------
# design report


def _magnitude_floor_asymptotic(sigma, c_norm, rho, k1_slope, a_norm):
    # (sigma x + beta) / (||c|| (rho x + k0 + k1 x + d_max)) -> sigma / (||c|| (rho + k1))
    if sigma <= 0.0:
        return None
    return math.log1p(sigma / (c_norm * (rho + k1_slope))) / a_norm


def design_report(sc, tols: Tolerances = DEFAULT_TOLS) -> dict:
    """Full pre-run design-condition check for a scenario, as a plain dict."""
    model, sliding, etm, gain = sc.model, sc.sliding, sc.etm, sc.gain
    d_max = sc.sim.disturbance.d_max

    surf = validate_surfaces(model, sliding)
    num, den, frac_err, frac_label = theta_fraction(surf.theta)

    gc = check_gain_condition(gain, sliding.c, model.b, d_max, etm.sigma, etm.beta)
    x0_norm = float(np.linalg.norm(sc.sim.x0))
    k_x0 = gain_value(gain, sc.sim.x0)
    rho, gamma_x0, _ = rho_gamma_mu(model, sliding.c, k_x0, d_max)
    _, mu_cone, _ = rho_gamma_mu(model, sliding.c, gain.k_const, d_max)
    a_norm = induced_norm2(model.a)
    c_norm = float(np.linalg.norm(sliding.c))

    etm_theta_ok = True
    etm_theta_error = None
    try:
        etm.validate_against_theta(surf.theta)
    except Exception as exc:
        etm_theta_ok = False
        etm_theta_error = str(exc)

    surfaces = []
    for verdict in surf.surfaces:
        cl = verdict.closed_loop
        surfaces.append(
            {
                "label": verdict.label,
                "closed_loop": cl.tolist(),
                "closed_loop_scalar": float(cl[0, 0]) if cl.shape == (1, 1) else None,
                "char_coeffs": [float(v) for v in verdict.char_coeffs],
                "hurwitz": verdict.hurwitz,
            }
        )

    floors = {
        "direction_asymptotic": asymptotic_floor_direction(
            surf.theta, etm.n_div, rho, a_norm
        )
        if rho > 0.0
        else None,
        "magnitude_asymptotic": _magnitude_floor_asymptotic(
            etm.sigma, c_norm, rho, gain.k1 if gain.kind == "state" else 0.0, a_norm
        ),
        "direction_at_x0": bound_T_i1(
            x0_norm, surf.theta, etm.n_div, rho, gamma_x0, a_norm
        ).derived,
        "magnitude_at_x0": bound_T_i2(
            x0_norm, etm.sigma, etm.beta, c_norm, rho, gamma_x0, a_norm
        ).derived,
    }
    omega_radius = None
    if etm.strategy is Strategy.PRACTICAL:
        omega_radius = omega_bound(model, sliding, etm.nu, None, tols)
        pb = bound_practical(
            x0_norm, etm.nu, surf.theta, etm.n_div, c_norm, rho, gamma_x0, mu_cone, a_norm
        )
        floors["practical_pair_at_x0"] = max(pb.direction.derived, pb.magnitude.derived)

    offset_ref = sc.gain_offset_reference
    report = {
        "scenario": sc.name,
        "n": model.n,
        "strategy": etm.strategy.value,
        "regular_form": {
            "transform": model.t_r.tolist(),
            "residual": float(
                np.linalg.norm(model.t_r @ model.b_tilde - np.eye(model.n)[:, -1])
            ),
        },
        "theta": {
            "radians": surf.theta,
            "fraction": frac_label,
            "fraction_value": float(num) / float(den) * math.pi,
            "fraction_error": frac_err,
            "ok": surf.theta_ok,
        },
        "surfaces": surfaces,
        "design_ok": surf.passed and gc.ok and etm_theta_ok,
        "etm": {
            "strategy": etm.strategy.value,
            "sigma": etm.sigma,
            "beta": etm.beta,
            "nu": etm.nu,
            "n_div": etm.n_div,
            "theta_ok": etm_theta_ok,
            "theta_error": etm_theta_error,
        },
        "gain": {
            "kind": gain.kind,
            "k0": gain.k0,
            "k1": gain.k1,
            "k_const": gain.k_const,
            "ok": gc.ok,
            "margin": gc.margin,
            "required_offset": gc.required_offset,
            "slope_ok": gc.slope_ok,
            "offset_reference": offset_ref,
            "offset_reference_dominated": (
                None if offset_ref is None else gain.k0 > offset_ref
            ),
        },
        "constants": {
            "a_norm": a_norm,
            "c_norm": c_norm,
            "rho": rho,
            "gamma_at_x0": gamma_x0,
            "mu_cone": mu_cone,
            "xi": gc.margin,
            "d_max": d_max,
        },
        "floors": floors,
        "omega": {"radius": omega_radius, "delta": sliding.delta},
    }
    return report


def render_design_report(rep: dict) -> str:
    lines = []
    push = lines.append
    push(f"scenario        {rep['scenario']}  (n={rep['n']}, strategy={rep['strategy']})")
    th = rep["theta"]
    push(
        f"cone angle      {th['radians']:.6f} rad  ~ {th['fraction']}"
        f"  (off by {th['fraction_error']:.2e} rad)"
    )
    push(f"regular form    residual {rep['regular_form']['residual']:.2e}")
    push("surfaces:")
    for s in rep["surfaces"]:
        verdict = "Hurwitz" if s["hurwitz"] else "NOT Hurwitz"
        if s["closed_loop_scalar"] is not None:
            body = f"closed loop = {s['closed_loop_scalar']:g}"
        else:
            body = f"char coeffs = {[round(c, 6) for c in s['char_coeffs']]}"
        push(f"  {s['label']:<7} {body}  -> {verdict}")
    g = rep["gain"]
    push(
        f"gain            k0={g['k0']:g} k1={g['k1']:g} k_const={g['k_const']:g}"
        f"  margin={g['margin']:g}  required offset={g['required_offset']:g}"
        f"  slope_ok={g['slope_ok']}"
    )
    if g["offset_reference"] is not None:
        push(
            f"                offset reference {g['offset_reference']:g} differs from the"
            f" computed requirement {g['required_offset']:g};"
            f" k0={g['k0']:g} dominates both: {g['offset_reference_dominated']}"
        )
    c = rep["constants"]
    push(
        f"constants       ||A||={c['a_norm']:.6g} ||c||={c['c_norm']:.6g}"
        f" rho={c['rho']:.6g} gamma(x0)={c['gamma_at_x0']:.6g} mu={c['mu_cone']:.6g}"
        f" xi={c['xi']:.6g}"
    )
    f = rep["floors"]
    dir_floor = f["direction_asymptotic"]
    mag_floor = f["magnitude_asymptotic"]
    push(
        "floors          direction(asymptotic)="
        + (f"{dir_floor:.6g} s" if dir_floor is not None else "n/a")
        + "  magnitude(asymptotic)="
        + (f"{mag_floor:.6g} s" if mag_floor is not None else "n/a")
    )
    push(
        f"                at x0: direction={f['direction_at_x0']:.6g} s"
        f"  magnitude={f['magnitude_at_x0']:.6g} s"
    )
    om = rep["omega"]
    if om["radius"] is not None:
        push(f"ultimate bound  radius={om['radius']:.6g}  (band delta={om['delta']:.6g})")
    push(f"design check    {'PASS' if rep['design_ok'] else 'FAIL'}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# bound verification


def _max_optional(*vals):
    present = [v for v in vals if v is not None]
    return max(present) if present else None


def bound_rows(sc, result) -> list:
    """Per-trigger verification rows: observed dwell time vs its bound.

    For each completed interval the bound is evaluated at the state and
    held gain of the trigger that OPENED the interval; the rule(s)
    recorded at the closing trigger decide which bound applies.  Latched
    practical-cone firings must satisfy both rules, so their dwell time
    is checked against the larger of the two bounds.
    """
    model, sliding, etm = sc.model, sc.sliding, sc.etm
    d_max = sc.sim.disturbance.d_max
    slack = sc.sim.refine_tol
    a_norm = induced_norm2(model.a)
    c_norm = float(np.linalg.norm(sliding.c))
    theta = sliding.theta

    rows = []
    trigs = result.triggers
    for prev, cur in zip(trigs, trigs[1:]):
        rho, gamma, mu = rho_gamma_mu(model, sliding.c, prev.gain_held, d_max)
        x_norm = prev.x_norm
        dt = cur.t - prev.t
        if cur.latched_fire:
            pb = bound_practical(
                x_norm, etm.nu, theta, etm.n_div, c_norm, rho, gamma, mu, a_norm
            )
            derived = max(pb.direction.derived, pb.magnitude.derived)
            printed = _max_optional(pb.direction.printed, pb.magnitude.printed)
        else:
            derived_parts = []
            printed_parts = []
            if "direction" in cur.rules:
                bp = bound_T_i1(x_norm, theta, etm.n_div, rho, gamma, a_norm)
                derived_parts.append(bp.derived)
                printed_parts.append(bp.printed)
            if "magnitude" in cur.rules:
                bp = bound_T_i2(
                    x_norm, etm.sigma, etm.beta, c_norm, rho, gamma, a_norm
                )
                derived_parts.append(bp.derived)
                printed_parts.append(bp.printed)
            if "practical" in cur.rules:
                pb = bound_practical(
                    x_norm, etm.nu, theta, etm.n_div, c_norm, rho, gamma, mu, a_norm
                )
                derived_parts.append(pb.magnitude.derived)
                printed_parts.append(pb.magnitude.printed)
            derived = max(derived_parts) if derived_parts else 0.0
            printed = _max_optional(*printed_parts)
        rows.append(
            {
                "i": cur.index,
                "t": cur.t,
                "dt": dt,
                "rule": cur.rule,
                "bound_derived": derived,
                "bound_printed": printed,
                "passed": bool(dt >= derived - slack),
            }
        )
    return rows


def verification_report(sc, result) -> dict:
    rows = bound_rows(sc, result)
    model, sliding, etm = sc.model, sc.sliding, sc.etm
    d_max = sc.sim.disturbance.d_max
    a_norm = induced_norm2(model.a)
    rho, _, _ = rho_gamma_mu(model, sliding.c, sc.gain.k0, d_max)
    dts = [r["dt"] for r in rows]
    return {
        "scenario": sc.name,
        "strategy": etm.strategy.value,
        "rows": rows,
        "all_pass": all(r["passed"] for r in rows),
        "trigger_count": len(result.triggers),
        "min_dt": min(dts) if dts else None,
        "floor_direction_asymptotic": asymptotic_floor_direction(
            sliding.theta, etm.n_div, rho, a_norm
        )
        if rho > 0.0
        else None,
        "refine_tol": sc.sim.refine_tol,
    }


def render_verification_report(rep: dict) -> str:
    lines = [
        f"scenario {rep['scenario']}  strategy {rep['strategy']}"
        f"  triggers {rep['trigger_count']}",
        f"{'i':>5} {'t_i':>12} {'dt_i':>12} {'rule':<10} "
        f"{'bound(derived)':>14} {'bound(printed)':>14} pass",
    ]
    for r in rep["rows"]:
        printed = f"{r['bound_printed']:.6e}" if r["bound_printed"] is not None else "-"
        lines.append(
            f"{r['i']:>5} {r['t']:>12.6f} {r['dt']:>12.6e} {r['rule']:<10} "
            f"{r['bound_derived']:>14.6e} {printed:>14} {'ok' if r['passed'] else 'FAIL'}"
        )
    min_dt = rep["min_dt"]
    floor = rep["floor_direction_asymptotic"]
    lines.append(
        "min dt = "
        + (f"{min_dt:.6e}" if min_dt is not None else "n/a")
        + "  direction floor (asymptotic) = "
        + (f"{floor:.6e}" if floor is not None else "n/a")
        + f"  all rows pass: {rep['all_pass']}"
    )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# file exports


def write_trajectory_csv(result, path: str, stride: int = 1) -> None:
    n = result.x.shape[1]
    header = (
        ["t"]
        + [f"x_{k + 1}" for k in range(n)]
        + ["u", "d", "s", "s_hat", "s_check", "mode", "in_cone", "in_practical_cone"]
    )
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for k in range(0, result.t.shape[0], max(1, int(stride))):
            row = [format_float(result.t[k])]
            row += [format_float(v) for v in result.x[k]]
            row += [
                format_float(result.u[k]),
                format_float(result.d[k]),
                format_float(result.s[k]),
                format_float(result.s_hat[k]),
                format_float(result.s_check[k]),
                str(int(result.mode[k])),
                str(int(result.in_cone[k])),
                str(int(result.in_practical[k])),
            ]
            writer.writerow(row)


def write_triggers_csv(sc, result, path: str) -> None:
    rows = bound_rows(sc, result)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["i", "t_i", "dt_i", "rule", "bound_T_derived", "bound_T_printed", "pass"]
        )
        first = result.triggers[0]
        writer.writerow([0, format_float(first.t), "", first.rule, "", "", ""])
        for r in rows:
            writer.writerow(
                [
                    r["i"],
                    format_float(r["t"]),
                    format_float(r["dt"]),
                    r["rule"],
                    format_float(r["bound_derived"]),
                    format_float(r["bound_printed"]),
                    "1" if r["passed"] else "0",
                ]
            )


def _json_safe(value):
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, (np.floating, np.integer)):
        value = value.item()
    if isinstance(value, float) and (math.isnan(value) or math.isinf(value)):
        return None
    return value


def write_summary_json(sc, result, path: str, extra: dict | None = None) -> None:
    payload = {"scenario": sc.name}
    payload.update(result.summary)
    if extra:
        payload.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_json_safe(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")
