"""Sliding-surface geometry: the surface triple, the cone tests, and the
ultimate-bound radius.

A design is a triple of surface normals (c, c_hat, c_check), each with last
entry exactly 1.  The two flanking surfaces bound a cone
``{x : (c_hat . x)(c_check . x) <= 0}``; its opening angle theta is derived
from the normals.  The *practical* cone widens the ideal cone with the band
``|c . x| <= delta`` around the central surface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, DimensionError
from .linalg import (
    DEFAULT_TOLS,
    Tolerances,
    as_vector,
    char_poly,
    induced_norm2,
    is_hurwitz,
    solve_lyapunov,
    symmetric_eigs,
)
from .plant import LtiModel

__all__ = [
    "SlidingConfig",
    "SurfaceVerdict",
    "SurfaceValidation",
    "sliding_value",
    "cone_angle",
    "in_ideal_cone",
    "in_practical_cone",
    "cone_coordinates",
    "omega_bound",
    "validate_surfaces",
]


def cone_angle(c_hat, c_check) -> float:
    """Opening angle of the cone between the two flanking surfaces.

    theta = pi - arccos( (c_hat . c_check) / (||c_hat|| ||c_check||) ),
    clamped against rounding before the arccos.  Both vectors must be
    nonzero.  Coincident normals give theta = pi (degenerate cone).
    """
    ch = as_vector(c_hat, "c_hat")
    cc = as_vector(c_check, "c_check")
    if ch.shape != cc.shape:
        raise DimensionError("c_hat and c_check must have the same length")
    nh = math.sqrt(float(ch @ ch))
    nc = math.sqrt(float(cc @ cc))
    if nh == 0.0 or nc == 0.0:
        raise ContractError("cone_angle: surface normals must be nonzero")
    cos_val = float(ch @ cc) / (nh * nc)
    cos_val = min(1.0, max(-1.0, cos_val))
    return math.pi - math.acos(cos_val)


@dataclass(frozen=True)
class SlidingConfig:
    """Surface triple plus the practical band half-width delta.

    ``theta`` is always computed from the flanking normals at construction;
    passing it explicitly is not supported.  The last entry of each normal
    must be exactly 1 so that c^T B = 1 in regular-form coordinates.
    """

    c: np.ndarray
    c_hat: np.ndarray
    c_check: np.ndarray
    delta: float = 0.0
    theta: float = field(init=False)

    def __post_init__(self):
        c = as_vector(self.c, "c")
        ch = as_vector(self.c_hat, "c_hat")
        cc = as_vector(self.c_check, "c_check")
        if not (c.shape == ch.shape == cc.shape):
            raise DimensionError("surface normals must all have the same length")
        if c.shape[0] < 2:
            raise DimensionError("surface normals need at least 2 entries")
        for name, vec in (("c", c), ("c_hat", ch), ("c_check", cc)):
            if vec[-1] != 1.0:
                raise ContractError(f"{name}: last entry must be exactly 1")
        if self.delta < 0.0:
            raise ContractError("delta: must be >= 0")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "c_hat", ch)
        object.__setattr__(self, "c_check", cc)
        object.__setattr__(self, "theta", cone_angle(ch, cc))

    @property
    def c1(self) -> np.ndarray:
        return self.c[:-1]

    @property
    def c1_hat(self) -> np.ndarray:
        return self.c_hat[:-1]

    @property
    def c1_check(self) -> np.ndarray:
        return self.c_check[:-1]


def sliding_value(normal, x) -> float:
    """Signed distance-like surface value  normal . x."""
    nv = np.asarray(normal, dtype=float)
    xv = np.asarray(x, dtype=float)
    if nv.shape != xv.shape:
        raise DimensionError("sliding_value: normal and state lengths differ")
    return float(nv @ xv)


def in_ideal_cone(cfg: SlidingConfig, x) -> bool:
    """True iff the flanking surface values have opposite (or zero) signs.

    Compares signs instead of multiplying: the product of two tiny
    same-sign values underflows to 0.0 and would misreport membership.
    """
    s_hat = sliding_value(cfg.c_hat, x)
    s_check = sliding_value(cfg.c_check, x)
    return (s_hat <= 0.0 <= s_check) or (s_check <= 0.0 <= s_hat)


def in_practical_cone(cfg: SlidingConfig, x) -> bool:
    """Ideal cone membership, widened by the |s| <= delta band."""
    if in_ideal_cone(cfg, x):
        return True
    return abs(sliding_value(cfg.c, x)) <= cfg.delta


def cone_coordinates(cfg: SlidingConfig, x) -> tuple[float, float]:
    """Convex weights (lam1, lam2) of the state between the flanking surfaces.

    Defined for states inside the ideal cone: lam1 = s_check / (s_check -
    s_hat), lam2 = -s_hat / (s_check - s_hat); at the apex (both surface
    values zero) the symmetric value (1/2, 1/2) is returned.  Both weights
    lie in [0, 1], sum to 1, and satisfy lam1*s_hat + lam2*s_check = 0.
    """
    s_hat = sliding_value(cfg.c_hat, x)
    s_check = sliding_value(cfg.c_check, x)
    if not ((s_hat <= 0.0 <= s_check) or (s_check <= 0.0 <= s_hat)):
        raise ContractError("cone_coordinates: state is outside the ideal cone")
    denom = s_check - s_hat
    if denom == 0.0:
        return 0.5, 0.5
    lam1 = s_check / denom
    lam2 = -s_hat / denom
    # with opposite signs each quotient is <= 1 in exact arithmetic; the
    # clamp only defends the documented range against boundary rounding
    return min(max(lam1, 0.0), 1.0), min(max(lam2, 0.0), 1.0)


@dataclass(frozen=True)
class SurfaceVerdict:
    label: str
    closed_loop: np.ndarray
    char_coeffs: np.ndarray
    hurwitz: bool


@dataclass(frozen=True)
class SurfaceValidation:
    surfaces: tuple[SurfaceVerdict, ...]
    theta: float
    theta_ok: bool
    passed: bool


def _reduced_closed_loop(model: LtiModel, c1: np.ndarray) -> np.ndarray:
    return model.a11 - np.outer(model.a12[:, 0], c1)


def validate_surfaces(model: LtiModel, cfg: SlidingConfig) -> SurfaceValidation:
    """Check every reduced closed-loop matrix A11 - A12 c1^T for stability.

    Also flags a degenerate cone: theta must lie strictly between 0 and pi.
    The returned report carries the closed-loop matrix, its characteristic
    polynomial and the Hurwitz verdict per surface; ``passed`` is the
    conjunction of all verdicts and the angle check.
    """
    if cfg.c.shape[0] != model.n:
        raise DimensionError(
            f"surface normals have length {cfg.c.shape[0]}, model dimension is {model.n}"
        )
    verdicts = []
    for label, c1 in (
        ("c", cfg.c1),
        ("c_hat", cfg.c1_hat),
        ("c_check", cfg.c1_check),
    ):
        acl = _reduced_closed_loop(model, c1)
        verdicts.append(
            SurfaceVerdict(
                label=label,
                closed_loop=acl,
                char_coeffs=char_poly(acl),
                hurwitz=is_hurwitz(acl),
            )
        )
    theta_ok = 0.0 < cfg.theta < math.pi
    passed = theta_ok and all(v.hurwitz for v in verdicts)
    return SurfaceValidation(
        surfaces=tuple(verdicts), theta=cfg.theta, theta_ok=theta_ok, passed=passed
    )


def omega_bound(
    model: LtiModel,
    cfg: SlidingConfig,
    nu: float,
    q_tilde=None,
    tols: Tolerances = DEFAULT_TOLS,
) -> float:
    """Radius of the ultimate-bound ball for practical-cone operation.

    radius = nu/||A|| + 2 nu (1 + ||c1||) ||P A12|| / (lambda_min(Q) ||A||),
    where P solves the Lyapunov equation of the central reduced closed loop
    (A11 - A12 c1^T) with right-hand side -Q (identity by default).
    """
    if nu <= 0.0:
        raise ContractError("omega_bound: nu must be > 0")
    n = model.n
    if q_tilde is None:
        q_tilde = np.eye(n - 1)
    acl = _reduced_closed_loop(model, cfg.c1)
    p = solve_lyapunov(acl, q_tilde, tols)
    evals, _ = symmetric_eigs(np.asarray(q_tilde, dtype=float), tols)
    lam_min = float(evals[0])
    a_norm = induced_norm2(model.a, tols)
    c1_norm = math.sqrt(float(cfg.c1 @ cfg.c1))
    pa12 = induced_norm2(p @ model.a12, tols)
    return nu / a_norm + 2.0 * nu * (1.0 + c1_norm) * pa12 / (lam_min * a_norm)
