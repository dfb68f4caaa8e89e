"""Single-input LTI plant: regular-form transformation, dynamics, disturbance.

The toolkit works throughout in *regular-form* coordinates, where the input
matrix is exactly the last standard basis vector e_n.  ``to_regular_form``
builds that representation from an arbitrary controllable (A, B) pair with
B != 0 and records the state transformation used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ContractError, DesignError, DimensionError
from .linalg import DEFAULT_TOLS, Tolerances, _as_array, as_square, induced_norm2

__all__ = [
    "LtiModel",
    "DisturbanceSpec",
    "to_regular_form",
    "plant_derivative",
    "disturbance_eval",
]


@dataclass(frozen=True)
class LtiModel:
    """An LTI plant in both its original and regular-form coordinates.

    ``a`` and ``b`` are the regular-form matrices (b == e_n exactly); the
    block fields partition ``a`` with the last state separated out:
    a11 (n-1 x n-1), a12 (n-1 x 1), a21 (1 x n-1), a22 (1 x 1).
    """

    a_tilde: np.ndarray
    b_tilde: np.ndarray
    t_r: np.ndarray
    t_r_inv: np.ndarray
    a: np.ndarray
    b: np.ndarray
    n: int

    @property
    def a11(self) -> np.ndarray:
        return self.a[: self.n - 1, : self.n - 1]

    @property
    def a12(self) -> np.ndarray:
        return self.a[: self.n - 1, self.n - 1 :]

    @property
    def a21(self) -> np.ndarray:
        return self.a[self.n - 1 :, : self.n - 1]

    @property
    def a22(self) -> np.ndarray:
        return self.a[self.n - 1 :, self.n - 1 :]


def _controllability_rank(a: np.ndarray, b: np.ndarray, tol: float) -> int:
    n = a.shape[0]
    cols = [b]
    for _ in range(n - 1):
        cols.append(a @ cols[-1])
    ctrb = np.column_stack(cols)
    # Columns of the reachability matrix span many magnitudes for stiff
    # plants; normalising them changes no rank but keeps the singular
    # values decision-stable against the absolute cutoff.
    scale = np.linalg.norm(ctrb, axis=0)
    scale[scale == 0.0] = 1.0
    sigma = np.linalg.svd(ctrb / scale, compute_uv=False)
    return int(np.sum(sigma > tol))


def to_regular_form(a_tilde, b_tilde, tols: Tolerances = DEFAULT_TOLS) -> LtiModel:
    """Build the regular-form model for a single-input pair (A, B).

    The transformation is T_r = S H where H is the Householder reflection
    taking B/||B|| to e_n (identity when B/||B|| already equals e_n) and S
    scales the last row by 1/||B||, so that T_r B = e_n exactly.  The
    transformed dynamics are A = T_r A_tilde T_r^{-1}.

    Raises ContractError for B = 0, DesignError when (A, B) is not
    controllable, and NumericalError-free by construction otherwise.
    """
    at = as_square(a_tilde, "A_tilde")
    n = at.shape[0]
    if n < 2:
        raise DimensionError("A_tilde: regular form needs dimension >= 2")
    bt = _as_array(b_tilde, "B_tilde").reshape(-1)
    if bt.shape[0] != n:
        raise DimensionError(
            f"B_tilde: length {bt.shape[0]} does not match A_tilde dimension {n}"
        )
    b_norm = math.sqrt(float(bt @ bt))
    if b_norm == 0.0:
        raise ContractError("B_tilde: must be nonzero")

    rank = _controllability_rank(at, bt, tols.ctrb_rank)
    if rank < n:
        raise DesignError(
            f"(A_tilde, B_tilde) is not controllable: reachability rank {rank} < {n}"
        )

    unit = bt / b_norm
    e_n = np.zeros(n)
    e_n[-1] = 1.0
    v = unit - e_n
    vtv = float(v @ v)
    if vtv < 1e-24:
        householder = np.eye(n)
    else:
        householder = np.eye(n) - (2.0 / vtv) * np.outer(v, v)

    t_r = householder.copy()
    t_r[-1, :] /= b_norm
    # H is involutory, so the inverse just undoes the row scaling.
    t_r_inv = householder.copy()
    t_r_inv[:, -1] *= b_norm

    b_reg = t_r @ bt
    target = np.zeros(n)
    target[-1] = 1.0
    if float(np.max(np.abs(b_reg - target))) > tols.regular_form:
        raise ContractError(
            "regular-form construction failed: T_r B_tilde deviates from e_n"
        )
    a_reg = t_r @ at @ t_r_inv

    return LtiModel(
        a_tilde=at,
        b_tilde=bt,
        t_r=t_r,
        t_r_inv=t_r_inv,
        a=a_reg,
        b=target,
        n=n,
    )


def plant_derivative(model: LtiModel, x, u: float, d: float) -> np.ndarray:
    """Time derivative A x + e_n (u + d) in regular-form coordinates."""
    xv = np.asarray(x, dtype=float)
    dx = model.a @ xv
    dx[-1] += u + d
    return dx


@dataclass(frozen=True)
class DisturbanceSpec:
    """A matched disturbance signal with a declared magnitude bound.

    kind: 'zero' | 'sinusoid' | 'cosine' | 'sum' | 'table'
    terms: per-term (amplitude, angular frequency, phase) tuples for the
        periodic kinds ('sum' superposes sine terms).
    d_max: declared bound; every evaluation must satisfy |d(t)| <= d_max.
    table_t / table_v: breakpoints for the piecewise-constant kind (value
        held from each breakpoint until the next; the last value persists).
    """

    kind: str = "zero"
    terms: tuple = ()
    d_max: float = 0.0
    table_t: tuple = ()
    table_v: tuple = ()

    def __post_init__(self):
        if self.kind not in ("zero", "sinusoid", "cosine", "sum", "table"):
            raise ConfigurationError(f"disturbance.kind: unknown kind {self.kind!r}")
        if self.kind == "zero":
            if self.d_max < 0.0:
                raise ConfigurationError("disturbance.d_max: must be >= 0")
            return
        if self.d_max <= 0.0:
            raise ConfigurationError(
                "disturbance.d_max: must be > 0 for a nonzero disturbance"
            )
        if self.kind in ("sinusoid", "cosine", "sum"):
            if not self.terms:
                raise ConfigurationError("disturbance.terms: at least one term needed")
            amp_sum = sum(abs(float(a)) for a, _, _ in self.terms)
            if amp_sum > self.d_max * (1.0 + 1e-12):
                raise ConfigurationError(
                    f"disturbance.terms: amplitude sum {amp_sum} exceeds d_max {self.d_max}"
                )
        if self.kind == "table":
            if len(self.table_t) == 0 or len(self.table_t) != len(self.table_v):
                raise ConfigurationError("disturbance.table: need matching t/value lists")
            if any(t2 <= t1 for t1, t2 in zip(self.table_t, self.table_t[1:])):
                raise ConfigurationError("disturbance.table: times must strictly increase")
            worst = max(abs(float(v)) for v in self.table_v)
            if worst > self.d_max * (1.0 + 1e-12):
                raise ConfigurationError(
                    f"disturbance.table: value magnitude {worst} exceeds d_max {self.d_max}"
                )


def disturbance_eval(spec: DisturbanceSpec, t: float) -> float:
    """Evaluate the disturbance at time t; guards the declared bound."""
    kind = spec.kind
    if kind == "zero":
        return 0.0
    if kind == "sinusoid" or kind == "sum":
        value = sum(a * math.sin(w * t + p) for a, w, p in spec.terms)
    elif kind == "cosine":
        value = sum(a * math.cos(w * t + p) for a, w, p in spec.terms)
    else:  # table: hold the most recent breakpoint value
        idx = 0
        for i, tk in enumerate(spec.table_t):
            if tk <= t:
                idx = i
            else:
                break
        value = spec.table_v[idx]
    value = float(value)
    if abs(value) > spec.d_max * (1.0 + 1e-12):
        raise ConfigurationError(
            f"disturbance evaluation |{value}| exceeds declared bound {spec.d_max}"
        )
    return value
