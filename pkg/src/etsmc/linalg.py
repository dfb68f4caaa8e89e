"""Dense linear-algebra kernels for small control-design matrices.

Everything here targets the small (n <= 6) matrices that show up in
sliding-surface design: characteristic polynomials, a Routh-Hurwitz
stability test, a Jacobi eigensolver for symmetric matrices, induced
2-norms, and a dense Lyapunov solve.  All routines are pure functions of
their inputs and deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DimensionError, NumericalError

__all__ = [
    "Tolerances",
    "DEFAULT_TOLS",
    "as_vector",
    "as_square",
    "char_poly",
    "routh_first_column",
    "is_hurwitz",
    "symmetric_eigs",
    "induced_norm2",
    "solve_lyapunov",
]


@dataclass(frozen=True)
class Tolerances:
    """Shared numeric tolerances.  Pass a customised instance to override."""

    symmetry: float = 1e-10          # max |S - S^T| entry accepted as symmetric
    jacobi_off: float = 1e-12        # off-diagonal Frobenius stopping target
    lyapunov_residual: float = 1e-8  # ||A^T P + P A + Q|| rejection level
    ctrb_rank: float = 1e-9          # singular-value cutoff for rank tests
    regular_form: float = 1e-10      # acceptance for the T_r construction


DEFAULT_TOLS = Tolerances()


def _as_array(m, name: str) -> np.ndarray:
    a = np.asarray(m, dtype=float)
    if not np.all(np.isfinite(a)):
        raise ContractError(f"{name}: entries must be finite")
    return a


def as_vector(v, name: str = "vector") -> np.ndarray:
    a = _as_array(v, name)
    if a.ndim != 1:
        raise DimensionError(f"{name}: expected a 1-D vector, got shape {a.shape}")
    return a


def as_square(m, name: str = "matrix") -> np.ndarray:
    a = _as_array(m, name)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name}: expected a square matrix, got shape {a.shape}")
    if a.shape[0] == 0:
        raise DimensionError(f"{name}: dimension must be at least 1")
    return a


def char_poly(m) -> np.ndarray:
    """Monic characteristic polynomial coefficients, descending powers.

    Uses the trace recurrence M_k = M (M_{k-1} + c_{k-1} I),
    c_k = -trace(M_k) / k, which needs only matrix products and traces.
    Returns an array of length n + 1 with leading coefficient 1.
    """
    a = as_square(m, "M")
    n = a.shape[0]
    coeffs = np.empty(n + 1)
    coeffs[0] = 1.0
    work = np.zeros_like(a)
    ident = np.eye(n)
    for k in range(1, n + 1):
        work = a @ (work + coeffs[k - 1] * ident)
        coeffs[k] = -np.trace(work) / k
    return coeffs


def routh_first_column(coeffs) -> list[float] | None:
    """First column of the Routh array for a monic polynomial.

    Returns None when a zero pivot appears (marginal case that the plain
    tabulation cannot classify).
    """
    c = np.asarray(coeffs, dtype=float)
    n = len(c) - 1
    if n == 0:
        return [float(c[0])]
    width = n // 2 + 1
    row_a = np.zeros(width)
    row_b = np.zeros(width)
    row_a[: len(c[0::2])] = c[0::2]
    row_b[: len(c[1::2])] = c[1::2]
    column = [float(row_a[0]), float(row_b[0])]
    for _ in range(n - 1):
        if row_b[0] == 0.0:
            return None
        nxt = np.zeros(width)
        for j in range(width - 1):
            nxt[j] = (row_b[0] * row_a[j + 1] - row_a[0] * row_b[j + 1]) / row_b[0]
        row_a, row_b = row_b, nxt
        column.append(float(row_b[0]))
    return column


def is_hurwitz(m) -> bool:
    """True iff every eigenvalue of ``m`` has strictly negative real part.

    Decided through the Routh criterion on the characteristic polynomial,
    so no eigenvalue computation is involved.  Marginal cases (a zero
    coefficient or zero pivot in the tabulation) are reported as False.
    """
    coeffs = char_poly(m)
    # Necessary condition for a monic Hurwitz polynomial: all coefficients > 0.
    if np.any(coeffs <= 0.0):
        return False
    column = routh_first_column(coeffs)
    if column is None:
        return False
    return all(v > 0.0 for v in column)


def symmetric_eigs(s, tols: Tolerances = DEFAULT_TOLS):
    """Eigen-decomposition of a symmetric matrix by classical Jacobi rotations.

    Parameters
    ----------
    s : array_like
        Square matrix, symmetric within ``tols.symmetry`` (it is replaced by
        (S + S^T)/2 before iterating).
    tols : Tolerances
        ``tols.jacobi_off`` is the stopping target for the off-diagonal
        Frobenius norm; a scale guard of 1e-14 * ||S||_F keeps the sweep
        terminating for large-magnitude matrices.

    Returns
    -------
    (evals, vecs)
        Eigenvalues ascending and the matching orthonormal eigenvector
        columns, so that S @ vecs[:, k] == evals[k] * vecs[:, k].
    """
    a = as_square(s, "S").copy()
    n = a.shape[0]
    if n > 1:
        asym = float(np.max(np.abs(a - a.T)))
        if asym > tols.symmetry:
            raise ContractError(
                f"S: asymmetry {asym:.3e} exceeds tolerance {tols.symmetry:.1e}"
            )
    a = 0.5 * (a + a.T)
    vecs = np.eye(n)
    if n == 1:
        return a[0, :1].copy(), vecs

    fro = float(np.sqrt(np.sum(a * a)))
    stop = max(tols.jacobi_off, 1e-14 * fro)
    max_rotations = 60 * n * n
    for _ in range(max_rotations):
        off = 0.0
        p, q, biggest = 0, 1, -1.0
        for i in range(n - 1):
            for j in range(i + 1, n):
                v = abs(a[i, j])
                off += v * v
                if v > biggest:
                    p, q, biggest = i, j, v
        if math.sqrt(2.0 * off) < stop:
            break
        apq = a[p, q]
        if apq == 0.0:
            continue
        # Rotation that zeroes a[p, q]; the smaller-angle root is stable.
        tau = (a[q, q] - a[p, p]) / (2.0 * apq)
        if tau >= 0.0:
            t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
        else:
            t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
        c = 1.0 / math.sqrt(1.0 + t * t)
        s_ = t * c
        app = a[p, p] - t * apq
        aqq = a[q, q] + t * apq
        for i in range(n):
            if i == p or i == q:
                continue
            aip, aiq = a[i, p], a[i, q]
            a[i, p] = a[p, i] = c * aip - s_ * aiq
            a[i, q] = a[q, i] = s_ * aip + c * aiq
        a[p, p] = app
        a[q, q] = aqq
        a[p, q] = a[q, p] = 0.0
        for i in range(n):
            vip, viq = vecs[i, p], vecs[i, q]
            vecs[i, p] = c * vip - s_ * viq
            vecs[i, q] = s_ * vip + c * viq
    else:
        raise NumericalError("Jacobi sweep did not converge")

    evals = np.diag(a).copy()
    order = np.argsort(evals, kind="stable")
    return evals[order], vecs[:, order]


def induced_norm2(m, tols: Tolerances = DEFAULT_TOLS) -> float:
    """Induced (spectral) 2-norm: sqrt of the largest eigenvalue of M^T M.

    Accepts matrices or 1-D vectors (treated as a single column, in which
    case the result is the Euclidean norm).
    """
    a = _as_array(m, "M")
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if a.ndim != 2:
        raise DimensionError(f"M: expected a matrix, got shape {a.shape}")
    gram = a.T @ a
    evals, _ = symmetric_eigs(gram, tols)
    return math.sqrt(max(float(evals[-1]), 0.0))


def solve_lyapunov(acl, q, tols: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    """Solve Acl^T P + P Acl = -Q for symmetric positive definite P.

    The equation is vectorised into a Kronecker-sum linear system and
    solved densely; the result is symmetrised and verified: the residual
    ``||Acl^T P + P Acl + Q||`` must not exceed ``tols.lyapunov_residual``
    and P must be positive definite, otherwise NumericalError is raised.

    Preconditions: Acl Hurwitz, Q symmetric positive definite (both
    checked, ContractError on violation).
    """
    a = as_square(acl, "Acl")
    qm = as_square(q, "Q")
    n = a.shape[0]
    if qm.shape[0] != n:
        raise DimensionError(
            f"Q: shape {qm.shape} does not match Acl shape {a.shape}"
        )
    if not is_hurwitz(a):
        raise ContractError("Acl: must be Hurwitz for a Lyapunov solve")
    q_evals, _ = symmetric_eigs(qm, tols)  # also enforces symmetry
    if float(q_evals[0]) <= 0.0:
        raise ContractError(
            f"Q: must be positive definite (min eigenvalue {q_evals[0]:.3e})"
        )

    ident = np.eye(n)
    # Row-major vec identity: vec(A^T P) = (A^T (x) I) vec(P),
    #                         vec(P A)   = (I (x) A^T) vec(P).
    lhs = np.kron(a.T, ident) + np.kron(ident, a.T)
    p_vec = np.linalg.solve(lhs, -qm.reshape(-1))
    p = p_vec.reshape(n, n)
    p = 0.5 * (p + p.T)

    residual = induced_norm2(a.T @ p + p @ a + qm, tols)
    if residual > tols.lyapunov_residual:
        raise NumericalError(
            f"Lyapunov residual {residual:.3e} exceeds {tols.lyapunov_residual:.1e}"
        )
    p_evals, _ = symmetric_eigs(p, tols)
    if float(p_evals[0]) <= 0.0:
        raise NumericalError(
            f"Lyapunov solution not positive definite (min eigenvalue {p_evals[0]:.3e})"
        )
    return p
