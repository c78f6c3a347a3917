"""Eigensolvers for the constrained operator.

``eig_dense`` is the trusted O(n^3) path: Householder reduction to
tridiagonal form followed by implicit-shift QL. ``eig_secular`` exploits the
diagonal-plus-rank-two structure of the ``kill`` operator and costs O(n^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError
from .operators import ConstrainedOperator

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class Spectrum:
    """Ascending eigenvalues ``nu_{-N} <= ... <= nu_N``."""

    eigenvalues: np.ndarray
    solver: str
    fallback: bool = False
    vectors: np.ndarray | None = None

    @property
    def dimension(self) -> int:
        return len(self.eigenvalues)

    @property
    def kernel_index(self) -> int:
        """Position of ``nu_0``: the eigenvalue of least magnitude."""
        return int(np.argmin(np.abs(self.eigenvalues)))

    @property
    def nu0(self) -> float:
        return float(self.eigenvalues[self.kernel_index])

    def positive(self) -> np.ndarray:
        """``nu_1 <= nu_2 <= ...``: everything above the kernel element."""
        return self.eigenvalues[self.kernel_index + 1 :]

    def symmetry_defect(self) -> float:
        """``max_k |nu_k + nu_{-k}|`` over the sorted spectrum."""
        ev = self.eigenvalues
        return float(np.max(np.abs(ev + ev[::-1])))


# ---------------------------------------------------------------------------
# Dense path
# ---------------------------------------------------------------------------


def householder_tridiagonalize(A: np.ndarray, want_q: bool = False):
    """Reduce a real symmetric matrix to tridiagonal form ``Q^T A Q = T``.

    Returns ``(d, e, Q)`` with ``e[i]`` the coupling between rows ``i`` and
    ``i+1``; ``Q`` is ``None`` unless requested.
    """
    A = np.array(A, dtype=float)
    n = A.shape[0]
    Q = np.eye(n) if want_q else None
    for k in range(n - 2):
        x = A[k + 1 :, k]
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        if x[0] > 0:
            alpha = -alpha
        v = x.copy()
        v[0] -= alpha
        vnorm2 = np.dot(v, v)
        if vnorm2 == 0.0:
            continue
        beta = 2.0 / vnorm2
        sub = A[k + 1 :, k + 1 :]
        p = beta * (sub @ v)
        K = 0.5 * beta * np.dot(v, p)
        q = p - K * v
        sub -= np.outer(v, q) + np.outer(q, v)
        A[k + 1 :, k] = 0.0
        A[k, k + 1 :] = 0.0
        A[k + 1, k] = A[k, k + 1] = alpha
        if want_q:
            Qs = Q[:, k + 1 :]
            Qs -= beta * np.outer(Qs @ v, v)
    d = np.diag(A).copy()
    e = np.diag(A, 1).copy()
    return d, e, Q


def tql_implicit(d: np.ndarray, e: np.ndarray, Z: np.ndarray | None = None, max_iter: int = 60):
    """Implicit-shift QL on a symmetric tridiagonal matrix.

    ``d`` (length n) and ``e`` (length n-1, off-diagonal) are copied. If
    ``Z`` is given its columns are rotated along, so passing the Householder
    ``Q`` yields eigenvectors of the original matrix. Returns unsorted
    ``(eigenvalues, Z)``.
    """
    d = [float(v) for v in d]
    n = len(d)
    e = [float(v) for v in e] + [0.0]
    Z = None if Z is None else np.array(Z, dtype=float)
    for l in range(n):
        iters = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= EPS * dd:
                    break
                m += 1
            if m == l:
                break
            if iters == max_iter:
                raise NumericalError(
                    f"QL did not converge for eigenvalue {l} after {max_iter} iterations",
                    stage="eig_dense",
                )
            iters += 1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if Z is not None:
                    zi = Z[:, i].copy()
                    Z[:, i] = c * zi - s * Z[:, i + 1]
                    Z[:, i + 1] = s * zi + c * Z[:, i + 1]
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return np.array(d), Z


def eigh_dense(A: np.ndarray, vectors: bool = False):
    """Sorted eigenvalues (and optionally eigenvectors) of a real symmetric matrix."""
    d, e, Q = householder_tridiagonalize(A, want_q=vectors)
    vals, Z = tql_implicit(d, e, Q)
    order = np.argsort(vals, kind="stable")
    return vals[order], (Z[:, order] if vectors else None)


def eig_dense(op: ConstrainedOperator, vectors: bool = False) -> Spectrum:
    D = op.dense()
    if np.max(np.abs(D - D.T)) > 1e-12 * max(1.0, np.max(np.abs(D))):
        raise ValidationError("dense operator is not symmetric")
    vals, vecs = eigh_dense(D, vectors)
    return Spectrum(vals, "dense", vectors=vecs)


# ---------------------------------------------------------------------------
# Secular path
# ---------------------------------------------------------------------------


def secular_determinant(s, op: ConstrainedOperator):
    """``f11 f22 - (f12 - 1)^2`` with ``f_ab = a^T (M - s)^{-1} b`` over ``(xi, w)``.

    Its zeros away from the diagonal entries are the eigenvalues of the
    ``kill`` operator when ``xi^T M xi = 0``.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    inv = 1.0 / (op.diag[None, :] - s[:, None])
    xi, w = op.xi_hat, op.w
    f11 = inv @ (xi * xi)
    f12 = inv @ (xi * w)
    f22 = inv @ (w * w)
    return f11 * f22 - (f12 - 1.0) ** 2


class SecularBracketError(NumericalError):
    def __init__(self, message: str):
        super().__init__(message, stage="eig_secular")


def _secular_roots(d: np.ndarray, z: np.ndarray, chunk: int = 256, max_iter: int = 80) -> np.ndarray:
    """Roots of ``sum_j z_j / (d_j - s)`` in each gap ``(d_i, d_{i+1})``.

    ``d`` strictly ascending, ``z > 0``. Each root is written ``d_i + tau``
    and found by the fixed-weight rational iteration (two-pole model of the
    secular function) safeguarded by bisection on the sign bracket.
    """
    n = len(d)
    roots = np.empty(n - 1)
    scale = max(np.max(np.abs(d)), 1.0)
    tol = 4 * EPS * scale
    for start in range(0, n - 1, chunk):
        idx = np.arange(start, min(start + chunk, n - 1))
        gap_all = d[idx + 1] - d[idx]
        lo = np.zeros(len(idx))
        hi = gap_all.copy()
        tau = 0.5 * gap_all
        act = np.arange(len(idx))  # rows still iterating
        for _ in range(max_iter):
            rows = idx[act]
            gap = gap_all[act]
            t = tau[act]
            inv = 1.0 / ((d[None, :] - d[rows][:, None]) - t[:, None])
            inv2 = inv * inv
            f = inv @ z
            dsum = inv2 @ z
            # columns below the chunk are all "lower"; only the chunk block is mixed
            lo_cols = slice(0, idx[0])
            blk = slice(idx[0], idx[-1] + 1)
            mask = np.arange(idx[0], idx[-1] + 1)[None, :] <= rows[:, None]
            zb = z[blk][None, :] * mask
            psi = inv[:, lo_cols] @ z[lo_cols] + (inv[:, blk] * zb).sum(1)
            dpsi = inv2[:, lo_cols] @ z[lo_cols] + (inv2[:, blk] * zb).sum(1)
            dphi = dsum - dpsi
            phi = f - psi
            lo[act] = np.where(f < 0, t, lo[act])
            hi[act] = np.where(f > 0, t, hi[act])
            a_lo, a_hi = lo[act], hi[act]
            # two-pole model: -Bm/x + Dm/(gap - x) + E = 0
            Bm = dpsi * t**2
            Dm = dphi * (gap - t) ** 2
            E = psi + dpsi * t + phi - dphi * (gap - t)
            bq = -(Bm + Dm + E * gap)
            cq = Bm * gap
            with np.errstate(divide="ignore", invalid="ignore"):
                disc = np.sqrt(np.maximum(bq * bq - 4.0 * E * cq, 0.0))
                q = -0.5 * (bq + np.copysign(disc, bq))
                r1 = q / E
                r2 = cq / q
                linear = cq / (Bm + Dm)
            cand = np.where(np.abs(E) * gap <= EPS * (Bm + Dm), linear, np.where((r1 > a_lo) & (r1 < a_hi), r1, r2))
            # a step below rounding level means convergence even if it
            # lands a hair outside the (noisy) bracket
            converged = (f == 0) | (np.isfinite(cand) & (np.abs(cand - t) <= tol)) | (a_hi - a_lo <= tol)
            ok = np.isfinite(cand) & (cand > a_lo) & (cand < a_hi)
            tau[act] = np.where(converged, t, np.where(ok, cand, 0.5 * (a_lo + a_hi)))
            act = act[~converged]
            if len(act) == 0:
                break
        if len(act):
            raise SecularBracketError(f"secular root in gap {int(idx[act[0]])} did not converge")
        roots[idx] = d[idx] + tau
    return roots


def eig_secular(op: ConstrainedOperator, deflation_tol: float = 1e-12) -> Spectrum:
    """Spectrum of a ``kill`` operator with ``xi^T M xi = 0`` in O(n^2).

    With ``w = M xi`` and ``xi^T M xi = 0`` one has ``f12 = 1 + s f11`` and
    ``f22 = s f12``, so the secular determinant collapses to ``-s f11(s)``:
    the eigenvalues are ``0`` and one root of ``f11`` per gap of the diagonal.
    Coordinates where ``xi`` vanishes decouple and keep their diagonal entry.
    """
    if op.builder != "kill":
        raise ValidationError("eig_secular handles the 'kill' builder only; use eig_dense")
    if not secular_applicable(op):
        raise ValidationError(
            f"eig_secular needs xi^T M xi = 0, got {op.quad:.3e}; use eig_dense"
        )
    mu = op.diag
    order = np.argsort(mu, kind="stable")
    mu, xi = mu[order], op.xi_hat[order]
    if np.any(np.diff(mu) <= 0):
        raise ValidationError("eig_secular needs distinct diagonal entries")
    live = np.abs(xi) > deflation_tol
    deflated = mu[~live]
    d, z = mu[live], xi[live] ** 2
    roots = _secular_roots(d, z) if len(d) > 1 else np.zeros(0)
    vals = np.sort(np.concatenate([roots, deflated, [0.0]]))
    return Spectrum(vals, "secular")


def secular_applicable(op: ConstrainedOperator) -> bool:
    return op.builder == "kill" and abs(op.quad) <= 1e-10 * max(op.norm_M, 1.0)


def solve_spectrum(op: ConstrainedOperator, solver: str = "secular") -> Spectrum:
    """Dispatch to a solver.

    The secular path falls back to dense, flagged, when its structure
    assumption does not hold or a bracket fails to converge.
    """
    if solver == "dense":
        return eig_dense(op)
    if solver != "secular":
        raise ValidationError(f"unknown solver {solver!r}")
    if secular_applicable(op):
        try:
            return eig_secular(op)
        except SecularBracketError:
            pass
    spec = eig_dense(op)
    return Spectrum(spec.eigenvalues, "dense", fallback=True)
