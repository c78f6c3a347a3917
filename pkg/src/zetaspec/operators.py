"""Compressed scaling generator on the Fourier modes of a log window.

Coordinates: ``x = ln u`` maps ``[1/lambda, lambda]`` with Haar measure onto
``[-l, l]`` with Lebesgue measure, ``l = ln lambda``. The modes
``phi_k(x) = (2l)^{-1/2} exp(i w_k x)``, ``w_k = pi k / l``, ``|k| <= N``,
span the working subspace; their reproducing kernel is the Dirichlet kernel.
Vectors are indexed so that position ``j`` holds mode ``k = j - N``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateConstraintError, NumericalError, ValidationError


@dataclass(frozen=True)
class LogWindow:
    lam: float

    def __post_init__(self):
        if not self.lam > 1:
            raise ValidationError(f"lambda must exceed 1, got {self.lam}")

    @property
    def half_width(self) -> float:
        return math.log(self.lam)

    @property
    def length(self) -> float:
        return 2.0 * self.half_width


@dataclass(frozen=True)
class FourierBasis:
    window: LogWindow
    N: int

    def __post_init__(self):
        if self.N < 0:
            raise ValidationError(f"N must be >= 0, got {self.N}")

    @property
    def dimension(self) -> int:
        return 2 * self.N + 1

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    @property
    def frequencies(self) -> np.ndarray:
        return math.pi * self.indices / self.window.half_width


def build_generator(basis: FourierBasis) -> np.ndarray:
    """Diagonal of the compressed ``-i d/dx``: the mode frequencies ``w_k``.

    Returned as a vector; ``np.diag`` gives the matrix when needed.
    """
    return basis.frequencies


def build_position(basis: FourierBasis) -> np.ndarray:
    """``X[j, k] = <phi_j, x phi_k>`` (Hermitian, zero diagonal)."""
    k = basis.indices
    diff = k[:, None] - k[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        sign = np.where(diff % 2 == 0, 1.0, -1.0)
        X = 1j * basis.window.half_width * sign / (math.pi * diff)
    X[diff == 0] = 0.0
    return X


def build_position_squared(basis: FourierBasis) -> np.ndarray:
    """``<phi_j, x^2 phi_k>``: the compression of ``x^2``, not ``X @ X``."""
    ell = basis.window.half_width
    k = basis.indices
    diff = k[:, None] - k[None, :]
    with np.errstate(divide="ignore"):
        sign = np.where(diff % 2 == 0, 1.0, -1.0)
        X2 = 2.0 * sign * ell**2 / (math.pi**2 * diff.astype(float) ** 2)
    X2[diff == 0] = ell**2 / 3.0
    return X2


@dataclass(frozen=True)
class ConstrainedOperator:
    """Diagonal-plus-low-rank operator ``D`` with ``D xi_hat = 0``.

    ``kill``:    ``D = Q M Q``, ``Q = I - xi xi^T``, i.e.
                 ``M - w xi^T - xi w^T + (xi^T M xi) xi xi^T`` with ``w = M xi``.
    ``perturb``: ``D = M - w w^T / (xi^T M xi)``.
    """

    diag: np.ndarray
    xi_hat: np.ndarray
    builder: str
    basis: FourierBasis | None = None
    w: np.ndarray = field(init=False, repr=False)
    quad: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "w", self.diag * self.xi_hat)
        object.__setattr__(self, "quad", float(np.dot(self.xi_hat, self.w)))

    @property
    def dimension(self) -> int:
        return len(self.diag)

    @property
    def norm_M(self) -> float:
        return float(np.max(np.abs(self.diag)))

    def dense(self) -> np.ndarray:
        xi, w = self.xi_hat, self.w
        D = np.diag(self.diag).astype(float)
        if self.builder == "kill":
            D -= np.outer(w, xi) + np.outer(xi, w)
            D += self.quad * np.outer(xi, xi)
        else:
            D -= np.outer(w, w) / self.quad
        return D

    def matvec(self, v: np.ndarray) -> np.ndarray:
        xi, w = self.xi_hat, self.w
        if self.builder == "kill":
            return self.diag * v - w * (xi @ v) - xi * (w @ v) + self.quad * xi * (xi @ v)
        return self.diag * v - w * (w @ v) / self.quad


def _check_unit(xi_hat: np.ndarray) -> np.ndarray:
    xi_hat = np.asarray(xi_hat, dtype=float)
    norm = np.linalg.norm(xi_hat)
    if abs(norm - 1.0) > 1e-12:
        raise ValidationError(f"constraint vector must have unit norm, got {norm!r}")
    return xi_hat


def constrain_kill(M, xi_hat, basis: FourierBasis | None = None) -> ConstrainedOperator:
    """Compress ``M`` to the orthogonal complement of ``xi_hat``."""
    M = np.asarray(M, dtype=float)
    xi_hat = _check_unit(xi_hat)
    if M.shape != xi_hat.shape:
        raise ValidationError(f"shape mismatch: diagonal {M.shape}, vector {xi_hat.shape}")
    return ConstrainedOperator(M, xi_hat, "kill", basis)


def constrain_perturb(M, xi_hat, basis: FourierBasis | None = None) -> ConstrainedOperator:
    """Rank-one modification ``M - (M xi)(M xi)^T / <xi, M xi>`` annihilating ``xi``."""
    M = np.asarray(M, dtype=float)
    xi_hat = _check_unit(xi_hat)
    if M.shape != xi_hat.shape:
        raise ValidationError(f"shape mismatch: diagonal {M.shape}, vector {xi_hat.shape}")
    quad = float(np.dot(xi_hat, M * xi_hat))
    if abs(quad) <= 1e-8 * np.max(np.abs(M)):
        raise DegenerateConstraintError(
            f"<xi, M xi> = {quad:.3e} vanishes (always so for an even real xi, the sum being "
            "odd); use the 'kill' builder instead"
        )
    return ConstrainedOperator(M, xi_hat, "perturb", basis)


@dataclass(frozen=True)
class UncertaintyReport:
    sigma_u: float
    sigma_zeta: float
    product: float
    half_width: float


def uncertainty_report(psi, basis: FourierBasis, D: ConstrainedOperator) -> UncertaintyReport:
    """Position and operator spreads of a unit vector ``psi``.

    The position variance uses the compression of ``x^2`` so it is the true
    variance of ``psi`` as a function on the window, and is bounded by ``l^2``.
    """
    psi = np.asarray(psi, dtype=complex)
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-10:
        raise ValidationError(f"psi must be a unit vector, got norm {norm!r}")
    X = build_position(basis)
    X2 = build_position_squared(basis)
    mean_x = np.vdot(psi, X @ psi).real
    var_u = max(np.vdot(psi, X2 @ psi).real - mean_x**2, 0.0)
    Dpsi = D.matvec(psi.real) + 1j * D.matvec(psi.imag)
    mean_d = np.vdot(psi, Dpsi).real
    var_z = max(np.vdot(Dpsi, Dpsi).real - mean_d**2, 0.0)
    su, sz = math.sqrt(var_u), math.sqrt(var_z)
    ell = basis.window.half_width
    if su > ell * (1 + 1e-12):
        raise NumericalError(f"position spread {su} exceeds the window half width {ell}", stage="uncertainty")
    return UncertaintyReport(su, sz, su * sz, ell)


def commutator_block_deviation(basis: FourierBasis, m: int) -> float:
    """Max deviation of the central ``(2m+1)^2`` block of ``-i[X, M]`` from the identity.

    Report only: with periodic modes the boundary term keeps this away from
    zero for every ``N``.
    """
    if not 0 <= m <= basis.N:
        raise ValidationError(f"block radius {m} outside 0..{basis.N}")
    X = build_position(basis)
    w = build_generator(basis)
    C = -1j * (X * w[None, :] - w[:, None] * X)
    c = basis.N
    block = C[c - m : c + m + 1, c - m : c + m + 1]
    return float(np.max(np.abs(block - np.eye(2 * m + 1))))
