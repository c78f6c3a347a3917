"""Number-theoretic and special-function primitives.

Everything here is a pure function of its arguments. Arrays handed back
inside result objects are marked read-only so the objects can be shared
between worker processes and threads.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import CapacityError, QuadratureError, ValidationError

#: Largest sieve the library will allocate (one byte per integer).
MAX_SIEVE_LIMIT = 200_000_000

EULER_GAMMA = 0.57721566490153286061


# ---------------------------------------------------------------------------
# von Mangoldt sieve
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MangoldtTable:
    """Prime powers ``n <= limit`` with their weights ``Lambda(n) = ln p``."""

    limit: int
    n: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return len(self.n)

    @property
    def entries(self) -> list[tuple[int, float]]:
        return list(zip(self.n.tolist(), self.weights.tolist()))

    def chebyshev_psi(self, x: float) -> float:
        """Sum of ``Lambda(n)`` over ``n <= x``."""
        k = int(np.searchsorted(self.n, math.floor(x), side="right"))
        return math.fsum(self.weights[:k])

    def below(self, log_bound: float) -> "MangoldtTable":
        """Entries with ``ln n < log_bound`` strictly."""
        # a prime power sitting exactly on the boundary is dropped
        keep = np.log(self.n.astype(float)) < log_bound
        return MangoldtTable(self.limit, _frozen(self.n[keep]), _frozen(self.weights[keep]))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a)
    a.setflags(write=False)
    return a


def primes_up_to(limit: int) -> np.ndarray:
    """Sieve of Eratosthenes; returns the primes ``<= limit`` as int64."""
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    if limit > MAX_SIEVE_LIMIT:
        raise CapacityError(
            f"sieve limit {limit} exceeds configured capacity {MAX_SIEVE_LIMIT}"
        )
    is_prime = np.ones(limit + 1, dtype=bool)
    is_prime[:2] = False
    is_prime[4::2] = False
    for p in range(3, math.isqrt(limit) + 1, 2):
        if is_prime[p]:
            is_prime[p * p :: 2 * p] = False
    return np.flatnonzero(is_prime).astype(np.int64)


def sieve_mangoldt(limit: int) -> MangoldtTable:
    """Tabulate ``Lambda(n)`` for every prime power ``n <= limit``."""
    limit = int(limit)
    if limit < 2:
        empty = np.zeros(0, dtype=np.int64)
        return MangoldtTable(max(limit, 0), _frozen(empty), _frozen(empty.astype(float)))
    primes = primes_up_to(limit)
    ns = [primes]
    bases = [primes]
    # repeated multiplication stays in exact integer arithmetic
    power = primes[primes <= limit // primes]
    base = power.copy()
    power = power * base
    while power.size:
        ns.append(power)
        bases.append(base)
        keep = power <= limit // base
        power, base = power[keep] * base[keep], base[keep]
    n = np.concatenate(ns)
    p = np.concatenate(bases)
    order = np.argsort(n, kind="stable")
    return MangoldtTable(limit, _frozen(n[order]), _frozen(np.log(p[order].astype(float))))


def nth_prime(index: int) -> int:
    """The ``index``-th prime, ``nth_prime(1) == 2``."""
    if index < 1:
        raise ValidationError(f"prime index must be >= 1, got {index}")
    if index < 6:
        return (2, 3, 5, 7, 11)[index - 1]
    # Rosser's bound p_n < n (ln n + ln ln n) for n >= 6
    bound = int(index * (math.log(index) + math.log(math.log(index)))) + 1
    if bound > MAX_SIEVE_LIMIT:
        raise CapacityError(
            f"nth_prime({index}) needs a sieve to {bound}, capacity is {MAX_SIEVE_LIMIT}"
        )
    return int(primes_up_to(bound)[index - 1])


# ---------------------------------------------------------------------------
# Digamma on the quarter line
# ---------------------------------------------------------------------------

# B_{2k} / (2k) for k = 1..6
_PSI_ASYMPTOTIC = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
)
_SHIFT = 8


def digamma_complex(z):
    """Digamma for complex arguments with ``Re z > 0``.

    Shifts the argument up by eight with ``psi(z) = psi(z+1) - 1/z`` and then
    applies the Stirling-type series; the first omitted term is below 2e-14
    once ``|z| >= 8``.
    """
    z = np.asarray(z, dtype=complex)
    correction = np.zeros_like(z)
    small = np.abs(z) < _SHIFT
    if np.any(small):
        zs = z[small]
        acc = np.zeros_like(zs)
        for j in range(_SHIFT):
            acc += 1.0 / (zs + j)
        correction[small] = acc
        z = np.where(small, z + _SHIFT, z)
    inv2 = 1.0 / (z * z)
    series = np.zeros_like(z)
    for coef in reversed(_PSI_ASYMPTOTIC):
        series = (series + coef) * inv2
    return np.log(z) - 0.5 / z - series - correction


def re_digamma_quarter_line(t):
    """``Re psi(1/4 + i t / 2)``; accepts scalars or arrays."""
    t = np.asarray(t, dtype=float)
    out = digamma_complex(0.25 + 0.5j * np.abs(t)).real
    return float(out) if out.ndim == 0 else out


def re_digamma_asymptotic(t):
    """Large-``t`` model of ``Re psi(1/4 + i t/2)``: ``ln(t/2) - 1/(24 t^2)``.

    The neglected remainder is ``O(t^-4)``.
    """
    t = np.asarray(t, dtype=float)
    return np.log(t / 2.0) - 1.0 / (24.0 * t * t)


# ---------------------------------------------------------------------------
# Adaptive Gauss-Kronrod quadrature
# ---------------------------------------------------------------------------

_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# full 15-point node/weight vectors on [-1, 1]
GK15_NODES = np.concatenate([-_XGK[:-1], [0.0], _XGK[-2::-1]])
GK15_WEIGHTS = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[-2::-1]])
# Gauss 7-point weights aligned with GK15_NODES (zero on Kronrod-only nodes)
G7_WEIGHTS = np.zeros(15)
G7_WEIGHTS[[1, 3, 5]] = _WG[:3]
G7_WEIGHTS[7] = _WG[3]
G7_WEIGHTS[[9, 11, 13]] = _WG[2::-1]


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    evaluations: int


def _evaluate(f: Callable, x: np.ndarray) -> np.ndarray:
    try:
        y = np.asarray(f(x))
        if y.shape != x.shape:
            y = np.broadcast_to(y, x.shape)
    except (TypeError, ValueError):
        y = np.array([f(float(xi)) for xi in x])
    return y


def _gk15(f: Callable, a: float, b: float):
    half = 0.5 * (b - a)
    center = 0.5 * (a + b)
    y = _evaluate(f, center + half * GK15_NODES)
    kronrod = half * np.dot(GK15_WEIGHTS, y)
    gauss = half * np.dot(G7_WEIGHTS, y)
    return kronrod, abs(kronrod - gauss)


def integrate_adaptive(
    f: Callable,
    a: float,
    b: float,
    tol: float = 1e-10,
    points: Iterable[float] | None = None,
    max_subdivisions: int = 2000,
) -> QuadratureResult:
    """Globally adaptive G7/K15 quadrature of ``f`` over ``[a, b]``.

    ``points`` are interior break points (e.g. the phase nodes of an
    oscillatory weight); the initial partition is split there. The panel
    with the largest error estimate is bisected until the summed estimate
    drops below ``tol``. Raises :class:`QuadratureError` carrying the
    partial result when ``max_subdivisions`` is exhausted.
    """
    if not a < b:
        raise ValidationError(f"need a < b, got [{a}, {b}]")
    if not tol > 0:
        raise ValidationError(f"tol must be positive, got {tol}")
    interior = () if points is None else (float(p) for p in np.ravel(points))
    cuts = sorted({a, b, *(p for p in interior if a < p < b)})
    heap: list[tuple[float, float, float, float]] = []
    total = 0.0
    error = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        v, e = _gk15(f, lo, hi)
        heapq.heappush(heap, (-e, lo, hi, v))
        total += v
        error += e
    evaluations = 15 * len(heap)
    splits = 0
    while error > tol:
        if splits >= max_subdivisions:
            raise QuadratureError(
                f"no convergence after {splits} subdivisions (error {error:.3e} > tol {tol:.1e})",
                partial=QuadratureResult(float(total), float(error), evaluations),
            )
        neg_e, lo, hi, v = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        v1, e1 = _gk15(f, lo, mid)
        v2, e2 = _gk15(f, mid, hi)
        heapq.heappush(heap, (-e1, lo, mid, v1))
        heapq.heappush(heap, (-e2, mid, hi, v2))
        evaluations += 30
        splits += 1
        # recompute the sums from the heap to avoid drift from repeated updates
        total = math.fsum(item[3] for item in heap)
        error = math.fsum(-item[0] for item in heap)
    return QuadratureResult(float(total), float(error), evaluations)


def gauss_legendre_panels(edges: Sequence[float] | np.ndarray, order: int = 15):
    """Composite Gauss-Kronrod nodes on consecutive panels.

    Returns ``(nodes, kronrod_weights, gauss_weights)`` flattened over all
    panels. With ``order=15`` the embedded 7-point Gauss weights give a
    per-panel error estimate.
    """
    edges = np.asarray(edges, dtype=float)
    if order != 15:
        raise ValidationError("only the G7/K15 pair is provided")
    half = 0.5 * np.diff(edges)[:, None]
    center = 0.5 * (edges[1:] + edges[:-1])[:, None]
    nodes = center + half * GK15_NODES[None, :]
    return nodes.ravel(), (half * GK15_WEIGHTS).ravel(), (half * G7_WEIGHTS).ravel()
