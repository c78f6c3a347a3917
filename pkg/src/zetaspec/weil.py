"""Weil explicit-formula distribution on windowed test functions.

Conventions. A test function ``g`` lives on the log line and has transform
``h(t) = int g(x) e^{itx} dx``. The distribution is

    W(g) = h(i/2) + h(-i/2) - g(0) ln(pi)
           + (1/2pi) int h(t) Re psi(1/4 + it/2) dt
           - sum_n Lambda(n) n^{-1/2} (g(ln n) + g(-ln n))

and equals ``sum_gamma h(gamma)`` over the ordinates of all nontrivial zeros,
both signs counted.

The archimedean integral is done on a panel grid whose edges are the phase
nodes of ``h`` (zeros of its oscillating factor). Beyond the cutoff ``T`` the
digamma factor is replaced by ``ln(t/2) - 1/(24 t^2)`` and the remaining
oscillatory tail is integrated by parts in closed form.
"""

from __future__ import annotations

import math
import warnings
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .errors import NumericalError, ValidationError
from .specfun import (
    MangoldtTable,
    gauss_legendre_panels,
    re_digamma_asymptotic,
    re_digamma_quarter_line,
)

LN_PI = math.log(math.pi)

# cutoff rules for the archimedean grid
_TAIL_MARGIN = 200.0  # min distance between the cutoff and any sinc centre
_T_MIN = 400.0
_MAX_SUBPANEL_WIDTH = 0.5  # nearest digamma pole sits 1/2 off the real axis


# ---------------------------------------------------------------------------
# Test functions
# ---------------------------------------------------------------------------


class WindowedTestFunction(ABC):
    """Compactly supported ``g`` with a closed-form transform ``h``."""

    #: distance between consecutive zeros of the oscillating factor of h
    phase_spacing: float
    #: power of t in the decay of the envelope of |h|
    envelope_decay: int

    @abstractmethod
    def g(self, x): ...

    @abstractmethod
    def h(self, t): ...

    @abstractmethod
    def support_half_width(self) -> float: ...

    @abstractmethod
    def mirrored(self) -> "WindowedTestFunction":
        """The test function ``x -> g(-x)``."""

    @abstractmethod
    def arch_tail(self, cutoff: float) -> float:
        """``int_{|t| > cutoff} h(t) P(t) dt`` for the large-t digamma model P."""

    @abstractmethod
    def envelope_tail(self, gamma: float) -> float:
        """``2 int_gamma^inf H(t) ln(t / 2pi) / 2pi dt`` for an envelope H of |h|."""

    def h_exp_moments(self) -> tuple[complex, complex]:
        return complex(self.h(0.5j)), complex(self.h(-0.5j))


@dataclass(frozen=True)
class FourierMode(WindowedTestFunction):
    """``g(x) = (2l)^{-1/2} exp(i pi k x / l)`` on ``[-l, l]``."""

    half_width: float
    index: int
    envelope_decay: int = field(default=1, init=False)

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValidationError(f"half width must be positive, got {self.half_width}")

    @property
    def norm(self) -> float:
        return 1.0 / math.sqrt(2.0 * self.half_width)

    @property
    def frequency(self) -> float:
        return math.pi * self.index / self.half_width

    @property
    def phase_spacing(self) -> float:
        return math.pi / self.half_width

    def g(self, x):
        x = np.asarray(x, dtype=float)
        inside = np.abs(x) <= self.half_width
        return np.where(inside, self.norm * np.exp(1j * self.frequency * x), 0.0)

    def h(self, t):
        t = np.asarray(t)
        arg = (t + self.frequency) * self.half_width / math.pi
        return 2.0 * self.norm * self.half_width * np.sinc(arg)

    def support_half_width(self) -> float:
        return self.half_width

    def mirrored(self) -> "FourierMode":
        return FourierMode(self.half_width, -self.index)

    def pole_closed_form(self) -> float:
        w = self.frequency
        ell = self.half_width
        sign = -1.0 if self.index % 2 else 1.0
        return 2.0 * sign * math.sinh(ell / 2) / (math.sqrt(2 * ell) * (w * w + 0.25))

    def arch_tail(self, cutoff: float) -> float:
        return float(_fourier_arch_tail(self.half_width, np.array([self.index]), cutoff)[0])

    def envelope_tail(self, gamma: float) -> float:
        # |h| ~ 1/t is not integrable against the zero density
        return math.inf


@dataclass(frozen=True)
class Fejer(WindowedTestFunction):
    """Triangle ``g(x) = 1 - |x|/a`` on ``[-a, a]``; ``h(t) = (2/a)(1 - cos at)/t^2``."""

    half_width: float
    envelope_decay: int = field(default=2, init=False)

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValidationError(f"half width must be positive, got {self.half_width}")

    @property
    def phase_spacing(self) -> float:
        return 2.0 * math.pi / self.half_width

    def g(self, x):
        x = np.asarray(x, dtype=float)
        return np.clip(1.0 - np.abs(x) / self.half_width, 0.0, None).astype(complex)

    def h(self, t):
        t = np.asarray(t)
        a = self.half_width
        return a * np.sinc(a * t / (2.0 * math.pi)) ** 2

    def support_half_width(self) -> float:
        return self.half_width

    def mirrored(self) -> "Fejer":
        return self

    def pole_closed_form(self) -> float:
        a = self.half_width
        return 2.0 * (2.0 / a) * (math.cosh(a / 2) - 1.0) / 0.25

    def arch_tail(self, cutoff: float) -> float:
        a = self.half_width
        T = cutoff
        P = float(re_digamma_asymptotic(T))
        dP = 1.0 / T + 1.0 / (12.0 * T**3)
        smooth = (math.log(T / 2) + 1.0) / T - 1.0 / (72.0 * T**3)
        # cos(aT) = 1 at a phase node; one integration by parts on the cosine part
        dG = dP / T**2 - 2.0 * P / T**3
        return 2.0 * (2.0 / a) * (smooth + dG / a**2)

    def envelope_tail(self, gamma: float) -> float:
        a = self.half_width
        return (4.0 / (math.pi * a)) * (math.log(gamma / (2 * math.pi)) + 1.0) / gamma


def _fourier_arch_tail(ell: float, ks: np.ndarray, cutoff: float) -> np.ndarray:
    """Both tails of ``int h_k P`` for Fourier modes, cutoff on a phase node.

    With ``sin(l(T + w)) = 0`` the integration-by-parts series reduces to
    ``cos(l(T+w)) (F/l - F''/l^3 + ...)`` for ``F(t) = P(t)/(t + w)``.
    """
    ks = np.asarray(ks)
    m = int(round(cutoff * ell / math.pi))
    T = cutoff
    P = float(re_digamma_asymptotic(T))
    dP = 1.0 / T + 1.0 / (12.0 * T**3)
    d2P = -1.0 / T**2 - 1.0 / (4.0 * T**4)
    w = math.pi * ks / ell
    total = np.zeros(ks.shape)
    for sign in (1.0, -1.0):
        b = 1.0 / (T + sign * w)
        F = P * b
        d2F = d2P * b - 2.0 * dP * b * b + 2.0 * P * b**3
        total += F / ell - d2F / ell**3
    parity = np.where((m + ks) % 2 == 0, 1.0, -1.0)
    return 2.0 / math.sqrt(2.0 * ell) * parity * total


# ---------------------------------------------------------------------------
# Result types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeilBreakdown:
    pole_term: float
    archimedean_term: float
    prime_term: float
    total: float
    quadrature_error: float


@dataclass(frozen=True)
class XiVector:
    half_width: float
    N: int
    components: np.ndarray  # index j holds xi_{j - N}
    method: str = "riesz"

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.components))

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    def __getitem__(self, k: int) -> float:
        return float(self.components[k + self.N])

    def unit(self) -> np.ndarray:
        return self.components / self.norm


@dataclass(frozen=True)
class ExplicitFormulaReport:
    weil: float
    zero_side: float
    difference: float
    tail_bound: float
    quadrature_error: float
    count: int
    tol: float
    passed: bool


# ---------------------------------------------------------------------------
# Individual terms
# ---------------------------------------------------------------------------


def w_pole(f: WindowedTestFunction) -> float:
    """``h(i/2) + h(-i/2)``."""
    up, down = f.h_exp_moments()
    return (up + down).real


def _require_sieve(f: WindowedTestFunction, mangoldt: MangoldtTable) -> None:
    needed = math.floor(math.exp(f.support_half_width()))
    if mangoldt.limit < needed:
        raise ValidationError(
            f"Mangoldt table limit {mangoldt.limit} too small: "
            f"support half width {f.support_half_width():.6g} needs limit >= {needed}"
        )


def w_prime(f: WindowedTestFunction, mangoldt: MangoldtTable) -> float:
    """``-sum Lambda(n) n^{-1/2} (g(ln n) + g(-ln n))`` over ``ln n`` inside the support."""
    _require_sieve(f, mangoldt)
    table = mangoldt.below(f.support_half_width())
    if not len(table):
        return 0.0
    logs = np.log(table.n.astype(float))
    vals = f.g(logs) + f.g(-logs)
    return -float(np.sum(table.weights / np.sqrt(table.n) * vals).real)


class _ArchGrid:
    """Shared archimedean quadrature grid on ``[-T, T]``.

    Panel edges sit on multiples of ``spacing / subpanels`` so that every
    phase node of a test function with that spacing is a panel edge. The
    digamma kernel is evaluated once and reused for every integrand.
    """

    def __init__(self, spacing: float, min_cutoff: float, subpanels: int):
        panels = max(1, math.ceil(min_cutoff / spacing))
        self.spacing = spacing
        self.panels = panels
        self.subpanels = subpanels
        self.cutoff = panels * spacing
        edges = np.arange(-panels * subpanels, panels * subpanels + 1) * (spacing / subpanels)
        self.nodes, wk, wg = gauss_legendre_panels(edges)
        kernel = re_digamma_quarter_line(self.nodes)
        self.kernel_k = wk * kernel
        self.kernel_diff = (wk - wg) * kernel

    def integrate(self, values: np.ndarray) -> tuple[complex, float]:
        value = complex(np.dot(self.kernel_k, values))
        err = np.abs((self.kernel_diff * values).reshape(-1, 15).sum(axis=1)).sum()
        return value, float(err)


def _subpanels_for(spacing: float) -> int:
    return max(1, math.ceil(spacing / _MAX_SUBPANEL_WIDTH))


def _cutoff_for(f: WindowedTestFunction) -> float:
    centre = abs(getattr(f, "frequency", 0.0))
    return max(_T_MIN, centre + _TAIL_MARGIN)


def w_arch(f: WindowedTestFunction, tol: float = 1e-9) -> tuple[float, float]:
    """Archimedean term and its quadrature error estimate.

    Refines the panel grid until the summed Gauss/Kronrod discrepancy is
    below ``tol``.
    """
    if not tol > 0:
        raise ValidationError(f"tol must be positive, got {tol}")
    spacing = f.phase_spacing
    sub = _subpanels_for(spacing)
    cutoff = _cutoff_for(f)
    for _ in range(6):
        grid = _ArchGrid(spacing, cutoff, sub)
        body, err = grid.integrate(f.h(grid.nodes))
        if err <= tol:
            break
        sub *= 2
    else:
        raise NumericalError(
            f"archimedean quadrature error {err:.3e} above tol {tol:.1e}", stage="w_arch"
        )
    tail = f.arch_tail(grid.cutoff)
    g0 = complex(f.g(0.0))
    value = -g0 * LN_PI + (body + tail) / (2.0 * math.pi)
    return float(value.real), err / (2.0 * math.pi)


def weil_eval(f: WindowedTestFunction, mangoldt: MangoldtTable, tol: float = 1e-9) -> WeilBreakdown:
    pole = w_pole(f)
    prime = w_prime(f, mangoldt)
    arch, err = w_arch(f, tol)
    return WeilBreakdown(pole, arch, prime, pole + arch + prime, err)


# ---------------------------------------------------------------------------
# Zero side and the explicit-formula check
# ---------------------------------------------------------------------------


def zero_side(f: WindowedTestFunction, zeros, count: int) -> tuple[float, float]:
    """``sum_{j <= count} h(gamma_j) + h(-gamma_j)`` and a bound on the rest."""
    if count < 0 or count > zeros.count:
        raise ValidationError(f"count {count} outside 0..{zeros.count}")
    if count == 0:
        warnings.warn("zero_side called with count=0; tail bound is infinite", stacklevel=2)
        return 0.0, math.inf
    g = np.asarray(zeros.ordinates[:count])
    total = np.sum(f.h(g) + f.h(-g))
    return float(np.real(total)), f.envelope_tail(float(g[-1]))


def verify_explicit_formula(
    f: WindowedTestFunction,
    zeros,
    count: int,
    mangoldt: MangoldtTable,
    tol: float = 1e-2,
) -> ExplicitFormulaReport:
    if f.envelope_decay < 2:
        raise ValidationError(
            f"{type(f).__name__} has |h| decaying like 1/t; the zero sum converges only "
            "conditionally, so a truncated comparison is meaningless"
        )
    breakdown = weil_eval(f, mangoldt)
    zs, tail = zero_side(f, zeros, count)
    diff = abs(breakdown.total - zs)
    ok = diff <= tol + tail + breakdown.quadrature_error
    return ExplicitFormulaReport(
        breakdown.total, zs, diff, tail, breakdown.quadrature_error, count, tol, bool(ok)
    )


# ---------------------------------------------------------------------------
# The truncated Weil vector
# ---------------------------------------------------------------------------


def _mode_grid(ell: float, N: int, subpanels: int | None = None):
    """Grid for all modes ``|k| <= N`` in panel coordinates ``t = (m + s) pi / l``.

    Returns ``(M, s, kernel, osc, wk, wg)``: panel nodes ``s`` in ``(0, 1)``,
    the digamma kernel and ``(-1)^m sin(pi s)`` with shape ``(2M, nodes)``
    (panel ``m = -M..M-1`` along the first axis), and per-panel weights.
    """
    spacing = math.pi / ell
    sub = subpanels or _subpanels_for(spacing)
    min_cutoff = max(_T_MIN, N * spacing + _TAIL_MARGIN)
    M = max(1, math.ceil(min_cutoff / spacing))
    s, wk, wg = gauss_legendre_panels(np.arange(sub + 1) / sub)
    m = np.arange(-M, M)
    kernel = re_digamma_quarter_line((m[:, None] + s[None, :]) * spacing)
    sign_m = np.where(m % 2 == 0, 1.0, -1.0)[:, None]
    osc = sign_m * np.sin(math.pi * s)[None, :]
    # dt = spacing * ds
    return M, s, kernel, osc, wk * spacing, wg * spacing


def _panel_correlation(a: np.ndarray, s: np.ndarray, M: int, N: int) -> np.ndarray:
    """``sum_{m,q} a[m, q] / (m + k + s_q)`` for ``k = -N..N`` by FFT.

    Per node ``q`` this is a correlation of ``a[:, q]`` with ``1/(j + s_q)``,
    ``j = -M-N..M-1+N``.
    """
    j = np.arange(-M - N, M + N)
    K = 1.0 / (j[None, :] + s[:, None])
    out = fftconvolve(K, a.T[:, ::-1], mode="valid", axes=1)
    return out.sum(axis=0)


def fourier_arch_batch(ell: float, N: int, tol: float = 1e-9):
    """Archimedean terms of every mode ``k = -N..N`` on one shared grid.

    On the grid ``h_k(t) = 2c l (-1)^{m+k} sin(pi s) / (pi (m + k + s))``,
    which is evaluated without cancellation even next to the sinc centre.
    The sum over panels is a correlation in ``m + k``; the error estimate is
    the Kronrod minus Gauss value per mode.
    """
    ks = np.arange(-N, N + 1)
    c = 1.0 / math.sqrt(2.0 * ell)
    sub = _subpanels_for(math.pi / ell)
    for _ in range(6):
        M, s, kernel, osc, wk, wg = _mode_grid(ell, N, sub)
        base = kernel * osc
        body = _panel_correlation(base * wk, s, M, N)
        errs = np.abs(_panel_correlation(base * (wk - wg), s, M, N))
        scale = 2.0 * c * ell / math.pi * np.where(ks % 2 == 0, 1.0, -1.0)
        body *= scale
        errs *= np.abs(scale)
        if errs.max() / (2 * math.pi) <= tol:
            break
        sub *= 2
    else:
        raise NumericalError(
            f"archimedean quadrature error {errs.max():.3e} above tol {tol:.1e}", stage="build_xi"
        )
    tail = _fourier_arch_tail(ell, ks, M * math.pi / ell)
    arch = -c * LN_PI + (body + tail) / (2.0 * math.pi)
    return arch, errs / (2.0 * math.pi)


def weil_modes(ell: float, N: int, mangoldt: MangoldtTable, tol: float = 1e-9) -> np.ndarray:
    """Complex ``W(phi_k)`` for ``k = -N..N`` in one pass."""
    needed = math.floor(math.exp(ell))
    if mangoldt.limit < needed:
        raise ValidationError(
            f"Mangoldt table limit {mangoldt.limit} too small: half width {ell:.6g} "
            f"needs limit >= {needed}"
        )
    ks = np.arange(-N, N + 1)
    c = 1.0 / math.sqrt(2.0 * ell)
    w = math.pi * ks / ell
    # pole term via h at +-i/2 in complex arithmetic
    pole = np.zeros(len(ks), dtype=complex)
    for s in (0.5j, -0.5j):
        pole += 2.0 * c * ell * np.sinc((s + w) * ell / math.pi)
    table = mangoldt.below(ell)
    prime = np.zeros(len(ks), dtype=complex)
    if len(table):
        logs = np.log(table.n.astype(float))
        coef = table.weights / np.sqrt(table.n)
        phase = np.exp(1j * np.outer(logs, w))
        prime = -c * (coef @ (phase + phase.conj()))
    arch, _ = fourier_arch_batch(ell, N, tol)
    return pole + arch + prime


def build_xi(
    ell: float,
    N: int,
    mangoldt: MangoldtTable,
    tol: float = 1e-9,
    method: str = "riesz",
) -> XiVector:
    """Truncated Weil vector on the ``2N+1`` Fourier modes of ``[-l, l]``.

    ``riesz``: components ``conj(W(phi_k))``, the representative of the
    functional ``f -> W(f)``. ``gram``: unit eigenvector for the smallest
    eigenvalue of the Weil Gram matrix among even vectors, signed so that
    ``xi_0 >= 0``.
    """
    if not ell > 0:
        raise ValidationError(f"half width must be positive, got {ell}")
    if N < 1:
        raise ValidationError(f"N must be >= 1, got {N}")
    if method == "riesz":
        values = np.conj(weil_modes(ell, N, mangoldt, tol))
        scale = np.max(np.abs(values))
        residue = np.max(np.abs(values.imag))
        if residue > 1e-9 * scale:
            raise NumericalError(
                f"xi has imaginary residue {residue:.3e} (max |xi| = {scale:.3e})",
                stage="build_xi",
            )
        comps = values.real.copy()
    elif method == "gram":
        G = weil_gram(ell, N, mangoldt, tol)
        # G commutes with k -> -k; diagonalize on the even sector so that
        # near-degenerate minima cannot mix parities
        V = np.zeros((2 * N + 1, N + 1))
        V[N, 0] = 1.0
        for k in range(1, N + 1):
            V[N + k, k] = V[N - k, k] = math.sqrt(0.5)
        _, vecs = np.linalg.eigh(V.T @ G.real @ V)
        comps = V @ vecs[:, 0]
        if comps[N] < 0:
            comps = -comps
    else:
        raise ValidationError(f"unknown xi method {method!r}")
    comps.setflags(write=False)
    return XiVector(ell, N, comps, method)


# ---------------------------------------------------------------------------
# Weil Gram matrix
# ---------------------------------------------------------------------------


def pair_correlation(ell: float, j: int, k: int, x):
    """``(g_j * conj(g_k)(. - x))`` integrated: the log-side function of the pair ``(phi_j, phi_k)``."""
    x = np.asarray(x, dtype=float)
    wj, wk = math.pi * j / ell, math.pi * k / ell
    base = np.exp(1j * wk * x) / (2.0 * ell)
    inside = np.abs(x) <= 2 * ell
    if j == k:
        out = base * (2 * ell - np.abs(x))
    else:
        d = wj - wk
        sign = -1.0 if (j - k) % 2 else 1.0
        e = np.exp(1j * d * x)
        out = sign * base * np.where(x >= 0, 1.0 - e, e - 1.0) / (1j * d)
    return np.where(inside, out, 0.0)


def _pair_tail_matrix(ell: float, w: np.ndarray, T: float, nodes: int = 96) -> np.ndarray:
    """``int_{|t|>T} h_j h_k P dt`` for all pairs (cutoff on a node of sin(2lt))."""
    c2 = 1.0 / (2.0 * ell)
    u, wu = np.polynomial.legendre.leggauss(nodes)
    u = 0.5 * (u + 1.0)
    wu = 0.5 * wu
    p = 4  # v = u^p tames the log singularity at v = 0
    v = u**p
    dv = p * u ** (p - 1) * wu
    t = T / v
    P = re_digamma_asymptotic(t)
    PT = float(re_digamma_asymptotic(T))
    dPT = 1.0 / T + 1.0 / (12.0 * T**3)
    n = len(w)
    parity = np.where((np.arange(n)[:, None] + np.arange(n)[None, :]) % 2 == 0, 1.0, -1.0)
    out = np.zeros((n, n))
    for sign in (1.0, -1.0):
        a = sign * w
        # smooth part of (1 - cos 2lt)/2 : integral of P / ((t+a)(t+b))
        integrand = (P * T * dv)[None, None, :] / (
            (T + a[:, None, None] * v[None, None, :]) * (T + a[None, :, None] * v[None, None, :])
        )
        smooth = integrand.sum(-1)
        FT = PT / ((T + a[:, None]) * (T + a[None, :]))
        dFT = FT * (dPT / PT - 1.0 / (T + a[:, None]) - 1.0 / (T + a[None, :]))
        # cos(2lT) = 1; one integration by parts on the cosine part
        osc = -dFT / (2 * ell) ** 2
        out += 2.0 * c2 * (smooth - osc)
    return parity * out


def weil_gram(ell: float, N: int, mangoldt: MangoldtTable, tol: float = 1e-9) -> np.ndarray:
    """Weil form on pairs of modes, ``G[j, k] = W(phi_j, phi_k)``.

    The pair ``(phi_j, phi_k)`` has transform ``h_j conj(h_k)`` and log-side
    function supported on ``[-2l, 2l]``, so the table must reach ``lambda^2``.
    """
    if not ell > 0:
        raise ValidationError(f"half width must be positive, got {ell}")
    if N < 0:
        raise ValidationError(f"N must be >= 0, got {N}")
    needed = math.floor(math.exp(2 * ell))
    if mangoldt.limit < needed:
        raise ValidationError(
            f"Mangoldt table limit {mangoldt.limit} too small: Gram matrix at half width "
            f"{ell:.6g} needs limit >= {needed}"
        )
    ks = np.arange(-N, N + 1)
    n = len(ks)
    c = 1.0 / math.sqrt(2.0 * ell)
    w = math.pi * ks / ell

    # pole: (h_j conj h_k)(s) at s = +-i/2; h_k is real on the real line
    pole = np.zeros((n, n), dtype=complex)
    for s in (0.5j, -0.5j):
        hs = 2.0 * c * ell * np.sinc((s + w) * ell / math.pi)
        pole += np.outer(hs, hs)

    # archimedean: the product has spacing pi/l too, and a node of sin(2lt) at every edge
    sub = _subpanels_for(math.pi / ell)
    for _ in range(6):
        M, s, kernel, osc, wk, wg = _mode_grid(ell, N, sub)
        x = (np.arange(-M, M)[:, None] + s[None, :]).ravel()
        H = osc.ravel()[:, None] / (x[:, None] + ks[None, :])
        H *= 2.0 * c * ell / math.pi * np.where(ks % 2 == 0, 1.0, -1.0)[None, :]
        kw = (kernel * wk).ravel()
        kd = (kernel * (wk - wg)).ravel()
        body = H.T @ (kw[:, None] * H)
        # Kronrod minus embedded Gauss over the whole grid
        err = np.abs(H.T @ (kd[:, None] * H)).max() / (2 * math.pi)
        if err <= tol:
            break
        sub *= 2
    else:
        raise NumericalError(f"Gram quadrature error {err:.3e} above tol {tol:.1e}", stage="weil_gram")
    tail = _pair_tail_matrix(ell, w, M * math.pi / ell)
    arch = -np.eye(n) * LN_PI + (body + tail) / (2.0 * math.pi)

    # primes up to lambda^2
    table = mangoldt.below(2 * ell)
    prime = np.zeros((n, n))
    if len(table):
        xs = np.log(table.n.astype(float))
        coef = table.weights / np.sqrt(table.n)
        for a in range(n):
            for b in range(n):
                if a == b:
                    vals = (2 * ell - xs) / (2 * ell) * 2.0 * np.cos(w[b] * xs)
                else:
                    sign = -1.0 if (ks[a] - ks[b]) % 2 else 1.0
                    vals = sign * (np.sin(w[b] * xs) - np.sin(w[a] * xs)) / (ell * (w[a] - w[b]))
                prime[a, b] = -np.dot(coef, vals)
    G = pole + arch + prime
    if np.max(np.abs(G - G.conj().T)) > 1e-9 * max(1.0, np.max(np.abs(G))):
        raise NumericalError("Weil Gram matrix is not Hermitian", stage="weil_gram")
    return G.real if np.max(np.abs(G.imag)) == 0 else G
