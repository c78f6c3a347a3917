"""Tables of zeta-zero ordinates: loading, validation and a sign-change oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.special import loggamma

from .errors import ValidationError

BUNDLED_TABLE = "zeta_zeros_1000.txt"


@dataclass(frozen=True)
class ZerosTable:
    """Ascending positive ordinates ``gamma_j`` of zeros ``1/2 + i gamma_j``.

    Ordinates are assumed real, i.e. the zeros are taken to lie on the
    critical line. The original decimal strings are kept so that a table
    can be written back digit for digit.
    """

    ordinates: np.ndarray
    source_path: str | None = None
    texts: tuple[str, ...] = field(default=(), repr=False)

    @property
    def count(self) -> int:
        return len(self.ordinates)

    def head(self, count: int) -> "ZerosTable":
        return ZerosTable(self.ordinates[:count], self.source_path, self.texts[:count])


def bundled_zeros_path() -> Path:
    return Path(str(resources.files("zetaspec") / "data" / BUNDLED_TABLE))


def parse_zeros(lines, source: str | None = None) -> ZerosTable:
    values: list[float] = []
    texts: list[str] = []
    last_line = None
    for lineno, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text or text.startswith("#"):
            continue
        try:
            value = float(text)
        except ValueError:
            raise ValidationError(f"{source or '<zeros>'}:{lineno}: cannot parse {text!r}") from None
        if not math.isfinite(value) or value <= 0:
            raise ValidationError(f"{source or '<zeros>'}:{lineno}: ordinate must be positive, got {text}")
        if values and value <= values[-1]:
            raise ValidationError(
                f"{source or '<zeros>'}:{lineno}: {text} does not exceed the previous "
                f"ordinate {texts[-1]} (line {last_line}); table must be strictly ascending"
            )
        values.append(value)
        texts.append(text)
        last_line = lineno
    if not values:
        raise ValidationError(f"{source or '<zeros>'}: no ordinates found")
    arr = np.array(values)
    arr.setflags(write=False)
    return ZerosTable(arr, source, tuple(texts))


def load_zeros(path=None) -> ZerosTable:
    """Read a zeros file; ``None`` selects the bundled table of 1000 zeros."""
    path = Path(path) if path is not None else bundled_zeros_path()
    with open(path, encoding="ascii") as fh:
        return parse_zeros(fh, str(path))


def save_zeros(table: ZerosTable, path) -> None:
    texts = table.texts or tuple(repr(float(v)) for v in table.ordinates)
    Path(path).write_text("\n".join(texts) + "\n", encoding="ascii")


# ---------------------------------------------------------------------------
# Hardy Z-function
# ---------------------------------------------------------------------------

# B_{2k} / (2k)!  for k = 1..10
_EM_COEFFS = (
    1 / 12,
    -1 / 720,
    1 / 30240,
    -1 / 1209600,
    1 / 47900160,
    -691 / 1307674368000,
    1 / 74724249600,
    -3617 / 10670622842880000,
    43867 / 5109094217170944000,
    -174611 / 802857662698291200000,
)


def zeta_euler_maclaurin(s: complex, terms: int | None = None) -> complex:
    """``zeta(s)`` by Euler-Maclaurin summation; adequate for ``|Im s| <= 1000``."""
    s = complex(s)
    N = terms or max(20, int(abs(s.imag)) + 10)
    n = np.arange(1, N, dtype=float)
    head = np.sum(np.exp(-s * np.log(n)))
    logN = math.log(N)
    NS = np.exp(-s * logN)
    total = head + N * NS / (s - 1.0) + 0.5 * NS
    rising = s  # s (s+1) ... (s + 2k - 2)
    power = NS / N  # N^{-s-1}
    for k, coef in enumerate(_EM_COEFFS, start=1):
        total += coef * rising * power
        rising *= (s + 2 * k - 1) * (s + 2 * k)
        power /= N * N
    return complex(total)


def riemann_siegel_theta(t: float) -> float:
    return float(loggamma(0.25 + 0.5j * t).imag) - 0.5 * t * math.log(math.pi)


def hardy_z(t: float) -> float:
    """``Z(t) = exp(i theta(t)) zeta(1/2 + it)``, real for real ``t``."""
    value = complex(math.cos(riemann_siegel_theta(t)), math.sin(riemann_siegel_theta(t)))
    return (value * zeta_euler_maclaurin(0.5 + 1j * t)).real


@dataclass(frozen=True)
class ZeroCheck:
    index: int
    ordinate: float
    z_below: float
    z_above: float

    @property
    def ok(self) -> bool:
        return self.z_below * self.z_above < 0

    @property
    def margin(self) -> float:
        return min(abs(self.z_below), abs(self.z_above))


@dataclass(frozen=True)
class ZeroVerificationReport:
    tol: float
    checks: tuple[ZeroCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.checks)

    @property
    def failed_index(self) -> int | None:
        for c in self.checks:
            if not c.ok:
                return c.index
        return None


MAX_VERIFIED = 50


def verify_first_zeros(table: ZerosTable, count: int, tol: float = 1e-4) -> ZeroVerificationReport:
    """Check that ``Z`` changes sign inside ``[gamma_j - tol, gamma_j + tol]``."""
    if count < 0 or count > min(table.count, MAX_VERIFIED):
        raise ValidationError(f"count must be in 0..{min(table.count, MAX_VERIFIED)}, got {count}")
    if tol < 1e-6:
        raise ValidationError(f"tol must be >= 1e-6, got {tol}")
    checks = []
    for j in range(count):
        g = float(table.ordinates[j])
        checks.append(ZeroCheck(j + 1, g, hardy_z(g - tol), hardy_z(g + tol)))
    return ZeroVerificationReport(tol, tuple(checks))


def zero_count_estimate(T: float) -> float:
    """Smooth part of the zero-counting function, ``(T/2pi) ln(T/2pi) - T/2pi + 7/8``."""
    if not T > 2 * math.pi:
        raise ValidationError(f"zero_count_estimate needs T > 2pi, got {T}")
    x = T / (2 * math.pi)
    return x * math.log(x) - x + 7.0 / 8.0
