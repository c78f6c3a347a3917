"""Pairing spectra with zeros, and the error functionals built on the pairing."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .eigen import Spectrum
from .errors import ValidationError
from .specfun import nth_prime
from .zeros import ZerosTable


class PairingMode(str, Enum):
    SORTED_INDEX = "sorted_index"
    NEAREST_EIGENVALUE = "nearest_eigenvalue"

    @classmethod
    def parse(cls, value) -> "PairingMode":
        if isinstance(value, cls):
            return value
        aliases = {"sorted": cls.SORTED_INDEX, "nearest": cls.NEAREST_EIGENVALUE}
        try:
            return aliases.get(value) or cls(value)
        except ValueError:
            raise ValidationError(f"unknown pairing {value!r}") from None


@dataclass(frozen=True)
class ErrorRow:
    k: int
    zero: float
    eigenvalue: float
    distance: float


@dataclass(frozen=True)
class ErrorReport:
    rows: tuple[ErrorRow, ...]
    epsilon: float
    uniform: float
    bound: float
    kappa_product: float | None
    pairing: PairingMode
    lam: float
    kappa: float | None
    count: int

    @property
    def distances(self) -> np.ndarray:
        return np.array([r.distance for r in self.rows])


def lower_bound(lam: float) -> float:
    """``1 / (4 ln lambda)``."""
    if not lam > 1:
        raise ValidationError(f"lambda must exceed 1, got {lam}")
    return 1.0 / (4.0 * math.log(lam))


def conjecture_product(uniform: float, kappa: float) -> float:
    """``uniform * ln kappa``."""
    if not kappa > 1:
        raise ValidationError(f"kappa must exceed 1, got {kappa}")
    return uniform * math.log(kappa)


def pair(spectrum: Spectrum, zeros: ZerosTable, mode, count: int) -> np.ndarray:
    """Eigenvalue paired with each of the first ``count`` zeros."""
    mode = PairingMode.parse(mode)
    if count < 1:
        raise ValidationError(f"count must be >= 1, got {count}")
    if zeros.count < count:
        raise ValidationError(f"need {count} zeros, table has {zeros.count} (short by {count - zeros.count})")
    gamma = np.asarray(zeros.ordinates[:count])
    if mode is PairingMode.SORTED_INDEX:
        pos = spectrum.positive()
        if len(pos) < count:
            raise ValidationError(
                f"need {count} positive eigenvalues, spectrum has {len(pos)} "
                f"(short by {count - len(pos)})"
            )
        return np.array(pos[:count])
    ev = np.asarray(spectrum.eigenvalues)
    right = np.clip(np.searchsorted(ev, gamma), 1, len(ev) - 1) if len(ev) > 1 else np.zeros(count, int)
    left = right - 1 if len(ev) > 1 else right
    # ties go to the smaller eigenvalue
    choose_left = np.abs(gamma - ev[left]) <= np.abs(ev[right] - gamma)
    return np.where(choose_left, ev[left], ev[right])


def pair_and_score(
    spectrum: Spectrum,
    zeros: ZerosTable,
    mode,
    count: int,
    lam: float,
    kappa: float | None = None,
    first_index: int = 1,
) -> ErrorReport:
    """Mean absolute and uniform error of the first ``count`` pairs."""
    mode = PairingMode.parse(mode)
    nu = pair(spectrum, zeros, mode, count)
    gamma = np.asarray(zeros.ordinates[:count])
    dist = np.abs(nu - gamma)
    rows = tuple(
        ErrorRow(first_index + i, float(g), float(v), float(d))
        for i, (g, v, d) in enumerate(zip(gamma, nu, dist))
    )
    eps = math.fsum(dist) / count
    uni = float(dist.max())
    product = conjecture_product(uni, kappa) if kappa is not None else None
    return ErrorReport(rows, eps, uni, lower_bound(lam), product, mode, lam, kappa, count)


def bound_check(report: ErrorReport) -> tuple[float, bool]:
    bound = lower_bound(report.lam)
    return bound, bool(report.epsilon >= bound)


def calibrate_lambda(N: int) -> float:
    """``lambda(N) = exp(p_N / N)``: the window carrying the first ``N`` primes."""
    if N < 1:
        raise ValidationError(f"N must be >= 1, got {N}")
    return math.exp(nth_prime(N) / N)


def fmt(x: float) -> str:
    return format(float(x), ".15g")


def report_csv(report: ErrorReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["k", "zero", "eigenvalue", "distance"])
    for r in report.rows:
        writer.writerow([r.k, fmt(r.zero), fmt(r.eigenvalue), fmt(r.distance)])
    return buf.getvalue()
