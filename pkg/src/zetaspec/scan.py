"""kappa sweeps: one operator per kappa with lambda = N = kappa.

A sweep visits every centre ``kappa_from, kappa_from + step, ..., kappa_to``
and, around each, every integer kappa within ``scan_radius``. Completed
points go to an append-only sink (``points.csv``) so an interrupted run can
resume; the merged ``sweep.csv`` is written in kappa order at the end.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field, fields
from functools import lru_cache
from pathlib import Path
from typing import Callable

import numpy as np

from .eigen import Spectrum, solve_spectrum
from .errors import ValidationError, ZetaSpecError
from .metrics import PairingMode, fmt, lower_bound, pair_and_score
from .operators import FourierBasis, LogWindow, build_generator, constrain_kill, constrain_perturb
from .plotting import plot_error_envelope, plot_rug
from .specfun import sieve_mangoldt
from .weil import build_xi
from .zeros import ZerosTable, load_zeros

log = logging.getLogger(__name__)

DESK_KAPPA_CAP = 1000


@dataclass(frozen=True)
class ScanConfig:
    kappa_from: int = 50
    kappa_to: int = 1000
    kappa_step: int = 50
    scan_radius: int = 10
    pairing: str = "nearest_eigenvalue"
    builder: str = "kill"
    solver: str = "secular"
    xi_method: str = "riesz"
    zeros_path: str | None = None
    max_zeros: int = 1000
    tol: float = 1e-9
    output_dir: str = "scan-out"
    workers: int = 1
    long_running: bool = False
    dump_spectra: bool = False

    def __post_init__(self):
        if self.kappa_from < 2:
            raise ValidationError(f"kappa_from must be >= 2, got {self.kappa_from}")
        if self.kappa_step < 1:
            raise ValidationError(f"kappa_step must be >= 1, got {self.kappa_step}")
        if self.scan_radius < 0:
            raise ValidationError(f"scan_radius must be >= 0, got {self.scan_radius}")
        if self.kappa_to < self.kappa_from:
            raise ValidationError("kappa_to must be >= kappa_from")
        if self.kappa_to > DESK_KAPPA_CAP and not self.long_running:
            raise ValidationError(
                f"kappa_to={self.kappa_to} exceeds the desk cap {DESK_KAPPA_CAP}; "
                "enable long-running mode"
            )
        PairingMode.parse(self.pairing)
        if self.builder not in ("kill", "perturb"):
            raise ValidationError(f"unknown builder {self.builder!r}")
        if self.solver not in ("dense", "secular"):
            raise ValidationError(f"unknown solver {self.solver!r}")
        if self.xi_method not in ("riesz", "gram"):
            raise ValidationError(f"unknown xi method {self.xi_method!r}")

    def centres(self) -> list[int]:
        return list(range(self.kappa_from, self.kappa_to + 1, self.kappa_step))

    def window(self, centre: int) -> list[int]:
        return list(range(max(2, centre - self.scan_radius), centre + self.scan_radius + 1))

    def uniform_field(self) -> str:
        mode = PairingMode.parse(self.pairing)
        return "uniform_sorted" if mode is PairingMode.SORTED_INDEX else "uniform_nearest"


@dataclass(frozen=True)
class ScanRow:
    kappa: int
    dimension: int
    count: int
    nu0: float
    epsilon_sorted: float
    epsilon_nearest: float
    uniform_sorted: float
    uniform_nearest: float
    bound: float
    product: float
    solver: str
    wall_time: float = field(default=0.0, compare=False)

    @classmethod
    def header(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def as_csv(self) -> list[str]:
        out = []
        for name in self.header():
            v = getattr(self, name)
            out.append(fmt(v) if isinstance(v, float) else str(v))
        return out

    @classmethod
    def from_csv(cls, rec: dict) -> "ScanRow":
        kw = {}
        for f in fields(cls):
            raw = rec[f.name]
            kw[f.name] = int(raw) if f.type == "int" else (raw if f.type == "str" else float(raw))
        return cls(**kw)


@lru_cache(maxsize=4)
def _zeros(path: str | None) -> ZerosTable:
    return load_zeros(path)


def compute_point(kappa: int, cfg: ScanConfig, zeros: ZerosTable | None = None) -> tuple[ScanRow, Spectrum]:
    """Build xi, the operator and its spectrum at ``lambda = N = kappa`` and score it."""
    start = time.perf_counter()
    zeros = zeros or _zeros(cfg.zeros_path)
    basis = FourierBasis(LogWindow(float(kappa)), kappa)
    ell = basis.window.half_width
    limit = kappa * kappa if cfg.xi_method == "gram" else kappa
    xi = build_xi(ell, kappa, sieve_mangoldt(limit), cfg.tol, cfg.xi_method)
    builder = constrain_kill if cfg.builder == "kill" else constrain_perturb
    op = builder(build_generator(basis), xi.unit(), basis)
    spectrum = solve_spectrum(op, cfg.solver)
    row = score_spectrum(kappa, spectrum, zeros, cfg.max_zeros)
    solver = spectrum.solver + ("(fallback)" if spectrum.fallback else "")
    row = ScanRow(**{**asdict(row), "solver": solver, "wall_time": time.perf_counter() - start})
    return row, spectrum


def score_spectrum(kappa: int, spectrum: Spectrum, zeros: ZerosTable, max_zeros: int = 1000) -> ScanRow:
    count = min(kappa, max_zeros, zeros.count)
    srt = pair_and_score(spectrum, zeros, PairingMode.SORTED_INDEX, count, kappa, kappa)
    near = pair_and_score(spectrum, zeros, PairingMode.NEAREST_EIGENVALUE, count, kappa, kappa)
    return ScanRow(
        kappa=kappa,
        dimension=spectrum.dimension,
        count=count,
        nu0=spectrum.nu0,
        epsilon_sorted=srt.epsilon,
        epsilon_nearest=near.epsilon,
        uniform_sorted=srt.uniform,
        uniform_nearest=near.uniform,
        bound=lower_bound(kappa),
        product=near.uniform * math.log(kappa),
        solver=spectrum.solver,
    )


def run_point(kappa: int, cfg: ScanConfig, zeros: ZerosTable | None = None) -> ScanRow:
    return compute_point(kappa, cfg, zeros)[0]


def local_extrema(
    kappa_center: int,
    radius: int,
    cfg: ScanConfig | None = None,
    evaluate: Callable[[int], float] | None = None,
) -> tuple[int, float, int, float]:
    """Arg-min and arg-max of the uniform error over ``centre +- radius``.

    Ties go to the smaller kappa. ``evaluate`` overrides the error function.
    """
    if radius < 0:
        raise ValidationError(f"radius must be >= 0, got {radius}")
    if evaluate is None:
        if cfg is None:
            raise ValidationError("need a ScanConfig or an evaluate callable")
        name = cfg.uniform_field()
        evaluate = lambda k: getattr(run_point(k, cfg), name)  # noqa: E731
    ks = range(max(2, kappa_center - radius), kappa_center + radius + 1)
    values = [(k, float(evaluate(k))) for k in ks]
    return _extrema(values)


def _extrema(values: list[tuple[int, float]]) -> tuple[int, float, int, float]:
    values = sorted(values)
    kmin, emin = values[0]
    kmax, emax = values[0]
    for k, e in values[1:]:
        if e < emin:
            kmin, emin = k, e
        if e > emax:
            kmax, emax = k, e
    return kmin, emin, kmax, emax


# ---------------------------------------------------------------------------
# Sweep driver
# ---------------------------------------------------------------------------


SWEEP_EXTRA = ["kappa_min", "E_min", "kappa_max", "E_max"]


def _point_job(kappa: int, cfg: ScanConfig):
    try:
        row, spectrum = compute_point(kappa, cfg)
        return kappa, row, (spectrum.eigenvalues if cfg.dump_spectra else None), None
    except ZetaSpecError as exc:
        return kappa, None, None, f"{type(exc).__name__}: {exc}"


def _read_points(path: Path) -> dict[int, ScanRow]:
    if not path.exists():
        return {}
    done = {}
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            try:
                row = ScanRow.from_csv(rec)
            except (KeyError, ValueError, TypeError):
                continue  # a torn final line from an interrupted run
            done[row.kappa] = row
    return done


def _write_rows(path: Path, header: list[str], rows: list[list[str]]) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    tmp.replace(path)


def write_spectrum_csv(target, eigenvalues) -> None:
    """Spectrum dump to a path or open file; ``repr`` keeps every bit so rescoring is exact."""
    if hasattr(target, "write"):
        w = csv.writer(target, lineterminator="\n")
        w.writerow(["index", "eigenvalue"])
        n = (len(eigenvalues) - 1) // 2
        for i, v in enumerate(eigenvalues):
            w.writerow([i - n, repr(float(v))])
        return
    with open(target, "w", newline="") as fh:
        write_spectrum_csv(fh, eigenvalues)


def read_spectrum_csv(path) -> Spectrum:
    with open(path, newline="") as fh:
        vals = [float(rec["eigenvalue"]) for rec in csv.DictReader(fh)]
    return Spectrum(np.array(vals), "dump")


@dataclass
class SweepResult:
    csv_path: Path
    points_path: Path
    figure_paths: list[Path]
    rows: list[dict]
    failures: dict[int, str]
    fit_constant: float | None


def sweep(cfg: ScanConfig, limit_points: int | None = None) -> SweepResult:
    """Run (or resume) a sweep and write CSVs and both figures.

    ``limit_points`` stops after that many new points, leaving a resumable
    partial state; used to exercise resumption.
    """
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep_meta.json").write_text(json.dumps(asdict(cfg), indent=2, sort_keys=True) + "\n")
    points_path = out / "points.csv"
    done = _read_points(points_path)
    # rewrite before appending so a torn final line cannot merge with the next row
    _write_rows(points_path, ScanRow.header(), [done[k].as_csv() for k in sorted(done)])
    spectra_dir = out / "spectra"
    if cfg.dump_spectra:
        spectra_dir.mkdir(exist_ok=True)

    wanted = sorted({k for c in cfg.centres() for k in cfg.window(c)})
    todo = [k for k in wanted if k not in done]
    if limit_points is not None:
        todo = todo[:limit_points]
    failures: dict[int, str] = {}

    def sink(kappa, row, eigenvalues, error):
        if error is not None:
            failures[kappa] = error
            log.warning("kappa=%d failed: %s", kappa, error)
            with open(out / "failures.log", "a") as fh:
                fh.write(f"{kappa}\t{error}\n")
            return
        text = row.as_csv()
        # keep the rounded form so fresh and resumed runs see identical values
        done[kappa] = ScanRow.from_csv(dict(zip(ScanRow.header(), text)))
        with open(points_path, "a", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerow(text)
        if eigenvalues is not None:
            write_spectrum_csv(spectra_dir / f"kappa_{kappa:05d}.csv", eigenvalues)
        log.info("kappa=%d done in %.2fs", kappa, row.wall_time)

    if cfg.workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [pool.submit(_point_job, k, cfg) for k in todo]
            for fut in as_completed(futures):
                sink(*fut.result())
    else:
        for k in todo:
            sink(*_point_job(k, cfg))

    if limit_points is not None and any(k not in done and k not in failures for k in wanted):
        return SweepResult(out / "sweep.csv", points_path, [], [], failures, None)

    # canonical, kappa-ordered sink
    _write_rows(points_path, ScanRow.header(), [done[k].as_csv() for k in sorted(done)])

    field_name = cfg.uniform_field()
    merged = []
    for c in cfg.centres():
        if c not in done:
            continue
        vals = [(k, getattr(done[k], field_name)) for k in cfg.window(c) if k in done]
        kmin, emin, kmax, emax = _extrema(vals)
        merged.append(done[c].as_csv() + [str(kmin), fmt(emin), str(kmax), fmt(emax)])
    csv_path = out / "sweep.csv"
    _write_rows(csv_path, ScanRow.header() + SWEEP_EXTRA, merged)

    figures = []
    fit = None
    rows = [dict(zip(ScanRow.header() + SWEEP_EXTRA, r)) for r in merged]
    if rows:
        kap = [int(r["kappa"]) for r in rows]
        fit = plot_error_envelope(
            kap,
            [float(r["E_min"]) for r in rows],
            [float(r["E_max"]) for r in rows],
            out / "uniform_error.svg",
            title=f"local extrema of the uniform error (radius {cfg.scan_radius})",
        )
        figures.append(out / "uniform_error.svg")
        last = kap[-1]
        _, spectrum = compute_point(last, cfg)
        zeros = _zeros(cfg.zeros_path)
        count = min(last, cfg.max_zeros, zeros.count)
        gam = zeros.ordinates[:count]
        lo_idx = max(0, count - 25)
        # half-spacing margins keep exactly the compared zeros in view
        below = 0.5 * (gam[lo_idx] - gam[lo_idx - 1]) if lo_idx > 0 else 1.0
        above = 0.5 * (gam[-1] - gam[-2]) if count > 1 else 1.0
        interval = (gam[lo_idx] - below, gam[-1] + above)
        plot_rug(
            zeros.ordinates[:count],
            spectrum.eigenvalues,
            interval,
            out / "rug.svg",
            title=f"zeros (upper) and eigenvalues (lower), κ = {last}",
        )
        figures.append(out / "rug.svg")
    return SweepResult(csv_path, points_path, figures, rows, failures, fit)
