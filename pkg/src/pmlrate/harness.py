"""Sweep experiments, decay-rate fits, and figure-table reproduction.

A sweep varies one of the three decay drivers (wavenumber, layer angle,
truncation radius) over a base configuration, measures errors with the
solver module, and fits log(rel_H1) against the axis value.  The fitted
slope is then judged against the rate module's prediction: one-sided for
the scattering problems (the estimate is an upper bound), two-sided for
the interval problem whose closed form makes the bound an identity.

Rows may be computed concurrently; set PML_THREADS to a worker count
(0 = all cores, unset = sequential).  Ordering and output bytes do not
depend on the worker count.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .rate import integral_phi, _phi_array
from .scaling import PmlProfile, ScalingFn, eval_f, eval_f_prime
from .solver import (
    ErrorReport,
    ScatteringConfig,
    predicted_sup_error,
    scatter_error_report,
    solve_1d_closed_form,
    sup_error_1d,
)

__all__ = [
    "CSV_HEADER",
    "FigureTable",
    "FitResult",
    "Sweep1D",
    "SweepAborted",
    "SweepRow",
    "SweepSpec",
    "fit_decay_rate",
    "reproduce_figure_phi",
    "rows_to_csv",
    "rows_to_json",
    "run_sweep",
    "write_rows",
]

# Errors at or below 10x this floor are unobservable in double precision
# and are excluded from fits.
FLOOR = 1e-12
FIT_FLOOR = 10.0 * FLOOR

CSV_HEADER = "axis,value,rel_L2,rel_H1,abs_H1,predicted_bound,ratio,flag"

_AXES = ("k", "theta", "R_tr")


@dataclass(frozen=True)
class Sweep1D:
    """Closed-form interval experiment: sup error on the unscaled window."""

    profile: PmlProfile
    k: float
    R_tr: float
    bc_value: complex = 1.0

    def __post_init__(self):
        if not self.k > 0.0:
            raise ValueError(f"need k > 0, got {self.k}")
        if not self.R_tr > 0.0:
            raise ValueError(f"need R_tr > 0, got {self.R_tr}")
        if self.bc_value == 0.0:
            raise ValueError("bc_value must be nonzero")


@dataclass(frozen=True)
class SweepSpec:
    base: ScatteringConfig | Sweep1D
    axis: str
    values: tuple
    eta: float = 0.1
    Lambda: float = 0.0

    def __post_init__(self):
        if not isinstance(self.base, (ScatteringConfig, Sweep1D)):
            raise ValueError("base must be a ScatteringConfig or Sweep1D")
        if self.axis not in _AXES:
            raise ValueError(f"axis must be one of {_AXES}, got {self.axis!r}")
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if len(vals) < 3:
            raise ValueError(f"need at least 3 axis values, got {len(vals)}")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("axis values must be strictly increasing")
        if not 0.0 <= self.eta < 2.0:
            raise ValueError("eta must lie in [0, 2)")
        if self.Lambda < 0.0:
            raise ValueError("Lambda must be nonnegative")

    @property
    def is_1d(self) -> bool:
        return isinstance(self.base, Sweep1D)


@dataclass(frozen=True)
class SweepRow:
    axis: str
    value: float
    report: ErrorReport
    flag: str


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    residual_rms: float
    predicted_slope: float
    verdict: str  # "pass" | "fail" | "inconclusive"


class SweepAborted(RuntimeError):
    """A row failed; carries the contiguous prefix of completed rows."""

    def __init__(self, completed, value, cause):
        super().__init__(
            f"sweep aborted at axis value {value}: {cause}")
        self.completed = tuple(completed)
        self.value = value


def _sweep_workers() -> int:
    raw = os.environ.get("PML_THREADS", "").strip()
    if not raw:
        return 1
    n = int(raw)
    if n < 0:
        raise ValueError(f"PML_THREADS must be >= 0, got {n}")
    return os.cpu_count() or 1 if n == 0 else n


def _flag_for(report: ErrorReport) -> str:
    if not math.isfinite(report.rel_H1):
        return "undefined"
    if report.rel_H1 <= FIT_FLOOR:
        return "floor"
    return "ok"


def _run_value_1d(spec: SweepSpec, value: float) -> SweepRow:
    base = spec.base
    k, profile, R_tr = base.k, base.profile, base.R_tr
    if spec.axis == "k":
        k = value
    elif spec.axis == "theta":
        profile = PmlProfile(profile.scaling, value)
    else:
        R_tr = value
    sol = solve_1d_closed_form(k, profile, R_tr, base.bc_value)
    sup = sup_error_1d(sol)
    bound = predicted_sup_error(k, profile, R_tr, 1.0)  # 2q, bc-normalized
    rel = sup / abs(base.bc_value)
    ratio = rel / bound if bound > 0.0 else math.inf
    report = ErrorReport(
        abs_L2=sup, abs_H1=sup, rel_L2=rel, rel_H1=rel,
        predicted_bound=bound, ratio=ratio,
    )
    return SweepRow(spec.axis, value, report, _flag_for(report))


def _run_value_scatter(spec: SweepSpec, value: float) -> SweepRow:
    cfg = spec.base
    if spec.axis == "k":
        cfg = replace(cfg, k=value)
    elif spec.axis == "theta":
        cfg = replace(cfg, profile=PmlProfile(cfg.profile.scaling, value))
    else:
        cfg = replace(cfg, R_tr=value)
    report = scatter_error_report(cfg, eta=spec.eta, Lambda=spec.Lambda)
    return SweepRow(spec.axis, value, report, _flag_for(report))


def run_sweep(spec: SweepSpec) -> tuple[SweepRow, ...]:
    """All rows in axis order; any row failure raises SweepAborted with
    the completed prefix attached."""
    work = _run_value_1d if spec.is_1d else _run_value_scatter
    workers = _sweep_workers()
    if workers == 1:
        rows = []
        for v in spec.values:
            try:
                rows.append(work(spec, v))
            except Exception as exc:
                raise SweepAborted(rows, v, exc) from exc
        return tuple(rows)

    outcomes: list = [None] * len(spec.values)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(work, spec, v) for v in spec.values]
        for i, fut in enumerate(futures):
            try:
                outcomes[i] = (True, fut.result())
            except Exception as exc:
                outcomes[i] = (False, exc)
    rows = []
    for (ok, payload), v in zip(outcomes, spec.values):
        if not ok:
            raise SweepAborted(rows, v, payload) from payload
        rows.append(payload)
    return tuple(rows)


def _predicted_slope(spec: SweepSpec) -> float:
    if spec.axis != "k":
        return math.nan
    if spec.is_1d:
        return -2.0 * spec.base.profile.f_theta(spec.base.R_tr)
    cfg = spec.base
    I = integral_phi(cfg.profile, cfg.d, cfg.profile.scaling.R1, cfg.R_tr)
    return -((2.0 - spec.eta) * I - 3.0 * spec.Lambda)


def fit_decay_rate(rows, spec: SweepSpec, tol_slope: float = 0.15) -> FitResult:
    """Least-squares slope of log(rel_H1) over the rows above the floor.

    Verdicts: on the k axis a scattering fit passes when the slope is at
    least as steep as (1 - tol_slope) times the predicted decay, and an
    interval fit must land within 2% of the closed-form rate.  Other axes
    (and fits with fewer than 3 usable rows) are inconclusive.
    """
    if not 0.0 <= tol_slope < 1.0:
        raise ValueError("tol_slope must lie in [0, 1)")
    predicted = _predicted_slope(spec)
    pts = [
        (row.value, row.report.rel_H1)
        for row in rows
        if math.isfinite(row.report.rel_H1) and row.report.rel_H1 > FIT_FLOOR
    ]
    if len(pts) < 3:
        return FitResult(math.nan, math.nan, math.nan, predicted, "inconclusive")
    x = np.array([p[0] for p in pts])
    y = np.log(np.array([p[1] for p in pts]))
    slope, intercept = np.polyfit(x, y, 1)
    rms = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    if spec.axis != "k":
        verdict = "inconclusive"
    elif spec.is_1d:
        verdict = "pass" if abs(slope - predicted) <= 0.02 * abs(predicted) else "fail"
    else:
        cfg = spec.base
        I = integral_phi(cfg.profile, cfg.d, cfg.profile.scaling.R1, cfg.R_tr)
        threshold = -(2.0 - spec.eta) * I * (1.0 - tol_slope)
        verdict = "pass" if slope <= threshold else "fail"
    return FitResult(float(slope), float(intercept), rms, predicted, verdict)


# ---------------------------------------------------------------------------
# Delimited output


def rows_to_csv(rows) -> str:
    lines = [CSV_HEADER]
    for row in rows:
        rep = row.report
        lines.append(
            f"{row.axis},{row.value!r},{rep.rel_L2!r},{rep.rel_H1!r},"
            f"{rep.abs_H1!r},{rep.predicted_bound!r},{rep.ratio!r},{row.flag}"
        )
    return "\n".join(lines) + "\n"


def rows_to_json(rows) -> str:
    payload = [
        {
            "axis": row.axis,
            "value": row.value,
            "rel_L2": row.report.rel_L2,
            "rel_H1": row.report.rel_H1,
            "abs_H1": row.report.abs_H1,
            "predicted_bound": row.report.predicted_bound,
            "ratio": row.report.ratio,
            "flag": row.flag,
        }
        for row in rows
    ]
    return json.dumps({"rows": payload}, indent=2) + "\n"


def write_rows(rows, path, fmt: str = "csv") -> None:
    if fmt not in ("csv", "json"):
        raise ValueError(f"format must be csv or json, got {fmt!r}")
    text = rows_to_csv(rows) if fmt == "csv" else rows_to_json(rows)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# Figure tables


@dataclass(frozen=True)
class FigureTable:
    columns: tuple
    data: np.ndarray

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.columns.index(name)]


def reproduce_figure_phi(
    scaling: ScalingFn,
    thetas,
    r_range,
    samples: int = 400,
) -> FigureTable:
    """Profile shape and normalized decay-rate columns for replotting.

    Columns: r, f, f', then per angle phi/tan(theta) and its running
    integral from R1 (also normalized), named with the angle embedded.
    The r range must cover [R1, R1 + 3].
    """
    lo, hi = (float(r_range[0]), float(r_range[1]))
    R1 = scaling.R1
    if lo > R1 or hi < R1 + 3.0:
        raise ValueError(
            f"r range [{lo}, {hi}] must cover [R1, R1 + 3] = [{R1}, {R1 + 3.0}]"
        )
    thetas = tuple(float(t) for t in thetas)
    if not thetas:
        raise ValueError("need at least one angle")
    if samples < 2:
        raise ValueError("need at least 2 samples")
    r = np.linspace(lo, hi, samples)
    cols = [r, np.asarray(eval_f(scaling, r)), np.asarray(eval_f_prime(scaling, r))]
    names = ["r", "f", "f_prime"]
    for th in thetas:
        prof = PmlProfile(scaling, th)
        tan = math.tan(prof.theta)
        cols.append(_phi_array(prof, 2, r) / tan)
        names.append(f"phi_over_tan_theta={th:.12g}")
        cum = np.zeros_like(r)
        total = 0.0
        for i in range(1, r.size):
            a, b = r[i - 1], r[i]
            if b <= R1:
                cum[i] = 0.0
                continue
            # tight per-piece tolerance: the running sum must stay well
            # inside the 1e-8 agreement windows downstream
            total += integral_phi(prof, 2, max(a, R1), b, tol=1e-12)
            cum[i] = total
        cols.append(cum / tan)
        names.append(f"int_phi_over_tan_theta={th:.12g}")
    return FigureTable(tuple(names), np.column_stack(cols))
