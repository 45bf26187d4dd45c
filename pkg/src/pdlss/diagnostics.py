"""Moments, normalisation, Fisher information, Lyapunov monitors and power-law fits.

Conventions
-----------
* Moments use the periodic trapezoid rule, i.e. the grid sum times the
  spacing.
* The normalised density is ``x -> (sigma / a) w(sigma x + b)`` with
  ``sigma = sqrt(c - b**2)``, the standard deviation.  (Scaling by
  ``sqrt(c)`` instead would only give unit variance when ``b = 0``.)
* Fisher information is ``4 * int (d/dx sqrt(w))**2``, which equals
  ``int (w')**2 / w`` wherever ``w > 0``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DegenerateInputError, FitError
from .spectral import Grid, SampledFunction, trig_interpolate


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    a: float
    b: float
    c: float
    momentum: float
    fisher: float
    sup_dist_gauss: Optional[float] = None
    sup_dist_tw: Optional[float] = None
    clamp_count: int = 0

    @property
    def variance(self) -> float:
        return self.c - self.b * self.b

    def as_row(self) -> dict:
        row = asdict(self)
        row["variance"] = self.variance
        return row


CSV_COLUMNS = (
    "t", "a", "b", "c", "variance", "momentum", "fisher",
    "sup_dist_gauss", "sup_dist_tw", "clamp_count",
)


@dataclass(frozen=True)
class PowerLawFit:
    amplitude: float
    exponent: float
    t_min: float
    residual: float
    n_samples: int = 0

    def __call__(self, t):
        return self.amplitude * np.asarray(t, dtype=float) ** self.exponent


def standard_gaussian(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def _moments(grid: Grid, values: np.ndarray) -> tuple[float, float, float]:
    x = grid.points
    a = grid.integrate(values)
    if not a > 0.0:
        raise DegenerateInputError(f"mass must be positive, got {a}")
    b = grid.integrate(x * values) / a
    c = grid.integrate(x * x * values) / a
    return a, b, c


def trapezoid_moments(w: SampledFunction) -> tuple[float, float, float]:
    """Mass ``a``, mean ``b`` and raw second moment ``c`` of ``w``."""
    return _moments(w.grid, w.values)


def _fisher(grid: Grid, values: np.ndarray) -> float:
    v = np.sqrt(np.maximum(values, 0.0))
    dv = grid.derivative(v, 1)
    return 4.0 * grid.integrate(dv * dv)


def fisher_information(w: SampledFunction) -> float:
    """``4 * int (d/dx sqrt(w))**2 dx`` with a spectral derivative."""
    return _fisher(w.grid, w.values)


def momentum(w: SampledFunction) -> float:
    """``int sqrt(w) dx``."""
    return w.grid.integrate(np.sqrt(np.maximum(w.values, 0.0)))


def normalize_density(
    w: SampledFunction,
    target_grid: Grid,
    reflect: bool = False,
    method: str = "cubic",
) -> SampledFunction:
    """Rescale ``w`` to unit mass, zero mean and unit variance on ``target_grid``.

    Samples ``x -> (sigma / a) * w(sigma * x + b)``, or its mirror image when
    ``reflect`` is set.  ``method`` is ``"cubic"`` (spline through the
    samples, zero outside the box) or ``"trigonometric"`` (exact
    interpolant of the periodic samples, slower).
    """
    a, b, c = trapezoid_moments(w)
    var = c - b * b
    if not var > 0.0:
        raise DegenerateInputError(f"variance must be positive, got {var}")
    sigma = math.sqrt(var)
    x = target_grid.points
    if reflect:
        x = -x
    arg = sigma * x + b
    src = w.grid.points
    inside = (arg >= src[0]) & (arg <= src[-1])
    vals = np.zeros_like(arg)
    if method == "cubic":
        spline = CubicSpline(src, w.values)
        vals[inside] = spline(arg[inside])
    elif method == "trigonometric":
        vals[inside] = trig_interpolate(w, arg[inside])
    else:
        raise ValueError(f"unknown interpolation method {method!r}")
    return SampledFunction(target_grid, sigma / a * vals)


def sup_distance(f: SampledFunction, reference: Callable) -> float:
    """``max_j |f(x_j) - reference(x_j)|`` over the grid of ``f``."""
    ref = np.asarray(reference(f.grid.points), dtype=float)
    return float(np.max(np.abs(f.values - ref)))


def record(
    grid: Grid,
    t: float,
    values: np.ndarray,
    clamp_count: int = 0,
    *,
    compare_grid: Optional[Grid] = None,
    gauss: bool = False,
    tw_profile: Optional[Callable] = None,
) -> DiagnosticsRecord:
    """Compute every scalar diagnostic for one state.

    Sup distances are only computed when ``compare_grid`` is given:
    ``gauss`` requests the distance to the standard Gaussian and
    ``tw_profile`` the distance to that profile (which carries its own
    orientation; the state itself is never mirrored here).
    """
    a, b, c = _moments(grid, values)
    mom = grid.integrate(np.sqrt(np.maximum(values, 0.0)))
    fi = _fisher(grid, values)
    d_gauss = d_tw = None
    if compare_grid is not None and (gauss or tw_profile is not None):
        norm = normalize_density(SampledFunction(grid, values), compare_grid)
        if gauss:
            d_gauss = sup_distance(norm, standard_gaussian)
        if tw_profile is not None:
            d_tw = sup_distance(norm, tw_profile)
    return DiagnosticsRecord(t, a, b, c, mom, fi, d_gauss, d_tw, int(clamp_count))


# -- Lyapunov monitors -------------------------------------------------------

@dataclass(frozen=True)
class Verdict:
    name: str
    ok: bool
    worst: float
    worst_t: Optional[float]
    detail: str = ""


@dataclass
class LyapunovReport:
    verdicts: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(v.ok for v in self.verdicts)

    def __getitem__(self, name) -> Verdict:
        for v in self.verdicts:
            if v.name == name:
                return v
        raise KeyError(name)

    def summary(self) -> str:
        return "\n".join(
            f"{v.name:10s} {'ok' if v.ok else 'VIOLATED':8s} worst={v.worst:.3e} at t={v.worst_t}  {v.detail}"
            for v in self.verdicts
        )


MASS_TOL = 1e-10
STEP_TOL = 1e-9
CONST_TOL = 1e-12


def _monotone(name, ts, ys, direction, tol):
    """Worst violation of ``direction * diff(ys) >= -tol``."""
    d = direction * np.diff(ys)
    i = int(np.argmin(d))
    worst = float(-d[i]) if d[i] < 0 else 0.0
    return Verdict(name, worst <= tol, worst, float(ts[i + 1]) if worst > 0 else None,
                   "non-decreasing" if direction > 0 else "non-increasing")


def lyapunov_report(traj, mass_tol: float = MASS_TOL, step_tol: float = STEP_TOL,
                    transient: float = 1.0) -> LyapunovReport:
    """Check the conserved and monotone functionals along a trajectory.

    * mass ``int w``: conserved to ``mass_tol``;
    * momentum ``int sqrt(w)``: non-decreasing when ``L > 0``;
    * Fisher information: non-increasing when ``L > 0``;
    * mean: moves in the direction of ``sign(K)`` once ``t > transient``.

    With ``K = L = 0`` every functional must stay constant to ``1e-12``.
    """
    recs = traj.diagnostics
    if len(recs) < 3:
        raise ValueError("need at least 3 diagnostic records")
    ts = np.array([r.t for r in recs])
    a = np.array([r.a for r in recs])
    mom = np.array([r.momentum for r in recs])
    fi = np.array([r.fisher for r in recs])
    b = np.array([r.b for r in recs])
    K, L = traj.params.K, traj.params.L
    report = LyapunovReport()

    drift = np.abs(a - a[0])
    i = int(np.argmax(drift))
    report.verdicts.append(Verdict("mass", drift[i] <= mass_tol, float(drift[i]), float(ts[i]), "max |a(t)-a(0)|"))

    if K == 0.0 and L == 0.0:
        for name, ys in (("momentum", mom), ("fisher", fi), ("mean", b)):
            dev = np.abs(ys - ys[0])
            j = int(np.argmax(dev))
            report.verdicts.append(Verdict(name, dev[j] <= CONST_TOL, float(dev[j]), float(ts[j]), "constant"))
        return report

    if L > 0.0:
        report.verdicts.append(_monotone("momentum", ts, mom, +1, step_tol))
        report.verdicts.append(_monotone("fisher", ts, fi, -1, step_tol))

    late = ts > transient
    if K != 0.0 and np.count_nonzero(late) >= 2:
        tl, bl = ts[late], b[late]
        report.verdicts.append(_monotone("mean", tl, bl, 1 if K > 0 else -1, step_tol))
    elif K == 0.0:
        dev = np.abs(b - b[0])
        j = int(np.argmax(dev))
        report.verdicts.append(Verdict("mean", True, float(dev[j]), float(ts[j]), "K = 0: no drift expected"))
    return report


def power_law_fit(ts: Sequence[float], ys: Sequence[float], t_min: float = 0.0,
                  min_samples: int = 10) -> PowerLawFit:
    """Least squares fit of ``log y = log A + p log t`` over ``t > t_min``."""
    ts = np.asarray(ts, dtype=float)
    ys = np.asarray(ys, dtype=float)
    sel = ts > t_min
    if np.count_nonzero(sel) < min_samples:
        raise FitError(f"need at least {min_samples} samples with t > {t_min}, got {np.count_nonzero(sel)}")
    ts, ys = ts[sel], ys[sel]
    if np.any(ys <= 0.0) or np.any(ts <= 0.0):
        raise FitError("power-law fit needs positive t and y")
    lt, ly = np.log(ts), np.log(ys)
    slope, intercept = np.polyfit(lt, ly, 1)
    resid = ly - (intercept + slope * lt)
    return PowerLawFit(math.exp(intercept), float(slope), float(t_min),
                       float(np.sqrt(np.mean(resid**2))), int(ts.size))
