"""Initial data, recipe runners and artifact writers used by the command line."""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from . import diagnostics as diag
from .errors import ConfigurationError, FitError
from .pde import SolverParams, Trajectory, solve
from .spectral import Grid, SampledFunction, make_grid

log = logging.getLogger(__name__)

GAUSS_NORM = (2.0 * math.pi) ** -0.25


# -- initial data ---------------------------------------------------------------

def gaussian(x):
    return GAUSS_NORM * np.exp(-np.asarray(x) ** 2 / 4.0)


def skew(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore"):
        return np.exp(-x - np.exp(-x))


def mixed_gaussians(x):
    x = np.asarray(x, dtype=float)
    return GAUSS_NORM * (np.exp(-(x + 2.0) ** 2 / 4.0) + np.exp(-(x - 2.0) ** 2 / 4.0))


def tw_reflect_for(params: SolverParams) -> bool:
    """Orientation of the GOE comparison profile.

    For ``K > 0`` the long-time profile matches the mirror image of the
    GOE density (its heavy tail on the left); for ``K < 0`` the density
    itself.
    """
    return params.K > 0.0


def goe_profile(reflect: bool) -> Callable:
    from .special import default_goe, normalized_goe

    return normalized_goe(default_goe(), reflect=reflect)


def from_file(path: str) -> Callable:
    """Cubic interpolant of an ``x,w`` CSV (header optional), zero outside its range."""
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            try:
                rows.append((float(parts[0]), float(parts[1])))
            except ValueError:
                continue  # header
    if len(rows) < 4:
        raise ConfigurationError(f"{path}: need at least 4 numeric x,w rows")
    data = np.array(sorted(rows))
    spline = CubicSpline(data[:, 0], data[:, 1])

    def f(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        inside = (x >= data[0, 0]) & (x <= data[-1, 0])
        out[inside] = spline(x[inside])
        return np.maximum(out, 0.0)
    return f


def initial_data(name: str, params: SolverParams) -> Callable:
    if name == "gaussian":
        return gaussian
    if name == "skew":
        return skew
    if name == "mixed_gaussians":
        return mixed_gaussians
    if name == "tracy_widom":
        return goe_profile(tw_reflect_for(params))
    if name.startswith("file:"):
        return from_file(name[5:])
    raise ConfigurationError(f"unknown initial data {name!r}")


# -- PDE runs -------------------------------------------------------------------

@dataclass
class PdeSettings:
    params: SolverParams
    half_width: float
    exponent: int
    initial: str
    snapshot_stride: int
    diag_stride: int
    compare_half_width: float = 10.0
    compare_exponent: int = 11
    gauss: bool = True
    tw: bool = False
    tw_reflect: Optional[bool] = None
    checkpoint_every: int = 0
    fit_t_min: Optional[float] = None


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x)) if math.isfinite(x) else str(x)


def _fmt17(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def snapshot_name(t: float) -> str:
    return f"t_{t:.4f}".rstrip("0").rstrip(".") + ".csv"


def write_diagnostics(path: Path, records) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(diag.CSV_COLUMNS)
        for r in records:
            row = r.as_row()
            w.writerow([_fmt17(row[c]) for c in diag.CSV_COLUMNS])


def write_snapshot(path: Path, t: float, w: SampledFunction) -> None:
    """Columns ``x, w, w_normalized``; the last is the normalised profile at the same abscissae."""
    target = w.grid
    try:
        norm = diag.normalize_density(w, target).values
    except Exception:  # degenerate state: leave the column empty
        norm = np.full(w.grid.size, np.nan)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["x", "w", "w_normalized"])
        for x, a, b in zip(target.points, w.values, norm):
            wr.writerow([f"{x:.17g}", f"{a:.17g}", f"{b:.17g}"])


# -- checkpoints ----------------------------------------------------------------

_REC_FIELDS = ("t", "a", "b", "c", "momentum", "fisher", "sup_dist_gauss", "sup_dist_tw", "clamp_count")


def _records_to_array(records) -> np.ndarray:
    arr = np.full((len(records), len(_REC_FIELDS)), np.nan)
    for i, r in enumerate(records):
        for j, f in enumerate(_REC_FIELDS):
            v = getattr(r, f)
            if v is not None:
                arr[i, j] = v
    return arr


def _records_from_array(arr: np.ndarray) -> list:
    out = []
    for row in arr:
        vals = {}
        for j, f in enumerate(_REC_FIELDS):
            v = row[j]
            if f.startswith("sup_dist"):
                vals[f] = None if np.isnan(v) else float(v)
            elif f == "clamp_count":
                vals[f] = int(v)
            else:
                vals[f] = float(v)
        out.append(diag.DiagnosticsRecord(**vals))
    return out


def save_checkpoint(path: Path, step: int, w: np.ndarray, traj: Trajectory, config: dict) -> None:
    tmp = path.with_suffix(".tmp.npz")
    np.savez(
        tmp,
        step=np.array(step),
        w=w,
        records=_records_to_array(traj.diagnostics),
        clamp_total=np.array(traj.clamp_total),
        warnings=np.array(json.dumps(traj.warnings)),
        config=np.array(json.dumps(config, sort_keys=True)),
    )
    os.replace(tmp, path)


def load_checkpoint(path: Path) -> dict:
    with np.load(path, allow_pickle=False) as z:
        return {
            "step": int(z["step"]),
            "w": np.array(z["w"]),
            "records": _records_from_array(z["records"]),
            "clamp_total": int(z["clamp_total"]),
            "warnings": json.loads(str(z["warnings"])),
            "config": json.loads(str(z["config"])),
        }


# -- summary fits -----------------------------------------------------------------

def _fit(ts, ys, t_min) -> Optional[dict]:
    try:
        f = diag.power_law_fit(ts, ys, t_min=t_min)
    except FitError as exc:
        return {"error": str(exc)}
    return {"amplitude": f.amplitude, "exponent": f.exponent, "window": [t_min, float(ts[-1])],
            "residual": f.residual, "n_samples": f.n_samples}


def summarize(records, params: SolverParams, fit_t_min: float) -> dict:
    ts = np.array([r.t for r in records])
    out = {
        "variance": _fit(ts, np.array([r.variance for r in records]), fit_t_min),
        "fisher": _fit(ts, np.array([r.fisher for r in records]), fit_t_min),
    }
    b = np.array([r.b for r in records])
    if params.K != 0.0:
        out["mean"] = _fit(ts, np.sign(params.K) * b, fit_t_min)
    last = records[-1]
    out["final"] = {"t": last.t, "sup_dist_gauss": last.sup_dist_gauss, "sup_dist_tw": last.sup_dist_tw,
                    "mass_drift": abs(last.a - records[0].a)}
    return out


# -- driver ----------------------------------------------------------------------

@dataclass
class PdeOutcome:
    trajectory: Trajectory
    summary: dict
    output_dir: Path
    failed: bool = False
    records: list = field(default_factory=list)


def run_pde(settings: PdeSettings, output_dir: Path, config_echo: dict, *,
            resume_from: Optional[dict] = None) -> PdeOutcome:
    """Run one PDE recipe, writing diagnostics, snapshots, a checkpoint and the summary."""
    output_dir = Path(output_dir)
    (output_dir / "snapshots").mkdir(parents=True, exist_ok=True)
    p = settings.params
    grid = make_grid(settings.half_width, settings.exponent)
    compare = make_grid(settings.compare_half_width, settings.compare_exponent)
    reflect = tw_reflect_for(p) if settings.tw_reflect is None else settings.tw_reflect
    tw_profile = goe_profile(reflect) if settings.tw else None

    def diagnose(t, values, clamps):
        return diag.record(grid, t, values, clamps, compare_grid=compare, gauss=settings.gauss,
                           tw_profile=tw_profile)

    ckpt_path = output_dir / "checkpoint.npz"
    snap_dir = output_dir / "snapshots"

    def on_step(step, values, traj):
        if step % settings.snapshot_stride == 0:
            t = step * p.h
            write_snapshot(snap_dir / snapshot_name(t), t, SampledFunction(grid, values))
        if settings.checkpoint_every and step % settings.checkpoint_every == 0 and step > 0:
            save_checkpoint(ckpt_path, step, values, traj, config_echo)

    started = time.perf_counter()
    if resume_from is None:
        w0 = grid.sample(initial_data(settings.initial, p))
        start_step, prior = 0, None
    else:
        w0 = SampledFunction(grid, resume_from["w"])
        start_step, prior = resume_from["step"], resume_from
    traj = solve(w0, p, settings.snapshot_stride, settings.diag_stride, diagnose=diagnose,
                 start_step=start_step, on_step=on_step)
    if prior is not None:
        traj.diagnostics = prior["records"] + traj.diagnostics
        traj.clamp_total += prior["clamp_total"]
        traj.warnings = prior["warnings"] + traj.warnings
    runtime = time.perf_counter() - started

    write_diagnostics(output_dir / "diagnostics.csv", traj.diagnostics)
    if traj.final_w is not None:
        save_checkpoint(ckpt_path, traj.final_step, traj.final_w, traj, config_echo)
    fit_t_min = settings.fit_t_min
    if fit_t_min is None:
        fit_t_min = (0.95 if p.mu != 0.0 else 0.5) * p.t_max
    summary = {
        "fits": summarize(traj.diagnostics, p, fit_t_min) if len(traj.diagnostics) >= 2 else {},
        "runtime_seconds": runtime,
        "completed": traj.completed,
        "failure": None if traj.failure is None else {"type": type(traj.failure).__name__,
                                                      "message": str(traj.failure),
                                                      "t": getattr(traj.failure, "t", None)},
        "final_step": traj.final_step,
        "clamp_total": traj.clamp_total,
        "warnings": traj.warnings,
        "tw_reflect": reflect,
        "lyapunov": _lyapunov(traj),
        "config": config_echo,
    }
    with open(output_dir / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return PdeOutcome(traj, summary, output_dir, failed=not traj.completed, records=traj.diagnostics)


def _lyapunov(traj: Trajectory) -> dict:
    if len(traj.diagnostics) < 3:
        return {}
    rep = diag.lyapunov_report(traj)
    return {v.name: {"ok": bool(v.ok), "worst": v.worst, "worst_t": v.worst_t} for v in rep.verdicts}


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def write_json(path: Path, data) -> None:
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
