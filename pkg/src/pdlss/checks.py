"""Deterministic verification battery: exact-solution residuals, time-step order, special-function values."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from . import oracle
from .pde import SolverParams, solve
from .spectral import make_grid


@dataclass
class Check:
    name: str
    value: float
    target: Optional[float]
    low: float
    high: float

    @property
    def passed(self) -> bool:
        return bool(self.low <= self.value <= self.high)

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"{verdict} {self.name}: {self.value:.6g} (allowed [{self.low:.6g}, {self.high:.6g}])"

    def as_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def below(name: str, value: float, limit: float) -> Check:
    return Check(name, float(value), None, -math.inf, limit)


def around(name: str, value: float, target: float, tol: float) -> Check:
    return Check(name, float(value), target, target - tol, target + tol)


# -- exact solutions --------------------------------------------------------------

def sin_wave_residual() -> float:
    p = oracle.Coefficients(K=0.7, L=0.0)
    grid = make_grid(math.pi, 6)
    sol = oracle.ExactSolution("sin_wave", p)
    oracle.check_period(sol, grid)
    return oracle.v_residual(oracle.sampled_field(sol, grid), 0.5, p)


def airy_residual(t: float = 1.0) -> float:
    """Windowed residual of the Airy profile with ``K < 0``, ``L > 0``."""
    p = SolverParams(mu=-1.0, C=0.2, eps=0.1)
    grid = make_grid(40.0, 10)
    sol = oracle.ExactSolution("airy_profile", p)
    res, _ = oracle.windowed_airy_residual(sol, grid, t, -30.0, 30.0, 8.0)
    return res


def w_identity_residual() -> float:
    p = SolverParams(mu=1.0, C=0.2, eps=0.1)
    grid = make_grid(math.pi, 7)
    return oracle.w_residual_identity_check(grid.sample(lambda x: 2.0 + np.sin(x)), p)


# -- time-step order ----------------------------------------------------------------

ORDER_STEPS = (0.01, 0.005, 0.0025)


def rk4_errors(steps=ORDER_STEPS, t_max: float = 1.0, refine: int = 16) -> tuple[list, float]:
    """Errors against a ``h / refine`` reference on a smooth periodic problem, and the fitted order."""
    grid = make_grid(math.pi, 4)
    w0 = grid.sample(lambda x: (2.0 + np.sin(x)) ** 2)
    base = SolverParams(mu=1.0, C=0.2, eps=0.1, t_max=t_max)

    def final(h):
        n = int(round(t_max / h))
        with warnings.catch_warnings():
            # periodic data never decays at the edge
            warnings.simplefilter("ignore", RuntimeWarning)
            traj = solve(w0, base.with_(h=h), snapshot_stride=n, diag_stride=n, check_initial=False)
        return traj.final_w

    ref = final(min(steps) / refine)
    errs = [float(np.max(np.abs(final(h) - ref))) for h in steps]
    slope = float(np.polyfit(np.log(steps), np.log(errs), 1)[0])
    return errs, slope


# -- special functions ----------------------------------------------------------------

def special_values() -> dict:
    from .special import default_goe, hastings_mcleod

    hm = hastings_mcleod()
    gdt = default_goe()
    return {"q0": float(hm(0.0)), "mass": gdt.total_mass, "mean": gdt.mean, "variance": gdt.variance}


def exact_battery(include_order: bool = True) -> list[Check]:
    checks = [
        below("sin traveling wave residual", sin_wave_residual(), 1e-6),
        below("Airy profile residual (K<0, L>0)", airy_residual(), 1e-5),
        below("w = v^2 residual identity, v = 2 + sin x", w_identity_residual(), 1e-8),
    ]
    if include_order:
        _, slope = rk4_errors()
        checks.append(around("RK4 self-convergence order", slope, 4.0, 0.3))
    sv = special_values()
    checks += [
        around("Hastings-McLeod q(0)", sv["q0"], 0.3670615, 1e-6),
        around("integral of the GOE density", sv["mass"], 1.0, 1e-8),
        around("GOE mean", sv["mean"], -1.2065, 5e-4),
        around("GOE variance", sv["variance"], 1.6078, 5e-4),
    ]
    return checks
