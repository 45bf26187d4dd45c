"""Division-free right-hand side, classical RK4 stepping and the solve loop.

The density ``w = v**2`` evolves by

    w_t = 2 K sqrt(w) D^3 sqrt(w) - 2 L (sqrt(w) D^4 sqrt(w) - (D^2 sqrt(w))^2)

with ``K = 4 mu C / 3`` and ``L = eps (2 C - 2 C**2)``.  Written this way
there is no division by ``w``; the only delicate operation is the square
root, which is taken after clamping round-off negatives to zero.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError, InstabilityError, PositivityError
from .spectral import Grid, SampledFunction

log = logging.getLogger(__name__)

DEFAULT_FLOOR_TOL = 1e-7
BOUNDARY_DECAY = 1e-16
BOUNDARY_WARN = 1e-8


@dataclass(frozen=True)
class SolverParams:
    """Physical constants and time-stepping controls.

    ``mu`` is the bias in ``[-1, 1]``, ``C`` the rate constant in
    ``[0, 1/4]`` and ``eps`` the expansion parameter.
    """

    mu: float
    C: float
    eps: float
    h: float = 0.0025
    t_max: float = 1.0
    floor_tol: float = DEFAULT_FLOOR_TOL

    def __post_init__(self):
        if not -1.0 <= self.mu <= 1.0:
            raise ConfigurationError(f"mu must lie in [-1, 1], got {self.mu}")
        if not 0.0 <= self.C <= 0.25:
            raise ConfigurationError(f"C must lie in [0, 1/4], got {self.C}")
        if not self.eps >= 0.0:
            raise ConfigurationError(f"eps must be non-negative, got {self.eps}")
        if not self.h > 0.0:
            raise ConfigurationError(f"time step must be positive, got {self.h}")
        if not self.t_max > 0.0:
            raise ConfigurationError(f"t_max must be positive, got {self.t_max}")
        if not self.floor_tol >= 0.0:
            raise ConfigurationError(f"floor_tol must be non-negative, got {self.floor_tol}")

    @classmethod
    def from_rates(cls, lambda_plus: float, lambda_minus: float, eps: float, **kw) -> "SolverParams":
        """Derive ``mu`` and ``C`` from the particle rates."""
        sp, sm = math.sqrt(lambda_plus), math.sqrt(lambda_minus)
        mu = (sm - sp) / (sm + sp)
        C = math.sqrt(lambda_plus * lambda_minus) / (sm + sp) ** 2
        return cls(mu=mu, C=C, eps=eps, **kw)

    @property
    def K(self) -> float:
        return 4.0 / 3.0 * self.mu * self.C

    @property
    def L(self) -> float:
        return self.eps * (2.0 * self.C - 2.0 * self.C**2)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_max / self.h))

    def with_(self, **changes) -> "SolverParams":
        return replace(self, **changes)


@dataclass
class Trajectory:
    """Snapshots and diagnostics produced by :func:`solve`."""

    params: SolverParams
    grid: Grid
    snapshots: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    clamp_total: int = 0
    failure: Optional[Exception] = None
    final_step: int = 0
    final_w: Optional[np.ndarray] = None

    @property
    def completed(self) -> bool:
        return self.failure is None

    @property
    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.snapshots])


def _check_floor(w: np.ndarray, floor_tol: float, t=None) -> None:
    wmin = float(np.min(w))
    if wmin < -floor_tol or math.isnan(wmin):
        i = int(np.argmin(w)) if not math.isnan(wmin) else int(np.flatnonzero(np.isnan(w))[0])
        if math.isnan(wmin):
            raise InstabilityError(f"NaN in density at t={t}", t=t)
        raise PositivityError(
            f"density {wmin:.3e} at index {i} is below -floor_tol={floor_tol:g} (t={t})",
            t=t, index=i, value=wmin,
        )


def rhs_array(w: np.ndarray, grid: Grid, params: SolverParams, t=None) -> np.ndarray:
    """Right-hand side on raw sample arrays; see :func:`rhs`."""
    _check_floor(w, params.floor_tol, t)
    v = np.sqrt(np.maximum(w, 0.0))
    K, L = params.K, params.L
    if L != 0.0:
        d2, d3, d4 = grid.derivatives(v, (2, 3, 4))
        out = 2.0 * K * v * d3 - 2.0 * L * (v * d4 - d2 * d2)
    elif K != 0.0:
        out = 2.0 * K * v * grid.derivative(v, 3)
    else:
        out = np.zeros_like(w)
    if not np.all(np.isfinite(out)):
        raise InstabilityError(f"non-finite right-hand side at t={t}", t=t)
    return out


def rhs(w: SampledFunction, params: SolverParams, t=None) -> SampledFunction:
    """Evaluate the division-free right-hand side at ``w``.

    Raises :class:`PositivityError` if some sample is below
    ``-params.floor_tol`` and :class:`InstabilityError` on non-finite output.
    """
    return SampledFunction(w.grid, rhs_array(w.values, w.grid, params, t))


def apply_floor_array(w: np.ndarray, floor_tol: float, t=None, conserve_mass: bool = True) -> tuple[np.ndarray, int]:
    _check_floor(w, floor_tol, t)
    neg = w < 0.0
    count = int(np.count_nonzero(neg))
    if count:
        before = float(np.sum(w))
        w = np.where(neg, 0.0, w)
        if conserve_mass:
            after = float(np.sum(w))
            if after > 0.0 and before > 0.0:
                w *= before / after
    return w, count


def apply_floor(
    w: SampledFunction, floor_tol: float = DEFAULT_FLOOR_TOL, conserve_mass: bool = True
) -> tuple[SampledFunction, int]:
    """Clamp negatives no deeper than ``floor_tol`` to zero.

    With ``conserve_mass`` the clamped samples are rescaled so the grid sum
    (hence the trapezoid mass) is unchanged; the scheme itself conserves
    mass exactly and clamping would otherwise leak it.  Returns the clamped
    samples and the number of clamped points.
    """
    values, count = apply_floor_array(w.values, floor_tol, conserve_mass=conserve_mass)
    if count:
        log.debug("clamped %d negative samples", count)
    return SampledFunction(w.grid, values), count


def rk4_step_array(w: np.ndarray, grid: Grid, params: SolverParams, t=None) -> tuple[np.ndarray, int]:
    h = params.h
    k1 = rhs_array(w, grid, params, t)
    k2 = rhs_array(w + 0.5 * h * k1, grid, params, t)
    k3 = rhs_array(w + 0.5 * h * k2, grid, params, t)
    k4 = rhs_array(w + h * k3, grid, params, t)
    new = w + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return apply_floor_array(new, params.floor_tol, t)


def rk4_step(w: SampledFunction, params: SolverParams, t=None) -> SampledFunction:
    """One classical fourth-order Runge-Kutta step of size ``params.h``.

    The update uses the weights ``(h/6)(k1 + 2 k2 + 2 k3 + k4)``.
    """
    values, _ = rk4_step_array(w.values, w.grid, params, t)
    return SampledFunction(w.grid, values)


DiagnoseFn = Callable[[float, np.ndarray, int], object]


def solve(
    w0: SampledFunction,
    params: SolverParams,
    snapshot_stride: int = 400,
    diag_stride: int = 40,
    *,
    diagnose: Optional[DiagnoseFn] = None,
    start_step: int = 0,
    on_step: Optional[Callable[[int, np.ndarray, Trajectory], None]] = None,
    check_initial: bool = True,
) -> Trajectory:
    """Integrate from ``t = start_step * h`` to ``params.t_max``.

    Snapshots are recorded every ``snapshot_stride`` steps and diagnostics
    (via ``diagnose(t, w, clamp_count)``, default
    :func:`pdlss.diagnostics.record`) every ``diag_stride`` steps, both
    including the initial state.  On instability or positivity failure the
    partial trajectory is returned with ``failure`` set.

    ``on_step(step, w, traj)`` is called after each diagnostics step; it is
    the hook used for checkpointing.
    """
    from . import diagnostics  # deferred: diagnostics imports this module

    grid = w0.grid
    if snapshot_stride < 1 or diag_stride < 1:
        raise ConfigurationError("strides must be positive integers")
    w = np.array(w0.values, dtype=float)
    _check_floor(w, params.floor_tol, start_step * params.h)
    if check_initial and start_step == 0:
        edge = max(w[0], w[-1])
        if edge > BOUNDARY_DECAY:
            raise ConfigurationError(
                f"initial data is {edge:.2e} at the box edge; enlarge the half width "
                f"so it is below {BOUNDARY_DECAY:g}"
            )
    if diagnose is None:
        def diagnose(t, values, clamps):
            return diagnostics.record(grid, t, values, clamp_count=clamps)

    traj = Trajectory(params=params, grid=grid)
    n_steps = params.n_steps
    h = params.h
    warned = False
    clamps_since = 0

    def observe(step, values):
        nonlocal warned, clamps_since
        t = step * h
        if step % snapshot_stride == 0:
            traj.snapshots.append((t, SampledFunction(grid, values.copy())))
        if step % diag_stride == 0:
            traj.diagnostics.append(diagnose(t, values, clamps_since))
            clamps_since = 0
            edge = max(values[0], values[-1])
            if edge > BOUNDARY_WARN and not warned:
                msg = f"solution reached {edge:.2e} at the box edge at t={t:g}"
                traj.warnings.append({"t": t, "kind": "boundary_growth", "value": float(edge)})
                warnings.warn(msg, RuntimeWarning, stacklevel=3)
                warned = True
            if on_step is not None:
                on_step(step, values, traj)

    if start_step == 0:
        observe(0, w)
    step = start_step
    try:
        while step < n_steps:
            w, clamped = rk4_step_array(w, grid, params, step * h)
            step += 1
            if clamped:
                clamps_since += clamped
                traj.clamp_total += clamped
            if step % snapshot_stride == 0 or step % diag_stride == 0:
                observe(step, w)
    except (InstabilityError, PositivityError) as exc:
        if exc.t is None:
            exc.t = step * h
        log.warning("solve aborted at t=%g: %s", step * h, exc)
        traj.failure = exc
    traj.final_step = step
    traj.final_w = w
    if traj.clamp_total:
        log.info("positivity floor clamped %d samples in total", traj.clamp_total)
    return traj
