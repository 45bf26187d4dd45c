"""Closed-form solutions of the ``v`` equation and residual evaluators.

In terms of ``v = sqrt(w)`` the flow reads

    v_t - K v_xxx = -L (v_xxxx - v_xx**2 / v).

Known exact solutions (``K``, ``L`` from the solver parameters):

* ``sin_wave``: ``sin(x - K t)``, valid for ``L = 0``;
* ``sinh_wave``: ``sinh(x + K t)``, valid for all ``L`` since
  ``v'''' = v''**2 / v`` for ``sinh``;
* ``airy_profile``: ``t**(-1/3) Ai(z)``, ``z = (x + (2L / 3K) log t) / (-3 K t)**(1/3)``;
* ``airy_second_kind_profile``: the same with ``Bi``.

The cube root in the Airy profiles is the real one, so both signs of ``K``
are allowed (``K < 0`` gives a positive scale, ``K > 0`` its mirror
image).  Residuals are evaluated with the same spectral operators as the
solver; points where ``|v|`` is small are excluded rather than regularised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import special as sps

from .errors import ConfigurationError, ContractViolation, DomainError
from .spectral import Grid, SampledFunction

KINDS = ("sin_wave", "sinh_wave", "airy_profile", "airy_second_kind_profile")
V_MIN = 1e-6


@dataclass(frozen=True)
class Coefficients:
    """Bare ``K`` and ``L`` for callers without a full parameter set."""

    K: float
    L: float


@dataclass(frozen=True)
class ExactSolution:
    kind: str
    params: object  # anything with attributes K and L

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown exact solution {self.kind!r}; choose from {KINDS}")
        if self.kind.startswith("airy") and self.params.K == 0.0:
            raise ConfigurationError("Airy profiles need K != 0")

    @property
    def K(self) -> float:
        return float(self.params.K)

    @property
    def L(self) -> float:
        return float(self.params.L)

    def __call__(self, t: float, x):
        return evaluate_exact(self, t, x)

    def derivatives(self, t: float, x) -> tuple:
        """Analytic ``(v, v_t, v_x, v_xx, v_xxx, v_xxxx)`` for the trigonometric kinds."""
        x = np.asarray(x, dtype=float)
        K = self.K
        if self.kind == "sin_wave":
            a = x - K * t
            s, c = np.sin(a), np.cos(a)
            return s, -K * c, c, -s, -c, s
        if self.kind == "sinh_wave":
            a = x + K * t
            s, c = np.sinh(a), np.cosh(a)
            return s, K * c, c, s, c, s
        raise ContractViolation("analytic derivatives only for sin_wave and sinh_wave")


def _airy_argument(sol: ExactSolution, t: float, x):
    K, L = sol.K, sol.L
    scale = np.cbrt(-3.0 * K * t)
    return (np.asarray(x, dtype=float) + (2.0 * L / (3.0 * K)) * math.log(t)) / scale


def evaluate_exact(sol: ExactSolution, t: float, x):
    """Value of the exact solution ``v(t, x)``."""
    if sol.kind == "sin_wave":
        return np.sin(np.asarray(x, dtype=float) - sol.K * t)
    if sol.kind == "sinh_wave":
        return np.sinh(np.asarray(x, dtype=float) + sol.K * t)
    if not t > 0.0:
        raise DomainError(f"Airy profiles are defined for t > 0, got t={t}", value=t)
    z = _airy_argument(sol, t, x)
    ai, _, bi, _ = sps.airy(z)
    f = ai if sol.kind == "airy_profile" else bi
    return t ** (-1.0 / 3.0) * f


def check_period(sol: ExactSolution, grid: Grid) -> None:
    """The trigonometric kinds need the box period to be a multiple of ``2 pi``."""
    if sol.kind == "sin_wave":
        ratio = grid.period / (2.0 * math.pi)
        if abs(ratio - round(ratio)) > 1e-12 or round(ratio) < 1:
            raise ConfigurationError(f"grid period {grid.period} is not a multiple of 2 pi")
    elif sol.kind == "sinh_wave":
        raise ConfigurationError("sinh_wave is not periodic; use fd_v_residual on a window")


# -- residuals --------------------------------------------------------------------

FieldFn = Callable[[float], SampledFunction]


def _spatial(v: np.ndarray, grid: Grid, K: float, L: float, admitted: np.ndarray) -> np.ndarray:
    """``K v_xxx - L (v_xxxx - v_xx**2 / v)`` at the admitted points."""
    d2, d3, d4 = grid.derivatives(v, (2, 3, 4))
    out = K * d3[admitted]
    if L != 0.0:
        out = out - L * (d4[admitted] - d2[admitted] ** 2 / v[admitted])
    return out


def _admitted(v: np.ndarray, L: float, v_min: float, restrict: bool, mask) -> np.ndarray:
    admitted = np.ones(v.size, dtype=bool) if mask is None else np.asarray(mask, dtype=bool).copy()
    if L != 0.0:
        small = np.abs(v) <= v_min
        if np.any(small & admitted):
            if not restrict:
                i = int(np.flatnonzero(small & admitted)[0])
                raise DomainError(
                    f"|v| = {abs(v[i]):.2e} <= {v_min:g} at index {i}; pass restrict=True to skip such points",
                    index=i, value=float(v[i]),
                )
            admitted &= ~small
    if not np.any(admitted):
        raise DomainError("no admitted points left for the residual")
    return admitted


def v_residual(v_field: FieldFn, t: float, params, dt: float = 1e-3, *, v_min: float = V_MIN,
               restrict: bool = False, mask: Optional[np.ndarray] = None) -> float:
    """Sup of ``|v_t - K v_xxx + L (v_xxxx - v_xx**2 / v)|`` at time ``t``.

    ``v_field(s)`` returns the field at time ``s``; ``v_t`` uses the
    fourth-order central difference over ``t - 2dt .. t + 2dt``.  ``mask``
    limits the sup to a subset of grid points and ``restrict`` drops the
    points with ``|v| <= v_min`` (otherwise they raise when ``L != 0``).
    """
    K, L = float(params.K), float(params.L)
    slices = [v_field(t + j * dt) for j in (-2, -1, 0, 1, 2)]
    grid = slices[2].grid
    v = slices[2].values
    admitted = _admitted(v, L, v_min, restrict, mask)
    vt = (slices[0].values - 8.0 * slices[1].values + 8.0 * slices[3].values - slices[4].values) / (12.0 * dt)
    res = vt[admitted] - _spatial(v, grid, K, L, admitted)
    return float(np.max(np.abs(res)))


def sampled_field(sol: ExactSolution, grid: Grid, window: Optional[np.ndarray] = None) -> FieldFn:
    """``t -> samples of sol at t`` (optionally multiplied by a fixed window)."""
    def field(t):
        vals = evaluate_exact(sol, t, grid.points)
        if window is not None:
            vals = vals * window
        return SampledFunction(grid, vals)
    return field


def smooth_window(x: np.ndarray, left: float, right: float, ramp: float) -> np.ndarray:
    """C-infinity plateau: 1 on ``[left + ramp, right - ramp]``, 0 outside ``[left, right]``."""
    def step(s):
        s = np.clip(s, 0.0, 1.0)
        with np.errstate(divide="ignore", over="ignore"):
            a = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
            b = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1.0 - s, 1.0)), 0.0)
        return a / (a + b)
    return step((x - left) / ramp) * step((right - x) / ramp)


def windowed_airy_residual(sol: ExactSolution, grid: Grid, t: float, left: float, right: float,
                           ramp: float, *, threshold: float = 1e-3, dt: float = 1e-3) -> tuple[float, int]:
    """Residual of an Airy profile cut off smoothly to fit a periodic box.

    The profile oscillates without decaying on one side, so it is
    multiplied by a smooth plateau window.  The sup is taken over points
    inside the plateau with ``|v| > threshold``.  Returns the residual and
    the number of admitted points.
    """
    win = smooth_window(grid.points, left, right, ramp)
    field = sampled_field(sol, grid, win)
    v = field(t).values
    mask = (win == 1.0) & (np.abs(v) > threshold)
    return v_residual(field, t, sol.params, dt, restrict=True, mask=mask), int(mask.sum())


def _w_spatial(w: np.ndarray, grid: Grid, K: float, L: float) -> np.ndarray:
    """Spatial part of the ``w`` equation written through ``w`` itself:

    ``w_t = -K (w''' - 3/4 ((w')**2 / w)') + L (-w'''' + ((w')**2 / w)'')``.
    """
    d1, d3, d4 = grid.derivatives(w, (1, 3, 4))
    g = d1 * d1 / w
    g1, g2 = grid.derivatives(g, (1, 2))
    return K * (d3 - 0.75 * g1) - L * (d4 - g2)


def w_residual_identity_check(v: SampledFunction, params) -> float:
    """Sup of ``S_w(v**2) - 2 v S_v(v)`` where ``S`` are the spatial operators.

    ``S_v(v) = K v''' - L (v'''' - v''**2 / v)`` and ``S_w`` is the same flow
    written for ``w = v**2``.  Since ``(v**2)_t = 2 v v_t`` the two
    residuals differ by exactly this quantity, which must vanish.
    """
    vals = v.values
    if np.min(vals) <= V_MIN:
        i = int(np.argmin(vals))
        raise DomainError(f"v must exceed {V_MIN:g}; found {vals[i]:.2e} at index {i}",
                          index=i, value=float(vals[i]))
    K, L = float(params.K), float(params.L)
    grid = v.grid
    sv = _spatial(vals, grid, K, L, np.ones(vals.size, dtype=bool))
    sw = _w_spatial(vals * vals, grid, K, L)
    return float(np.max(np.abs(sw - 2.0 * vals * sv)))


# -- finite-difference residual for non-periodic fields -----------------------------

_D2 = (np.array([-1, 16, -30, 16, -1]) / 12.0, 2)
_D3 = (np.array([1, -8, 13, 0, -13, 8, -1]) / 8.0, 3)
_D4 = (np.array([-1, 12, -39, 56, -39, 12, -1]) / 6.0, 3)


def _fd(f: Callable, x: np.ndarray, h: float, stencil, order: int) -> np.ndarray:
    coeffs, half = stencil
    offsets = np.arange(-half, half + 1)
    return sum(c * f(x + o * h) for c, o in zip(coeffs, offsets)) / h**order


def fd_v_residual(sol: ExactSolution, t: float, x, h: float = 1e-2, dt: float = 1e-3,
                  v_min: float = V_MIN) -> float:
    """Residual with fourth-order finite differences on arbitrary points ``x``.

    For fields such as ``sinh`` that are not periodic; lower accuracy
    than the spectral check.
    """
    x = np.asarray(x, dtype=float)
    K, L = sol.K, sol.L
    f = lambda y: evaluate_exact(sol, t, y)
    v = f(x)
    keep = np.abs(v) > v_min if L != 0.0 else np.ones(x.size, dtype=bool)
    vt = (evaluate_exact(sol, t - 2 * dt, x) - 8 * evaluate_exact(sol, t - dt, x)
          + 8 * evaluate_exact(sol, t + dt, x) - evaluate_exact(sol, t + 2 * dt, x)) / (12 * dt)
    d2 = _fd(f, x, h, _D2, 2)
    d3 = _fd(f, x, h, _D3, 3)
    d4 = _fd(f, x, h, _D4, 4)
    res = vt - K * d3
    if L != 0.0:
        res = res + L * (d4 - np.divide(d2 * d2, v, out=np.zeros_like(v), where=keep))
    return float(np.max(np.abs(res[keep])))
