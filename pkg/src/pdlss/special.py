"""Airy functions, the Hastings-McLeod solution and the Tracy-Widom GOE law.

The Hastings-McLeod function ``q`` is the positive solution of
``q'' = x q + 2 q**3`` with ``q ~ Ai(x)`` as ``x -> +inf`` and
``q ~ sqrt(-x/2)`` as ``x -> -inf``.  It is computed as a two-point
boundary value problem on ``[x_lo, x_hi]``: Numerov's fourth-order
discretisation, solved by damped Newton iteration with a tridiagonal
Jacobian.  Shooting is avoided because the solution is unstable to it.

The GOE distribution function follows from ``q``::

    F1(s) = exp(-1/2 int_s^inf q - 1/2 int_s^inf (t - s) q(t)**2 dt)
    F1'(s) = F1(s) * (q(s)/2 + 1/2 int_s^inf q**2)

Outside the table the integrals are closed with the boundary asymptotics.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import special as sps
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded

from .errors import ContractViolation, RangeError, SolverError

AIRY_RANGE = 30.0


def airy(x):
    """``(Ai(x), Bi(x))`` for ``|x| <= 30``; scalars or arrays."""
    xa = np.asarray(x, dtype=float)
    if np.any(np.abs(xa) > AIRY_RANGE) or not np.all(np.isfinite(xa)):
        raise RangeError(f"Airy functions are supported on |x| <= {AIRY_RANGE}")
    ai, _, bi, _ = sps.airy(xa)
    if np.ndim(x) == 0:
        return float(ai), float(bi)
    return ai, bi


def airy_all(x):
    """``(Ai, Ai', Bi, Bi')`` with the same range restriction as :func:`airy`."""
    xa = np.asarray(x, dtype=float)
    if np.any(np.abs(xa) > AIRY_RANGE):
        raise RangeError(f"Airy functions are supported on |x| <= {AIRY_RANGE}")
    return sps.airy(xa)


# -- Hastings-McLeod ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class HastingsMcLeodTable:
    xs: np.ndarray
    q: np.ndarray
    q_prime: np.ndarray
    tolerance_achieved: float
    newton_iterations: int = 0

    @property
    def spacing(self) -> float:
        return float(self.xs[1] - self.xs[0])

    def __call__(self, x):
        return np.interp(x, self.xs, self.q)

    def ode_residual(self) -> np.ndarray:
        """``q'' - x q - 2 q**3`` at interior points, ``q''`` from Numerov's relation."""
        return _numerov_residual(self.q, self.xs, self.spacing)[1:-1] / self.spacing**2


def left_asymptote(x):
    """``sqrt(-x/2) (1 + 1/(8 x**3))``, first-order corrected."""
    x = np.asarray(x, dtype=float)
    return np.sqrt(-x / 2.0) * (1.0 + 1.0 / (8.0 * x**3))


def _numerov_residual(q, x, h):
    f = x * q + 2.0 * q**3
    r = np.zeros_like(q)
    r[1:-1] = (q[2:] - 2.0 * q[1:-1] + q[:-2]) - h * h / 12.0 * (f[2:] + 10.0 * f[1:-1] + f[:-2])
    return r


def _derivative4(q, h):
    """Fourth-order finite-difference first derivative (one-sided near the ends)."""
    d = np.empty_like(q)
    d[2:-2] = (q[:-4] - 8.0 * q[1:-3] + 8.0 * q[3:-1] - q[4:]) / (12.0 * h)
    for i in (0, 1):
        s = q[i:i + 5]
        d[i] = (-25 * s[0] + 48 * s[1] - 36 * s[2] + 16 * s[3] - 3 * s[4]) / (12.0 * h)
    for i in (-1, -2):
        j = len(q) + i
        s = q[j - 4:j + 1]
        d[j] = (25 * s[4] - 48 * s[3] + 36 * s[2] - 16 * s[1] + 3 * s[0]) / (12.0 * h)
    return d


def hastings_mcleod(x_lo: float = -10.0, x_hi: float = 10.0, n_points: int = 4001,
                    tol: float = 1e-13, max_iter: int = 60) -> HastingsMcLeodTable:
    """Tabulate the Hastings-McLeod solution on ``n_points`` equispaced nodes.

    Boundary values are ``q(x_hi) = Ai(x_hi)`` and the corrected left
    asymptote at ``x_lo``.  The initial guess blends the two asymptotic
    regimes, ``sqrt(max(-x/2, 0) + Ai(x)**2)``.
    """
    if x_lo > -8.0 or x_hi < 8.0:
        raise ContractViolation("the table must span at least [-8, 8]")
    if x_hi > AIRY_RANGE:
        raise RangeError(f"x_hi must not exceed {AIRY_RANGE}")
    if n_points < 16:
        raise ContractViolation("need at least 16 points")
    x = np.linspace(x_lo, x_hi, n_points)
    h = float(x[1] - x[0])
    ai = sps.airy(x)[0]
    q = np.sqrt(np.maximum(-x / 2.0, 0.0) + ai**2)
    q[0] = float(left_asymptote(x_lo))
    q[-1] = ai[-1]
    c = h * h / 12.0

    def norm(r):
        return float(np.max(np.abs(r)))

    r = _numerov_residual(q, x, h)
    res = norm(r)
    iterations = 0
    while True:
        iterations += 1
        if iterations > max_iter:
            raise SolverError(f"Newton did not converge in {max_iter} iterations", residual=res / h**2)
        fp = x + 6.0 * q**2
        ab = np.zeros((3, n_points - 2))
        ab[0, 1:] = 1.0 - c * fp[2:-1]
        ab[1, :] = -2.0 - 10.0 * c * fp[1:-1]
        ab[2, :-1] = 1.0 - c * fp[1:-2]
        delta = solve_banded((1, 1), ab, -r[1:-1])
        step = 1.0
        while True:
            trial = q.copy()
            trial[1:-1] += step * delta
            r_trial = _numerov_residual(trial, x, h)
            if norm(r_trial) <= max(res, 1e-15) or step < 1e-4:
                break
            step *= 0.5
        if step < 1e-4:
            raise SolverError("damped Newton stalled", residual=res / h**2)
        q, r = trial, r_trial
        res = norm(r)
        if step == 1.0 and float(np.max(np.abs(delta))) < tol:
            break
    if res / h**2 > 1e-8:
        raise SolverError("Newton converged to a large residual", residual=res / h**2)
    if np.any(q <= 0.0):
        raise SolverError("converged to a solution that is not positive", residual=res / h**2)
    return HastingsMcLeodTable(x, q, _derivative4(q, h), res / h**2, iterations)


# -- Tracy-Widom GOE ---------------------------------------------------------

def _cumulative_from_right(f, fp, h):
    """``int_{x_j}^{x_end} f`` by the Hermite (corrected trapezoid) rule."""
    pieces = h / 2.0 * (f[:-1] + f[1:]) + h * h / 12.0 * (fp[:-1] - fp[1:])
    out = np.zeros_like(f)
    out[:-1] = np.cumsum(pieces[::-1])[::-1]
    return out


@dataclass(frozen=True, eq=False)
class GoeDensityTable:
    xs: np.ndarray
    density: np.ndarray
    cdf: np.ndarray
    mean: float
    variance: float
    q: np.ndarray = field(repr=False)
    int_q: np.ndarray = field(repr=False)
    int_q2: np.ndarray = field(repr=False)
    int_tq2: np.ndarray = field(repr=False)
    total_mass: float = 1.0

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)

    def _pieces(self, s):
        """``(q, int q, int q^2, int (t-s) q^2)`` at ``s``, with asymptotic closures."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        xs = self.xs
        lo, hi = xs[0], xs[-1]
        q = np.empty_like(s)
        i1 = np.empty_like(s)
        i2 = np.empty_like(s)
        i3 = np.empty_like(s)
        mid = (s >= lo) & (s <= hi)
        if np.any(mid):
            sm = s[mid]
            q[mid] = self._spl_q(sm)
            i1[mid] = self._spl_1(sm)
            i2[mid] = self._spl_2(sm)
            i3[mid] = self._spl_3(sm)
        right = s > hi
        if np.any(right):
            sr = np.minimum(s[right], AIRY_RANGE)
            a1, a2, a3, aq = _airy_tail_integrals(sr)
            q[right] = aq
            i1[right], i2[right], i3[right] = a1, a2, a3
            q[right & (s > AIRY_RANGE)] = 0.0
        left = s < lo
        if np.any(left):
            sl = s[left]
            q[left] = left_asymptote(sl)
            i1[left] = self.int_q[0] + math.sqrt(2.0) / 3.0 * ((-sl) ** 1.5 - (-lo) ** 1.5)
            i2[left] = self.int_q2[0] + (sl**2 - lo**2) / 4.0
            i3[left] = (self.int_tq2[0] + (lo - sl) * self.int_q2[0]
                        - 0.5 * (lo**3 / 3.0 - sl * lo**2 / 2.0 + sl**3 / 6.0))
        return q, i1, i2, i3

    def __post_init__(self):
        object.__setattr__(self, "_spl_q", CubicSpline(self.xs, self.q))
        object.__setattr__(self, "_spl_1", CubicSpline(self.xs, self.int_q))
        object.__setattr__(self, "_spl_2", CubicSpline(self.xs, self.int_q2))
        object.__setattr__(self, "_spl_3", CubicSpline(self.xs, self.int_tq2))

    def cdf_at(self, s):
        _, i1, _, i3 = self._pieces(s)
        out = np.exp(-0.5 * i1 - 0.5 * i3)
        return out if np.ndim(s) else float(out[0])

    def pdf(self, s):
        q, i1, i2, i3 = self._pieces(s)
        out = np.exp(-0.5 * i1 - 0.5 * i3) * (0.5 * q + 0.5 * i2)
        return out if np.ndim(s) else float(out[0])


def _airy_tail_integrals(x):
    """Closed forms of ``int_x^inf Ai``, ``int_x^inf Ai^2`` and ``int_x^inf (t-x) Ai(t)^2 dt``."""
    ai, aip, _, _ = sps.airy(x)
    apt = sps.itairy(x)[0]
    i1 = 1.0 / 3.0 - apt
    i2 = aip**2 - x * ai**2
    i3 = (2.0 * x * x * ai**2 - 2.0 * x * aip**2 - ai * aip) / 3.0
    return i1, i2, i3, ai


def goe_density(table: HastingsMcLeodTable) -> GoeDensityTable:
    """Tracy-Widom GOE distribution and density on the nodes of ``table``."""
    xs, q, qp = table.xs, table.q, table.q_prime
    if xs[0] > -8.0 or xs[-1] < 8.0:
        raise ContractViolation("the table must span at least [-8, 8]")
    h = table.spacing
    t1, t2, t3, _ = _airy_tail_integrals(xs[-1])
    int_q = _cumulative_from_right(q, qp, h) + t1
    q2 = q * q
    int_q2 = _cumulative_from_right(q2, 2.0 * q * qp, h) + t2
    # int_s^inf (t - s) q^2 dt = int_s^inf (int_t^inf q^2) dt
    int_tq2 = _cumulative_from_right(int_q2, -q2, h) + t3
    cdf = np.exp(-0.5 * int_q - 0.5 * int_tq2)
    dens = cdf * (0.5 * q + 0.5 * int_q2)
    w = np.full_like(xs, h)
    w[0] = w[-1] = h / 2.0
    mass = float(np.sum(w * dens))
    mean = float(np.sum(w * xs * dens)) / mass
    var = float(np.sum(w * (xs - mean) ** 2 * dens)) / mass
    total = mass + float(cdf[0]) + (1.0 - float(cdf[-1]))
    return GoeDensityTable(xs, dens, cdf, mean, var, q, int_q, int_q2, int_tq2, total)


def normalized_goe(gdt: GoeDensityTable, reflect: bool = False) -> Callable:
    """Mean-zero, unit-variance GOE density ``x -> sigma F1'(sigma x + m)``.

    With ``reflect`` the mirror image ``x -> f(-x)`` is returned.
    """
    m, sigma = gdt.mean, gdt.std
    sign = -1.0 if reflect else 1.0

    def profile(x):
        x = np.asarray(x, dtype=float)
        return sigma * gdt.pdf(sigma * sign * x + m)

    profile.mean = m
    profile.std = sigma
    profile.reflect = reflect
    return profile


_DEFAULT_CACHE: dict = {}


def default_goe(n_points: int = 4001) -> GoeDensityTable:
    """Memoised GOE table on the default span ``[-10, 10]``."""
    if n_points not in _DEFAULT_CACHE:
        _DEFAULT_CACHE[n_points] = goe_density(hastings_mcleod(-10.0, 10.0, n_points))
    return _DEFAULT_CACHE[n_points]


# -- cache files -------------------------------------------------------------

def save_tables(path, hm: HastingsMcLeodTable, gdt: GoeDensityTable) -> None:
    """Write both tables to one CSV with a ``#`` header recording span and residual."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(f"# x_lo={float(hm.xs[0])!r} x_hi={float(hm.xs[-1])!r} n_points={hm.xs.size} "
                 f"residual={float(hm.tolerance_achieved)!r}\n")
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["x", "q", "q_prime", "density", "cdf"])
        for row in zip(hm.xs, hm.q, hm.q_prime, gdt.density, gdt.cdf):
            wr.writerow([repr(float(v)) for v in row])


def load_or_build(path, x_lo: float = -10.0, x_hi: float = 10.0, n_points: int = 4001):
    """Load cached tables when the header matches the request, else rebuild and save."""
    path = Path(path)
    want = {"x_lo": float(x_lo), "x_hi": float(x_hi), "n_points": int(n_points)}
    if path.exists():
        with path.open() as fh:
            header = fh.readline().lstrip("# ").split()
            meta = dict(item.split("=", 1) for item in header)
            got = {"x_lo": float(meta["x_lo"]), "x_hi": float(meta["x_hi"]),
                   "n_points": int(meta["n_points"])}
            if got == want:
                rows = np.loadtxt(fh, delimiter=",", skiprows=1)
                hm = HastingsMcLeodTable(rows[:, 0], rows[:, 1], rows[:, 2], float(meta["residual"]))
                return hm, goe_density(hm)
    hm = hastings_mcleod(x_lo, x_hi, n_points)
    gdt = goe_density(hm)
    save_tables(path, hm, gdt)
    return hm, gdt
