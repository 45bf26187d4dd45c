"""Exact stationary laws of the first particles, in rational arithmetic.

With ``lambda_- = 1`` and ``lambda_+ = lambda`` the first ``n`` particles
form a Markov chain of their own, and ``u_n(x) = P(X_1..X_n = x)`` solves

    (lambda n + x_n - n) u_n(x) = sum_i sum_k lambda u_n(x - e_{i,k}) [push of a block]
                                 + sum_{i<n} sum_k u_n(x + k e_i)   [left jumps]
                                 + sum_{z > x_n} u_n(x_1..x_{n-1}, z)

where the last sum is closed with the restriction identity
``sum_{z > x_{n-1}} u_n(x', z) = u_{n-1}(x')``.  Ordering the unknowns by
the last coordinate turns this into one small dense linear system per
layer, solved by exact Gaussian elimination.

Two forms are offered for ``n = 2``:

* ``"master"`` is the equation above.  It is what the particle dynamics
  imply and agrees with the exact spin-chain solver and with Monte Carlo.
* ``"printed"`` uses the out-rate ``lambda + y - 1`` in place of
  ``2 lambda + y - 1`` after the restriction closure.  It reproduces the
  commonly quoted closed forms ``u(1,2) = 1/(lambda+1)**2`` etc. but is
  not stationary for the process; it is kept for comparison.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Dict, Tuple

from .errors import ConfigurationError, ConsistencyError, SolverError

FORMS = ("master", "printed")


def as_rational(value) -> Fraction:
    """Exact conversion; floats are refused so no rounding sneaks in."""
    if isinstance(value, bool):
        raise ConfigurationError("boolean is not a rate")
    if isinstance(value, (int, Rational)):
        out = Fraction(value)
    elif isinstance(value, str):
        try:
            out = Fraction(value.strip())
        except ValueError as exc:
            raise ConfigurationError(f"cannot parse {value!r} as a rational") from exc
    else:
        raise ConfigurationError(
            f"rates must be exact rationals (int, Fraction or 'p/q' string), got {type(value).__name__}"
        )
    return out


def _positive(lam) -> Fraction:
    lam = as_rational(lam)
    if lam <= 0:
        raise ConfigurationError(f"lambda must be positive, got {lam}")
    return lam


def gamma(x: int, lam) -> Fraction:
    """``prod_{k=1}^x (lambda + k)``."""
    lam = _positive(lam)
    out = Fraction(1)
    for k in range(1, x + 1):
        out *= lam + k
    return out


def u1(x: int, lam) -> Fraction:
    """Law of the first particle: ``x lambda**(x-1) / prod_{k<=x} (lambda + k)``."""
    if int(x) != x or x < 1:
        raise ConfigurationError(f"position must be a positive integer, got {x}")
    lam = _positive(lam)
    return x * lam ** (x - 1) / gamma(x, lam)


def solve_exact(A: list, b: list) -> list:
    """Gaussian elimination with row pivoting over ``Fraction``."""
    n = len(b)
    M = [list(row) + [rhs] for row, rhs in zip(A, b)]
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            raise SolverError("singular layer system")
        M[col], M[piv] = M[piv], M[col]
        p = M[col][col]
        row = M[col]
        for r in range(col + 1, n):
            f = M[r][col]
            if f:
                f /= p
                Mr = M[r]
                for c in range(col, n + 1):
                    if row[c]:
                        Mr[c] -= f * row[c]
    x = [Fraction(0)] * n
    for r in range(n - 1, -1, -1):
        s = M[r][n] - sum(M[r][c] * x[c] for c in range(r + 1, n))
        x[r] = s / M[r][r]
    return x


def _layer_states(n: int, z: int):
    return [c + (z,) for c in itertools.combinations(range(1, z), n - 1)]


def _stationary_layers(n: int, z_max: int, lam: Fraction, lower: Dict[tuple, Fraction],
                       out_rate_lambda: Fraction | None = None) -> Dict[tuple, Fraction]:
    """Solve for ``u_n`` on all states with last coordinate ``<= z_max``.

    ``lower`` holds ``u_{n-1}`` (the empty tuple maps to 1 when ``n = 1``).
    ``out_rate_lambda`` overrides the ``lambda n`` out-rate (used for the
    printed two-particle form).
    """
    out_lam = lam * n if out_rate_lambda is None else out_rate_lambda
    u: Dict[tuple, Fraction] = {}
    for z in range(n, z_max + 1):
        states = _layer_states(n, z)
        index = {s: j for j, s in enumerate(states)}
        size = len(states)
        A = [[Fraction(0)] * size for _ in range(size)]
        b = [Fraction(0)] * size

        def add(row, state, coeff):
            if state in index:
                A[row][index[state]] -= coeff
            else:
                val = u.get(state)
                if val is not None:
                    b[row] += coeff * val

        for row, x in enumerate(states):
            A[row][row] += out_lam + (x[-1] - n)
            xs = (0,) + x
            # right jumps of particle i pushing particles i+1..i+k
            for i in range(1, n + 1):
                if xs[i - 1] == xs[i] - 1:
                    continue
                for k in range(0, n - i + 1):
                    if any(xs[i + l] != xs[i] + l for l in range(1, k + 1)):
                        break
                    pred = tuple(xs[j] - (1 if i <= j <= i + k else 0) for j in range(1, n + 1))
                    add(row, pred, lam)
            # left jumps of particles 1..n-1 from inside their gap
            for i in range(1, n):
                for k in range(1, xs[i + 1] - xs[i]):
                    add(row, tuple(xs[j] + (k if j == i else 0) for j in range(1, n + 1)), Fraction(1))
            # left jumps of particle n from beyond x_n, closed by restriction
            head = x[:-1]
            b[row] += lower[head]
            for zz in range(x[-2] + 1 if n > 1 else 1, x[-1] + 1):
                add(row, head + (zz,), -Fraction(1))
        sol = solve_exact(A, b)
        for s, val in zip(states, sol):
            u[s] = val
    return u


@dataclass
class RationalTable:
    """Exact laws of the first one and two particles for one value of ``lambda``."""

    lam: Fraction
    u1: Dict[int, Fraction]
    u2: Dict[Tuple[int, int], Fraction]
    form: str = "master"
    y_max: int = 0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        for key, val in itertools.chain(self.u1.items(), self.u2.items()):
            if not 0 <= val <= 1:
                raise ConsistencyError(f"table entry {key} = {val} outside [0, 1]")

    def rows(self):
        for x, val in sorted(self.u1.items()):
            yield ("u1", x, "", val)
        for (x, y), val in sorted(self.u2.items(), key=lambda kv: (kv[0][1], kv[0][0])):
            yield ("u2", x, y, val)

    def to_csv(self, path) -> None:
        """Write ``kind,x,y,numerator,denominator,decimal`` rows."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            fh.write(f"# lambda={self.lam} form={self.form} y_max={self.y_max}\n")
            w.writerow(["kind", "x", "y", "numerator", "denominator", "decimal"])
            for kind, x, y, val in self.rows():
                w.writerow([kind, x, y, val.numerator, val.denominator, f"{float(val):.17g}"])


def u1_table(x_max: int, lam) -> Dict[int, Fraction]:
    lam = _positive(lam)
    return {x: u1(x, lam) for x in range(1, x_max + 1)}


def _printed_layers(y_max: int, lam: Fraction, first: Dict[int, Fraction]) -> Dict[tuple, Fraction]:
    """The recursion with left side ``(lambda + y - 1) u(x, y)``."""
    u: Dict[tuple, Fraction] = {}
    for y in range(2, y_max + 1):
        xs = list(range(1, y))
        size = len(xs)
        A = [[Fraction(0)] * size for _ in range(size)]
        b = [Fraction(0)] * size
        for row, x in enumerate(xs):
            A[row][row] += lam + y - 1
            if x >= 2:
                A[row][x - 2] -= lam
                if y == x + 1:
                    b[row] += lam * u[(x - 1, y - 1)]
            if y != x + 1:
                b[row] += lam * u[(x, y - 1)]
            for k in range(1, y - x):
                A[row][x + k - 1] -= 1
            b[row] += first[x]
            for k in range(1, y - x):
                b[row] -= u[(x, y - k)]
        for x, val in zip(xs, solve_exact(A, b)):
            u[(x, y)] = val
    return u


def u2_table(y_max: int, lam, form: str = "master") -> RationalTable:
    """Exact two-particle law for ``y <= y_max``; see the module docstring for ``form``."""
    if y_max < 2:
        raise ConfigurationError(f"y_max must be at least 2, got {y_max}")
    if form not in FORMS:
        raise ConfigurationError(f"form must be one of {FORMS}, got {form!r}")
    lam = _positive(lam)
    first = u1_table(y_max, lam)
    if form == "master":
        u2 = _stationary_layers(2, y_max, lam, {(x,): v for x, v in first.items()})
    else:
        u2 = _printed_layers(y_max, lam, first)
    for key, val in u2.items():
        if val < 0:
            raise ConsistencyError(f"negative entry u{key} = {val}")
    return RationalTable(lam, first, u2, form, y_max)


def u3_table(z_max: int, lam, *, experimental: bool = False) -> Dict[tuple, Fraction]:
    """Three-particle law for ``x_3 <= z_max`` (exact given the truncation of ``u_2``).

    Requires ``experimental=True``: there are no published values to check
    it against beyond the restriction identity.
    """
    if not experimental:
        raise ConfigurationError("the three-particle solver is experimental; pass experimental=True")
    lam = _positive(lam)
    first = {(x,): v for x, v in u1_table(z_max, lam).items()}
    second = _stationary_layers(2, z_max, lam, first)
    return _stationary_layers(3, z_max, lam, second)


def restriction_check(table: RationalTable, x: int, y_max: int | None = None) -> Fraction:
    """``u1(x) - sum_{y = x+1}^{y_max} u2(x, y)``; the tail mass beyond ``y_max``."""
    y_max = table.y_max if y_max is None else y_max
    if not x < y_max <= table.y_max:
        raise ConfigurationError(f"need x < y_max <= {table.y_max}, got x={x}, y_max={y_max}")
    defect = table.u1[x] - sum(table.u2[(x, y)] for y in range(x + 1, y_max + 1))
    if defect < 0:
        raise ConsistencyError(f"negative restriction defect {defect} at x={x}, y_max={y_max}")
    return defect


def equation_residual(table: RationalTable, x: int, y: int) -> Fraction:
    """Left minus right side of the layer equation that built ``table`` at ``(x, y)``."""
    lam, u, first = table.lam, table.u2, table.u1
    g = lambda a, c: u.get((a, c), Fraction(0))
    rhs = Fraction(0)
    if x >= 2:
        rhs += lam * g(x - 1, y)
        if y == x + 1:
            rhs += lam * g(x - 1, y - 1)
    if y != x + 1:
        rhs += lam * g(x, y - 1)
    rhs += sum((g(x + k, y) for k in range(1, y - x)), Fraction(0))
    rhs += first[x] - sum((g(x, y - k) for k in range(1, y - x)), Fraction(0))
    out_rate = 2 * lam if table.form == "master" else lam
    return (out_rate + y - 1) * g(x, y) - rhs


def closed_forms(lam) -> dict:
    """Commonly quoted closed forms for the first two-particle probabilities."""
    lam = _positive(lam)
    q = lam * lam + 3 * lam + 4
    return {
        (1, 2): 1 / (lam + 1) ** 2,
        (2, 3): lam * (5 * lam + 4) / ((lam + 1) ** 2 * q),
        (1, 3): lam * (2 * lam * lam + 11 * lam + 8) / ((lam + 1) ** 2 * (lam + 2) * q),
    }


def normalization_gap(x_max: int, lam) -> float:
    """``|1 - sum_{x <= x_max} u1(x)|`` evaluated exactly then rounded."""
    lam = _positive(lam)
    return float(abs(1 - sum(u1_table(x_max, lam).values())))


def tail_identity(x: int, lam) -> bool:
    """``lambda**x / gamma(x) == 1 - sum_{k<=x} u1(k)`` exactly."""
    lam = _positive(lam)
    return lam**x / gamma(x, lam) == 1 - sum(u1(k, lam) for k in range(1, x + 1))


def log_ratio_sequence(defects) -> list:
    """Successive ``defect[i+1] / defect[i]`` as floats, for the tail-decay test."""
    return [float(b / a) for a, b in zip(defects, defects[1:]) if a]


__all__ = [
    "FORMS", "RationalTable", "as_rational", "closed_forms", "equation_residual", "gamma",
    "normalization_gap", "restriction_check", "solve_exact", "tail_identity", "u1", "u1_table",
    "u2_table", "u3_table", "log_ratio_sequence",
]
