"""Exact stationary laws of the finite window and the quantities derived from them.

Configurations of ``n`` sites are encoded as integers, bit ``x - 1`` set
when ``eta_x = +1``.  With this little-endian layout the marginal on the
first ``k`` sites is a reshape and a sum.

Run-length functionals live on the lattice shifted by one from ``M_n``:

    U+_n(k) = lambda_+ E[K+_n ; M_n = k + 1]
    U-_n(k) = lambda_- E[K-_n ; M_n = k - 1]

so both are indexed by ``k`` of parity ``n + 1``.  In this indexing the
balance of the flux of ``M_n`` across ``k`` reads ``U+_n(k) = U-_n(k)``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..errors import ConfigurationError, SolverError

MAX_SITES = 15
ROW_SUM_TOL = 1e-12
RESIDUAL_TOL = 1e-10


def state_spins(index: int, n: int) -> np.ndarray:
    """Spins ``eta_1..eta_n`` of configuration ``index``."""
    return np.array([1 if (index >> x) & 1 else -1 for x in range(n)], dtype=np.int8)


def state_index(spins) -> int:
    return sum(1 << x for x, s in enumerate(spins) if s == 1)


def _bits(n: int) -> np.ndarray:
    states = np.arange(1 << n, dtype=np.int64)
    return ((states[:, None] >> np.arange(n)) & 1).astype(np.int8)


def generator(n: int, lambda_plus: float, lambda_minus: float) -> sp.csr_matrix:
    """Sparse generator ``Q`` of the window process on ``2**n`` states.

    Every site has exactly one active transition: exchange with the first
    opposite spin to its right, or a flip if there is none.
    """
    if not 1 <= n <= MAX_SITES:
        raise ConfigurationError(f"window size must be in 1..{MAX_SITES}, got {n}")
    size = 1 << n
    states = np.arange(size, dtype=np.int64)
    bits = _bits(n)
    rows, cols, vals = [], [], []
    for x in range(n):
        bx = bits[:, x]
        y = np.full(size, -1, dtype=np.int64)
        for z in range(n - 1, x, -1):
            y = np.where(bits[:, z] != bx, z, y)
        target = states ^ (1 << x)
        swap = y >= 0
        target[swap] ^= np.left_shift(1, y[swap])
        rows.append(states)
        cols.append(target)
        vals.append(np.where(bx == 1, lambda_plus, lambda_minus))
    n_plus = bits.sum(axis=1)
    rows.append(states)
    cols.append(states)
    vals.append(-(n_plus * lambda_plus + (n - n_plus) * lambda_minus))
    Q = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(size, size)
    )
    row_sums = np.abs(np.asarray(Q.sum(axis=1)).ravel())
    if row_sums.max() > ROW_SUM_TOL * max(lambda_plus, lambda_minus) * n:
        raise SolverError("generator rows do not sum to zero", residual=float(row_sums.max()))
    return Q


DIRECT_MAX_SITES = 10
POWER_MAX_ITER = 200_000


def _solve_direct(Q: sp.csr_matrix) -> np.ndarray:
    """Sparse elimination on ``Q^T`` with its first row replaced by the normalisation."""
    A = Q.T.tocoo()
    keep = A.row != 0
    size = Q.shape[0]
    A = sp.csc_matrix(
        (
            np.concatenate([A.data[keep], np.ones(size)]),
            (np.concatenate([A.row[keep], np.zeros(size, dtype=A.row.dtype)]),
             np.concatenate([A.col[keep], np.arange(size)])),
        ),
        shape=(size, size),
    )
    b = np.zeros(size)
    b[0] = 1.0
    return spla.spsolve(A, b)


def _solve_power(Q: sp.csr_matrix, tol: float) -> np.ndarray:
    """Power iteration on the uniformised chain ``I + Q / Lambda``.

    Direct elimination fills in badly beyond about a thousand states;
    every row of ``Q`` has only ``n + 1`` entries, so iterating is cheap.
    """
    size = Q.shape[0]
    lam = float(-Q.diagonal().min())
    step = (sp.identity(size, format="csr") + Q / lam).T.tocsr()
    QT = Q.T.tocsr()
    pi = np.full(size, 1.0 / size)
    for it in range(1, POWER_MAX_ITER + 1):
        pi = step @ pi
        if it % 50 == 0:
            pi /= pi.sum()
            if np.max(np.abs(QT @ pi)) < tol:
                return pi
    raise SolverError("power iteration did not converge", residual=float(np.max(np.abs(QT @ pi))))


@functools.lru_cache(maxsize=32)
def _solve_pi(n: int, lambda_plus: float, lambda_minus: float) -> np.ndarray:
    Q = generator(n, lambda_plus, lambda_minus)
    if n <= DIRECT_MAX_SITES:
        pi = _solve_direct(Q)
    else:
        pi = _solve_power(Q, tol=1e-3 * RESIDUAL_TOL)
    residual = max(float(np.max(np.abs(Q.T @ pi))), abs(float(pi.sum()) - 1.0))
    if not residual <= RESIDUAL_TOL or pi.min() < -RESIDUAL_TOL:
        raise SolverError(f"stationary solve failed for n={n}", residual=residual)
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    pi.setflags(write=False)
    return pi


def marginal(pi: np.ndarray, n: int, k: int) -> np.ndarray:
    """Law of the first ``k`` spins from a law on ``n`` spins."""
    return pi.reshape(1 << (n - k), 1 << k).sum(axis=0)


def _run_lengths(n: int) -> tuple[np.ndarray, np.ndarray]:
    bits = _bits(n)
    kp = np.zeros(1 << n, dtype=np.int64)
    km = np.zeros(1 << n, dtype=np.int64)
    alive_p = np.ones(1 << n, dtype=bool)
    alive_m = np.ones(1 << n, dtype=bool)
    for x in range(n - 1, -1, -1):
        alive_p &= bits[:, x] == 1
        alive_m &= bits[:, x] == 0
        kp += alive_p
        km += alive_m
    return kp, km


@dataclass
class StationaryTable:
    """Stationary law of the window ``1..n`` and derived functionals.

    ``W``, ``H`` are keyed by ``m`` of parity ``n``; ``U_plus``,
    ``U_minus`` by ``k`` of parity ``n + 1`` (see module docstring).
    ``H`` needs site ``n + 1`` and is obtained from the size ``n + 1``
    window; it is ``None`` when not requested.
    """

    n: int
    lambda_plus: float
    lambda_minus: float
    pi: np.ndarray = field(repr=False)
    W: dict
    U_plus: dict
    U_minus: dict
    H: Optional[dict] = None

    def magnetizations(self) -> list[int]:
        return list(range(-self.n, self.n + 1, 2))


def _magnetization(n: int) -> np.ndarray:
    return 2 * _bits(n).sum(axis=1).astype(np.int64) - n


def exact_stationary(n: int, lambda_plus: float = 1.0, lambda_minus: float = 1.0,
                     with_H: bool = True) -> StationaryTable:
    """Solve ``pi Q = 0``, ``sum pi = 1`` for the window of ``n`` sites.

    With ``with_H`` the size ``n + 1`` window is solved as well (so
    ``n <= 14``) to obtain ``H_n(m) = E[eta_{n+1} | M_n = m]``.
    """
    if not (lambda_plus > 0 and lambda_minus > 0):
        raise ConfigurationError("rates must be positive")
    limit = MAX_SITES - 1 if with_H else MAX_SITES
    if not 1 <= n <= limit:
        raise ConfigurationError(f"window size must be in 1..{limit}, got {n}")
    lp, lm = float(lambda_plus), float(lambda_minus)
    pi = _solve_pi(n, lp, lm)
    mag = _magnetization(n)
    kp, km = _run_lengths(n)
    W, Up, Um = {}, {}, {}
    for m in range(-n, n + 1, 2):
        W[m] = float(pi[mag == m].sum())
    for k in range(-n - 1, n + 2, 2):
        Up[k] = lp * float((pi * kp)[mag == k + 1].sum())
        Um[k] = lm * float((pi * km)[mag == k - 1].sum())
    H = None
    if with_H:
        big = _solve_pi(n + 1, lp, lm)
        mag_n = np.tile(mag, 2)
        eta_next = np.repeat(np.array([-1.0, 1.0]), 1 << n)
        H = {}
        for m in range(-n, n + 1, 2):
            sel = mag_n == m
            mass = float(big[sel].sum())
            H[m] = float((big[sel] * eta_next[sel]).sum()) / mass if mass > 0 else 0.0
    return StationaryTable(n, lp, lm, pi, W, Up, Um, H)


@dataclass
class ClosureReport:
    """Both sides of the three closure relations at each ``m``.

    Equation 1 (total probability) is exact and serves as a control;
    equations 2 and 3 rest on an independence approximation and are only
    reported.
    """

    n: int
    lambda_plus: float
    lambda_minus: float
    rows: list

    def max_discrepancy(self, equation: int) -> float:
        return max(abs(r["discrepancy"]) for r in self.rows if r["equation"] == equation)


def _ratio(num: float, den: float) -> float:
    return num / den if den != 0.0 else 0.0


def closure_discrepancy(n: int, lambda_plus: float = 1.0, lambda_minus: float = 1.0) -> ClosureReport:
    if not 1 <= n <= MAX_SITES - 2:
        raise ConfigurationError(f"closure check needs 1 <= n <= {MAX_SITES - 2}, got {n}")
    t = exact_stationary(n, lambda_plus, lambda_minus, with_H=True)
    t1 = exact_stationary(n + 1, lambda_plus, lambda_minus, with_H=False)
    lp, lm = t.lambda_plus, t.lambda_minus
    W = lambda m: t.W.get(m, 0.0)
    H = lambda m: t.H.get(m, 0.0)
    U = lambda k: t.U_plus.get(k, 0.0)
    rows = []

    def add(eq, m, lhs, rhs):
        rows.append({"equation": eq, "m": m, "lhs": lhs, "rhs": rhs, "discrepancy": lhs - rhs})

    for m in range(-n - 3, n + 4, 2):
        rhs = 0.5 * (1 + H(m - 1)) * W(m - 1) + 0.5 * (1 - H(m + 1)) * W(m + 1)
        add(1, m, t1.W.get(m, 0.0), rhs)
    for m in range(-n - 2, n + 3, 2):
        den = U(m + 1) + (lm + lp) * W(m) + U(m - 1)
        rhs2 = _ratio(U(m + 1) - U(m - 1) + (lm - lp) * W(m), den)
        add(2, m, H(m), rhs2)
        rhs3 = _ratio((lm * W(m) + U(m + 1)) * (lp * W(m) + U(m - 1)), den)
        add(3, m, t1.U_plus.get(m, 0.0), rhs3)
    return ClosureReport(n, lp, lm, rows)
