"""Spin-chain and particle representations of the anchored-interface process.

Sites are numbered ``1..n``.  A site ``x`` carries an exponential clock of
rate ``lambda_{eta_x}``; when it rings, ``eta_x`` is exchanged with the
first opposite spin to its right, or flipped if there is none.  Occupied
sites (``eta = +1``) are particles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, ContractViolation


@dataclass
class SpinChain:
    """Configuration ``eta`` in ``{-1, +1}**n`` with the two clock rates."""

    spins: np.ndarray
    lambda_plus: float = 1.0
    lambda_minus: float = 1.0

    def __post_init__(self):
        spins = np.asarray(self.spins, dtype=np.int8).copy()
        if spins.ndim != 1 or spins.size == 0:
            raise ConfigurationError("spins must be a non-empty 1-d sequence")
        if not np.all((spins == 1) | (spins == -1)):
            raise ConfigurationError("spins must be exactly +1 or -1")
        if not (self.lambda_plus > 0 and self.lambda_minus > 0):
            raise ConfigurationError("both rates must be positive")
        self.spins = spins

    @property
    def n(self) -> int:
        return self.spins.size

    def __getitem__(self, x: int) -> int:
        """1-based spin lookup."""
        if not 1 <= x <= self.n:
            raise ContractViolation(f"site {x} outside 1..{self.n}")
        return int(self.spins[x - 1])

    def magnetization(self, n: int | None = None) -> int:
        n = self.n if n is None else n
        return int(self.spins[:n].sum())

    def particles(self) -> "ParticleState":
        return ParticleState(np.flatnonzero(self.spins == 1) + 1)

    @classmethod
    def alternating(cls, n: int, **rates) -> "SpinChain":
        return cls(np.where(np.arange(n) % 2 == 0, 1, -1), **rates)


@dataclass
class ParticleState:
    """Strictly increasing 1-based particle positions."""

    positions: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.int64).copy()
        if pos.ndim != 1:
            raise ConfigurationError("positions must be 1-d")
        if pos.size and (pos[0] < 1 or np.any(np.diff(pos) <= 0)):
            raise ConfigurationError("positions must be strictly increasing positive integers")
        self.positions = pos

    @property
    def k(self) -> int:
        return self.positions.size

    def right_jump(self, i: int) -> "ParticleState":
        """Particle ``i`` (1-based) steps right, pushing any contiguous block ahead of it."""
        if not 1 <= i <= self.k:
            raise ContractViolation(f"particle {i} outside 1..{self.k}")
        pos = self.positions.copy()
        j = i - 1
        pos[j] += 1
        while j + 1 < pos.size and pos[j + 1] == pos[j]:
            pos[j + 1] += 1
            j += 1
        return ParticleState(pos)

    def left_jump(self, i: int, x: int) -> "ParticleState":
        """Particle ``i`` jumps left to the empty site ``x`` in ``(X_{i-1}, X_i)``."""
        pos = self.positions.copy()
        prev = pos[i - 2] if i >= 2 else 0
        if not prev < x < pos[i - 1]:
            raise ContractViolation(f"site {x} is not in the gap left of particle {i}")
        pos[i - 1] = x
        return ParticleState(pos)

    def to_spins(self, n: int) -> np.ndarray:
        spins = -np.ones(n, dtype=np.int8)
        inside = self.positions[self.positions <= n]
        spins[inside - 1] = 1
        return spins


def _check_site(chain: SpinChain, *sites):
    for s in sites:
        if not 1 <= s <= chain.n:
            raise ContractViolation(f"site {s} outside 1..{chain.n}")


def exchange_rate(chain: SpinChain, x: int, y: int) -> float:
    """Rate ``c_{x,y}`` of exchanging the spins at sites ``x < y``.

    ``lambda_+ (1 - eta_y)/2 prod_{x<=z<y} (1 + eta_z)/2
    + lambda_- (1 + eta_y)/2 prod_{x<=z<y} (1 - eta_z)/2``
    """
    _check_site(chain, x, y)
    if not x < y:
        raise ContractViolation(f"need x < y, got {x}, {y}")
    eta = chain.spins[x - 1:y].astype(float)
    run, ey = eta[:-1], eta[-1]
    plus = chain.lambda_plus * (1 - ey) / 2 * np.prod((1 + run) / 2)
    minus = chain.lambda_minus * (1 + ey) / 2 * np.prod((1 - run) / 2)
    return float(plus + minus)


def flip_rate(chain: SpinChain, x: int) -> float:
    """Rate ``c_x`` of flipping site ``x`` (only when ``x..n`` all agree)."""
    _check_site(chain, x)
    tail = chain.spins[x - 1:].astype(float)
    return float(chain.lambda_plus * np.prod((1 + tail) / 2)
                 + chain.lambda_minus * np.prod((1 - tail) / 2))


def mu_from_rates(lambda_plus: float, lambda_minus: float) -> float:
    sp, sm = np.sqrt(lambda_plus), np.sqrt(lambda_minus)
    return float((sm - sp) / (sm + sp))


def C_from_rates(lambda_plus: float, lambda_minus: float) -> float:
    sp, sm = np.sqrt(lambda_plus), np.sqrt(lambda_minus)
    return float(np.sqrt(lambda_plus * lambda_minus) / (sm + sp) ** 2)
