"""Continuous-time simulation drivers, time averages and scaling reports.

Randomness comes from ``numpy.random.Philox`` (counter based) seeded with
an explicit 64-bit integer.  Uniforms are drawn in fixed-size batches and
consumed two per event, so a run is reproducible across platforms and
independent of which kernel backend executes it.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..errors import ConfigurationError, FitError
from . import kernels
from .chain import SpinChain, mu_from_rates

BATCH = 1 << 16
FULL_RECOMPUTE_MAX = 64
MAX_CHAIN = 513
REL_SE_FLAG = 0.10


def make_rng(seed: int) -> np.random.Generator:
    if int(seed) != seed or not 0 <= seed < 2**64:
        raise ConfigurationError(f"seed must be an integer in [0, 2**64), got {seed}")
    return np.random.Generator(np.random.Philox(int(seed)))


def spawn_seeds(seed: int, count: int) -> list[int]:
    """Deterministic child seeds for independent replicas."""
    ss = np.random.SeedSequence(int(seed))
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in ss.spawn(count)]


def _backend(name: Optional[str]):
    if name is None:
        return kernels
    if name == "python":
        return kernels.python_backend
    if name == "cython":
        from . import _ckernels
        return _ckernels
    raise ConfigurationError(f"unknown backend {name!r}")


@dataclass
class ChainAverages:
    """Raw time integrals for a set of windows of one chain."""

    windows: np.ndarray
    occ: np.ndarray
    eta: np.ndarray
    kp: np.ndarray
    km: np.ndarray
    span: float
    events: int


def advance_chain(spins: np.ndarray, lambda_plus: float, lambda_minus: float, horizon: float,
                  burn_in: float, seed: int, windows: Sequence[int], *, track_k: bool = True,
                  full_recompute: Optional[bool] = None, backend: Optional[str] = None,
                  ) -> ChainAverages:
    """Run the chain in place on ``[0, horizon]`` accumulating over ``[burn_in, horizon]``."""
    if not horizon > burn_in >= 0:
        raise ConfigurationError(f"need horizon > burn_in >= 0, got {horizon}, {burn_in}")
    N = spins.shape[0]
    if N > MAX_CHAIN:
        raise ConfigurationError(f"chain longer than {MAX_CHAIN} sites")
    win = np.asarray(sorted(set(int(w) for w in windows)), dtype=np.int_)
    if win.size == 0 or win[0] < 1 or win[-1] > N:
        raise ConfigurationError(f"windows must lie in 1..{N}")
    if full_recompute is None:
        full_recompute = N <= FULL_RECOMPUTE_MAX
    mod = _backend(backend)
    shape = (win.size, N + 1)
    occ, eta, kp, km = (np.zeros(shape) for _ in range(4))
    rng = make_rng(seed)
    t = 0.0
    events = 0
    done = False
    while not done:
        u = rng.random(BATCH)
        t, _, ev, done = mod.chain_advance(spins, float(lambda_plus), float(lambda_minus), t,
                                           float(horizon), float(burn_in), u, 0, win, occ, eta,
                                           kp, km, bool(track_k), bool(full_recompute))
        events += ev
    return ChainAverages(win, occ, eta, kp, km, horizon - burn_in, events)


@dataclass
class GillespieResult:
    """Time averages for window ``n``.

    ``W`` and ``H`` are keyed by ``m``; ``U_plus`` and ``U_minus`` by the
    shifted index ``k`` (see :mod:`pdlss.stochastic.exact`).  ``H`` is
    ``None`` unless the simulated chain extends past the window.
    """

    n: int
    lambda_plus: float
    lambda_minus: float
    horizon: float
    burn_in: float
    seed: int
    events: int
    W: dict
    U_plus: dict
    U_minus: dict
    H: Optional[dict]
    final_spins: list = field(repr=False, default_factory=list)
    backend: str = ""


def gillespie_run(initial: SpinChain, horizon: float, burn_in: float = 0.0, seed: int = 0,
                  window: Optional[int] = None, *, full_recompute: Optional[bool] = None,
                  backend: Optional[str] = None) -> GillespieResult:
    """Exact-in-law simulation of ``initial`` and time averages on window ``n``.

    ``window`` defaults to the whole chain.  To estimate ``H_n`` pass a
    chain of ``n + 1`` sites and ``window=n``.
    """
    spins = initial.spins.copy()
    N = spins.size
    n = N if window is None else int(window)
    res = advance_chain(spins, initial.lambda_plus, initial.lambda_minus, horizon, burn_in, seed,
                        [n], full_recompute=full_recompute, backend=backend)
    occ, eta, kp, km = res.occ[0], res.eta[0], res.kp[0], res.km[0]
    span = res.span
    W, H, Up, Um = {}, {}, {}, {}
    for idx in range(n + 1):
        m = 2 * idx - n
        W[m] = float(occ[idx] / span)
        if n < N:
            H[m] = float(eta[idx] / occ[idx]) if occ[idx] > 0 else 0.0
    for k in range(-n - 1, n + 2, 2):
        ip, im = (k + 1 + n) // 2, (k - 1 + n) // 2
        Up[k] = float(initial.lambda_plus * kp[ip] / span) if 0 <= ip <= n else 0.0
        Um[k] = float(initial.lambda_minus * km[im] / span) if 0 <= im <= n else 0.0
    used = _backend(backend).BACKEND
    return GillespieResult(n, initial.lambda_plus, initial.lambda_minus, horizon, burn_in, int(seed),
                           res.events, W, Up, Um, H if n < N else None, spins.tolist(), used)


@dataclass
class ParticleResult:
    """Time-averaged law of the particle positions (1-based tuples)."""

    k: int
    lambda_plus: float
    lambda_minus: float
    horizon: float
    burn_in: float
    seed: int
    events: int
    frequencies: dict
    overflow: float
    final_positions: list = field(default_factory=list)

    def __getitem__(self, positions) -> float:
        if isinstance(positions, int):
            positions = (positions,)
        return self.frequencies.get(tuple(positions), 0.0)


def particle_run(k: int, lambda_plus: float = 1.0, lambda_minus: float = 1.0, horizon: float = 1e4,
                 seed: int = 0, burn_in: float = 0.0, *, initial: Optional[Sequence[int]] = None,
                 cap: Optional[int] = None, backend: Optional[str] = None) -> ParticleResult:
    """Simulate the first ``k`` particles directly.

    Event order: the ``k`` right jumps, then left jumps into the empty
    sites below ``X_k`` in increasing order.  Positions beyond ``cap`` are
    lumped into ``overflow``.
    """
    if k < 1:
        raise ConfigurationError("need at least one particle")
    if not horizon > burn_in >= 0:
        raise ConfigurationError(f"need horizon > burn_in >= 0, got {horizon}, {burn_in}")
    if cap is None:
        cap = {1: 4096, 2: 256, 3: 48}.get(k, 12)
    if cap**k > 2**26:
        raise ConfigurationError(f"histogram of {cap}**{k} cells is too large")
    X = np.arange(1, k + 1, dtype=np.int_) if initial is None else np.asarray(initial, dtype=np.int_)
    if X.shape != (k,) or X[0] < 1 or np.any(np.diff(X) <= 0):
        raise ConfigurationError("initial positions must be k strictly increasing positive integers")
    X = X.copy()
    hist = np.zeros(cap**k)
    mod = _backend(backend)
    rng = make_rng(seed)
    t, events, overflow, done = 0.0, 0, 0.0, False
    while not done:
        u = rng.random(BATCH)
        t, _, ev, done, ov = mod.particles_advance(X, float(lambda_plus), float(lambda_minus), t,
                                                   float(horizon), float(burn_in), u, 0, hist, int(cap))
        events += ev
        overflow += ov
    span = horizon - burn_in
    freq = {}
    for key in np.flatnonzero(hist):
        pos, r = [], int(key)
        for _ in range(k):
            pos.append(r % cap + 1)
            r //= cap
        freq[tuple(pos)] = float(hist[key] / span)
    return ParticleResult(k, lambda_plus, lambda_minus, horizon, burn_in, int(seed), events, freq,
                          overflow / span, X.tolist())


def total_variation(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


# -- magnetisation scaling ------------------------------------------------------

def check_duality(spins: np.ndarray, sizes: Sequence[int]) -> int:
    """Verify ``M_n >= m  <=>  X_{(m+n)/2} <= n`` on one configuration.

    Returns the number of ``(n, m)`` pairs checked; raises on a violation.
    ``X_j`` for ``j <= 0`` is taken as 0 and as infinity when fewer than
    ``j`` particles are present.
    """
    X = np.flatnonzero(spins == 1) + 1
    checked = 0
    for n in sizes:
        M = int(spins[:n].sum())
        for m in range(-n, n + 1, 2):
            j = (m + n) // 2
            xj = 0 if j <= 0 else (X[j - 1] if j <= X.size else math.inf)
            if (M >= m) != (xj <= n):
                raise AssertionError(f"duality fails at n={n}, m={m}")
            checked += 1
    return checked


@dataclass
class ScalingRow:
    n: int
    mean: float
    variance: float
    mean_over_n: float
    rel_se_variance: float
    flagged: bool


@dataclass
class ScalingReport:
    mode: str
    lambda_plus: float
    lambda_minus: float
    horizon: float
    burn_in: float
    seed: int
    replicas: int
    rows: list
    gamma: Optional[float] = None
    amplitude: Optional[float] = None
    mu: Optional[float] = None
    histograms: dict = field(default_factory=dict)
    duality_checks: int = 0
    backend: str = ""

    def header(self) -> str:
        return (f"# mode={self.mode} lambda_plus={self.lambda_plus!r} lambda_minus={self.lambda_minus!r} "
                f"horizon={self.horizon!r} burn_in={self.burn_in!r} seed={self.seed} replicas={self.replicas}")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.header() + "\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n", "mean", "variance", "mean_over_n", "rel_se_variance", "flagged"])
            for r in self.rows:
                w.writerow([r.n, f"{r.mean:.17g}", f"{r.variance:.17g}", f"{r.mean_over_n:.17g}",
                            f"{r.rel_se_variance:.17g}", int(r.flagged)])

    def to_json(self) -> dict:
        d = asdict(self)
        d["histograms"] = {str(k): v for k, v in self.histograms.items()}
        return d

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _moments_from_occ(occ_row: np.ndarray, n: int, span: float) -> tuple[float, float, np.ndarray]:
    m = 2 * np.arange(occ_row.size) - n
    p = occ_row / span
    mean = float(np.dot(p, m))
    var = float(np.dot(p, (m - mean) ** 2))
    return mean, var, p


def magnetization_scaling(mode: str, sizes: Sequence[int], lambda_plus: float = 1.0,
                          lambda_minus: float = 1.0, horizon: float = 2e3, seed: int = 0, *,
                          burn_in: Optional[float] = None, replicas: int = 4,
                          duality_samples: int = 64, backend: Optional[str] = None) -> ScalingReport:
    """Stationary mean and variance of ``M_n`` for several window sizes.

    One chain of ``max(sizes)`` sites serves every window, which is exact
    by the restriction property.  ``replicas`` independent chains (seeds
    spawned from ``seed``) give the standard errors; rows whose variance
    has relative standard error above 10% are flagged.
    """
    if mode not in ("unbiased", "biased"):
        raise ConfigurationError(f"mode must be 'unbiased' or 'biased', got {mode!r}")
    sizes = [int(s) for s in sizes]
    if sizes != sorted(sizes) or len(set(sizes)) != len(sizes) or sizes[0] < 1 or sizes[-1] > 512:
        raise ConfigurationError("sizes must be strictly ascending integers in 1..512")
    if replicas < 2:
        raise ConfigurationError("need at least two replicas for error bars")
    burn_in = 0.1 * horizon if burn_in is None else burn_in
    N = sizes[-1]
    stats = []
    checks = 0
    rng_init = make_rng(seed)
    for child in spawn_seeds(seed, replicas):
        spins = np.where(rng_init.random(N) < 0.5, 1, -1).astype(np.int8)
        res = advance_chain(spins, lambda_plus, lambda_minus, horizon, burn_in, child, sizes,
                            track_k=False, backend=backend)
        stats.append([_moments_from_occ(res.occ[j, :n + 1], n, res.span) for j, n in enumerate(sizes)])
        # duality on configurations sampled along a continuation of the chain
        sample_rng = make_rng(child ^ 0x5DEECE66D)
        for _ in range(duality_samples):
            advance_chain(spins, lambda_plus, lambda_minus, 1.0, 0.0,
                          int(sample_rng.integers(0, 2**63)), [N], track_k=False, backend=backend)
            checks += check_duality(spins, sizes)
    rows = []
    hists = {}
    for j, n in enumerate(sizes):
        means = np.array([s[j][0] for s in stats])
        variances = np.array([s[j][1] for s in stats])
        var = float(variances.mean())
        mean = float(means.mean())
        se = float(variances.std(ddof=1) / math.sqrt(replicas))
        rel = se / var if var > 0 else math.inf
        rows.append(ScalingRow(n, mean, var, mean / n, rel, rel > REL_SE_FLAG))
        if mode == "biased":
            p = np.mean([s[j][2] for s in stats], axis=0)
            m = 2 * np.arange(n + 1) - n
            keep = p > 0
            hists[n] = {
                "scaled_m": ((m[keep] - mean) / n ** (1 / 3)).tolist(),
                "density": (p[keep] / 2 * n ** (1 / 3)).tolist(),
            }
    report = ScalingReport(mode, lambda_plus, lambda_minus, horizon, burn_in, int(seed), replicas, rows,
                           histograms=hists, duality_checks=checks, backend=_backend(backend).BACKEND)
    if mode == "unbiased":
        if len(sizes) < 2:
            raise FitError("need at least two sizes to fit an exponent")
        slope, intercept = np.polyfit(np.log(sizes), np.log([r.variance for r in rows]), 1)
        report.gamma = float(slope)
        report.amplitude = float(math.exp(intercept))
    else:
        report.mu = mu_from_rates(lambda_plus, lambda_minus)
    return report
