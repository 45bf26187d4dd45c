"""Compare the compiled and pure-Python event loops.

    python3 benchmarks/bench_kernels.py [--horizon 200] [--repeat 3] [--json out.json]

Each case runs the same seeded workload on both backends, checks that the
outputs agree, and reports events per second and the speed-up.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from pdlss.stochastic import kernels
from pdlss.stochastic.simulate import advance_chain, particle_run


def _chain_case(n, horizon, full):
    def run(backend):
        spins = np.where(np.arange(n) % 2 == 0, 1, -1).astype(np.int8)
        res = advance_chain(spins, 1.0, 1.0, horizon, 0.0, 11, [n], full_recompute=full, backend=backend)
        return res.events, res.occ.copy()
    return run


def _particle_case(k, horizon):
    def run(backend):
        res = particle_run(k, 1.0, 1.0, horizon, seed=11, backend=backend)
        return res.events, np.array(sorted(res.frequencies.items()), dtype=object)
    return run


def _time(fn, backend, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(backend)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--horizon", type=float, default=200.0, help="simulated time per case")
    ap.add_argument("--repeat", type=int, default=3, help="timed repetitions (best is kept)")
    ap.add_argument("--json", help="also write the results here")
    args = ap.parse_args(argv)

    if kernels.BACKEND != "cython":
        print("compiled kernels not available; rebuild with `pip install -e . --no-build-isolation`",
              file=sys.stderr)
        return 1
    h = args.horizon
    cases = [
        ("chain n=16 full", _chain_case(16, h, True)),
        ("chain n=64 full", _chain_case(64, h, True)),
        ("chain n=256 incremental", _chain_case(256, h / 4, False)),
        ("particles k=2", _particle_case(2, 50 * h)),
        ("particles k=3", _particle_case(3, 50 * h)),
    ]
    rows = []
    print(f"{'case':26s} {'events':>10s} {'python s':>10s} {'cython s':>10s} {'speed-up':>9s}  agree")
    for name, fn in cases:
        tp, (ev_p, out_p) = _time(fn, "python", 1)
        tc, (ev_c, out_c) = _time(fn, "cython", args.repeat)
        if out_p.dtype == object:
            agree = ev_p == ev_c and len(out_p) == len(out_c) and all(
                a[0] == b[0] and abs(a[1] - b[1]) < 1e-12 for a, b in zip(out_p, out_c))
        else:
            agree = ev_p == ev_c and np.allclose(out_p, out_c, rtol=1e-12, atol=1e-12)
        rows.append({"case": name, "events": int(ev_c), "python_s": tp, "cython_s": tc,
                     "speedup": tp / tc, "agree": bool(agree)})
        print(f"{name:26s} {ev_c:10d} {tp:10.3f} {tc:10.4f} {tp / tc:9.1f}  {'yes' if agree else 'NO'}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0 if all(r["agree"] for r in rows) else 2


if __name__ == "__main__":
    sys.exit(main())
