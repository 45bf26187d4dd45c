"""Command-line experiment runner.

    pdlss list
    pdlss run  --config base.cfg --set t_max=100 --output runs/skew
    pdlss run  a.cfg b.cfg --jobs 2
    pdlss resume runs/skew --set t_max=1000

Configs are flat ``key = value`` files (``#`` starts a comment).  Layers
apply in order: recipe defaults, each ``--config``, the positional config,
then ``--set`` and the dedicated flags; the last assignment wins.  Keys the
recipe does not use are rejected.

Exit status: 0 success, 1 a verification check failed, 2 bad config or
usage, 3 the PDE run lost stability or positivity, 4 any other solver error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Optional

from .errors import (ConfigurationError, ConsistencyError, InstabilityError, PdlssError, PositivityError)

log = logging.getLogger("pdlss")

EXIT_OK, EXIT_CHECKS, EXIT_CONFIG, EXIT_UNSTABLE, EXIT_SOLVER = 0, 1, 2, 3, 4


# -- value types ------------------------------------------------------------------

def _float(s: str) -> float:
    v = float(s)
    if not math.isfinite(v):
        raise ValueError("must be finite")
    return v


def _int(s: str) -> int:
    return int(s, 0)


def _bool(s: str) -> bool:
    low = s.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected true or false")


def _auto(inner: Callable) -> Callable:
    def parse(s: str):
        return None if s.lower() == "auto" else inner(s)
    parse.__name__ = inner.__name__
    return parse


def _list(inner: Callable) -> Callable:
    def parse(s: str):
        items = [p.strip() for p in s.split(",") if p.strip()]
        if not items:
            raise ValueError("empty list")
        return [inner(p) for p in items]
    parse.__name__ = inner.__name__ + "_list"
    return parse


def _fraction(s: str) -> Fraction:
    v = Fraction(s)
    if v <= 0:
        raise ValueError("must be positive")
    return v


def _u64(s: str) -> int:
    v = int(s, 0)
    if not 0 <= v < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    return v


def _choice(*options: str) -> Callable:
    def parse(s: str):
        if s not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return s
    parse.__name__ = "choice"
    return parse


def _initial(s: str) -> str:
    if s in ("gaussian", "skew", "mixed_gaussians", "tracy_widom") or (s.startswith("file:") and len(s) > 5):
        return s
    raise ValueError("expected gaussian, skew, mixed_gaussians, tracy_widom or file:<path>")


def format_value(v: Any) -> str:
    if v is None:
        return "auto"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ",".join(format_value(x) for x in v)
    return str(v)


# -- schema ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Key:
    parse: Callable
    default: Any
    help: str


COMMON = {
    "recipe": Key(str, None, "recipe name"),
    "output_dir": Key(str, None, "artifact directory (default runs/<recipe>)"),
    "seed": Key(_u64, 0, "64-bit seed; stochastic recipes only consume it"),
}

PDE_KEYS = {
    "mu": Key(_float, 0.0, "bias mu in [-1, 1]"),
    "C": Key(_float, 0.2, "rate constant C in [0, 1/4]"),
    "eps": Key(_float, 0.1, "epsilon > 0"),
    "h": Key(_float, 0.0025, "time step"),
    "t_max": Key(_float, 1000.0, "final time"),
    "floor_tol": Key(_float, 1e-7, "tolerated negative excursion before the run aborts"),
    "half_width": Key(_float, 128.0, "half width l of the box [-l, l)"),
    "exponent": Key(_int, 10, "2**exponent grid points"),
    "initial": Key(_initial, "gaussian", "initial data"),
    "snapshot_stride": Key(_int, 4000, "steps between snapshot files"),
    "diag_stride": Key(_int, 40, "steps between diagnostics rows"),
    "checkpoint_every": Key(_int, 40000, "steps between checkpoints (0 disables)"),
    "compare_half_width": Key(_float, 10.0, "half width of the comparison grid"),
    "compare_exponent": Key(_int, 11, "comparison grid exponent"),
    "fit_t_min": Key(_auto(_float), None, "start of the power-law fit window (auto: 0.5 or 0.95 of t_max)"),
    "tw_reflect": Key(_auto(_bool), None, "mirror the GOE comparison profile (auto: K > 0)"),
}

STOCH_KEYS = {
    "lambda_plus": Key(_float, 1.0, "rate of + sites"),
    "lambda_minus": Key(_float, 1.0, "rate of - sites"),
    "backend": Key(_choice("auto", "cython", "python"), "auto", "kernel backend"),
}


@dataclass(frozen=True)
class Recipe:
    name: str
    summary: str
    keys: dict
    runner: str
    overrides: dict = field(default_factory=dict)

    def schema(self) -> dict:
        out = dict(COMMON)
        out.update(self.keys)
        return out

    def defaults(self) -> dict:
        d = {k: key.default for k, key in self.schema().items()}
        d.update(self.overrides)
        d["recipe"] = self.name
        return d


def _without(keys: dict, *names: str) -> dict:
    return {k: v for k, v in keys.items() if k not in names}


RECIPES = {r.name: r for r in [
    Recipe("gaussian-limit", "unbiased flow (mu = 0) from Gaussian data; distance to the standard Gaussian",
           PDE_KEYS, "pde", {"mu": 0.0, "initial": "gaussian"}),
    Recipe("skew-limit", "unbiased flow from skewed data; convergence to the Gaussian and variance growth",
           PDE_KEYS, "pde", {"mu": 0.0, "initial": "skew"}),
    Recipe("mixed-gaussians", "biased flow (mu = 1) from two shifted Gaussians; profile evolution",
           PDE_KEYS, "pde", {"mu": 1.0, "initial": "mixed_gaussians"}),
    Recipe("biased-tw", "biased flow from three initial data; distances to the GOE Tracy-Widom profile, "
           "mean, variance and Fisher scalings",
           {**_without(PDE_KEYS, "initial"),
            "initials": Key(_list(_initial), ["gaussian", "mixed_gaussians", "tracy_widom"],
                            "initial data, one sub-run each")},
           "biased_tw", {"mu": 1.0}),
    Recipe("exact-checks", "exact-solution residuals, RK4 order and special-function values",
           {"include_order": Key(_bool, True, "include the RK4 self-convergence study")}, "exact"),
    Recipe("invariant-tables", "exact rational laws of the first particles and their identities",
           {"lambdas": Key(_list(_fraction), [Fraction(1), Fraction(2), Fraction(3, 2)], "rates lambda"),
            "y_max": Key(_int, 12, "largest second-particle position"),
            "x_max": Key(_int, 40, "largest first-particle position for the normalisation check"),
            "forms": Key(_list(_choice("master", "printed")), ["master", "printed"], "recursions to tabulate"),
            "three_particle": Key(_bool, False, "also tabulate the experimental three-particle law"),
            "z_max": Key(_int, 9, "largest third-particle position")},
           "invariant"),
    Recipe("spin-sim", "exact stationary window laws against Gillespie simulation, closures and particle law",
           {**STOCH_KEYS,
            "sizes": Key(_list(_int), [2, 4, 6, 8], "window sizes"),
            "horizon": Key(_float, 1e5, "simulated time per window"),
            "burn_in": Key(_float, 1e3, "discarded initial time"),
            "tv_tol": Key(_float, 0.02, "allowed total variation distance"),
            "particle_horizon": Key(_float, 1e5, "simulated time of the two-particle run (0 skips it)")},
           "spin"),
    Recipe("magnetization-scaling", "stationary mean and variance of the magnetisation against window size",
           {**STOCH_KEYS,
            "mode": Key(_choice("unbiased", "biased"), "unbiased", "rate regime"),
            "sizes": Key(_list(_int), [16, 32, 64, 128], "window sizes"),
            "horizon": Key(_float, 2e3, "simulated time per replica"),
            "burn_in": Key(_auto(_float), None, "discarded initial time (auto: 0.1 horizon)"),
            "replicas": Key(_int, 4, "independent chains"),
            "duality_samples": Key(_int, 64, "configurations checked for the particle duality")},
           "scaling"),
]}

PDE_RECIPES = {"gaussian-limit", "skew-limit", "mixed-gaussians", "biased-tw"}


# -- parsing ------------------------------------------------------------------------------

def parse_assignment(text: str, where: str) -> tuple[str, str]:
    if "=" not in text:
        raise ConfigurationError(f"{where}: expected key = value, got {text!r}")
    key, value = text.split("=", 1)
    key, value = key.strip(), value.strip()
    if not key:
        raise ConfigurationError(f"{where}: missing key")
    return key, value


def read_config_file(path) -> list[tuple[str, str, str]]:
    """``(key, value, location)`` triples in file order."""
    out = []
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
    for i, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if line:
            where = f"{path}:{i}"
            key, value = parse_assignment(line, where)
            out.append((key, value, where))
    return out


def build_config(assignments: list[tuple[str, str, str]]) -> dict:
    """Typed config from raw assignments layered on the recipe defaults."""
    recipe = None
    for key, value, _ in assignments:
        if key == "recipe":
            recipe = value
    if recipe is None:
        raise ConfigurationError("missing required key 'recipe'")
    if recipe not in RECIPES:
        raise ConfigurationError(f"unknown recipe {recipe!r}; choose from {', '.join(RECIPES)}")
    chosen = RECIPES[recipe]
    schema = chosen.schema()
    cfg = chosen.defaults()
    for key, value, where in assignments:
        if key not in schema:
            raise ConfigurationError(f"{where}: unknown key {key!r} for recipe {recipe}")
        try:
            cfg[key] = schema[key].parse(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigurationError(f"{where}: bad value for {key!r}: {value!r} ({exc})") from None
    if cfg["output_dir"] is None:
        cfg["output_dir"] = str(Path("runs") / recipe)
    validate(cfg)
    return cfg


def validate(cfg: dict) -> None:
    r = cfg["recipe"]
    if r in PDE_RECIPES:
        for k in ("snapshot_stride", "diag_stride"):
            if cfg[k] < 1:
                raise ConfigurationError(f"{k!r} must be a positive integer")
        for k in ("snapshot_stride", "checkpoint_every"):
            if cfg[k] % cfg["diag_stride"]:
                raise ConfigurationError(f"{k!r} must be a multiple of diag_stride")
        if cfg["checkpoint_every"] < 0:
            raise ConfigurationError("'checkpoint_every' must be non-negative")
    if r in ("spin-sim", "magnetization-scaling"):
        if not (cfg["lambda_plus"] > 0 and cfg["lambda_minus"] > 0):
            raise ConfigurationError("'lambda_plus' and 'lambda_minus' must be positive")
        if cfg["horizon"] <= 0:
            raise ConfigurationError("'horizon' must be positive")
    if r == "biased-tw" and len(set(cfg["initials"])) != len(cfg["initials"]):
        raise ConfigurationError("'initials' must not repeat")


def config_to_text(cfg: dict) -> str:
    lines = [f"recipe = {cfg['recipe']}"]
    lines += [f"{k} = {format_value(v)}" for k, v in sorted(cfg.items()) if k != "recipe"]
    return "\n".join(lines) + "\n"


def config_echo(cfg: dict) -> dict:
    """JSON-safe echo that parses back to ``cfg`` via :func:`config_from_echo`."""
    return {k: format_value(v) for k, v in cfg.items()}


def config_from_echo(echo: dict) -> dict:
    return build_config([(k, v, "echo") for k, v in echo.items()])


# -- runners ------------------------------------------------------------------------------

class ChecksFailed(Exception):
    pass


def _solver_params(cfg: dict):
    from .pde import SolverParams

    return SolverParams(mu=cfg["mu"], C=cfg["C"], eps=cfg["eps"], h=cfg["h"], t_max=cfg["t_max"],
                        floor_tol=cfg["floor_tol"])


def _pde_settings(cfg: dict, initial: str):
    from .experiments import PdeSettings

    p = _solver_params(cfg)
    return PdeSettings(
        params=p, half_width=cfg["half_width"], exponent=cfg["exponent"], initial=initial,
        snapshot_stride=cfg["snapshot_stride"], diag_stride=cfg["diag_stride"],
        compare_half_width=cfg["compare_half_width"], compare_exponent=cfg["compare_exponent"],
        gauss=True, tw=p.mu != 0.0, tw_reflect=cfg["tw_reflect"],
        checkpoint_every=cfg["checkpoint_every"], fit_t_min=cfg["fit_t_min"],
    )


def _raise_failure(summary: dict) -> None:
    fail = summary.get("failure")
    if fail:
        if fail["type"] in ("InstabilityError", "PositivityError"):
            raise InstabilityError(f"{fail['type']}: {fail['message']}", t=fail.get("t"))
        raise PdlssError(fail["message"])


def _pde_one(cfg: dict, initial: str, out: Path, resume: bool) -> dict:
    from .experiments import load_checkpoint, run_pde

    prior = None
    ckpt = out / "checkpoint.npz"
    if resume and ckpt.exists():
        prior = load_checkpoint(ckpt)
        log.info("resuming %s from step %d", out, prior["step"])
    outcome = run_pde(_pde_settings(cfg, initial), out, config_echo(cfg), resume_from=prior)
    return outcome.summary


def run_pde_recipe(cfg: dict, jobs: int = 1, resume: bool = False) -> dict:
    out = Path(cfg["output_dir"])
    summary = _pde_one(cfg, cfg["initial"], out, resume)
    _raise_failure(summary)
    return summary


def _biased_child(args):
    cfg, initial, out, resume = args
    _setup_logging(False)
    return initial, _pde_one(cfg, initial, Path(out), resume)


def run_biased_tw(cfg: dict, jobs: int = 1, resume: bool = False) -> dict:
    from .experiments import write_json

    out = Path(cfg["output_dir"])
    tasks = [(cfg, ini, str(out / ini), resume) for ini in cfg["initials"]]
    started = time.perf_counter()
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            results = dict(pool.map(_biased_child, tasks))
    else:
        results = dict(map(_biased_child, tasks))
    finals = {ini: s["fits"].get("final", {}).get("sup_dist_tw") for ini, s in results.items()}
    valid = [v for v in finals.values() if v is not None]
    summary = {
        "runs": {ini: {"fits": s["fits"], "failure": s["failure"], "completed": s["completed"],
                       "runtime_seconds": s["runtime_seconds"]} for ini, s in results.items()},
        "final_sup_dist_tw": finals,
        "sup_dist_tw_spread": (max(valid) - min(valid)) if len(valid) == len(finals) else None,
        "runtime_seconds": time.perf_counter() - started,
        "config": config_echo(cfg),
    }
    failures = [s["failure"] for s in results.values() if s["failure"]]
    summary["failure"] = failures[0] if failures else None
    write_json(out / "summary.json", summary)
    _raise_failure(summary)
    return summary


def run_exact(cfg: dict, jobs: int = 1, resume: bool = False) -> dict:
    from .checks import exact_battery, rk4_errors
    from .experiments import write_json

    out = Path(cfg["output_dir"])
    started = time.perf_counter()
    checks = exact_battery(include_order=cfg["include_order"])
    summary = {"checks": [c.as_dict() for c in checks], "config": config_echo(cfg)}
    if cfg["include_order"]:
        errs, slope = rk4_errors()
        summary["rk4"] = {"steps": [0.01, 0.005, 0.0025], "errors": errs, "order": slope}
    summary["runtime_seconds"] = time.perf_counter() - started
    write_json(out / "summary.json", summary)
    for c in checks:
        print(c.line())
    if not all(c.passed for c in checks):
        raise ChecksFailed("exact checks failed")
    return summary


def _printed_raw(lam, y_max):
    from . import invariant as inv

    return inv._printed_layers(y_max, lam, inv.u1_table(y_max, lam))


def _write_raw(path: Path, lam, u2: dict) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        fh.write(f"# lambda={lam} form=printed raw recursion values (may be negative)\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["kind", "x", "y", "numerator", "denominator", "decimal"])
        for (x, y), v in sorted(u2.items(), key=lambda kv: (kv[0][1], kv[0][0])):
            w.writerow(["u2", x, y, v.numerator, v.denominator, f"{float(v):.17g}"])


def run_invariant(cfg: dict, jobs: int = 1, resume: bool = False) -> dict:
    from . import invariant as inv
    from .experiments import write_json

    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    y_max = cfg["y_max"]
    checks, tables = [], {}
    for lam in cfg["lambdas"]:
        tag = str(lam).replace("/", "_")
        closed = inv.closed_forms(lam)
        checks.append({"name": f"tail identity x<={cfg['x_max']}", "lambda": str(lam),
                       "passed": all(inv.tail_identity(x, lam) for x in range(1, cfg["x_max"] + 1)),
                       "normalization_gap": inv.normalization_gap(cfg["x_max"], lam)})
        for form in cfg["forms"]:
            entry = {"lambda": str(lam), "form": form}
            try:
                table = inv.u2_table(y_max, lam, form)
            except ConsistencyError as exc:
                raw = _printed_raw(lam, y_max) if form == "printed" else {}
                if raw:
                    _write_raw(out / f"u_lambda_{tag}_{form}.csv", lam, raw)
                neg = sorted(k for k, v in raw.items() if v < 0)
                checks.append({**entry, "name": "table entries in [0, 1]", "passed": False,
                               "detail": str(exc), "first_negative": list(neg[0]) if neg else None})
                u2 = raw
            else:
                table.to_csv(out / f"u_lambda_{tag}_{form}.csv")
                u2 = table.u2
                checks.append({**entry, "name": "table entries in [0, 1]", "passed": True})
                for x in (1, 2):
                    try:
                        defects = [inv.restriction_check(table, x, y) for y in range(x + 1, y_max + 1)]
                        ok = all(a > b for a, b in zip(defects, defects[1:])) and defects[-1] > 0
                        detail = f"last defect {float(defects[-1]):.3e}"
                    except ConsistencyError as exc:
                        ok, detail = False, str(exc)
                    checks.append({**entry, "name": f"restriction defect x={x} positive and decreasing",
                                   "passed": ok, "detail": detail})
                worst = max(abs(inv.equation_residual(table, x, y))
                            for y in range(2, y_max + 1) for x in range(1, y))
                checks.append({**entry, "name": "layer equation residual zero", "passed": worst == 0})
            for key, value in closed.items():
                got = u2.get(key)
                checks.append({**entry, "name": f"u{key} closed form", "passed": got == value,
                               "closed_form": str(value), "table": None if got is None else str(got)})
            tables[f"{lam}/{form}"] = {f"{k[0]},{k[1]}": str(u2[k]) for k in closed if k in u2}
        if cfg["three_particle"]:
            u3 = inv.u3_table(cfg["z_max"], lam, experimental=True)
            tables[f"{lam}/three_particle_states"] = len(u3)
    summary = {"checks": checks, "values": tables, "config": config_echo(cfg)}
    write_json(out / "summary.json", summary)
    for c in checks:
        tag = f"lambda={c['lambda']}" + (f" form={c['form']}" if "form" in c else "")
        print(f"{'PASS' if c['passed'] else 'FAIL'} {c['name']} [{tag}]")
    if not all(c["passed"] for c in checks):
        raise ChecksFailed("invariant checks failed")
    return summary


def run_spin(cfg: dict, jobs: int = 1, resume: bool = False) -> dict:
    import csv

    from .experiments import write_json
    from .invariant import u2_table
    from .stochastic import SpinChain, closure_discrepancy, exact_stationary, gillespie_run, particle_run
    from .stochastic.simulate import spawn_seeds, total_variation

    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    lp, lm = cfg["lambda_plus"], cfg["lambda_minus"]
    backend = None if cfg["backend"] == "auto" else cfg["backend"]
    seeds = spawn_seeds(cfg["seed"], len(cfg["sizes"]) + 1)
    checks, rows = [], []
    for n, seed in zip(cfg["sizes"], seeds):
        exact = exact_stationary(n, lp, lm, with_H=False)
        chain = SpinChain.alternating(n, lambda_plus=lp, lambda_minus=lm)
        mc = gillespie_run(chain, cfg["horizon"], cfg["burn_in"], seed, backend=backend)
        tv = total_variation(exact.W, mc.W)
        flux = max(abs(exact.U_plus[k] - exact.U_minus[k]) for k in exact.U_plus)
        checks.append({"name": f"W_{n} total variation", "value": tv, "limit": cfg["tv_tol"],
                       "passed": tv <= cfg["tv_tol"]})
        checks.append({"name": f"U+ = U- at n={n}", "value": flux, "limit": 1e-10, "passed": flux <= 1e-10})
        for m in exact.W:
            rows.append([n, m, f"{exact.W[m]:.17g}", f"{mc.W.get(m, 0.0):.17g}"])
    with open(out / "window_laws.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "m", "exact", "simulated"])
        w.writerows(rows)
    closure_rows = []
    for n in [s for s in cfg["sizes"] if s <= 13]:
        rep = closure_discrepancy(n, lp, lm)
        d1 = rep.max_discrepancy(1)
        checks.append({"name": f"first closure exact at n={n}", "value": d1, "limit": 1e-10,
                       "passed": d1 <= 1e-10})
        closure_rows += [[n, r["equation"], r["m"], f"{r['lhs']:.17g}", f"{r['rhs']:.17g}",
                          f"{r['discrepancy']:.17g}"] for r in rep.rows]
    with open(out / "closures.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "equation", "m", "lhs", "rhs", "discrepancy"])
        w.writerows(closure_rows)
    particle = None
    if cfg["particle_horizon"] > 0 and lp == lm:
        pr = particle_run(2, lp, lm, cfg["particle_horizon"], seeds[-1], backend=backend)
        exact12 = float(u2_table(3, Fraction(lp).limit_denominator(10**6)).u2[(1, 2)])
        particle = {"u12_simulated": pr[(1, 2)], "u12_exact": exact12}
    summary = {"checks": checks, "particle": particle, "config": config_echo(cfg)}
    write_json(out / "summary.json", summary)
    for c in checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'} {c['name']}: {c['value']:.3g} (limit {c['limit']:g})")
    if not all(c["passed"] for c in checks):
        raise ChecksFailed("spin checks failed")
    return summary


def run_scaling(cfg: dict, jobs: int = 1, resume: bool = False) -> dict:
    from .stochastic import magnetization_scaling

    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    rep = magnetization_scaling(
        cfg["mode"], cfg["sizes"], cfg["lambda_plus"], cfg["lambda_minus"], cfg["horizon"], cfg["seed"],
        burn_in=cfg["burn_in"], replicas=cfg["replicas"], duality_samples=cfg["duality_samples"],
        backend=None if cfg["backend"] == "auto" else cfg["backend"],
    )
    rep.to_csv(out / "scaling.csv")
    data = rep.to_json()
    data["config"] = config_echo(cfg)
    from .experiments import write_json

    write_json(out / "summary.json", data)
    print(rep.header())
    for r in rep.rows:
        print(f"n={r.n:4d} mean={r.mean:+.4f} variance={r.variance:.4f} mean/n={r.mean_over_n:+.4f}"
              + (" (flagged)" if r.flagged else ""))
    if rep.gamma is not None:
        print(f"variance exponent {rep.gamma:.4f}")
    return data


RUNNERS = {"pde": run_pde_recipe, "biased_tw": run_biased_tw, "exact": run_exact, "invariant": run_invariant,
           "spin": run_spin, "scaling": run_scaling}


def execute(cfg: dict, jobs: int = 1, resume: bool = False) -> int:
    """Run one config; returns the exit status."""
    out = Path(cfg["output_dir"])
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.json").write_text(json.dumps(config_echo(cfg), indent=2, sort_keys=True) + "\n")
        RUNNERS[RECIPES[cfg["recipe"]].runner](cfg, jobs=jobs, resume=resume)
    except ChecksFailed as exc:
        sys.stdout.flush()
        log.error("%s: %s", cfg["recipe"], exc)
        return EXIT_CHECKS
    except ConfigurationError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except (InstabilityError, PositivityError) as exc:
        log.error("%s: solver lost stability or positivity: %s (partial artifacts in %s)",
                  cfg["recipe"], exc, out)
        return EXIT_UNSTABLE
    except (PdlssError, ArithmeticError) as exc:
        log.error("%s: %s: %s", cfg["recipe"], type(exc).__name__, exc)
        return EXIT_SOLVER
    except OSError as exc:
        log.error("cannot write artifacts in %s: %s", out, exc)
        return EXIT_CONFIG
    return EXIT_OK


def _execute_child(args) -> int:
    cfg, resume = args
    _setup_logging(False)
    return execute(cfg, 1, resume)


# -- catalog ----------------------------------------------------------------------------------

def catalog() -> str:
    lines = []
    for r in RECIPES.values():
        lines.append(f"{r.name} -> {r.summary}")
        d = r.defaults()
        shown = [f"{k}={format_value(d[k])}" for k in r.keys if k in d]
        lines.append("    defaults: " + " ".join(shown))
    return "\n".join(lines)


# -- entry point --------------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(f"{self.prog}: error: {message}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pdlss", description="Run the numerical and stochastic experiments.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("list", help="show the recipe catalog")
    run = sub.add_parser("run", help="run one or more configs")
    run.add_argument("configs", nargs="*", help="independent config files, each its own run")
    res = sub.add_parser("resume", help="continue PDE runs from their checkpoints")
    res.add_argument("dirs", nargs="+", help="output directories of earlier runs")
    for q in (run, res):
        q.add_argument("--set", dest="sets", action="append", default=[], metavar="KEY=VALUE",
                       help="override one key (repeatable)")
        q.add_argument("--jobs", type=int, default=1, help="concurrent processes")
    run.add_argument("--config", dest="bases", action="append", default=[], metavar="PATH",
                     help="layered config file (repeatable)")
    run.add_argument("--output", help="output directory (single run only)")
    run.add_argument("--seed", type=_u64, help="64-bit seed")
    return p


def _setup_logging(verbose: bool) -> None:
    root = logging.getLogger()
    if not root.handlers:
        logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO,
                            format="%(asctime)s %(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _gather_run(args) -> list[dict]:
    base = []
    for path in args.bases:
        base += read_config_file(path)
    sources = [read_config_file(p) for p in args.configs] or [[]]
    if args.output and len(sources) > 1:
        raise ConfigurationError("--output needs exactly one run; set output_dir in each config instead")
    cfgs = []
    for src in sources:
        tail = [(*parse_assignment(s, "--set"), "--set") for s in args.sets]
        if args.output:
            tail.append(("output_dir", args.output, "--output"))
        if args.seed is not None:
            tail.append(("seed", str(args.seed), "--seed"))
        cfgs.append(build_config(base + src + tail))
    dirs = [c["output_dir"] for c in cfgs]
    if len(set(dirs)) != len(dirs):
        raise ConfigurationError("concurrent runs must write to distinct output directories")
    return cfgs


def _gather_resume(args) -> list[dict]:
    cfgs = []
    for d in args.dirs:
        path = Path(d) / "config.json"
        try:
            echo = json.loads(path.read_text())
        except (OSError, ValueError) as exc:
            raise ConfigurationError(f"cannot resume {d}: {exc}") from None
        extra = [(*parse_assignment(s, "--set"), "--set") for s in args.sets]
        if any(k != "t_max" for k, _, _ in extra):
            raise ConfigurationError("resume only accepts --set t_max=...")
        cfg = build_config([(k, v, str(path)) for k, v in echo.items()] + extra)
        if cfg["recipe"] not in PDE_RECIPES:
            raise ConfigurationError(f"recipe {cfg['recipe']} has no checkpoints to resume")
        cfg["output_dir"] = str(d)
        cfgs.append(cfg)
    return cfgs


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code in (0, None):
            return EXIT_OK
        if isinstance(exc.code, str):
            print(exc.code, file=sys.stderr)
        return EXIT_CONFIG
    _setup_logging(args.verbose)
    if args.command == "list":
        print(catalog())
        return EXIT_OK
    if args.jobs < 1:
        log.error("--jobs must be at least 1")
        return EXIT_CONFIG
    try:
        cfgs = _gather_run(args) if args.command == "run" else _gather_resume(args)
    except ConfigurationError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    resume = args.command == "resume"
    if len(cfgs) == 1:
        return execute(cfgs[0], args.jobs, resume)
    if args.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            codes = list(pool.map(_execute_child, [(c, resume) for c in cfgs]))
    else:
        codes = [execute(c, 1, resume) for c in cfgs]
    return max(codes)


if __name__ == "__main__":
    sys.exit(main())
