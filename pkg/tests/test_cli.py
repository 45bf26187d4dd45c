import json
from fractions import Fraction

import pytest

from pdlss import cli
from pdlss.errors import ConfigurationError

SMALL = ["half_width=40", "exponent=8", "snapshot_stride=40", "diag_stride=20", "checkpoint_every=40",
         "compare_exponent=9"]


def _sets(items):
    out = []
    for s in items:
        out += ["--set", s]
    return out


def test_defaults_and_types():
    cfg = cli.build_config([("recipe", "gaussian-limit", "x")])
    assert cfg["h"] == 0.0025 and cfg["exponent"] == 10 and cfg["fit_t_min"] is None
    assert cfg["output_dir"] == "runs/gaussian-limit"
    cfg = cli.build_config([("recipe", "invariant-tables", "x"), ("lambdas", "1, 2, 3/2", "x")])
    assert cfg["lambdas"] == [1, 2, Fraction(3, 2)]


@pytest.mark.parametrize("pairs, fragment", [
    ([], "recipe"),
    ([("recipe", "nope", "a")], "unknown recipe"),
    ([("recipe", "skew-limit", "f:3"), ("tmax", "5", "f:4")], "unknown key 'tmax' for recipe skew-limit"),
    ([("recipe", "skew-limit", "f:3"), ("h", "fast", "f:4")], "f:4"),
    ([("recipe", "skew-limit", "a"), ("snapshot_stride", "30", "a")], "multiple of diag_stride"),
    ([("recipe", "spin-sim", "a"), ("lambda_plus", "0", "a")], "positive"),
    ([("recipe", "biased-tw", "a"), ("initials", "gaussian,gaussian", "a")], "repeat"),
    ([("recipe", "exact-checks", "a"), ("mu", "0.5", "a")], "unknown key"),
])
def test_config_errors(pairs, fragment):
    with pytest.raises(ConfigurationError, match=fragment):
        cli.build_config(pairs)


def test_config_file_layering(tmp_path):
    base = tmp_path / "base.cfg"
    base.write_text("# shared\nrecipe = skew-limit\nt_max = 10   # short\nmu = 0.5\n")
    top = tmp_path / "top.cfg"
    top.write_text("t_max = 20\n")
    args = cli.build_parser().parse_args(["run", str(top), "--config", str(base), "--set", "mu=-0.5",
                                          "--output", str(tmp_path / "o"), "--seed", "7"])
    (cfg,) = cli._gather_run(args)
    assert cfg["t_max"] == 20 and cfg["mu"] == -0.5 and cfg["seed"] == 7
    assert cfg["output_dir"] == str(tmp_path / "o")


def test_config_file_line_numbers(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("recipe = skew-limit\n\nnot an assignment\n")
    with pytest.raises(ConfigurationError, match=r"bad.cfg:3"):
        cli.read_config_file(bad)


@pytest.mark.parametrize("recipe", list(cli.RECIPES))
def test_echo_round_trip(recipe):
    cfg = cli.build_config([("recipe", recipe, "x")])
    assert cli.config_from_echo(json.loads(json.dumps(cli.config_echo(cfg)))) == cfg
    again = [cli.parse_assignment(line, "t") for line in cli.config_to_text(cfg).splitlines()]
    assert cli.build_config([(k, v, "t") for k, v in again]) == cfg


def test_list(capsys):
    assert cli.main(["list"]) == 0
    out = capsys.readouterr().out
    for name in cli.RECIPES:
        assert f"{name} -> " in out
    assert "defaults:" in out


def test_usage_errors(tmp_path):
    assert cli.main(["run", "--bogus"]) == cli.EXIT_CONFIG
    assert cli.main([]) == cli.EXIT_CONFIG
    assert cli.main(["run", "--set", "recipe=skew-limit", "--set", "tmax=3"]) == cli.EXIT_CONFIG
    assert cli.main(["run", str(tmp_path / "missing.cfg")]) == cli.EXIT_CONFIG
    assert cli.main(["run", "--set", "recipe=skew-limit", "--jobs", "0"]) == cli.EXIT_CONFIG
    assert cli.main(["resume", str(tmp_path)]) == cli.EXIT_CONFIG


def test_exact_checks_exit_zero(tmp_path, capsys):
    out = tmp_path / "exact"
    code = cli.main(["run", "--set", "recipe=exact-checks", "--set", "include_order=false", "--output", str(out)])
    assert code == cli.EXIT_OK
    printed = capsys.readouterr().out
    assert "PASS" in printed and "FAIL" not in printed
    assert (out / "config.json").exists()


def test_invariant_tables_report_failures(tmp_path):
    # the quoted closed forms do not match the stationary tables
    out = tmp_path / "inv"
    code = cli.main(["run", "--set", "recipe=invariant-tables", "--set", "y_max=8", "--set", "x_max=20",
                     "--set", "three_particle=false", "--output", str(out)])
    assert code == cli.EXIT_CHECKS
    assert (out / "u_lambda_1_master.csv").exists()


def test_pde_run_artifacts(tmp_path):
    out = tmp_path / "g"
    code = cli.main(["run", "--set", "recipe=gaussian-limit", "--set", "t_max=0.5", *_sets(SMALL),
                     "--output", str(out)])
    assert code == cli.EXIT_OK
    summary = json.loads((out / "summary.json").read_text())
    assert summary["completed"] and summary["final_step"] == 200
    assert (out / "diagnostics.csv").exists() and (out / "snapshots" / "t_0.5.csv").exists()


def test_pde_instability_exit(tmp_path):
    out = tmp_path / "bad"
    code = cli.main(["run", "--set", "recipe=gaussian-limit", "--set", "mu=1", "--set", "h=0.05",
                     "--set", "t_max=5", "--set", "half_width=20", "--set", "snapshot_stride=10",
                     "--set", "diag_stride=10", "--set", "checkpoint_every=0", "--output", str(out)])
    assert code == cli.EXIT_UNSTABLE
    summary = json.loads((out / "summary.json").read_text())
    assert not summary["completed"] and summary["failure"]["t"] >= 0


def test_resume_is_bit_identical(tmp_path):
    full, part = tmp_path / "full", tmp_path / "part"
    common = ["--set", "recipe=skew-limit", "--set", "mu=1", *_sets(SMALL)]
    assert cli.main(["run", *common, "--set", "t_max=1", "--output", str(full)]) == 0
    assert cli.main(["run", *common, "--set", "t_max=0.5", "--output", str(part)]) == 0
    assert cli.main(["resume", str(part), "--set", "t_max=1"]) == 0
    assert (full / "diagnostics.csv").read_bytes() == (part / "diagnostics.csv").read_bytes()
    names = sorted(p.name for p in (full / "snapshots").iterdir())
    assert names == sorted(p.name for p in (part / "snapshots").iterdir())
    for name in names:
        assert (full / "snapshots" / name).read_bytes() == (part / "snapshots" / name).read_bytes()
    assert cli.main(["resume", str(part), "--set", "mu=0"]) == cli.EXIT_CONFIG


def test_parallel_configs(tmp_path):
    cfgs = []
    for i in range(2):
        p = tmp_path / f"c{i}.cfg"
        p.write_text(f"recipe = exact-checks\ninclude_order = false\noutput_dir = {tmp_path / f'o{i}'}\n")
        cfgs.append(str(p))
    assert cli.main(["run", *cfgs, "--jobs", "2"]) == 0
    assert (tmp_path / "o0" / "config.json").exists() and (tmp_path / "o1" / "config.json").exists()
    same = tmp_path / "same.cfg"
    same.write_text("recipe = exact-checks\n")
    assert cli.main(["run", str(same), str(same)]) == cli.EXIT_CONFIG
