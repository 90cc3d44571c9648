"""CLI parsing, exit codes, output files, and bit-for-bit reproducibility."""

import filecmp
import json
import os
from importlib.resources import files

import jsonschema
import pytest

from identlab import cli
from identlab.errors import ConfigError

SCHEMA = json.loads(files("identlab").joinpath("schemas/summary.schema.json").read_text())


def _load_summary(out):
    with open(os.path.join(out, "summary.json")) as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# parse_config
# ---------------------------------------------------------------------------


class TestParseConfig:
    def test_defaults(self, monkeypatch):
        monkeypatch.delenv("IDENT_LAB_OUT", raising=False)
        cfg = cli.parse_config(["slope"])
        assert cfg.command == "slope"
        assert cfg.h == 0.01 and cfg.T == 10.0 and cfg.alpha == 1.0
        assert cfg.out == "ident-lab-out"
        assert cfg.scheme == "implicit" and cfg.iterations == 30

    def test_flag_beats_file_beats_env(self, tmp_path, monkeypatch):
        cfgfile = tmp_path / "c.json"
        cfgfile.write_text(json.dumps({"h": 0.05, "out": "from-file", "x0": [0.5, 0.25]}))
        monkeypatch.setenv("IDENT_LAB_OUT", "from-env")

        cfg = cli.parse_config(["flow", "--config", str(cfgfile), "--h", "0.02"])
        assert cfg.h == 0.02               # flag wins
        assert cfg.out == "from-file"      # file beats env
        assert cfg.x0 == (0.5, 0.25)       # list form from the file

        cfg2 = cli.parse_config(["flow", "--config", str(cfgfile), "--out", "from-flag"])
        assert cfg2.out == "from-flag" and cfg2.h == 0.05

        cfg3 = cli.parse_config(["flow"])
        assert cfg3.out == "from-env"      # env fills only `out`

    def test_unknown_config_key(self, tmp_path):
        bad = tmp_path / "c.json"
        bad.write_text(json.dumps({"stepsize": 0.1}))
        with pytest.raises(ConfigError, match="stepsize"):
            cli.parse_config(["flow", "--config", str(bad)])

    def test_malformed_and_non_object_config(self, tmp_path):
        bad = tmp_path / "c.json"
        bad.write_text("{not json")
        with pytest.raises(ConfigError, match="malformed"):
            cli.parse_config(["flow", "--config", str(bad)])
        bad.write_text("[1, 2]")
        with pytest.raises(ConfigError, match="flat JSON object"):
            cli.parse_config(["flow", "--config", str(bad)])

    def test_range_validation(self):
        with pytest.raises(ConfigError, match="h must be in"):
            cli.parse_config(["flow", "--h", "0.5"])
        with pytest.raises(ConfigError, match="T must be in"):
            cli.parse_config(["flow", "--T", "0"])
        with pytest.raises(ConfigError, match="seed"):
            cli.parse_config(["flow", "--seed", "-1"])
        with pytest.raises(ConfigError, match="iterations"):
            cli.parse_config(["prox", "--iterations", "0"])
        with pytest.raises(ConfigError, match="x0"):
            cli.parse_config(["flow", "--x0", "1.0,oops"])

    def test_unknown_command_exits_via_argparse(self):
        with pytest.raises(SystemExit):
            cli.parse_config(["tea"])


# ---------------------------------------------------------------------------
# exit codes
# ---------------------------------------------------------------------------


def test_exit_2_config_errors(tmp_path):
    out = str(tmp_path / "o")
    # unknown function is a config error, not a solver error
    assert cli.main(["slope", "--function", "nope", "--x0", "0,0", "--out", out]) == 2
    # missing x0
    assert cli.main(["slope", "--function", "paper-main", "--out", out]) == 2
    # wrong x0 dimension
    assert cli.main(["slope", "--function", "paper-main", "--x0", "0.1", "--out", out]) == 2
    # sqrt-quartic has no registered identifiable set for growth
    assert cli.main(["growth", "--function", "sqrt-quartic", "--out", out]) == 2


def test_exit_3_divergent_flow(tmp_path, capsys):
    out = str(tmp_path / "o")
    rc = cli.main([
        "flow", "--function", "min-uv", "--x0", "0,0.7",
        "--h", "0.1", "--T", "20", "--out", out,
    ])
    assert rc == 3
    assert "solver error" in capsys.readouterr().err


def test_exit_4_failed_growth_check(tmp_path, capsys):
    out = str(tmp_path / "o")
    rc = cli.main([
        "growth", "--function", "paper-main", "--eps", "6", "--out", out,
    ])
    assert rc == 4
    assert "FAILED" in capsys.readouterr().err
    # the summary is still written for inspection
    s = _load_summary(out)
    assert s["results"]["linear_growth"]["passed"] is False


def test_growth_passes_below_modulus(tmp_path):
    out = str(tmp_path / "o")
    rc = cli.main(["growth", "--function", "paper-main", "--eps", "4", "--out", out])
    assert rc == 0
    s = _load_summary(out)
    assert s["results"]["linear_growth"]["passed"] is True
    assert s["results"]["transfer"]["agree"] is True


# ---------------------------------------------------------------------------
# command outputs
# ---------------------------------------------------------------------------


def test_flow_outputs(tmp_path):
    out = str(tmp_path / "o")
    rc = cli.main([
        "flow", "--function", "paper-main", "--x0", "0.8,0.9",
        "--h", "0.02", "--T", "1", "--gnuplot", "--out", out,
    ])
    assert rc == 0
    for name in ("summary.json", "flow.csv", "flow.gp", "manifold.csv"):
        assert os.path.exists(os.path.join(out, name)), name
    s = _load_summary(out)
    jsonschema.validate(s, SCHEMA)
    assert s["command"] == "flow"
    assert s["results"]["identification_time"] is not None
    # the gnuplot script must reference data files relative to itself
    gp = open(os.path.join(out, "flow.gp")).read()
    assert "'flow.csv'" in gp and out not in gp


def test_riem_flow_outputs(tmp_path):
    out = str(tmp_path / "o")
    rc = cli.main([
        "riem-flow", "--function", "paper-main", "--x0", "0.8,0.64",
        "--h", "0.01", "--T", "1", "--out", out,
    ])
    assert rc == 0
    assert os.path.exists(os.path.join(out, "riem_flow.csv"))
    s = _load_summary(out)
    assert s["results"]["scheme"] == "riemannian-rk4"


def test_prox_outputs(tmp_path):
    out = str(tmp_path / "o")
    rc = cli.main([
        "prox", "--function", "paper-main", "--x0", "0.7,0.49",
        "--alpha", "8", "--iterations", "10", "--out", out,
    ])
    assert rc == 0
    assert os.path.exists(os.path.join(out, "prox_seq.csv"))
    s = _load_summary(out)
    assert s["results"]["iterations"] == 10
    assert s["parameters"]["alpha"] == 8


def test_slope_reports_relative_error(tmp_path):
    out = str(tmp_path / "o")
    rc = cli.main(["slope", "--function", "abs-plus-square", "--x0", "0.5,0.4", "--out", out])
    assert rc == 0
    s = _load_summary(out)
    assert s["results"]["rel_err"] <= 1e-3
    jsonschema.validate(s, SCHEMA)


def test_modulus_registered_and_horn(tmp_path):
    out1 = str(tmp_path / "a")
    assert cli.main(["modulus", "--function", "paper-main", "--out", out1]) == 0
    s = _load_summary(out1)
    assert s["results"]["registered_modulus"] == 5.0
    assert s["results"]["set"] == "parabola"

    out2 = str(tmp_path / "b")
    assert cli.main([
        "modulus", "--function", "sqrt-quartic", "--x0", "0,0",
        "--horn-alpha", "1.0", "--out", out2,
    ]) == 0
    s2 = _load_summary(out2)
    assert "registered_modulus" not in s2["results"]
    assert s2["results"]["estimate"] >= 0.9 * 0.5


def test_kl_outputs(tmp_path):
    out = str(tmp_path / "o")
    rc = cli.main(["kl", "--function", "paper-main", "--delta", "0.01", "--out", out])
    assert rc == 0
    s = _load_summary(out)
    jsonschema.validate(s, SCHEMA)
    r = s["results"]
    assert abs(r["exponent"] - 0.5) <= 0.05
    assert r["equivalence"]["agree"] is True
    assert "samples" not in r["probe_full"]  # kept compact


def test_pln_outputs_and_determinism(tmp_path):
    a, b = str(tmp_path / "a"), str(tmp_path / "b")
    argv = ["pln", "--function", "abs-plus-square", "--delta", "0.5", "--seed", "3"]
    assert cli.main(argv + ["--out", a]) == 0
    assert cli.main(argv + ["--out", b]) == 0
    sa, sb = _load_summary(a), _load_summary(b)
    assert sa["results"]["rho_max"] <= 1e-9
    assert sa["results"]["claimed_pln"] is True
    # bit-for-bit equal output files
    assert open(os.path.join(a, "summary.json"), "rb").read() == open(
        os.path.join(b, "summary.json"), "rb"
    ).read()


def test_figure1_outputs_reproducible(tmp_path):
    a, b = str(tmp_path / "a"), str(tmp_path / "b")
    argv = ["figure1", "--h", "0.02", "--T", "0.5"]
    assert cli.main(argv + ["--out", a]) == 0
    assert cli.main(argv + ["--out", b]) == 0
    names = [f"curve_{i:02d}.csv" for i in range(10)] + [
        "figure1.gp", "manifold.csv", "summary.json",
    ]
    match, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
    assert mismatch == [] and errors == []
    assert len(match) == len(names)
    s = _load_summary(a)
    assert s["function"] == "paper-main"  # default member
    assert s["results"]["n_curves"] == 10
