import json
from fractions import Fraction

from cachedof.cli import CSV_HEADER, EXIT_CONFIG, EXIT_FAIL, EXIT_PASS, main


def test_curve_values_and_header(tmp_path, capsys):
    assert main(["--command", "curve", "--mu-grid", "1/20"]) == EXIT_PASS
    out = capsys.readouterr().out
    lines = out.strip().splitlines()
    assert lines[0] == CSV_HEADER
    rows = {line.split(",")[0]: line for line in lines[1:]}
    assert rows["1/2"] == "1/2,7/6,7/6,2,0"
    assert rows["2/5"].split(",")[4] == "4/39"
    # reciprocal achievable DoF never increases along the grid
    lower = [Fraction(line.split(",")[1]) for line in lines[1:]]
    assert lower == sorted(lower, reverse=True)


def test_curve_deterministic_with_figures(tmp_path):
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    assert main(["--command", "curve", "--out", str(out1)]) == EXIT_PASS
    assert main(["--command", "curve", "--out", str(out2)]) == EXIT_PASS
    assert out1.read_bytes() == out2.read_bytes()
    # the report path renders figures beside the delimited output
    for stem in ("a", "b"):
        assert (tmp_path / f"{stem}_dof.png").exists()
        assert (tmp_path / f"{stem}_gap.png").exists()
    assert (tmp_path / "a_dof.png").read_bytes() == (tmp_path / "b_dof.png").read_bytes()
    assert (tmp_path / "a_gap.png").read_bytes() == (tmp_path / "b_gap.png").read_bytes()


def test_curve_no_figures(tmp_path):
    out = tmp_path / "c.csv"
    assert main(["--command", "curve", "--out", str(out), "--no-figures"]) == EXIT_PASS
    assert out.exists()
    assert not (tmp_path / "c_dof.png").exists()


def test_lp_check(capsys):
    assert main(["--command", "lp-check"]) == EXIT_PASS
    doc = json.loads(capsys.readouterr().out)
    assert doc["pass"] is True
    by_mu = {row["mu"]: row for row in doc["checks"]}
    assert by_mu["1/2"]["lp_d"] == "6/7"
    assert by_mu["1"]["lp_d"] == "1"
    assert all(row["equal"] for row in doc["checks"])


def test_verify_quarter(capsys):
    code = main(["--command", "verify", "--mode", "quarter", "--n", "2",
                 "--focus", "1,1", "--grid", "4x4", "--seeds", "0,1,2"])
    assert code == EXIT_PASS
    doc = json.loads(capsys.readouterr().out)
    assert doc["pass"] is True
    res = doc["results"]["(1,1)"]
    assert res["rank_found"] == res["rank_expected"] == 35
    assert doc["scheme"]["per_user_dof"] == "8/35"


def test_verify_half_and_sabotage(capsys):
    base = ["--command", "verify", "--mode", "half", "--n", "2",
            "--focus", "1,1", "--grid", "4x4", "--seeds", "0,1"]
    assert main(base) == EXIT_PASS
    doc = json.loads(capsys.readouterr().out)
    res = doc["results"]["(1,1)"]
    assert res["neutralization_residual"] == 0.0
    assert res["rank_found"] == 75

    assert main(base + ["--sabotage-u"]) == EXIT_FAIL
    doc = json.loads(capsys.readouterr().out)
    assert doc["pass"] is False
    assert doc["results"]["(1,1)"]["neutralization_residual"] > 0.0


def test_verify_output_deterministic(tmp_path):
    args = ["--command", "verify", "--mode", "quarter", "--n", "1",
            "--focus", "1,1", "--grid", "4x4", "--seeds", "0,1"]
    out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
    assert main(args + ["--out", str(out1)]) == EXIT_PASS
    assert main(args + ["--out", str(out2)]) == EXIT_PASS
    assert out1.read_bytes() == out2.read_bytes()


def test_verify_full(capsys):
    code = main(["--command", "verify", "--mode", "full", "--grid", "4x4",
                 "--seeds", "0,1,2"])
    assert code == EXIT_PASS
    doc = json.loads(capsys.readouterr().out)
    assert doc["results"]["network"]["rank_found"] == 16


def test_region_fig6(fig6_files, capsys):
    topo, plc = fig6_files
    code = main(["--command", "region", "--topology", str(topo),
                 "--placement", str(plc), "--max-size", "2"])
    assert code == EXIT_PASS
    doc = json.loads(capsys.readouterr().out)
    assert doc["pairs"] == 7
    got = {
        (tuple(sorted(i["coeffs"].items())), i["rhs"]) for i in doc["inequalities"]
    }
    assert got == {
        ((("d_{1,A1}", "1"), ("d_{1,A2}", "1"), ("d_{2,A2}", "1")), "1"),
        ((("d_{1,A2}", "1"), ("d_{2,A1}", "1"), ("d_{2,A2}", "1")), "1"),
    }


def test_region_singleton_cutset(tmp_path, capsys):
    topo = tmp_path / "single.json"
    topo.write_text(json.dumps(
        {"users": ["1"], "bss": ["a"], "edges": [["1", "a"]]}
    ))
    plc = tmp_path / "single_placement.json"
    plc.write_text(json.dumps(
        {"mu": "1", "mode": "custom",
         "groups": [{"label": "A1", "members": ["a"], "fraction": "1"}]}
    ))
    code = main(["--command", "region", "--topology", str(topo),
                 "--placement", str(plc), "--max-size", "1"])
    assert code == EXIT_PASS
    doc = json.loads(capsys.readouterr().out)
    assert doc["inequalities"] == [{"coeffs": {"d_{1,A1}": "1"}, "rhs": "1"}]


def test_region_grid_quarter(capsys):
    code = main(["--command", "region", "--grid", "4x4", "--mode", "quarter",
                 "--max-size", "1"])
    assert code == EXIT_PASS
    doc = json.loads(capsys.readouterr().out)
    assert doc["pairs"] == 64
    for ineq in doc["inequalities"]:
        assert ineq["rhs"] == "1"


def test_region_malformed_topology(tmp_path, capsys):
    topo = tmp_path / "bad.json"
    topo.write_text("{\"users\": [\"1\"]}")
    code = main(["--command", "region", "--topology", str(topo)])
    assert code == EXIT_CONFIG


def test_jacobian_command(capsys):
    code = main(["--command", "jacobian", "--grid", "4x4", "--focus", "1,1",
                 "--seeds", "0", "--points", "3"])
    assert code == EXIT_PASS
    doc = json.loads(capsys.readouterr().out)
    assert doc["pass"] is True
    assert set(doc["families"]) == {"A1", "A2", "A3", "A4", "A5", "A6"}
    assert all(f["duplicate_detected"] for f in doc["families"].values())


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"command": "curve", "mu_grid": "1/4"}))
    assert main(["--config", str(cfg)]) == EXIT_PASS
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 1 + 4  # 1/4, 1/2, 3/4, 1

    assert main(["--config", str(cfg), "--mu-grid", "1/2"]) == EXIT_PASS
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 1 + 2  # flags win: 1/4, 3/4


def test_bad_configs(tmp_path):
    assert main(["--command", "verify", "--grid", "nope"]) == EXIT_CONFIG
    assert main(["--command", "curve", "--wrap", "perhaps"]) == EXIT_CONFIG
    assert main(["--command", "verify", "--seeds", ""]) == EXIT_CONFIG
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"command": "curve", "bogus_key": 1}))
    assert main(["--config", str(cfg)]) == EXIT_CONFIG
    assert main([]) == EXIT_CONFIG  # no command anywhere
