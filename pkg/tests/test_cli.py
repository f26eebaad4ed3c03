import json
import subprocess
import sys

import pytest

from cavkit.cli import bundled_scenarios, main

BASE = """
name = "mini"
[grids]
P = { lower = [-1, -1], upper = [1, 1] }
[maps]
I = [[1]]
[functions.f]
grid = "P"
expr = { kind = "quadratic", Q = [[2, 0], [0, 2]] }
[functions.g]
grid = "P"
expr = { kind = "indicator_box", lower = [0, 0], upper = [0, 0] }
"""

CHECK = """
[[checks]]
name = "{name}"
type = "{type}"
f = "f"
g = "{g}"
A = "{A}"
B = "I"
"""


def scenario(tmp_path, body="", checks=(("duality", "coupled_duality", "g", "I"),)):
    text = BASE + body + "".join(CHECK.format(name=n, type=t, g=g, A=a) for n, t, g, a in checks)
    p = tmp_path / "mini.toml"
    p.write_text(text)
    return p


def run(args, capsys):
    code = main(args)
    return code, capsys.readouterr().out


def results(out_dir, name):
    return json.loads((out_dir / f"{name}.results.json").read_text())


def test_list(capsys):
    code, out = run(["list"], capsys)
    assert code == 0 and set(out.split()) == set(bundled_scenarios())


@pytest.mark.parametrize("name", sorted(bundled_scenarios()))
def test_bundled_scenarios_pass(name, tmp_path, capsys):
    code, out = run(["run", name, "--out", str(tmp_path)], capsys)
    assert code == 0, out
    doc = results(tmp_path, name)
    assert doc["exit_code"] == 0 and doc["summary"]["fail"] == 0 and doc["summary"]["error"] == 0
    assert (tmp_path / f"{name}.report.txt").read_text().startswith(f"scenario: {name}")


def test_indicator_gaps_are_exactly_zero(tmp_path, capsys):
    run(["run", "indicator_origin", "--out", str(tmp_path)], capsys)
    checks = {c["name"]: c for c in results(tmp_path, "indicator_origin")["checks"]}
    assert checks["coupled duality"]["gap"] == 0 and checks["constrained duality"]["gap"] == 0


def test_quadratic_gaps_within_tolerance(tmp_path, capsys):
    run(["run", "quadratic_id_maps", "--out", str(tmp_path)], capsys)
    for c in results(tmp_path, "quadratic_id_maps")["checks"]:
        if c["type"].endswith("duality"):
            assert c["verdict"] == "pass" and c["gap"] <= c["tolerance"]


def test_custom_scenario_and_determinism(tmp_path, capsys):
    p = scenario(tmp_path)
    before = p.read_bytes()
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(["run", str(p), "--out", str(a)], capsys)[0] == 0
    assert run(["run", str(p), "--out", str(b)], capsys)[0] == 0
    for suffix in ("report.txt", "results.json"):
        assert (a / f"mini.{suffix}").read_bytes() == (b / f"mini.{suffix}").read_bytes()
    assert p.read_bytes() == before
    assert results(a, "mini")["checks"][0]["timing"] is None


def test_failing_check_exits_one(tmp_path, capsys):
    body = """
[functions.h]
grid = "P"
expr = { kind = "indicator_box", lower = [1, 0], upper = [1, 0] }
"""
    p = scenario(tmp_path, body, [("qc", "qualification", "h", "I")])
    code, out = run(["run", str(p), "--out", str(tmp_path)], capsys)
    assert code == 1 and "FAIL" in out
    assert results(tmp_path, "mini")["checks"][0]["verdict"] == "fail"


def test_misdimensioned_map_names_the_map(tmp_path, capsys):
    p = scenario(tmp_path, checks=[("d", "coupled_duality", "g", "J")])
    p.write_text(p.read_text().replace('I = [[1]]', 'I = [[1]]\nJ = [[1, 2]]'))
    code, out = run(["run", str(p), "--out", str(tmp_path / "o")], capsys)
    assert code == 2 and "'J'" in out
    assert not (tmp_path / "o").exists()


def test_parse_error_reports_position(tmp_path, capsys):
    p = tmp_path / "bad.toml"
    p.write_text('name = "bad"\n[grids\n')
    code, out = run(["run", str(p)], capsys)
    assert code == 2 and "line 2" in out


def test_undefined_reference(tmp_path, capsys):
    p = scenario(tmp_path, checks=[("d", "coupled_duality", "nope", "I")])
    code, out = run(["run", str(p), "--out", str(tmp_path)], capsys)
    assert code == 2 and "nope" in out


def test_unknown_expression_kind(tmp_path, capsys):
    p = scenario(tmp_path)
    p.write_text(p.read_text().replace('kind = "quadratic"', 'kind = "cubic"'))
    code, out = run(["run", str(p), "--out", str(tmp_path)], capsys)
    assert code == 2 and "cubic" in out


def test_check_filter_and_timing(tmp_path, capsys):
    p = scenario(tmp_path, checks=[("one", "coupled_duality", "g", "I"), ("two", "cross_path", "g", "I")])
    code, _ = run(["run", str(p), "--out", str(tmp_path), "--checks", "cross_path", "--timing"], capsys)
    doc = results(tmp_path, "mini")
    assert code == 0 and [c["name"] for c in doc["checks"]] == ["two"]
    assert isinstance(doc["checks"][0]["timing"], float)
    assert run(["run", str(p), "--checks", "nothing"], capsys)[0] == 2


def test_tol_scale(tmp_path, capsys):
    p = scenario(tmp_path)
    run(["run", str(p), "--out", str(tmp_path / "a")], capsys)
    run(["run", str(p), "--out", str(tmp_path / "b"), "--tol-scale", "2"], capsys)
    ta = results(tmp_path / "a", "mini")["checks"][0]["tolerance"]
    tb = results(tmp_path / "b", "mini")["checks"][0]["tolerance"]
    assert tb == 2 * ta
    assert run(["run", str(p), "--tol-scale", "0"], capsys)[0] == 2
    assert run(["run", str(p), "--tol-scale", "nan"], capsys)[0] == 2


def test_console_script(tmp_path):
    r = subprocess.run([sys.executable, "-m", "cavkit.cli", "run", "indicator_origin", "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "exit 0" in r.stdout
