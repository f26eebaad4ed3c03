import runpy
from pathlib import Path

import pytest

from cavkit.cli import main

DEMOS = Path(__file__).resolve().parent.parent / "demos"


@pytest.mark.parametrize("script", sorted(p.name for p in DEMOS.glob("*.py")))
def test_demo_runs(script, capsys):
    runpy.run_path(str(DEMOS / script), run_name="__main__")
    assert capsys.readouterr().out


def test_demo_scenario(tmp_path, capsys):
    assert main(["run", str(DEMOS / "custom_scenario.toml"), "--out", str(tmp_path)]) == 0
