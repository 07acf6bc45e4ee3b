"""Shared fixtures: real artifacts generated through the simulation CLI.

figtool consumes only files, so these fixtures shell out to the conelab
command line tool (never import it) and hand back the paths it wrote.
"""

import subprocess
import sys
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parents[2]
SCENARIO_DIR = REPO_ROOT / "src" / "conelab" / "scenarios"


def run_conelab(*args):
    result = subprocess.run(
        [sys.executable, "-m", "conelab", *args],
        capture_output=True,
        text=True,
    )
    assert result.returncode == 0, f"conelab {' '.join(args)} failed:\n{result.stderr}"
    return result


def _simulate_and_fit(scenario, outdir):
    config = SCENARIO_DIR / scenario
    assert config.is_file(), f"missing scenario {config}"
    run_conelab("simulate", "--config", str(config), "--out", str(outdir))
    run_conelab("fit", "--config", str(config), "--out", str(outdir))
    return outdir


@pytest.fixture(scope="session")
def sweep_artifacts(tmp_path_factory):
    """Decay reports for the mode-1 sweep at three cone slopes."""
    base = tmp_path_factory.mktemp("sweep")
    outs = []
    for scenario in ("sweep_rho04.json", "sweep_rho06.json", "sweep_rho08.json"):
        outs.append(_simulate_and_fit(scenario, base / scenario.removesuffix(".json")))
    return outs


@pytest.fixture(scope="session")
def decay_artifacts(tmp_path_factory):
    """Report and shells from the axisymmetric constant-data cone run."""
    base = tmp_path_factory.mktemp("decay")
    return _simulate_and_fit("example63_decay.json", base / "run")
