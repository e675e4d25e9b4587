import subprocess
import sys

import pytest

FLOW_TOML = """\
config_version = 1

[domain]
dimension = 1
lengths = [1.0]
level = 9

[operator]
p = 2.0

[flow]
dt = 1e-4
horizon = 0.3
stationarity_tol = 0.0

[initial]
preset = "mixed"
seed = 0

[output]
snapshot_stride = 1000
"""

ASYM_TOML = """\
config_version = 1

[domain]
level = 9

[operator]
p = 2.0

[flow]
dt = 1e-4

[initial]
preset = "positive_random"
seed = 7
"""


def run_primary(*args):
    proc = subprocess.run([sys.executable, "-m", "sphereflow", *map(str, args)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return proc


@pytest.fixture(scope="session")
def reference_runs(tmp_path_factory):
    """Reference outputs produced through the solver CLI; everything the
    figures consume goes through the documented file formats."""
    root = tmp_path_factory.mktemp("runs")
    flow_cfg = root / "flow.toml"
    flow_cfg.write_text(FLOW_TOML)
    flow_out = root / "flow"
    run_primary("flow", "--config", flow_cfg, "--out", flow_out, "--quiet")

    asym_cfg = root / "asym.toml"
    asym_cfg.write_text(ASYM_TOML)
    asym_out = root / "asym"
    run_primary("asymptotics", "--config", asym_cfg, "--out", asym_out,
                "--quiet")
    return {
        "ledger": flow_out / "ledger.csv",
        "snapshot": flow_out / "snapshot_0000.csv",
        "convergence": asym_out / "convergence.csv",
    }
