"""Fixtures that produce real input bundles by invoking the sigbc CLI (the
primary package's external interface)."""

import json
import subprocess
import sys

import pytest


def run_sigbc(*args):
    proc = subprocess.run([sys.executable, "-m", "sigbc.cli", *args],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return proc.stdout


@pytest.fixture(scope="session")
def bundle_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("sigbc_outputs")

    config = {
        "experiment": "family_counts",
        "topology": {"kind": "path", "n": 12},
        "gamma": {"min": 0.01, "max": 100.0, "points": 7, "scale": "log"},
        "delta": {"min": 0.01, "max": 2.0, "points": 5},
        "out_dir": str(root / "family"),
        "options": {"family": "polarized", "scan_points": 601},
    }
    cfg = root / "family.json"
    cfg.write_text(json.dumps(config))
    run_sigbc("sweep", "--config", str(cfg))

    config2 = dict(config)
    config2.update(experiment="line_counts",
                   topology={"kind": "paired_cliques", "clique_size": 10,
                             "alignment": "aligned"},
                   out_dir=str(root / "line"))
    config2["gamma"] = {"min": 0.3, "max": 40.0, "points": 6, "scale": "log"}
    config2["delta"] = {"min": 0.05, "max": 1.4, "points": 5}
    config2["options"] = {"scan_points": 601}
    cfg2 = root / "line.json"
    cfg2.write_text(json.dumps(config2))
    run_sigbc("sweep", "--config", str(cfg2))

    run_sigbc("portrait", "--clique-size", "10", "--alignment", "aligned",
              "--gamma", "10", "--delta", "0.9", "--resolution", "31",
              "--out-dir", str(root / "portrait"))

    run_sigbc("simulate", "--topology", "karate", "--gamma", "8", "--delta",
              "0.5", "--horizon", "60", "--out", str(root / "traj.csv"))

    run_sigbc("continue", "--topology", "karate", "--delta", "0.5",
              "--gamma-max", "3", "--out", str(root / "branch.json"))

    return root
