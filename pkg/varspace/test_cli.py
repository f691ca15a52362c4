import json
from pathlib import Path

import numpy as np
import pytest

from app.dictionaries.atoms import RidgeAtom
from app.records.atoms import combination_to_record
from app.varnorm.combination import SparseCombination
from main import run

INTERVAL_DICTIONARY = {
    "family": "P_k",
    "domain": {"lo": [-1.0], "hi": [1.0]},
    "k": 1,
    "c1": -2.0,
    "c2": 2.0,
    "offsets": 41,
}


def _write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload), encoding="utf-8")
    return str(path)


def _run(tmp_path, command, payload, out="run", *extra):
    config = _write_config(tmp_path, payload, f"{out}.json")
    out_dir = tmp_path / out
    code = run([command, "--config", config, "--out", str(out_dir), "--quiet", *extra])
    return code, out_dir


def _read(out_dir, name):
    return json.loads((out_dir / name).read_text(encoding="utf-8"))


# ============================================================================
# SUCCESSFUL RUNS
# ============================================================================

def test_cutoff_run_writes_csv_and_manifest(tmp_path):
    code, out = _run(tmp_path, "cutoff", {"experiment": "cutoff", "cutoff": {"R_values": [10.0, 100.0], "s": 1.0}})
    assert code == 0
    manifest = _read(out, "manifest.json")
    assert manifest["status"] == "success"
    assert manifest["exit_code"] == 0
    assert manifest["outputs"] == ["cutoff.csv"]
    assert len(manifest["config_hash"]) == 64
    assert (out / "logs" / "varspace.log").exists()


def test_reruns_are_byte_identical(tmp_path):
    payload = {"experiment": "barron-decomp", "barron": {"dims": [1, 2], "count": 20, "points": 100}, "seed": 4}
    code_a, out_a = _run(tmp_path, "barron-decomp", payload, "first")
    code_b, out_b = _run(tmp_path, "barron-decomp", payload, "second")
    assert code_a == code_b == 0
    for name in ("barron_decomposition.csv", "barron_summary.csv"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()
    assert _read(out_a, "manifest.json")["config_hash"] == _read(out_b, "manifest.json")["config_hash"]


def test_maurey_reruns_are_byte_identical(tmp_path):
    payload = {
        "experiment": "maurey-rate",
        "dictionary": INTERVAL_DICTIONARY,
        "quadrature": {"level": 16},
        "maurey": {"n_values": [1, 4, 16], "trials": 3, "benchmark_atoms": 5, "slope_limit": 1.0},
        "seed": 3,
    }
    code_a, out_a = _run(tmp_path, "maurey-rate", payload, "first")
    code_b, out_b = _run(tmp_path, "maurey-rate", payload, "second")
    assert code_a == code_b
    for name in ("rate_series.csv", "rate_summary.json", "benchmark.json"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_estimate_norm_reruns_are_byte_identical(tmp_path):
    payload = {
        "experiment": "estimate-norm",
        "dictionary": INTERVAL_DICTIONARY,
        "quadrature": {"level": 32},
        "target": {"name": "benchmark", "atoms": 4},
        "seed": 1,
    }
    code_a, out_a = _run(tmp_path, "estimate-norm", payload, "first")
    code_b, out_b = _run(tmp_path, "estimate-norm", payload, "second")
    assert code_a == code_b
    for name in ("iterations.csv", "combination.json"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_seed_flag_overrides_config(tmp_path):
    payload = {"experiment": "barron-decomp", "barron": {"dims": [1], "count": 5, "points": 20}, "seed": 0}
    _, out_a = _run(tmp_path, "barron-decomp", payload, "plain")
    _, out_b = _run(tmp_path, "barron-decomp", payload, "seeded", "--seed", "9")
    assert _read(out_a, "manifest.json")["config_hash"] != _read(out_b, "manifest.json")["config_hash"]
    name = "barron_decomposition.csv"
    assert (out_a / name).read_bytes() != (out_b / name).read_bytes()
    assert _read(out_b, "manifest.json")["seed"] == 9


def test_estimate_norm_of_single_atom(tmp_path):
    payload = {
        "experiment": "estimate-norm",
        "dictionary": INTERVAL_DICTIONARY,
        "quadrature": {"level": 32},
        "target": {"name": "atom", "omega": [1.0], "b": 0.5},
    }
    code, out = _run(tmp_path, "estimate-norm", payload)
    assert code == 0
    report = _read(out, "report.json")
    assert report["success"]
    assert report["upper"] <= 1.05
    assert report["known_mass"] == 1.0
    assert set(_read(out, "manifest.json")["outputs"]) == {"report.json", "iterations.csv", "combination.json"}


# ============================================================================
# FAILURES
# ============================================================================

@pytest.mark.parametrize(
    "command,payload,loc",
    [
        ("cutoff", {"experiment": "cutoff", "quadrature": {"level": 0}}, "quadrature.level"),
        ("cutoff", {"experiment": "cutoff", "solver": {"tolerance": 1.0}}, "solver.tolerance"),
        ("cutoff", {"experiment": "barron-decomp"}, "experiment"),
        ("cutoff", {"experiment": "cutoff", "cutoff": {"k": 2, "s": 1.0}}, "cutoff.k"),
        ("cutoff", {"experiment": "cutoff", "cutoff": {"R_values": [10.0, -1.0]}}, "cutoff.R_values"),
        ("onedim-equiv", {"experiment": "onedim-equiv", "onedim": {"c1": -2.0, "c2": 0.5}}, "onedim.c2"),
        ("onedim-equiv", {"experiment": "onedim-equiv", "onedim": {"c1": -0.5, "c2": 2.0}}, "onedim.c1"),
        (
            "estimate-norm",
            {
                "experiment": "estimate-norm",
                "dictionary": INTERVAL_DICTIONARY,
                "target": {"name": "atom", "omega": [1.0], "b": 3.0},
            },
            "target.b",
        ),
    ],
)
def test_bad_config_exits_with_two(tmp_path, command, payload, loc):
    code, out = _run(tmp_path, command, payload)
    assert code == 2
    error = _read(out, "error.json")
    assert error["error_type"] == "configuration"
    assert loc in [item["loc"] for item in error["errors"]]
    manifest = _read(out, "manifest.json")
    assert manifest["status"] == "failed"
    assert manifest["exit_code"] == 2


def test_unreadable_config_exits_with_two(tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    out = tmp_path / "out"
    assert run(["cutoff", "--config", str(broken), "--out", str(out), "--quiet"]) == 2
    assert _read(out, "error.json")["errors"][0]["loc"] == "config"


def test_missing_dictionary_is_reported(tmp_path):
    code, out = _run(tmp_path, "estimate-norm", {"experiment": "estimate-norm"})
    assert code == 2
    assert _read(out, "error.json")["errors"][0]["loc"] == "dictionary"


@pytest.mark.parametrize(
    "atom",
    [RidgeAtom(2, (1.0,), 0.5), RidgeAtom(1, (1.0,), -2.5), RidgeAtom(1, (0.6, 0.8), 0.5)],
)
def test_combination_outside_the_dictionary_is_rejected(tmp_path, atom):
    path = tmp_path / "combination.json"
    record = combination_to_record(SparseCombination((atom,), np.array([1.0])))
    path.write_text(json.dumps(record), encoding="utf-8")
    payload = {
        "experiment": "estimate-norm",
        "dictionary": INTERVAL_DICTIONARY,
        "target": {"name": "combination", "path": str(path)},
    }
    code, out = _run(tmp_path, "estimate-norm", payload)
    assert code == 2
    assert _read(out, "error.json")["errors"][0]["loc"] == "target.path"


def test_failed_acceptance_check_exits_with_one(tmp_path):
    payload = {
        "experiment": "maurey-rate",
        "dictionary": INTERVAL_DICTIONARY,
        "quadrature": {"level": 16},
        "maurey": {"n_values": [1, 2, 4], "trials": 3, "benchmark_atoms": 5, "slope_limit": -5.0},
    }
    code, out = _run(tmp_path, "maurey-rate", payload)
    assert code == 1
    assert _read(out, "error.json")["error_type"] == "check"
    outputs = _read(out, "manifest.json")["outputs"]
    assert "rate_series.csv" in outputs
    assert "error.json" in outputs
