import json
import math

import pytest

from shift_scenery.cli import main

MSTAR = {"type": "markov", "P": [[0.9, 0.1], [0.2, 0.8]]}
MIX = {
    "type": "mixture",
    "weights": [0.5, 0.5],
    "components": [
        {"type": "bernoulli", "p": [0.9, 0.1]},
        {"type": "bernoulli", "p": [0.1, 0.9]},
    ],
}


def _write(tmp_path, name, cfg):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def _run(args):
    return main([str(a) for a in args])


def test_validate_ok(tmp_path):
    cfg = _write(tmp_path, "c.json", {"model": MSTAR, "seed": 1})
    assert _run(["validate", "--config", cfg, "--out", tmp_path / "o"]) == 0
    text = (tmp_path / "o" / "validation_report.txt").read_text()
    assert text.startswith("# config_sha256=")
    assert "PASS" in text


def test_validate_bad_rows_exit_2(tmp_path):
    bad = {"model": {"type": "markov", "P": [[0.9, 0.09], [0.2, 0.8]]}, "seed": 1}
    cfg = _write(tmp_path, "c.json", bad)
    assert _run(["validate", "--config", cfg, "--out", tmp_path / "o"]) == 2
    assert "sum to 1" in (tmp_path / "o" / "validation_report.txt").read_text()


def test_validate_missing_field_exit_3(tmp_path):
    cfg = _write(tmp_path, "c.json", {"model": {"type": "markov"}, "seed": 1})
    assert _run(["validate", "--config", cfg, "--out", tmp_path / "o"]) == 3


def test_missing_seed_exit_3(tmp_path):
    cfg = _write(tmp_path, "c.json", {"model": MSTAR})
    assert _run(["validate", "--config", cfg, "--out", tmp_path / "o"]) == 3


def test_malformed_json_exit_3(tmp_path):
    path = tmp_path / "c.json"
    path.write_text("{not json")
    assert _run(["validate", "--config", path, "--out", tmp_path / "o"]) == 3


def test_seed_override_changes_manifest(tmp_path):
    cfg = _write(tmp_path, "c.json", {"model": MSTAR, "seed": 1, "N": 50})
    assert _run(["sample", "--config", cfg, "--out", tmp_path / "a"]) == 0
    assert _run(["sample", "--config", cfg, "--out", tmp_path / "b", "--seed", "2"]) == 0
    ma = (tmp_path / "a" / "trajectory.csv").read_text().splitlines()[0]
    mb = (tmp_path / "b" / "trajectory.csv").read_text().splitlines()[0]
    assert "seed=1" in ma and "seed=2" in mb and ma != mb


def test_sample_sidecar(tmp_path):
    cfg = _write(tmp_path, "c.json", {"model": MSTAR, "seed": 11, "N": 64})
    assert _run(["sample", "--config", cfg, "--out", tmp_path / "o"]) == 0
    side = json.loads((tmp_path / "o" / "trajectory_manifest.json").read_text())
    assert side["length"] == 64 and side["rng"] == "philox"
    rows = (tmp_path / "o" / "trajectory.csv").read_text().splitlines()
    assert rows[1] == "n,symbol" and len(rows) == 66


def test_rerun_byte_identical(tmp_path):
    cfg = _write(
        tmp_path,
        "c.json",
        {"model": MSTAR, "seed": 5, "N": 2000, "depth": 2, "trajectories": 2,
         "battery": {"count": 4, "max_word_len": 2}},
    )
    for out in ("a", "b"):
        assert _run(["verify-usm", "--config", cfg, "--out", tmp_path / out]) == 0
    for name in ("usm_convergence.csv", "scenery_atoms.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    atoms = (tmp_path / "a" / "scenery_atoms.csv").read_text().splitlines()
    assert atoms[1] == "depth,weight,p0,p1,p2,p3"
    assert all(row.startswith("2,") for row in atoms[2:])


def test_threads_do_not_change_tables(tmp_path):
    cfg = _write(
        tmp_path,
        "c.json",
        {"model": MSTAR, "seed": 5, "N": 3000, "depth": 3, "mc_samples": 2000,
         "battery": {"count": 8, "max_word_len": 2}},
    )
    for out, threads in (("a", "1"), ("b", "4")):
        assert _run(["verify-q", "--config", cfg, "--out", tmp_path / out, "--threads", threads]) == 0
    assert (tmp_path / "a" / "verify_q.csv").read_bytes() == (tmp_path / "b" / "verify_q.csv").read_bytes()
    assert (tmp_path / "a" / "q_evaluations.csv").read_bytes() == (
        tmp_path / "b" / "q_evaluations.csv"
    ).read_bytes()


def test_verify_q_battery_boundary_rejected(tmp_path):
    cfg = _write(
        tmp_path,
        "c.json",
        {"model": MSTAR, "seed": 5, "N": 500, "mc_samples": 100,
         "battery": [{"e": [0], "a": 0.9, "b": 0.95}]},
    )
    assert _run(["verify-q", "--config", cfg, "--out", tmp_path / "o"]) == 3


def test_clt_mixture_exit_2(tmp_path):
    cfg = _write(
        tmp_path,
        "c.json",
        {"model": MIX, "seed": 5, "N": 200, "trials": 100,
         "indicator": {"symbol_set": [0]}},
    )
    assert _run(["clt", "--config", cfg, "--out", tmp_path / "o"]) == 2


def test_clt_report_files(tmp_path):
    cfg = _write(
        tmp_path,
        "c.json",
        {"model": MSTAR, "seed": 5, "N": 300, "trials": 100,
         "indicator": {"generating_set": {"e": [0], "a": 0.5, "b": 0.95}}},
    )
    assert _run(["clt", "--config", cfg, "--out", tmp_path / "o"]) == 0
    report = (tmp_path / "o" / "clt_report.txt").read_text()
    assert "sigma2_chain" in report
    trials = (tmp_path / "o" / "clt_trials.csv").read_text().splitlines()
    assert trials[1] == "statistic" and len(trials) == 102


def test_gibbs_bounds_partial_support_exit_2(tmp_path):
    gm = {"type": "markov", "P": [[0.5, 0.5], [1.0, 0.0]]}
    cfg = _write(tmp_path, "c.json", {"model": gm, "seed": 5, "prefixes": 10,
                                      "prefix_max_len": 10, "audit_depth": 3})
    assert _run(["gibbs-bounds", "--config", cfg, "--out", tmp_path / "o"]) == 2


def test_gibbs_bounds_report(tmp_path):
    cfg = _write(tmp_path, "c.json", {"model": MSTAR, "seed": 5, "prefixes": 40,
                                      "prefix_max_len": 20, "audit_depth": 4})
    assert _run(["gibbs-bounds", "--config", cfg, "--out", tmp_path / "o"]) == 0
    assert "verdict: PASS" in (tmp_path / "o" / "equivalence_report.txt").read_text()


def test_demo_nonergodic_requires_mixture(tmp_path):
    cfg = _write(tmp_path, "c.json", {"model": MSTAR, "seed": 5, "N": 100, "trajectories": 3})
    assert _run(["demo-nonergodic", "--config", cfg, "--out", tmp_path / "o"]) == 2


def test_demo_nonergodic_small_run(tmp_path):
    cfg = _write(
        tmp_path,
        "c.json",
        {"model": MIX, "seed": 5, "N": 2000, "trajectories": 6, "depth": 3},
    )
    assert _run(["demo-nonergodic", "--config", cfg, "--out", tmp_path / "o"]) == 0
    verdict = (tmp_path / "o" / "nonergodic_verdict.txt").read_text()
    assert "not uniformly scaling" in verdict


def test_verify_q_mixture_per_component(tmp_path):
    cfg = _write(
        tmp_path,
        "c.json",
        {"model": MIX, "seed": 5, "mc_samples": 500,
         "battery": [{"e": [0], "a": 0.5, "b": 0.95}]},
    )
    assert _run(["verify-q", "--config", cfg, "--out", tmp_path / "o"]) == 0
    rows = (tmp_path / "o" / "verify_q.csv").read_text().splitlines()
    assert rows[1].startswith("component,")
    assert len(rows) == 4  # two components x one battery entry
