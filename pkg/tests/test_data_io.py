"""Department CSV generation and ingestion, config files, run artifacts."""

import json
import os

import numpy as np
import pytest

from sigmatch.data_io import (
    DataFormatError,
    canonical_json,
    department_profiles,
    generate_departments,
    load_config,
    load_departments,
    make_manifest,
    write_departments_csv,
    write_diagnostics,
    write_run_outputs,
)
from sigmatch.mechanisms import MechanismSpec
from sigmatch.metrics import MetricRow, read_metrics_csv, summarize
from sigmatch.model import ConfigError, MarketConfig


def test_generate_departments_shape_and_determinism():
    rows = generate_departments(m=103, p_d=15, seed=9)
    assert len(rows) == 103
    peers = [r.peer_score for r in rows]
    assert peers == sorted(peers, reverse=True)
    assert peers[0] == pytest.approx(5.0)
    assert peers[-1] == pytest.approx(2.0)
    assert all(r.attributes.shape == (15,) for r in rows)
    again = generate_departments(m=103, p_d=15, seed=9)
    assert all(a.peer_score == b.peer_score for a, b in zip(rows, again))
    assert all(np.array_equal(a.attributes, b.attributes) for a, b in zip(rows, again))


def test_generate_single_department():
    (row,) = generate_departments(m=1, p_d=3, seed=0)
    cfg = MarketConfig(m=1, n=5, p_d=3, tier_boundaries=(), seed=0)
    (profile,) = department_profiles([row], cfg)
    assert profile.prestige == pytest.approx(1.0)


def test_csv_roundtrip_preserves_profiles(tmp_path):
    cfg = MarketConfig(m=12, n=30, p_d=4, tier_boundaries=(2, 5, 8), seed=3)
    rows = generate_departments(cfg.m, cfg.p_d, cfg.seed)
    path = tmp_path / "deps.csv"
    write_departments_csv(rows, path)
    loaded = load_departments(path)
    direct = department_profiles(rows, cfg)
    via_csv = department_profiles(loaded, cfg)
    for a, b in zip(direct, via_csv):
        assert a.dept_id == b.dept_id
        assert a.name == b.name
        assert a.prestige == b.prestige
        assert a.tier == b.tier
        assert np.array_equal(a.attributes, b.attributes)
        assert np.array_equal(a.utility_weights, b.utility_weights)


def test_minmax_prestige_hand_values(tmp_path):
    path = tmp_path / "three.csv"
    path.write_text(
        "id,name,peer_score,region,attr_1\n"
        "1,A,2.0,NE,0.5\n"
        "2,B,3.0,MW,0.5\n"
        "3,C,4.0,S,0.5\n"
    )
    rows = load_departments(path)
    cfg = MarketConfig(m=3, n=9, p_d=1, tier_boundaries=(1, 2), seed=0)
    profiles = department_profiles(rows, cfg)
    assert [p.prestige for p in profiles] == pytest.approx([0.0, 0.5, 1.0])
    # Highest peer score is rank 1, tier 1
    assert [p.tier for p in profiles] == [3, 2, 1]


@pytest.mark.parametrize(
    "body,fragment",
    [
        ("id,name,region,attr_1\n1,A,NE,0.5\n", "missing column: peer_score"),
        ("id,name,peer_score,region,attr_1\n1,A,abc,NE,0.5\n", "row 1, column peer_score"),
        ("id,name,peer_score,region,attr_1\n1,A,2.0,NE,1.7\n", "outside [0, 1]"),
        ("id,name,peer_score,region,attr_1\n1,A,2.0,NE,0.5\n1,B,3.0,MW,0.5\n", "duplicate id"),
        ("id,name,peer_score,region,attr_1\n1,A,2.0,NE\n", "expected 5 cells"),
        ("id,name,peer_score,region,attr_1\n", "no data rows"),
        ("", "no header"),
        ("id,name,peer_score,region,attr_1\n1,A,inf,NE,0.5\n", "not finite"),
    ],
)
def test_load_departments_error_messages(tmp_path, body, fragment):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    with pytest.raises(DataFormatError) as err:
        load_departments(path)
    assert fragment in str(err.value)


def test_department_profiles_validates_against_config():
    rows = generate_departments(m=5, p_d=3, seed=1)
    with pytest.raises(ConfigError):
        department_profiles(rows, MarketConfig(m=6, n=10, p_d=3, tier_boundaries=(1, 2, 4)))
    with pytest.raises(ConfigError):
        department_profiles(rows, MarketConfig(m=5, n=10, p_d=4, tier_boundaries=(1, 2, 4)))


def test_constant_peer_scores_rejected(tmp_path):
    path = tmp_path / "flat.csv"
    path.write_text(
        "id,name,peer_score,region,attr_1\n1,A,3.0,NE,0.5\n2,B,3.0,MW,0.5\n"
    )
    rows = load_departments(path)
    with pytest.raises(DataFormatError):
        department_profiles(rows, MarketConfig(m=2, n=6, p_d=1, tier_boundaries=(1,)))


def test_utility_weights_are_seeded_simplex_points():
    cfg = MarketConfig(m=4, n=10, p_d=2, p_v=3, tier_boundaries=(1, 2), seed=8)
    rows = generate_departments(cfg.m, cfg.p_d, cfg.seed)
    profiles = department_profiles(rows, cfg)
    for p in profiles:
        assert p.utility_weights.shape == (3,)
        assert p.utility_weights.sum() == pytest.approx(1.0)
        assert np.all(p.utility_weights >= 0)
    again = department_profiles(rows, cfg)
    for a, b in zip(profiles, again):
        assert np.array_equal(a.utility_weights, b.utility_weights)


def test_load_config_sections_and_unknown_keys(tmp_path):
    path = tmp_path / "cfg.toml"
    path.write_text(
        "[market]\nm = 8\nn = 20\np_d = 3\ntier_boundaries = [2, 4, 6]\n"
        "[ranking]\nalpha = 0.2\nB = 4\n"
    )
    cfg = load_config(path)
    assert cfg.m == 8 and cfg.n == 20 and cfg.p_d == 3
    assert cfg.tier_boundaries == (2, 4, 6)
    assert cfg.alpha == 0.2 and cfg.B == 4

    bad = tmp_path / "bad.toml"
    bad.write_text("m = 8\nwhatever = 3\n")
    with pytest.raises(ConfigError) as err:
        load_config(bad)
    assert "whatever" in str(err.value)


def test_load_config_rejects_duplicate_keys(tmp_path):
    path = tmp_path / "dup.toml"
    path.write_text("m = 8\n[market]\nm = 9\n")
    with pytest.raises(ConfigError):
        load_config(path)


def test_manifest_run_id_tracks_inputs():
    cfg = MarketConfig(m=5, n=10, p_d=2, tier_boundaries=(1, 3), seed=1)
    arms = [MechanismSpec(kind="questionnaire", rho=0.5)]
    m1 = make_manifest(cfg, arms, command="simulate")
    m2 = make_manifest(cfg, arms, command="simulate")
    assert m1["run_id"] == m2["run_id"]
    m3 = make_manifest(MarketConfig(m=5, n=10, p_d=2, tier_boundaries=(1, 3), seed=2), arms, "simulate")
    assert m3["run_id"] != m1["run_id"]
    # canonical encoding is key-sorted, so the id is layout-independent
    assert canonical_json({"b": 1, "a": 2}) == '{"a":2,"b":1}'


def test_write_run_outputs_layout(tmp_path):
    cfg = MarketConfig(m=5, n=10, p_d=2, tier_boundaries=(1, 3), seed=1)
    arms = [MechanismSpec(kind="questionnaire", rho=0.5)]
    manifest = make_manifest(cfg, arms, command="simulate")
    rows = [MetricRow(0, 1, "questionnaire", 0.5, "matching_rate", "all", 0.25)]
    run_dir = write_run_outputs(tmp_path, manifest, rows, summarize(rows))
    assert os.path.basename(run_dir) == manifest["run_id"]
    with open(os.path.join(run_dir, "manifest.json")) as fh:
        stored = json.load(fh)
    assert stored == manifest
    assert read_metrics_csv(os.path.join(run_dir, "metrics.csv")) == rows
    with open(os.path.join(run_dir, "summary.json")) as fh:
        summary = json.load(fh)
    assert summary["arms"][0]["metrics"]["matching_rate"]["all"]["mean"] == 0.25


def test_write_diagnostics_files(tmp_path):
    class Outcome:
        year = 21
        diagnostics = {
            3: {
                "cand_ids": np.array([4, 7]),
                "u_hat": np.array([0.5, 0.25]),
                "rank_lower": np.array([1, 2]),
                "included": np.array([True, False]),
            }
        }

    files = write_diagnostics(str(tmp_path), rep=0, outcome=Outcome())
    assert len(files) == 1
    text = open(files[0]).read().splitlines()
    assert text[0] == "cand_id,u_hat,rank_lower,included"
    assert text[1] == "4,0.5,1,1"
    assert text[2] == "7,0.25,2,0"
