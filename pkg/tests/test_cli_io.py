from __future__ import annotations

import math

import numpy as np
import pytest

from morphopt.cli_io import (
    CheckpointError,
    ConfigError,
    CsvFormatError,
    HISTORY_HEADER,
    config_digest,
    history_csv_row,
    load_checkpoint,
    parse_config,
    read_history_csv,
    save_checkpoint,
    serialize_config,
)
from morphopt.es_optimizer import SearchDistribution
from morphopt.trainer import HistoryRow, TrainState

MINIMAL = """\
env.id = springmass
train.generations = 5
"""

FULL = """\
env.id = planar_hopper
env.episode_steps = 400
env.terrain_bumps = true
train.generations = 100
train.population_size = 64
train.rollouts_per_candidate = 4
train.master_seed = 11
opt.lr_mu = 0.03
opt.rank_shaping = true
opt.use_baseline = false
morph.enabled = true
morph.scale_limit = 0.6
morph.param.leg1_length = 0.25
morph.param.leg2_length = 0.25
morph.param.leg1_thickness = 0.04
morph.param.leg2_thickness = 0.04
aug.enabled = true
output.dir = runs/hopper_test
"""


def test_minimal_config_parses_with_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.env_id == "springmass"
    assert cfg.train.generations == 5
    assert cfg.train.population_size == 192
    assert cfg.train.rollouts_per_candidate == 16
    assert cfg.opt.lr_mu == 0.05
    assert not cfg.morph_enabled
    assert cfg.morph_table == ()
    assert cfg.out_dir == "runs"


def test_full_config_round_trips_losslessly():
    cfg = parse_config(FULL)
    text = serialize_config(cfg)
    again = parse_config(text)
    assert again == cfg
    assert serialize_config(again) == text


def test_morph_table_defaults_resolve_from_env():
    cfg = parse_config(MINIMAL + "morph.enabled = true\n")
    assert cfg.morph_table == (("leg_length", 0.5),)
    spec = cfg.morph_spec()
    assert spec.names == ("leg_length",)
    assert spec.original[0] == 0.5


def test_env_overrides_are_typed_and_applied():
    cfg = parse_config(FULL)
    env = cfg.make_env()
    assert env.episode_steps == 400
    assert env.terrain_bumps is True
    over = dict(cfg.env_overrides)
    assert over["episode_steps"] == 400 and over["terrain_bumps"] is True


def test_missing_env_id_names_the_field():
    with pytest.raises(ConfigError, match="env.id"):
        parse_config("train.generations = 5\n")


def test_unknown_key_rejected_with_line_number():
    with pytest.raises(ConfigError, match="line 3"):
        parse_config("env.id = springmass\ntrain.generations = 5\ntrain.bogus = 1\n")


def test_unknown_section_rejected():
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config(MINIMAL + "wandb.project = x\n")


def test_unknown_env_field_rejected():
    with pytest.raises(ConfigError, match="env.gravity_wells"):
        parse_config("env.id = springmass\nenv.gravity_wells = 3\ntrain.generations = 1\n")


def test_duplicate_key_rejected():
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config("env.id = springmass\nenv.id = sphere\ntrain.generations = 1\n")


def test_bad_value_types_rejected():
    with pytest.raises(ConfigError, match="integer"):
        parse_config("env.id = springmass\ntrain.generations = many\n")
    with pytest.raises(ConfigError, match="true or false"):
        parse_config(MINIMAL + "morph.enabled = yes\n")


def test_aug_requires_morph():
    with pytest.raises(ConfigError, match="morph.enabled"):
        parse_config(MINIMAL + "aug.enabled = true\n")


def test_morph_table_size_must_match_env():
    bad = MINIMAL + "morph.enabled = true\nmorph.param.a = 1.0\nmorph.param.b = 2.0\n"
    with pytest.raises(ConfigError, match="expects 1"):
        parse_config(bad)


def test_comments_and_blank_lines_ignored():
    cfg = parse_config("# hi\n\nenv.id = springmass  # trailing\ntrain.generations = 5\n")
    assert cfg.env_id == "springmass"


def test_digest_changes_with_semantics_not_comments():
    a = parse_config(MINIMAL)
    b = parse_config("# comment\nenv.id = springmass\ntrain.generations = 5\n")
    c = parse_config(MINIMAL.replace("5", "6"))
    assert config_digest(a) == config_digest(b)
    assert config_digest(a) != config_digest(c)


# -- checkpoints ---------------------------------------------------------------


def roundtrip_state(state, tmp_path):
    cfg = parse_config(MINIMAL)
    path = tmp_path / "ck.txt"
    save_checkpoint(path, cfg, state)
    cfg2, state2, digest = load_checkpoint(path)
    assert cfg2 == cfg
    assert digest == config_digest(cfg)
    return state2


def test_checkpoint_round_trip_bitwise(tmp_path):
    rng = np.random.default_rng(0)
    state = TrainState(
        generation=12,
        dist=SearchDistribution(mu=rng.normal(0, 1, 5), sigma=np.abs(rng.normal(1, 0.3, 5))),
        best_params=rng.normal(0, 2, 5),
        best_avg_score=math.pi * 1e4,
        history=[
            HistoryRow(0, 1.5, 2.5, 0.1, float("nan")),
            HistoryRow(1, -1e-17, 1e300, 0.09999999999999998, 3.3),
        ],
    )
    state2 = roundtrip_state(state, tmp_path)
    assert state2.generation == 12
    assert np.array_equal(state2.dist.mu, state.dist.mu)
    assert np.array_equal(state2.dist.sigma, state.dist.sigma)
    assert np.array_equal(state2.best_params, state.best_params)
    assert state2.best_avg_score == state.best_avg_score
    assert len(state2.history) == 2
    assert state2.history[1] == state.history[1]
    assert math.isnan(state2.history[0].best_avg_score)
    r0, r1 = state.history[0], state2.history[0]
    assert (r0.generation, r0.mean_fitness, r0.best_fitness, r0.sigma_mean) == (
        r1.generation, r1.mean_fitness, r1.best_fitness, r1.sigma_mean)


def test_checkpoint_unset_best(tmp_path):
    state = TrainState(
        generation=0,
        dist=SearchDistribution(mu=np.zeros(2), sigma=np.ones(2)),
    )
    state2 = roundtrip_state(state, tmp_path)
    assert state2.best_params is None
    assert math.isnan(state2.best_avg_score)
    assert state2.history == []


def test_checkpoint_rejects_garbage(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("not a checkpoint\n")
    with pytest.raises(CheckpointError):
        load_checkpoint(path)
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "missing.txt")


def test_checkpoint_rejects_truncation(tmp_path):
    cfg = parse_config(MINIMAL)
    state = TrainState(
        generation=3,
        dist=SearchDistribution(mu=np.zeros(3), sigma=np.ones(3)),
        history=[HistoryRow(0, 1, 2, 3, 4)],
    )
    path = tmp_path / "ck.txt"
    save_checkpoint(path, cfg, state)
    lines = path.read_text().splitlines()
    (tmp_path / "cut.txt").write_text("\n".join(lines[:6]) + "\n")
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "cut.txt")


# -- history CSV ---------------------------------------------------------------


def test_history_csv_round_trip(tmp_path):
    rows = [HistoryRow(0, 1.25, 2.5, 0.1, float("nan")), HistoryRow(1, -3.5, 4.0, 0.09, 7.0)]
    path = tmp_path / "history.csv"
    path.write_text(HISTORY_HEADER + "\n" + "\n".join(history_csv_row(r) for r in rows) + "\n")
    got = read_history_csv(path)
    assert got[1] == rows[1]
    assert math.isnan(got[0].best_avg_score)
    assert got[0].mean_fitness == 1.25


def test_history_csv_header_only_is_error(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text(HISTORY_HEADER + "\n")
    with pytest.raises(CsvFormatError, match="no data rows"):
        read_history_csv(path)


def test_history_csv_bad_line_is_named(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(HISTORY_HEADER + "\n0,1,2,3,4\nnope\n")
    with pytest.raises(CsvFormatError, match=":3"):
        read_history_csv(path)


def test_history_csv_wrong_header_is_error(tmp_path):
    path = tmp_path / "hdr.csv"
    path.write_text("generation,whatever\n0,1\n")
    with pytest.raises(CsvFormatError, match="header"):
        read_history_csv(path)
