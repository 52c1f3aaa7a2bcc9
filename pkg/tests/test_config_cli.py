import numpy as np
import pytest

from repgame.catalog import battle_of_sexes, matching_pennies, prisoners_dilemma
from repgame.cli import EXIT_CONFIG, EXIT_IO, EXIT_OK, EXIT_SOLVER, main
from repgame.config import (
    ConfigError,
    build_run_config,
    format_game_text,
    load_run_config,
    parse_game_text,
)

MP_TEXT = """\
players: 2
actions 0: H T
actions 1: H T
payoffs:
1 -1
-1 1
-1 1
1 -1
"""

NO_PURE_NE_3P = """\
players: 3
actions 0: a b
actions 1: a b
actions 2: a b
payoffs:
1 -1 0
1 -1 0
-1 1 0
-1 1 0
-1 1 0
-1 1 0
1 -1 0
1 -1 0
"""


# -- game text format --------------------------------------------------------------


def test_parse_game_text_matching_pennies():
    g = parse_game_text(MP_TEXT)
    mp = matching_pennies()
    assert g.action_names == (("H", "T"), ("H", "T"))
    np.testing.assert_array_equal(g.payoffs, mp.payoffs)


def test_format_parse_round_trip():
    for game in (matching_pennies(), prisoners_dilemma(), battle_of_sexes()):
        again = parse_game_text(format_game_text(game))
        np.testing.assert_array_equal(again.payoffs, game.payoffs)
        assert again.action_names == game.action_names


def test_parse_errors_are_located():
    bad = MP_TEXT.replace("1 -1\n-1 1\n-1 1\n1 -1\n", "1 -1\n-1 one\n-1 1\n1 -1\n")
    with pytest.raises(ConfigError) as err:
        parse_game_text(bad, source="mp.game")
    assert "mp.game:6" in str(err.value)


def test_parse_rejects_wrong_profile_count():
    with pytest.raises(ConfigError, match="4 payoff lines"):
        parse_game_text(MP_TEXT.rsplit("1 -1\n", 1)[0])


def test_parse_rejects_missing_players():
    with pytest.raises(ConfigError, match="players"):
        parse_game_text("actions 0: x y\npayoffs:\n0 0\n")


# -- run config ----------------------------------------------------------------------


def make_config_doc(tmp_path, **overrides):
    game_path = tmp_path / "mp.game"
    game_path.write_text(MP_TEXT)
    doc = {
        "game": str(game_path),
        "roster": [
            {"agent": "learner"},
            {"agent": "opponent", "policy": {"kind": "stationary", "probs": [0.5, 0.5]}},
        ],
        "schedule": {"epsilon_base": 0.5},
        "round_budget": 50_000,
        "epoch_budget": 4,
        "master_seed": 3,
        "trial_count": 2,
    }
    doc.update(overrides)
    return doc


def test_build_run_config(tmp_path):
    cfg = build_run_config(make_config_doc(tmp_path))
    assert cfg.game.actions_total == 4
    assert cfg.schedule.actions_total == 4  # derived from the game
    assert cfg.master_seed == 3


def test_build_run_config_roster_mismatch(tmp_path):
    doc = make_config_doc(tmp_path, roster=[{"agent": "learner"}])
    with pytest.raises(ConfigError, match="roster"):
        build_run_config(doc)


def test_build_run_config_bad_policy(tmp_path):
    doc = make_config_doc(tmp_path)
    doc["roster"][1]["policy"] = {"kind": "psychic"}
    with pytest.raises(ConfigError, match="psychic"):
        build_run_config(doc)


def test_build_run_config_override_validation(tmp_path):
    doc = make_config_doc(tmp_path, equilibrium_override=[[0.5, 0.5], [0.5, 0.5, 0.0]])
    with pytest.raises(ConfigError, match="player 1"):
        build_run_config(doc)


def test_load_run_config_yaml(tmp_path):
    import yaml

    doc = make_config_doc(tmp_path, output={"trace_dir": "out", "make_dirs": True})
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump(doc))
    cfg, output = load_run_config(path)
    assert cfg.trial_count == 2
    assert output["trace_dir"] == "out"


# -- CLI -----------------------------------------------------------------------------


def write_yaml_config(tmp_path, **overrides):
    import yaml

    doc = make_config_doc(tmp_path, **overrides)
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump(doc))
    return path


def test_cli_solve_matching_pennies(tmp_path, capsys):
    path = tmp_path / "mp.game"
    path.write_text(MP_TEXT)
    assert main(["solve", str(path)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "0.500000, 0.500000" in out
    assert "regret" in out


def test_cli_solve_pd_prints_pure_defect(tmp_path, capsys):
    path = tmp_path / "pd.game"
    path.write_text(format_game_text(prisoners_dilemma()))
    assert main(["solve", str(path)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "[D]" in out and "kind: pure" in out


def test_cli_solve_unavailable_equilibrium(tmp_path, capsys):
    path = tmp_path / "hard.game"
    path.write_text(NO_PURE_NE_3P)
    assert main(["solve", str(path)]) == EXIT_SOLVER
    assert "override" in capsys.readouterr().err


def test_cli_solve_malformed_game(tmp_path, capsys):
    path = tmp_path / "bad.game"
    path.write_text("players: two\n")
    assert main(["solve", str(path)]) == EXIT_CONFIG
    assert "bad.game:1" in capsys.readouterr().err


def test_cli_schedule_table(capsys):
    assert main(["schedule", "-T", "3"]) == EXIT_OK
    out = capsys.readouterr().out
    rows = [l.split() for l in out.splitlines()[1:4]]
    assert [r[3] for r in rows] == ["32", "128", "906"]
    assert "valid" in out


def test_cli_schedule_empty_horizon(capsys):
    assert main(["schedule", "-T", "0"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "deferred" in out


def test_cli_schedule_invalid_params(capsys):
    assert main(["schedule", "--epsilon-base", "2.0"]) == EXIT_CONFIG


def test_cli_run_deterministic_outputs(tmp_path):
    cfg = write_yaml_config(
        tmp_path, output={"trace_dir": str(tmp_path / "out"), "make_dirs": True}
    )
    assert main(["run", str(cfg), "--trial", "0"]) == EXIT_OK
    first = (tmp_path / "out" / "trial-0000.jsonl").read_bytes()
    assert main(["run", str(cfg), "--trial", "0"]) == EXIT_OK
    second = (tmp_path / "out" / "trial-0000.jsonl").read_bytes()
    assert first == second


def test_cli_batch_row_count_and_validate(tmp_path, capsys):
    out_dir = tmp_path / "out"
    cfg = write_yaml_config(
        tmp_path,
        output={
            "trace_dir": str(out_dir),
            "summary_csv": str(out_dir / "summary.csv"),
            "report_json": str(out_dir / "report.json"),
            "make_dirs": True,
        },
    )
    assert main(["batch", str(cfg)]) == EXIT_OK
    lines = (out_dir / "summary.csv").read_text().strip().splitlines()
    assert len(lines) == 3  # header + 2 trials
    capsys.readouterr()
    assert main(["validate", str(out_dir / "trial-0000.jsonl")]) == EXIT_OK
    assert "zero divergences" in capsys.readouterr().out


def test_cli_missing_output_dir_rejected(tmp_path, capsys):
    cfg = write_yaml_config(
        tmp_path, output={"trace_dir": str(tmp_path / "nope"), "make_dirs": False}
    )
    assert main(["run", str(cfg)]) == EXIT_IO
    assert "does not exist" in capsys.readouterr().err


def test_cli_validate_detects_tampering(tmp_path, capsys):
    out_dir = tmp_path / "out"
    cfg = write_yaml_config(
        tmp_path, output={"trace_dir": str(out_dir), "make_dirs": True}
    )
    assert main(["run", str(cfg)]) == EXIT_OK
    trace_path = out_dir / "trial-0000.jsonl"
    lines = trace_path.read_text().splitlines()
    lines[1] = lines[1].replace('"switched":false', '"switched":true')
    trace_path.write_text("\n".join(lines) + "\n")
    capsys.readouterr()
    assert main(["validate", str(trace_path)]) == EXIT_CONFIG
    assert "DIVERGENCE" in capsys.readouterr().out


def test_cli_master_seed_env_override(tmp_path, monkeypatch, capsys):
    out_dir = tmp_path / "out"
    cfg = write_yaml_config(
        tmp_path, output={"trace_dir": str(out_dir), "make_dirs": True}
    )
    assert main(["run", str(cfg)]) == EXIT_OK
    baseline = (out_dir / "trial-0000.jsonl").read_bytes()
    monkeypatch.setenv("REPGAME_MASTER_SEED", "999")
    assert main(["run", str(cfg)]) == EXIT_OK
    overridden = (out_dir / "trial-0000.jsonl").read_bytes()
    assert baseline != overridden
    assert b'"master_seed": 999' in overridden or b'"master_seed":999' in overridden
