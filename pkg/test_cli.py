"""
Config parsing, validation errors, echo round trips and end-to-end runs.
"""

import json
import math

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conewave.cli import build_parser, main, overrides_from_args
from conewave.config import (
    SUBCOMMANDS,
    ModesParameters,
    ScatterParameters,
    load_config,
    parse_config_text,
    reparse_echo,
    validate_config,
)
from conewave.cross_section import build_flat_sphere
from conewave.errors import ConstraintViolation, ParseError, UnknownKey
from conewave.reports import COLUMNS


def test_defaults():
    config = validate_config("")
    assert config.subcommand == "modes"
    assert config.geometry.lmax == 4
    assert config.discretization.r_max == 40.0 and config.discretization.nodes == 256
    assert isinstance(config.parameters, ModesParameters)
    assert config.parameters.max_groups == 20


def test_parse_sections_lists_and_comments():
    text = "# header\n[experiment]\nsubcommand = g-check  # inline\n\n[g-check]\norders = 0.5, 1, 2\n"
    raw = parse_config_text(text)
    assert raw["experiment"]["subcommand"] == ("g-check", 3)
    assert raw["g-check"]["orders"] == (["0.5", "1", "2"], 6)
    config = validate_config(text)
    assert config.parameters.orders == [0.5, 1.0, 2.0]


def test_subcommand_picks_parameter_model():
    config = validate_config("[experiment]\nsubcommand = scatter\n")
    assert isinstance(config.parameters, ScatterParameters)
    assert config.parameters.T == 40.0
    assert config.parameters.tolerance == 1e-4


def test_overrides_win_over_file_values():
    config = validate_config("[geometry]\nlmax = 2\n", {"geometry": {"lmax": 6}})
    assert config.geometry.lmax == 6


def test_duplicate_key_names_both_lines():
    with pytest.raises(ParseError) as info:
        parse_config_text("[experiment]\nseed = 1\nseed = 2\n")
    assert "lines 2 and 3" in str(info.value)


@pytest.mark.parametrize("text", ["seed = 1\n", "[experiment]\njust words\n", "[geometry]\n[geometry]\n"])
def test_malformed_text(text):
    with pytest.raises(ParseError):
        parse_config_text(text)


def test_unknown_key_and_section():
    with pytest.raises(UnknownKey) as info:
        validate_config("[geometry]\nlmax = 2\ncolor = red\n")
    assert "line 3" in str(info.value)
    with pytest.raises(UnknownKey):
        validate_config("[extras]\nx = 1\n")


def test_constraint_violations():
    with pytest.raises(ConstraintViolation) as info:
        validate_config("[discretization]\nnodes = 1\n")
    assert "line 2" in str(info.value)
    with pytest.raises(ConstraintViolation):
        validate_config("[experiment]\nsubcommand = modes\n[hardy]\ns = 0.5\n")
    with pytest.raises(ConstraintViolation):
        validate_config("[experiment]\nsubcommand = nls\n[nls]\ngamma = 0.5\n")


def test_beta_outside_window_is_rejected():
    text = "[experiment]\nsubcommand = local-smoothing\n[local-smoothing]\nbeta = 0.4\n"
    with pytest.raises(ConstraintViolation) as info:
        validate_config(text)
    assert "line 4" in str(info.value)


def test_environment_placeholders(monkeypatch):
    monkeypatch.setenv("CONEWAVE_TEST_OUT", "runs/env")
    config = validate_config("[experiment]\noutput_dir = ${CONEWAVE_TEST_OUT}\n")
    assert config.experiment.output_dir == "runs/env"
    monkeypatch.delenv("CONEWAVE_TEST_OUT")
    with pytest.raises(ParseError) as info:
        validate_config("[experiment]\noutput_dir = ${CONEWAVE_TEST_OUT}\n")
    assert "CONEWAVE_TEST_OUT" in str(info.value)


@settings(max_examples=25, deadline=None)
@given(
    subcommand=st.sampled_from(SUBCOMMANDS),
    seed=st.integers(min_value=0, max_value=2**32),
    lmax=st.integers(min_value=0, max_value=12),
    r_max=st.floats(min_value=1.0, max_value=1000.0),
    nodes=st.integers(min_value=2, max_value=4096),
)
def test_echo_round_trip(subcommand, seed, lmax, r_max, nodes):
    text = (
        f"[experiment]\nsubcommand = {subcommand}\nseed = {seed}\n"
        f"[geometry]\nlmax = {lmax}\n"
        f"[discretization]\nr_max = {r_max!r}\nnodes = {nodes}\n"
    )
    config = validate_config(text)
    assert reparse_echo(config.echo()) == config


def test_load_config_resolves_relative_spectrum(tmp_path):
    (tmp_path / "spectrum.csv").write_text("lambda,degeneracy\n-0.16,1\n2,3\n", encoding="utf-8")
    path = tmp_path / "run.conf"
    path.write_text(
        "[experiment]\nsubcommand = local-smoothing\n"
        "[geometry]\ncross_section = custom\nspectrum_file = spectrum.csv\n"
        "[local-smoothing]\nbeta = 1.2\n",
        encoding="utf-8",
    )
    config = load_config(path)
    assert config.parameters.beta == 1.2
    with pytest.raises(FileNotFoundError):
        load_config(tmp_path / "missing.conf")


def test_flags_are_grouped_by_section():
    args = build_parser().parse_args(["hardy", "--lmax", "3", "--nodes", "64", "--s", "0.7", "--seed", "5"])
    overrides = overrides_from_args(args)
    assert overrides["experiment"] == {"subcommand": "hardy", "seed": 5}
    assert overrides["geometry"] == {"lmax": 3}
    assert overrides["discretization"] == {"nodes": 64}
    assert overrides["hardy"] == {"s": 0.7}


def test_every_subcommand_has_columns():
    assert set(COLUMNS) == set(SUBCOMMANDS)


def test_modes_run_is_reproducible(tmp_path, capsys):
    outputs = []
    for name in ("first", "second"):
        out = tmp_path / name
        assert main(["modes", "--lmax", "3", "--output-dir", str(out)]) == 0
        outputs.append(out)
    assert "✅" in capsys.readouterr().out
    for artifact in ("modes.csv", "summary.json"):
        assert (outputs[0] / artifact).read_bytes() == (outputs[1] / artifact).read_bytes()
    lines = (outputs[0] / "modes.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "group,nu,lambda,degeneracy"
    assert lines[1] == "0,0.5,0,1"
    assert len(lines) == 5
    echo = (outputs[0] / "config-echo.json").read_text(encoding="utf-8")
    assert reparse_echo(echo).geometry.lmax == 3


def test_g_check_run(tmp_path):
    out = tmp_path / "g"
    argv = ["g-check", "--orders", "0.5", "2", "--radii", "0.5", "4", "--scales", "1", "--output-dir", str(out)]
    assert main(argv) == 0
    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert summary["pass"] is True
    assert len((out / "g-check.csv").read_text(encoding="utf-8").splitlines()) == 5


def test_non_admissible_pair_reports_error(tmp_path, capsys):
    out = tmp_path / "bad"
    assert main(["strichartz", "--q", "3", "--r", "3", "--output-dir", str(out)]) == 1
    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert summary["error"] == "NonAdmissiblePair"
    assert (out / "config-echo.json").exists()
    assert "❌" in capsys.readouterr().out


def test_invalid_config_exits_with_one(tmp_path, capsys):
    path = tmp_path / "bad.conf"
    path.write_text("[geometry]\nlmax = -1\n", encoding="utf-8")
    assert main(["modes", "--config", str(path), "--output-dir", str(tmp_path / "out")]) == 1
    assert "ConstraintViolation" in capsys.readouterr().out


SMALL_GRID = ["--r-max", "20", "--nodes", "32"]
REPRODUCIBLE_RUNS = {
    "modes": ["--lmax", "2"],
    "specfun-table": ["--orders", "0.5", "2", "--arguments", "1", "10"],
    "propagate": ["--lmax", "1", "--times", "0", "0.5", *SMALL_GRID],
    "dispersive-scan": ["--lmax", "0", "--t-max", "4", "--samples", "5", *SMALL_GRID],
    "strichartz": ["--lmax", "1", "--ensemble", "3", "--horizon", "1", "--time-samples", "16", "--workers", "2", *SMALL_GRID],
    "local-smoothing": ["--lmax", "1", "--ensemble", "3", "--horizon", "1", "--time-samples", "16", "--workers", "2", *SMALL_GRID],
    "g-check": ["--orders", "0.5", "--radii", "0.5", "4", "--scales", "1"],
    "hardy": ["--lmax", "1", "--ensemble", "3", *SMALL_GRID],
    "resolvent": ["--lmax", "1", "--sigma-radii", "1", "--sigma-angles", "4", "--max-groups", "2", *SMALL_GRID],
    "sobolev": ["--lmax", "0", "--sigma-radii", "1", "--sigma-angles", "3", "--widths", "1", *SMALL_GRID],
    "nls": ["--lmax", "1", "--T", "0.1", "--dt", "0.01", "--snapshots", "3", *SMALL_GRID],
    "scatter": ["--lmax", "0", "--T", "0.2", "--dt", "0.01", "--snapshots", "3", *SMALL_GRID],
}


def test_reproducible_runs_cover_every_subcommand():
    assert set(REPRODUCIBLE_RUNS) == set(SUBCOMMANDS)


@pytest.mark.parametrize("subcommand", SUBCOMMANDS)
def test_seeded_runs_are_bit_identical(subcommand, tmp_path):
    codes, outputs = [], []
    for name in ("first", "second"):
        out = tmp_path / name
        codes.append(main([subcommand, "--seed", "7", "--output-dir", str(out), *REPRODUCIBLE_RUNS[subcommand]]))
        outputs.append(out)
    assert codes[0] == codes[1]
    first = sorted(p.name for p in outputs[0].iterdir())
    assert first == sorted(p.name for p in outputs[1].iterdir())
    assert "summary.json" in first
    for artifact in first:
        assert (outputs[0] / artifact).read_bytes() == (outputs[1] / artifact).read_bytes()


@pytest.mark.parametrize("preset", ["gaussian", "bump", "single-mode"])
def test_propagate_writes_slices_for_each_preset(preset, tmp_path):
    out = tmp_path / preset
    argv = ["propagate", "--preset", preset, "--lmax", "2", "--times", "0", "1", "--output-dir", str(out), *SMALL_GRID]
    if preset == "single-mode":
        argv += ["--mode", "1"]
    assert main(argv) == 0
    lines = (out / "propagate.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "t,r,y-index,Re u,Im u"
    points = build_flat_sphere(3, 2).quadrature.size
    assert len(lines) == 1 + 2 * 32 * points
    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert summary["params"]["preset"] == preset
    assert summary["y_axis"] == "quadrature"
    assert summary["l2_drift"] < 1e-10
    assert len(summary["l2_norm"]) == len(summary["h1_norm"]) == len(summary["sup_norm"]) == 2
    assert all(h >= l for h, l in zip(summary["h1_norm"], summary["l2_norm"]))
    if preset == "gaussian":
        assert summary["oracle_sup"][0] == pytest.approx(1.0)
    else:
        assert summary["oracle_sup"] == [None, None]


def test_single_mode_preset_excites_one_mode(tmp_path):
    out = tmp_path / "single"
    argv = ["propagate", "--preset", "single-mode", "--mode", "2", "--lmax", "2", "--times", "0", "--output-dir", str(out)]
    assert main(argv + SMALL_GRID) == 0
    frame = pd.read_csv(out / "propagate.csv")
    model = build_flat_sphere(3, 2)
    radii = np.sort(frame["r"].unique())
    values = frame.sort_values(["r", "y-index"])["Re u"].to_numpy().reshape(radii.size, -1)
    phi = model.quadrature_eigenfunctions[:, 2].real
    amplitude = values @ (model.quadrature.weights * phi)
    assert np.max(np.abs(values - np.outer(amplitude, phi))) < 1e-9 * np.max(np.abs(values))
    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert summary["l2_norm"][0] == pytest.approx(math.sqrt(3.0 * math.sqrt(math.pi) / 8.0), rel=1e-4)


def test_propagate_rejects_mode_out_of_range(tmp_path):
    out = tmp_path / "bad-mode"
    argv = ["propagate", "--preset", "single-mode", "--mode", "99", "--lmax", "1", "--output-dir", str(out), *SMALL_GRID]
    assert main(argv) == 1
    assert json.loads((out / "summary.json").read_text(encoding="utf-8"))["error"] == "DomainError"
