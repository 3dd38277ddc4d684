"""End-to-end tests of the command-line interface, run in process."""

import numpy as np
import pytest

from slabqed.cli import (
    ConfigError,
    RunConfig,
    build_config,
    config_from_items,
    main,
    read_config_echo,
)
from slabqed.medium import ATOM_OUTSIDE


def csv_body(path):
    """All non-metadata lines of an output file, header row included."""
    return [ln for ln in path.read_text(encoding="utf-8").splitlines()
            if not ln.startswith("#")]


def csv_rows(path):
    body = csv_body(path)
    return body[0].split(","), [ln.split(",") for ln in body[1:]]


# ---------------------------------------------------------------- config


def test_defaults_are_vacuum_preset():
    cfg = build_config(None)
    assert cfg.case == "vacuum"
    assert cfg.medium.omega_p == 0.0
    assert cfg.ppw == 80.0
    assert cfg.atom_position == 0.0


def test_case_preset_sets_medium_atom_and_resolution():
    cfg = build_config("case = 2B\n")
    assert cfg.medium.gamma == 5.0
    assert cfg.atom_position == ATOM_OUTSIDE
    assert cfg.ppw == 40.0


def test_file_keys_override_the_preset():
    cfg = build_config("case = 1A\nmesh.ppw = 55\natom.position = B\n")
    assert cfg.ppw == 55.0
    assert cfg.atom_position == ATOM_OUTSIDE


def test_case_flag_wins_over_file_case():
    cfg = build_config("case = 1A\nsweep.count = 7\n", case="2B")
    assert cfg.medium.gamma == 5.0
    assert cfg.atom_position == ATOM_OUTSIDE
    assert cfg.sweep_count == 7


def test_comments_and_blank_lines_are_ignored():
    text = "# a comment\n\ncase = 1A  # trailing note\n"
    assert build_config(text).case == "1A"


@pytest.mark.parametrize("text", [
    "nonsense.key = 1\n",
    "sweep.count = banana\n",
    "methods.sfa = maybe\n",
    "case = 3C\n",
    "sweep.count = 0\n",
    "sweep.min = 700\nsweep.max = 300\n",
    "mesh.ppw = 5\n",
    "modes.eta = -1\n",
    "modes.n_bins = 2\n",
    "methods.sfa = false\nmethods.modified_ln = false\n"
    "methods.original_ln = false\nmethods.modes = false\n",
])
def test_bad_config_raises(text):
    with pytest.raises(ConfigError):
        build_config(text)


def test_count_one_needs_no_ordered_range():
    cfg = build_config("sweep.min = 500\nsweep.max = 500\nsweep.count = 1\n")
    np.testing.assert_array_equal(cfg.grid(), [500.0])


def test_items_round_trip_to_equal_config():
    cfg = build_config(
        "case = 2A\nsweep.count = 13\nmodes.n_bins = 48\n"
        "identities.closed_box = true\noutput.path = z.csv\n"
    )
    assert config_from_items(cfg.items()) == cfg


def test_medium_keys_build_a_custom_slab():
    cfg = build_config(
        "medium.omega_p = 80\nmedium.gamma = 20\natom.position = 0.05\n"
    )
    assert cfg.medium.omega_p == 80.0
    assert cfg.medium.gamma == 20.0
    assert cfg.atom_position == 0.05


# ---------------------------------------------------------------- exit codes


def test_unknown_key_exits_2(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("mystery = 1\n")
    assert main(["sweep", "--config", str(cfg)]) == 2
    assert "config error" in capsys.readouterr().err


def test_missing_config_file_exits_2(tmp_path):
    assert main(["sweep", "--config", str(tmp_path / "nope.cfg")]) == 2


def test_runtime_failure_names_the_frequency(tmp_path, capsys):
    # eta far below the closed-box mode spacing is only detectable once the
    # spectrum exists, so it must surface as a runtime error, not a config one
    cfg = tmp_path / "c.cfg"
    cfg.write_text(
        "case = vacuum\nsweep.count = 2\nsweep.min = 400\nsweep.max = 500\n"
        "modes.box_length = 0.25\nmethods.modes = true\nmodes.eta = 0.5\n"
    )
    code = main(["sweep", "--config", str(cfg),
                 "--out", str(tmp_path / "o.csv")])
    assert code == 1
    err = capsys.readouterr().err
    assert "omega_a = 400" in err


# ---------------------------------------------------------------- sweep


def test_vacuum_sweep_csv(tmp_path):
    out = tmp_path / "vac.csv"
    assert main(["sweep", "--case", "vacuum", "--out", str(out)]) == 0
    header, rows = csv_rows(out)
    assert header == ["omega_a", "pf_sfa", "pf_b", "pf_m", "pf_modified_ln",
                      "pf_original_ln", "pf_modes", "tec_residual"]
    assert len(rows) == 101
    pf_sfa = np.array([float(r[1]) for r in rows])
    np.testing.assert_allclose(pf_sfa, 1.0, atol=1e-3)
    assert all(float(r[4]) == 1.0 for r in rows)  # boundary route alone
    assert all(float(r[5]) == 0.0 for r in rows)  # no medium to radiate
    assert all(r[6] == "" for r in rows)  # modes disabled by default


def test_single_point_sweep(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("case = 1A\nsweep.min = 500\nsweep.max = 500\n"
                   "sweep.count = 1\n")
    out = tmp_path / "one.csv"
    assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
    _, rows = csv_rows(out)
    assert len(rows) == 1
    assert float(rows[0][0]) == 500.0


def test_disabled_methods_leave_fields_empty(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(
        "case = 1A\nsweep.count = 3\nmethods.sfa = false\n"
        "methods.original_ln = false\n"
    )
    out = tmp_path / "part.csv"
    assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
    _, rows = csv_rows(out)
    for row in rows:
        assert row[1] == "" and row[5] == ""
        assert row[7] == ""  # the balance residual needs both routes
        assert row[4] != ""


def test_sweep_bodies_are_deterministic(tmp_path, monkeypatch):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("case = 2B\nsweep.count = 9\n")
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["sweep", "--config", str(cfg), "--out", str(out1)]) == 0
    monkeypatch.setenv("SLABQED_WORKERS", "3")
    assert main(["sweep", "--config", str(cfg), "--out", str(out2)]) == 0
    assert csv_body(out1) == csv_body(out2)


def test_bad_worker_count_exits_2(tmp_path, monkeypatch):
    monkeypatch.setenv("SLABQED_WORKERS", "zero")
    assert main(["sweep", "--case", "vacuum",
                 "--out", str(tmp_path / "w.csv")]) == 2


def test_echoed_config_reparses_to_the_same_run(tmp_path):
    cfg = tmp_path / "c.cfg"
    text = "case = 1B\nsweep.count = 4\nmesh.ppw = 44\nmodes.eta = 15\n"
    cfg.write_text(text)
    out = tmp_path / "echo.csv"
    assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
    assert read_config_echo(out) == build_config(text, out=str(out))


def test_echo_reader_rejects_plain_csv(tmp_path):
    bare = tmp_path / "bare.csv"
    bare.write_text("omega_a,pf_sfa\n1,2\n")
    with pytest.raises(ConfigError, match="echo"):
        read_config_echo(bare)


def test_modes_column_filled_when_enabled(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(
        "case = vacuum\nsweep.min = 450\nsweep.max = 550\nsweep.count = 3\n"
        "methods.modes = true\nmodes.box_length = 0.25\nmodes.eta = 30\n"
    )
    out = tmp_path / "m.csv"
    assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
    _, rows = csv_rows(out)
    pf_modes = np.array([float(r[6]) for r in rows])
    assert np.all(pf_modes > 0.5) and np.all(pf_modes < 1.5)


# ---------------------------------------------------------------- checks


def test_check_identities_passes_by_default(capsys):
    assert main(["check-identities", "--case", "1A"]) == 0
    report = capsys.readouterr().out
    assert "FAIL" not in report
    assert "two-channel dissipation" in report
    assert "lossless-identity failure" in report
    assert "field-correlation balance" in report


def test_check_identities_fails_under_impossible_threshold(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("case = 1A\nidentities.ddgt_max = 1e-16\n")
    assert main(["check-identities", "--config", str(cfg)]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_check_identities_closed_box_skips_lossless(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("case = 1A\nidentities.closed_box = true\n")
    assert main(["check-identities", "--config", str(cfg)]) == 0
    report = capsys.readouterr().out
    assert "SKIP" in report
    assert "lossless-identity failure [vacuum" not in report


# ---------------------------------------------------------------- oracle


def test_oracle_compare_passes_at_default_resolution(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("case = 2A\nsweep.count = 3\n")
    out = tmp_path / "oc.csv"
    assert main(["oracle-compare", "--config", str(cfg),
                 "--out", str(out)]) == 0
    header, rows = csv_rows(out)
    assert header == ["omega", "res_rt", "res_field", "res_green"]
    worst = max(float(v) for row in rows for v in row[1:])
    assert worst < 5e-3


def test_oracle_compare_documents_coarse_mesh_floor(tmp_path):
    """The sweep-resolution mesh sits above the 0.5 percent gate on
    purpose; asking the comparison to run there must exit nonzero."""
    cfg = tmp_path / "c.cfg"
    cfg.write_text("case = 2A\nsweep.count = 3\noracle.ppw = 40\n")
    assert main(["oracle-compare", "--config", str(cfg),
                 "--out", str(tmp_path / "oc.csv")]) == 1


def test_oracle_compare_vacuum_scattering_is_exact(tmp_path):
    """With no slab the scattering source vanishes identically, so r, t and
    the probed fields match to roundoff. The point-source comparison keeps
    its usual lattice-dispersion floor and only meets the 0.5 percent gate."""
    cfg = tmp_path / "c.cfg"
    cfg.write_text("case = vacuum\nsweep.count = 3\n")
    out = tmp_path / "ocv.csv"
    assert main(["oracle-compare", "--config", str(cfg),
                 "--out", str(out)]) == 0
    _, rows = csv_rows(out)
    worst_scatter = max(float(v) for row in rows for v in row[1:3])
    assert worst_scatter < 1e-8
    assert max(float(row[3]) for row in rows) < 5e-3


# ---------------------------------------------------------------- modes


def test_modes_command_writes_spectrum_and_rates(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(
        "case = vacuum\nsweep.min = 400\nsweep.max = 600\nsweep.count = 5\n"
        "modes.box_length = 0.25\nmodes.eta = 30\n"
    )
    out = tmp_path / "modes.csv"
    assert main(["modes", "--config", str(cfg), "--out", str(out)]) == 0
    _, rate_rows = csv_rows(out)
    assert len(rate_rows) == 5
    spec = tmp_path / "modes_spectrum.csv"
    header, spec_rows = csv_rows(spec)
    assert header == ["omega_m"]
    freqs = np.array([float(r[0]) for r in spec_rows])
    assert np.all(np.diff(freqs) > 0)
    # closed vacuum box of length L resonates at multiples of pi / L
    np.testing.assert_allclose(freqs[0], np.pi / 0.25, rtol=1e-3)
