import csv
import json
import math

import numpy as np
import pytest

from creditmig import load_run_config
from creditmig.cli import (
    EXIT_CONFIG,
    EXIT_INVARIANT,
    EXIT_OK,
    main,
)

SMALL_INI = """
[grid]
dxi = 0.05
dt = 0.05
t_final = 2.0

[mc]
n_paths = 2000
seed = 7

[output]
snapshots = 0,1,2
figures = false
"""


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.ini"
    path.write_text(SMALL_INI)
    return path


def read_csv_columns(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(x) for x in row] for row in reader]
    columns = {name: np.array(col) for name, col
               in zip(header, zip(*rows))}
    return columns


class TestConfig:
    def test_defaults_mirror_reference_setup(self):
        cfg = load_run_config(None)
        assert cfg.model.delta == 0.03
        assert cfg.model.sigma_l == 0.3
        assert cfg.grid.dt == 0.01
        assert cfg.grid.dxi == pytest.approx(0.001)
        assert cfg.solver.eps_penalty == 1e-8
        assert cfg.solver.tol_newton == 1e-4

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[model]\nrr = 0.05\n")
        assert main(["solve", "--config", str(path),
                     "--out-dir", str(tmp_path / "o")]) == EXIT_CONFIG

    def test_unknown_section_rejected(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[extras]\nx = 1\n")
        assert main(["check", "--config", str(path),
                     "--out-dir", str(tmp_path / "o")]) == EXIT_CONFIG

    def test_inadmissible_model_rejected_before_solving(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[model]\ndelta = 0.02\n")  # sits on sigma_h^2/2
        assert main(["check", "--config", str(path),
                     "--out-dir", str(tmp_path / "o")]) == EXIT_CONFIG

    def test_zero_newton_tolerance_rejected(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[solver]\ntol_newton = 0\n")
        assert main(["check", "--config", str(path),
                     "--out-dir", str(tmp_path / "o")]) == EXIT_CONFIG

    def test_missing_file_rejected(self, tmp_path):
        assert main(["tw", "--config", str(tmp_path / "nope.ini"),
                     "--out-dir", str(tmp_path / "o")]) == EXIT_CONFIG


class TestTwCommand:
    def test_writes_profile_and_meta(self, small_config, tmp_path, paper_wave):
        out = tmp_path / "out"
        assert main(["tw", "--config", str(small_config),
                     "--out-dir", str(out)]) == EXIT_OK
        cols = read_csv_columns(out / "tw.csv")
        meta = json.loads((out / "tw_meta.json").read_text())
        assert meta["eta_star"] == pytest.approx(-0.21763587308537, abs=1e-8)
        assert meta["kappa_star"] == pytest.approx(-1.91945914983488,
                                                   abs=1e-8)
        assert meta["c_l"] == pytest.approx(2.0 / 3.0)
        assert meta["c_h"] == pytest.approx(1.5)
        assert meta["psi_inv_gamma"] == pytest.approx(
            meta["eta_star"] - meta["kappa_star"])
        # the default sample count from config is preserved
        assert len(cols["xi"]) == 1001
        # the contact point is one of the rows, with K exactly 1 there
        at_kappa = np.isclose(cols["xi"], meta["kappa_star"], atol=1e-14)
        assert at_kappa.any()
        assert cols["K"][at_kappa][0] == 1.0
        at_eta = np.isclose(cols["xi"], meta["eta_star"], atol=1e-14)
        assert cols["K"][at_eta][0] == pytest.approx(0.6, abs=1e-12)

    def test_figures_rendered_when_enabled(self, tmp_path):
        cfg = tmp_path / "fig.ini"
        cfg.write_text("[output]\ntw_samples = 101\nfigures = true\n")
        out = tmp_path / "out"
        assert main(["tw", "--config", str(cfg),
                     "--out-dir", str(out)]) == EXIT_OK
        assert (out / "tw.png").stat().st_size > 0


@pytest.fixture(scope="module")
def solve_out(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("solve")
    cfg = tmp / "cfg.ini"
    cfg.write_text(SMALL_INI)
    out = tmp / "out"
    code = main(["solve", "--config", str(cfg), "--out-dir", str(out)])
    return code, out


class TestSolveCommand:
    def test_exit_ok_and_files_written(self, solve_out):
        code, out = solve_out
        assert code == EXIT_OK
        for name in ("snapshots.csv", "error.csv", "boundaries.csv",
                     "diagnostics.json"):
            assert (out / name).exists()

    def test_error_series_monotone(self, solve_out):
        _, out = solve_out
        cols = read_csv_columns(out / "error.csv")
        assert np.all(np.diff(cols["sup_error"]) <= 1e-6)

    def test_boundaries_first_row(self, solve_out):
        _, out = solve_out
        cols = read_csv_columns(out / "boundaries.csv")
        assert cols["t"][0] == 0.0
        assert abs(cols["kappa_hat"][0]) <= 0.05
        assert cols["eta_hat"][0] == pytest.approx(math.log(1.0 / 0.6),
                                                   abs=0.05)

    def test_initial_snapshot_is_payoff(self, solve_out):
        _, out = solve_out
        cols = read_csv_columns(out / "snapshots.csv")
        first = cols["t"] == 0.0
        xi = cols["xi"][first]
        u = cols["u"][first]
        assert np.array_equal(u, np.minimum(1.0, np.exp(xi)))

    def test_diagnostics_all_passed(self, solve_out):
        _, out = solve_out
        diag = json.loads((out / "diagnostics.json").read_text())
        assert diag["all_passed"] is True
        assert len(diag["invariants"]) == 9

    def test_csv_round_trip_is_bit_exact(self, solve_out):
        # 17 significant digits reproduce the written float64 values exactly
        _, out = solve_out
        cols = read_csv_columns(out / "error.csv")
        rewritten = np.array([float(format(x, ".17g"))
                              for x in cols["sup_error"]])
        assert np.array_equal(rewritten, cols["sup_error"])


class TestMcCommand:
    def test_writes_comparison(self, small_config, tmp_path):
        out = tmp_path / "out"
        assert main(["mc", "--config", str(small_config),
                     "--out-dir", str(out)]) == EXIT_OK
        payload = json.loads((out / "mc.json").read_text())
        assert payload["n_paths"] == 2000
        assert payload["n_default"] <= 2000
        assert payload["std_error"] > 0.0
        assert payload["abs_diff"] == pytest.approx(
            abs(payload["price"] - payload["pde_price"]))

    def test_seed_flag_overrides_config(self, small_config, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        main(["mc", "--config", str(small_config), "--out-dir", str(out1),
              "--seed", "5"])
        main(["mc", "--config", str(small_config), "--out-dir", str(out2),
              "--seed", "6"])
        p1 = json.loads((out1 / "mc.json").read_text())
        p2 = json.loads((out2 / "mc.json").read_text())
        assert p1["seed"] == 5 and p2["seed"] == 6
        assert p1["price"] != p2["price"]


class TestCheckCommand:
    def test_invariant_failure_sets_distinct_exit_code(self, small_config,
                                                       tmp_path, monkeypatch):
        import creditmig.cli as cli_mod
        from creditmig import DiagnosticsReport, InvariantResult

        def failing_report(field, tw=None):
            return DiagnosticsReport(
                results=[InvariantResult("value_bounds", False, 0.5, "t=0")],
                newton_max=1, newton_mean=1.0,
                sup_error_initial=0.0, sup_error_final=0.0)

        monkeypatch.setattr(cli_mod, "check_invariants", failing_report)
        assert main(["check", "--config", str(small_config),
                     "--out-dir", str(tmp_path / "o")]) == EXIT_INVARIANT
        assert main(["solve", "--config", str(small_config),
                     "--out-dir", str(tmp_path / "o")]) == EXIT_INVARIANT

    def test_clean_run_exits_zero(self, small_config, tmp_path, capsys):
        assert main(["check", "--config", str(small_config),
                     "--out-dir", str(tmp_path / "o")]) == EXIT_OK
        table = capsys.readouterr().out
        assert "value_bounds" in table
        assert "FAIL" not in table

    def test_snapshots_flag_parses(self, small_config, tmp_path):
        assert main(["check", "--config", str(small_config),
                     "--out-dir", str(tmp_path / "o"),
                     "--snapshots", "0,0.5,1.5"]) == EXIT_OK
        assert main(["check", "--config", str(small_config),
                     "--out-dir", str(tmp_path / "o"),
                     "--snapshots", "zero"]) == EXIT_CONFIG


class TestDeterminism:
    def test_repeated_invocations_are_byte_identical(self, tmp_path):
        cfg = tmp_path / "cfg.ini"
        cfg.write_text(SMALL_INI.replace("figures = false",
                                         "figures = true"))
        out1, out2 = tmp_path / "one", tmp_path / "two"
        for out in (out1, out2):
            assert main(["solve", "--config", str(cfg),
                         "--out-dir", str(out)]) == EXIT_OK
            assert main(["mc", "--config", str(cfg),
                         "--out-dir", str(out)]) == EXIT_OK
        names = sorted(p.name for p in out1.iterdir())
        assert names == sorted(p.name for p in out2.iterdir())
        for name in names:
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), \
                name
