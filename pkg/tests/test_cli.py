"""End-to-end tests of the command-line interface via in-process main().

Each invocation goes through the real argument parser and dispatch, so
these tests pin the exit-code contract, the file formats and the golden
values a user sees, without spawning subprocesses.
"""

import json
import math

import numpy as np
import pytest

import oracles
from qeraser.cli import main
from qeraser.protocols import TSIRELSON_BOUND, hom_table


def parse_csv(text):
    """Split CLI CSV output into (metadata dict, header cells, data rows)."""
    lines = text.strip().split("\n")
    assert lines[0].startswith("# ")
    metadata = json.loads(lines[0][2:])
    rows = [line.split(",") for line in lines[2:] if not line.startswith("#")]
    return metadata, lines[1].split(","), rows


class TestExitCodes:
    def test_version_flag(self, capsys):
        assert main(["--version"]) == 0
        assert "qeraser 0.1.0" in capsys.readouterr().out

    def test_missing_command(self, capsys):
        assert main([]) == 2

    def test_unknown_flag(self, capsys):
        assert main(["hom", "--wavelength", "3"]) == 2

    def test_angles_and_optimize_conflict(self, capsys):
        code = main(["chsh", "--angles", "0,1,2,3", "--optimize"])
        assert code == 2
        assert "usage error" in capsys.readouterr().err

    def test_theta_and_scan_conflict(self, capsys):
        assert main(["phase-est", "--theta", "0", "--theta-scan", "0:1:4"]) == 2

    @pytest.mark.parametrize("scan", ["0:1", "a:b:3", "0:1:0"])
    def test_malformed_theta_scan(self, scan, capsys):
        assert main(["phase-est", "--theta-scan", scan]) == 2

    def test_malformed_angles(self, capsys):
        assert main(["chsh", "--angles", "0,1,2"]) == 2
        assert main(["chsh", "--angles", "0,1,2,froth"]) == 2

    def test_sampled_csv_needs_output_path(self, capsys):
        code = main(["hom", "--mode", "sample", "--shots", "10", "--format", "csv"])
        assert code == 2
        assert "--output" in capsys.readouterr().err

    def test_invalid_config_value(self, capsys):
        assert main(["hom", "--mode", "sample", "--shots", "-4"]) == 2

    def test_unwritable_output_is_a_runtime_error(self, capsys):
        code = main(["hom", "--output", "/no-such-directory/out.csv"])
        assert code == 1
        assert "error:" in capsys.readouterr().err


class TestHomCommand:
    def test_analytic_csv_matches_the_table(self, capsys):
        assert main(["hom", "--phi", "0.7", "--statistics", "fermion"]) == 0
        metadata, header, rows = parse_csv(capsys.readouterr().out)
        assert metadata["command"] == "hom"
        assert metadata["params"]["statistics"] == "fermion"
        assert header == ["outcome", "C=up", "C=down", "C=?"]
        table = hom_table(0.7, "fermion")
        for row in rows:
            for column, cell in zip(header[1:], row[1:]):
                assert float(cell) == pytest.approx(
                    table.value(row[0], column), abs=1e-15
                )

    def test_analytic_summary_format(self, capsys):
        assert main(["hom", "--format", "summary"]) == 0
        out = capsys.readouterr().out
        assert "outcome" in out and "C=?" in out and "AB" in out

    def test_degrees_flag(self, capsys):
        assert main(["hom", "--phi", "90", "--degrees"]) == 0
        degrees_rows = parse_csv(capsys.readouterr().out)[2]
        assert main(["hom", "--phi", repr(math.pi / 2)]) == 0
        radian_rows = parse_csv(capsys.readouterr().out)[2]
        for row_a, row_b in zip(degrees_rows, radian_rows):
            for cell_a, cell_b in zip(row_a[1:], row_b[1:]):
                assert float(cell_a) == pytest.approx(float(cell_b), abs=1e-12)

    def test_sampled_csv_writes_both_streams(self, tmp_path, capsys):
        out = tmp_path / "run.csv"
        code = main(
            ["hom", "--mode", "sample", "--shots", "50", "--seed", "5",
             "--format", "csv", "--output", str(out)]
        )
        assert code == 0
        control = tmp_path / "run.control.csv"
        assert out.exists() and control.exists()
        assert out.read_text().startswith("# ")
        header_line = control.read_text().split("\n")[1]
        assert header_line == "shot_index,control_outcome,basis_angle"
        notice = capsys.readouterr().err
        assert str(out) in notice and str(control) in notice

    def test_sampled_summary_reports_joined_and_unjoined(self, capsys):
        code = main(["hom", "--mode", "sample", "--shots", "400", "--phi", "0.9"])
        assert code == 0
        out = capsys.readouterr().out
        assert "joined empirical table" in out
        assert "unjoined empirical table" in out
        assert "reference (analytic" in out

    def test_classical_mixture_mode(self, capsys):
        assert main(["hom", "--mode", "classical-mixture", "--shots", "200"]) == 0
        assert "joined empirical table" in capsys.readouterr().out


class TestChshCommand:
    def test_default_optimizer_reaches_the_bound(self, capsys):
        assert main(["chsh", "--phi", "0.4"]) == 0
        out = capsys.readouterr().out
        comment = [l for l in out.strip().split("\n") if l.startswith("# S_up=")][0]
        s_up = float(comment.split("S_up=")[1].split()[0])
        assert s_up == pytest.approx(TSIRELSON_BOUND, abs=1e-9)

    def test_fixed_angles_match_the_correlator_oracle(self, capsys):
        phi = 0.3
        assert main(["chsh", "--phi", str(phi), "--angles", "0.1,0.9,0.4,1.6"]) == 0
        _, header, rows = parse_csv(capsys.readouterr().out)
        assert header[:4] == ["setting_a", "setting_b", "theta_a", "theta_b"]
        for row in rows:
            theta_a, theta_b = float(row[2]), float(row[3])
            assert float(row[4]) == pytest.approx(
                oracles.chsh_correlator(theta_a, theta_b, phi, +1), abs=1e-12
            )
            assert float(row[5]) == pytest.approx(
                oracles.chsh_correlator(theta_a, theta_b, phi, -1), abs=1e-12
            )
            assert float(row[6]) == pytest.approx(0.0, abs=1e-12)

    def test_degrees_angles(self, capsys):
        assert main(["chsh", "--angles", "0,90,45,135", "--degrees"]) == 0
        _, _, degree_rows = parse_csv(capsys.readouterr().out)
        angles = ",".join(repr(a) for a in (0.0, math.pi / 2, math.pi / 4, 3 * math.pi / 4))
        assert main(["chsh", "--angles", angles]) == 0
        _, _, radian_rows = parse_csv(capsys.readouterr().out)
        for row_a, row_b in zip(degree_rows, radian_rows):
            for cell_a, cell_b in zip(row_a[2:], row_b[2:]):
                assert float(cell_a) == pytest.approx(float(cell_b), abs=1e-12)

    def test_sampled_summary(self, capsys):
        code = main(
            ["chsh", "--mode", "sample", "--shots", "4000", "--seed", "9"]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "empirical S (joined C=up)" in out
        assert "standard errors" in out

    def test_analytic_summary_format(self, capsys):
        assert main(["chsh", "--format", "summary"]) == 0
        out = capsys.readouterr().out
        assert "S (C=up)" in out and "quantum bound" in out


class TestPhaseEstCommand:
    def test_analytic_scan_matches_the_fringe(self, capsys):
        n, count = 6, 64
        code = main(["phase-est", "--n", str(n), "--theta-scan", "0:6.2832:64"])
        assert code == 0
        metadata, header, rows = parse_csv(capsys.readouterr().out)
        assert metadata["params"]["n"] == n
        assert header == [
            "theta",
            "parity_given_up",
            "parity_given_down",
            "parity_unjoined",
            "phase_variance",
        ]
        assert len(rows) == count
        for row in rows:
            theta = float(row[0])
            assert float(row[1]) == pytest.approx(
                oracles.parity_fringe(n, theta, 0.0, +1), abs=1e-10
            )
            assert float(row[2]) == pytest.approx(
                oracles.parity_fringe(n, theta, 0.0, -1), abs=1e-10
            )
            assert float(row[3]) == pytest.approx(0.0, abs=1e-12)
            variance = float(row[4])
            # near-stationary points lose the 1 - fringe^2 difference to
            # rounding; the identity itself is checked in test_protocols
            if abs(math.sin(n * theta)) > 1e-3:
                assert variance == pytest.approx(
                    oracles.heisenberg_variance(n), rel=1e-9
                )
        assert math.isinf(float(rows[0][4]))  # stationary fringe at theta = 0

    def test_single_point_defaults_to_zero_phase(self, capsys):
        assert main(["phase-est", "--n", "3"]) == 0
        _, _, rows = parse_csv(capsys.readouterr().out)
        assert len(rows) == 1
        assert float(rows[0][0]) == 0.0
        assert float(rows[0][1]) == pytest.approx(-1.0, abs=1e-12)  # (-1)^3 cos(0)

    def test_which_way_readout_has_no_variance_column_values(self, capsys):
        assert main(["phase-est", "--n", "2", "--control-angle", "0"]) == 0
        _, _, rows = parse_csv(capsys.readouterr().out)
        assert rows[0][4] == ""
        assert float(rows[0][1]) == pytest.approx(0.0, abs=1e-12)

    def test_degrees_scan(self, capsys):
        assert main(["phase-est", "--n", "2", "--theta-scan", "0:360:8", "--degrees"]) == 0
        degree_rows = parse_csv(capsys.readouterr().out)[2]
        scan = f"0:{repr(2 * math.pi)}:8"
        assert main(["phase-est", "--n", "2", "--theta-scan", scan]) == 0
        radian_rows = parse_csv(capsys.readouterr().out)[2]
        for row_a, row_b in zip(degree_rows, radian_rows):
            for cell_a, cell_b in zip(row_a[:4], row_b[:4]):
                assert float(cell_a) == pytest.approx(float(cell_b), abs=1e-12)

    def test_sampled_scan_summary_and_seed_rule(self, capsys):
        code = main(
            ["phase-est", "--mode", "sample", "--shots", "300", "--n", "2",
             "--theta-scan", "0:3:3"]
        )
        assert code == 0
        out = capsys.readouterr().out
        header = json.loads(out.split("\n", 1)[0][2:])
        assert header["seed_rule"] == "seed + theta point index"
        assert header["theta_points"] == 3
        assert out.count("<P|up>") == 3

    def test_sampled_csv_is_the_aggregated_fringe(self, tmp_path):
        out = tmp_path / "fringe.csv"
        code = main(
            ["phase-est", "--mode", "sample", "--shots", "2000", "--n", "2",
             "--theta", "0.4", "--format", "csv", "--output", str(out)]
        )
        assert code == 0
        metadata, header, rows = parse_csv(out.read_text())
        assert "seed_rule" in metadata
        assert header == [
            "theta",
            "parity_given_up",
            "stderr_up",
            "parity_given_down",
            "stderr_down",
            "parity_unjoined",
            "stderr_unjoined",
        ]
        parity, stderr = float(rows[0][1]), float(rows[0][2])
        expected = oracles.parity_fringe(2, 0.4, 0.0, +1)
        assert abs(parity - expected) <= 5.0 * stderr


class TestByteDeterminism:
    def test_same_seed_same_bytes(self, tmp_path, capsys):
        paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
        for path in paths:
            code = main(
                ["chsh", "--mode", "sample", "--shots", "500", "--seed", "42",
                 "--angles", "0,1.5707963,0.7853981,2.3561944",
                 "--format", "csv", "--output", str(path)]
            )
            assert code == 0
        capsys.readouterr()
        assert paths[0].read_bytes() == paths[1].read_bytes()
        control = [p.with_name(p.stem + ".control.csv") for p in paths]
        assert control[0].read_bytes() == control[1].read_bytes()


class TestVerifyCommand:
    def test_full_invariant_suite_passes(self, capsys):
        assert main(["verify"]) == 0
        out = capsys.readouterr().out
        assert ", 0 failed" in out
        assert "FAIL" not in out
