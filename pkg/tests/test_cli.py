import csv
import io
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from mppm_qkd import cli

GOLDEN = Path(__file__).parent / "data" / "sift_table_zero.csv"


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def parse(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.fixture
def config(tmp_path):
    def write(text):
        path = tmp_path / "params.cfg"
        path.write_text(text)
        return str(path)

    return write


class TestSiftTable:
    def test_zero_section_matches_golden_bytes(self, capsys):
        code, out, _ = run_cli(capsys, "sift-table")
        assert code == 0
        head = "".join(out.splitlines(keepends=True)[:17])
        assert head == GOLDEN.read_text()

    def test_has_both_sections(self, capsys):
        rows = parse(run_cli(capsys, "sift-table")[1])
        assert [r["match"] for r in rows] == ["0"] * 16 + ["pi"] * 16

    def test_row_1001(self, capsys):
        rows = parse(run_cli(capsys, "sift-table")[1])
        row = next(r for r in rows if r["match"] == "0" and
                   (r["kA_m"], r["kA_n"], r["kB_m"], r["kB_n"]) == ("1", "0", "0", "1"))
        assert (row["ksum"], row["detector_class"], row["s_A"], row["s_B"]) == ("2", "SAME", "1", "1")

    def test_sections_share_everything_but_detector_class(self, capsys):
        rows = parse(run_cli(capsys, "sift-table")[1])
        zero, pi = rows[:16], rows[16:]
        for a, b in zip(zero, pi):
            for key in ("kA_m", "kA_n", "kB_m", "kB_n", "ksum", "s_A"):
                assert a[key] == b[key]
            assert a["detector_class"] != b["detector_class"]
            # both sections list the noise-free class, so Bob's bit still agrees
            assert a["s_B"] == a["s_A"] and b["s_B"] == b["s_A"]


class TestRateCurve:
    def test_lossless_point(self, capsys):
        code, out, _ = run_cli(capsys, "rate-curve", "--distance-km", "0", "-L", "16")
        rows = parse(out)
        assert code == 0 and len(rows) == 1
        assert float(rows[0]["R"]) > 0
        assert list(rows[0]) == list(cli.RATE_COLUMNS)

    def test_full_sweep_shape_and_order(self, capsys):
        argv = ["rate-curve", "--distance-range", "0:500:10"]
        for L in (128, 16, 64, 32):
            argv += ["-L", str(L)]
        rows = parse(run_cli(capsys, *argv)[1])
        assert len(rows) == 204
        keys = [(int(r["L"]), float(r["distance_km"])) for r in rows]
        assert keys == sorted(keys)
        for L in (16, 32, 64, 128):
            r = [float(x["R"]) for x in rows if int(x["L"]) == L]
            assert all(a >= b for a, b in zip(r, r[1:]))

    def test_fixed_mu_and_v_th(self, capsys):
        rows = parse(run_cli(capsys, "rate-curve", "--distance-km", "100", "--mu", "0.2", "--v-th", "4")[1])
        assert (float(rows[0]["mu_opt"]), int(rows[0]["v_th_opt"])) == (0.2, 4)

    def test_floats_round_trip(self, capsys):
        rows = parse(run_cli(capsys, "rate-curve", "--distance-km", "123.4")[1])
        pt = cli.rate_curve({}, [123.4], [128])[0]
        assert float(rows[0]["R"]) == pt["R"]
        assert float(rows[0]["eta"]) == pt["eta"]


class TestConfig:
    def test_unknown_key_named(self, capsys, config):
        code, out, err = run_cli(capsys, "rate-curve", "--config", config("mu = 0.1\nbogus_knob = 3\n"))
        assert code == 2 and out == ""
        assert "bogus_knob" in err

    def test_bad_value_named(self, capsys, config):
        code, _, err = run_cli(capsys, "simulate", "--config", config("misalignment = lots\n"))
        assert code == 2 and "misalignment" in err

    def test_unwritable_out_path(self, capsys, tmp_path):
        code, _, err = run_cli(capsys, "sift-table", "--out", str(tmp_path / "no" / "such" / "dir.csv"))
        assert code == 2 and err.startswith("error:")

    def test_flags_override_config(self, capsys, config):
        path = config("distance_km = 300\ntrain_length = 16\n")
        rows = parse(run_cli(capsys, "rate-curve", "--config", path, "--distance-km", "20", "-L", "32")[1])
        assert (float(rows[0]["distance_km"]), int(rows[0]["L"])) == (20.0, 32)
        rows = parse(run_cli(capsys, "rate-curve", "--config", path, "--distance-range", "0:0:1")[1])
        assert int(rows[0]["L"]) == 16

    def test_config_values_applied(self, capsys, config):
        path = config("# lossless detectors\ndetector_efficiency = 1.0\n")
        base = parse(run_cli(capsys, "rate-curve", "--distance-km", "50")[1])[0]
        cfg = parse(run_cli(capsys, "rate-curve", "--config", path, "--distance-km", "50")[1])[0]
        assert float(cfg["eta"]) > float(base["eta"])

    def test_out_file(self, capsys, tmp_path):
        target = tmp_path / "table.csv"
        code, out, _ = run_cli(capsys, "sift-table", "--out", str(target))
        assert code == 0 and out == ""
        assert target.read_bytes().count(b"\n") == 33
        assert b"\r" not in target.read_bytes()


class TestTolerance:
    def test_zero_qber_maximal(self, capsys):
        code, out, err = run_cli(capsys, "tolerance-curve", "--qber-range", "0:0.3:0.02", "-L", "64")
        rows = parse(out)
        r = [float(x["R"]) for x in rows]
        assert code == 0 and r[0] == max(r) > 0
        assert "zero-rate QBER threshold" in err

    def test_loss_reduces_threshold(self):
        qbers = np.arange(0, 0.35, 0.002)
        _, near = cli.tolerance_curve({}, 50.0, [128], qbers)
        _, far = cli.tolerance_curve({}, 100.0, [128], qbers)
        assert far[128] < near[128]

    def test_rejects_half(self):
        with pytest.raises(cli.ParameterError):
            cli.tolerance_curve({}, 50.0, [16], [0.1, 0.5])

    def test_no_positive_rate_gives_none(self):
        _, th = cli.tolerance_curve({}, 50.0, [16], [0.4, 0.45])
        assert th == {16: None}


class TestSimulate:
    def test_byte_identical_reruns(self, capsys):
        argv = ("simulate", "--trials", "1000", "--seed", "7", "-L", "16")
        first = run_cli(capsys, *argv)[1]
        assert first == run_cli(capsys, *argv)[1]
        assert list(parse(first)[0]) == list(cli.SIMULATE_COLUMNS)

    def test_workers_do_not_change_output(self, capsys):
        argv = ("simulate", "--trials", "5000", "--seed", "3", "-L", "16")
        assert run_cli(capsys, *argv)[1] == run_cli(capsys, *argv, "--workers", "2")[1]

    def test_noiseless(self, capsys, config):
        path = config("detector_efficiency = 1\ndark_count = 0\nmisalignment = 0\n")
        row = parse(run_cli(capsys, "simulate", "--config", path, "--trials", "2000", "-L", "16")[1])[0]
        assert int(row["sift_errors"]) == 0 and int(row["matched"]) > 0

    def test_default_noise_zero_distance_within_band(self, capsys):
        rows = parse(run_cli(capsys, "simulate", "--trials", "20000", "--seed", "1", "--distance-km", "0")[1])
        row = rows[0]
        assert row["qber_within_3sigma"] == "1"
        assert abs(float(row["empirical_qber"]) - float(row["analytic_qber"])) <= float(row["qber_3sigma"])

    def test_rejects_zero_trials(self, capsys):
        assert run_cli(capsys, "simulate", "--trials", "0")[0] == 2


@pytest.mark.parametrize(
    "text, expected",
    [("0:500:10", 51), ("0:0.49:0.001", 491), ("5:5:1", 1), ("0:1:0.3", 4)],
)
def test_parse_range_inclusive(text, expected):
    values = cli.parse_range(text)
    assert len(values) == expected
    assert values[0] == float(text.split(":")[0])


@pytest.mark.parametrize("text", ["0:10", "a:b:c", "0:10:0", "10:0:1"])
def test_parse_range_rejects(text):
    with pytest.raises(cli.ParameterError):
        cli.parse_range(text)


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "mppm_qkd", "sift-table"], capture_output=True, text=True, check=True
    )
    assert proc.stdout.startswith(",".join(cli.SIFT_COLUMNS) + "\n")
