"""Command-line front end: exit codes, artifact conventions, determinism,
and the documented per-subcommand behaviors.  Everything runs in-process
through cli.main so the suite stays fast."""

import json

import numpy as np
import pytest

from kerrlink import cli
from kerrlink.design import from_json
from kerrlink.entangle import EntanglementReport
from kerrlink.errors import NonConvergence, TruncationOverflow


def parse_csv(text):
    """Split an artifact into (echo params, header, rows of strings)."""
    params = {}
    header = None
    rows = []
    for line in text.strip().splitlines():
        if line.startswith("#"):
            key, _, val = line[2:].partition(" = ")
            params[key.strip()] = val.strip()
        elif header is None:
            header = line.split(",")
        else:
            rows.append(line.split(","))
    return params, header, rows


def run_csv(tmp_path, argv, name="art.csv"):
    out = tmp_path / name
    rc = cli.main(argv + ["--out", str(out)])
    return rc, parse_csv(out.read_text())


class TestExitCodes:
    def test_unknown_preset(self):
        assert cli.main(["design", "--preset", "nope"]) == 2

    def test_missing_target(self):
        assert cli.main(["design", "--alpha", "1", "--gamma", "0.1", "--chi", "0.1"]) == 2

    def test_k_flag_contradicts_target(self):
        assert cli.main(["design", "--preset", "bell-k1", "--K", "2"]) == 2

    def test_degenerate_leading_coefficient(self):
        rc = cli.main(
            ["design", "--coeffs", "1,0", "--alpha", "1", "--gamma", "0.1", "--chi", "0.1"]
        )
        assert rc == 3

    def test_truncation_overflow_maps_to_4(self, monkeypatch):
        def boom(*a, **k):
            raise TruncationOverflow("forced for the exit-code contract")

        monkeypatch.setattr(cli, "run_full_protocol", boom)
        assert cli.main(["simulate", "--preset", "bell-k1"]) == 4

    def test_nonconvergence_exits_5_with_flagged_rows(self, monkeypatch, tmp_path):
        best = EntanglementReport(0.5, np.array([0.5, 0.5]), np.array([1.0, -1.0 + 0j]))

        def stuck(*a, **k):
            raise NonConvergence("forced", best=best)

        monkeypatch.setattr(cli, "optimize_coefficients", stuck)
        rc, (params, header, rows) = run_csv(
            tmp_path, ["entangle-scan", "--x-grid", "1", "--K", "1"]
        )
        assert rc == 5
        assert header == ["x", "K", "pattern", "E", "flag"]
        assert rows == [["1", "1", "full", "0.5", "1"]], f"rows = {rows}"


class TestDesign:
    def test_photon_correlated_prints_coefficients(self, capsys):
        assert cli.main(["design", "--preset", "photon-correlated:2,2"]) == 0
        out = capsys.readouterr().out
        line = next(l for l in out.splitlines() if l.startswith("target c:"))
        got = np.array([complex(tok) for tok in line.removeprefix("target c:").split(",")])
        want = np.array([np.exp(1j), -1 - np.exp(1j), 1.0])
        assert np.allclose(got, want, atol=1e-10), f"printed c = {got}"

    def test_high_x_roots_sit_at_pm_pi_over_3(self, capsys):
        # relative to the 2|alpha|^2 chi carrier phase the two roots sit
        # symmetrically at +-pi/3 on the |gamma| circle
        assert cli.main(["design", "--preset", "maxent-k2-high"]) == 0
        out = capsys.readouterr().out
        lines = out.splitlines()
        start = lines.index("detector,root_re,root_im,mult,abs,arg") + 1
        rel = []
        for line in lines[start : start + 2]:
            _, re_, im_, mult, ab, _ = line.split(",")
            z = float(re_) + 1j * float(im_)
            assert abs(abs(z) - 0.1) < 1e-9, f"|root| = {abs(z)}"
            rel.append(float(np.angle(z * np.exp(-2j * 1e4 * 0.1))))
        assert np.allclose(sorted(rel), [-np.pi / 3, np.pi / 3], atol=1e-9), f"rel = {rel}"

    def test_out_writes_scheme_json_roundtrip(self, tmp_path, capsys):
        out = tmp_path / "scheme.json"
        rc = cli.main(["design", "--preset", "maxent-k2-low", "--out", str(out)])
        capsys.readouterr()
        assert rc == 0
        scheme = from_json(out.read_text())
        assert scheme.K == 2
        assert len(scheme.T) == 2


class TestSimulate:
    def test_bell_k1_artifact(self, tmp_path):
        rc, (params, header, rows) = run_csv(tmp_path, ["simulate", "--preset", "bell-k1"])
        assert rc == 0
        assert header[0] == "pattern" and "oracle_residual" in header
        assert abs(float(params["probability_sum"]) - 1.0) < 1e-9
        by_pattern = {r[0]: r for r in rows}
        click = by_pattern["1"]
        assert float(click[1]) > 0.01, f"click probability = {click[1]}"
        assert float(click[2]) >= 0.99, f"fidelity = {click[2]}"
        assert abs(float(click[3]) - 1.0) < 0.02, f"entanglement = {click[3]}"
        assert float(click[4]) < 0.01, f"oracle residual = {click[4]}"
        total = sum(float(r[1]) for r in rows)
        assert abs(total - 1.0) < 1e-9, f"sum p = {total}"

    def test_photon_correlated_small_alpha(self, tmp_path):
        rc, (params, header, rows) = run_csv(
            tmp_path, ["simulate", "--preset", "photon-correlated:2,2"]
        )
        assert rc == 0
        click = next(r for r in rows if r[0] == "11")
        assert float(click[2]) >= 0.95, f"all-click fidelity = {click[2]}"


class TestEntangleScan:
    def test_k1_flat_and_k2_endpoints(self, tmp_path):
        rc, (params, header, rows) = run_csv(
            tmp_path, ["entangle-scan", "--x-grid", "0.0001,100", "--K", "1,2"]
        )
        assert rc == 0
        table = {(r[0], r[1], r[2]): float(r[3]) for r in rows}
        assert abs(table[("0.0001", "1", "full")] - 1.0) < 1e-6
        assert abs(table[("100", "1", "full")] - 1.0) < 1e-6
        assert abs(table[("0.0001", "2", "full")] - 1.5) < 5e-3
        assert abs(table[("100", "2", "full")] - np.log2(3)) < 5e-3
        # one-missing rows accompany every K=2 point
        assert ("100", "2", "miss1") in table and ("100", "2", "miss2") in table

    def test_k3_best_two_missing_tracks_k1(self, tmp_path):
        # with all but one detector silent the best surviving root reproduces
        # the K=1 optimum once the coherent components are distinguishable
        rc, (params, header, rows) = run_csv(
            tmp_path, ["entangle-scan", "--x-grid", "1,10,100", "--K", "1,3"]
        )
        assert rc == 0
        for x in ("1", "10", "100"):
            e1 = next(float(r[3]) for r in rows if r[:3] == [x, "1", "full"])
            pairs = [
                float(r[3])
                for r in rows
                if r[0] == x and r[1] == "3" and r[2].startswith("miss") and len(r[2]) == 6
            ]
            assert len(pairs) == 3, f"x={x}: pair rows = {pairs}"
            best = max(pairs)
            assert abs(best - e1) <= 1e-3, f"x={x}: best 2-missing {best} vs K=1 {e1}"

    def test_flag_column_zero_on_convergence(self, tmp_path):
        rc, (params, header, rows) = run_csv(
            tmp_path, ["entangle-scan", "--x-grid", "1", "--K", "1"]
        )
        assert rc == 0
        assert all(r[4] == "0" for r in rows)


class TestFeasibility:
    def test_report_cutoffs_and_sweeps(self, tmp_path, capsys):
        rc, (params, header, rows) = run_csv(
            tmp_path,
            ["feasibility", "--K", "1,2", "--db-grid", "0,10,14,16,20,28,30"],
        )
        capsys.readouterr()
        assert rc == 0
        assert header == ["sweep", "K", "Lambda_dB", "F", "p_K"]
        assert "10*log10(Lambda+1)" in params["dB_convention"]
        wall = float(params["darkcount_cutoff_dB_K1"])
        assert 20.0 <= wall <= 28.0, f"dark-count wall = {wall} dB"
        cut2 = float(params["practical_cutoff_dB_K2"])
        assert abs(cut2 - 14.59) < 0.5, f"K=2 practical cutoff = {cut2} dB"
        loss1 = {float(r[2]): float(r[4]) for r in rows if r[0] == "loss" and r[1] == "1"}
        assert loss1[0.0] == pytest.approx(5e-3, rel=1e-9)
        assert loss1[20.0] > 0.0
        assert loss1[30.0] == 0.0, f"p beyond the wall = {loss1[30.0]}"
        fixed = {float(r[2]) for r in rows if r[0] == "fidelity"}
        assert fixed == {14.0, 28.0}

    def test_report_prints_inequalities(self, capsys):
        rc = cli.main(["feasibility", "--K", "1", "--db-grid", "0", "--out", "/dev/null"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "overall:" in out
        assert out.count("PASS") + out.count("FAIL") >= 6


class TestArtifactConventions:
    def test_simulate_byte_identical(self, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        assert cli.main(["simulate", "--preset", "bell-k1", "--out", str(a)]) == 0
        assert cli.main(["simulate", "--preset", "bell-k1", "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_scan_byte_identical(self, tmp_path):
        argv = ["entangle-scan", "--x-grid", "1", "--K", "1,2", "--seed", "3"]
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        assert cli.main(argv + ["--out", str(a)]) == 0
        assert cli.main(argv + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_csv_echo_and_header_shape(self, tmp_path):
        out = tmp_path / "art.csv"
        assert cli.main(["simulate", "--preset", "bell-k1", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        n_echo = 0
        while lines[n_echo].startswith("# "):
            n_echo += 1
        assert n_echo >= 5, "echo block missing"
        width = len(lines[n_echo].split(","))
        for line in lines[n_echo + 1 :]:
            assert len(line.split(",")) == width, f"ragged row: {line}"
            assert ";" not in line

    def test_json_format(self, tmp_path):
        out = tmp_path / "art.json"
        rc = cli.main(
            ["entangle-scan", "--x-grid", "1", "--K", "1", "--format", "json",
             "--out", str(out)]
        )
        assert rc == 0
        doc = json.loads(out.read_text())
        assert doc["params"]["subcommand"] == "entangle-scan"
        row = doc["rows"][0]
        assert row["pattern"] == "full" and abs(row["E"] - 1.0) < 1e-6
