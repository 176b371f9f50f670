import json
import math

import pytest

from wedgekrein import cli


def run(args, tmp_path):
    return cli.main(args + ["--out", str(tmp_path)])


class TestConfig:
    def test_unknown_key(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"omega": 4.0, "bogus": 1}))
        assert run(["oracle", "--config", str(cfg)], tmp_path) == cli.EXIT_CONFIG

    def test_bad_omega(self, tmp_path):
        assert run(["oracle", "--omega", "3.0"], tmp_path) == cli.EXIT_CONFIG

    def test_bad_path_start(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"r0": 0.5}))
        assert run(["converge", "--config", str(cfg)], tmp_path) == cli.EXIT_CONFIG

    def test_flags_override_file(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"omega": 4.0, "seed": 3}))
        c = cli.RunConfig.from_sources(str(cfg), {"seed": 5})
        assert c.omega == 4.0 and c.seed == 5

    def test_malformed_file(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text("{not json")
        assert run(["oracle", "--config", str(cfg)], tmp_path) == cli.EXIT_CONFIG

    def test_format(self):
        assert cli.fmt(0.1) == "0.10000000000000001"
        assert cli.fmt(3) == "3" and cli.fmt(True) == "1" and cli.fmt(float("nan")) == "nan"


class TestOracle:
    def test_pass(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"instances": 20}))
        assert run(["oracle", "--config", str(cfg), "--seed", "4"], tmp_path) == cli.EXIT_OK
        report = json.loads((tmp_path / "oracle.json").read_text())
        assert {"property", "instances", "max_error", "pass"} == set(report[0])
        assert all(r["pass"] for r in report)

    def test_injected_fault(self, tmp_path):
        code = run(["oracle", "--instances", "20", "--perturb-theta", "1e-3"], tmp_path)
        assert code == cli.EXIT_PROPERTY
        report = {r["property"]: r for r in json.loads((tmp_path / "oracle.json").read_text())}
        assert report["krein_vs_direct"]["pass"] is False


class TestWedge:
    def test_full_plane_closed_forms(self, tmp_path):
        code = run(["wedge", "--omega", repr(2 * math.pi), "--z", "0.5", "2.0", "--theta", "0.5", "--kmax", "20", "--mmax", "40"], tmp_path)
        assert code == cli.EXIT_OK
        rows = (tmp_path / "weyl.csv").read_text().splitlines()
        assert rows[0].split(",")[:4] == ["z", "gamma_literal", "gamma_modified", "gamma_general"]
        for line in rows[1:]:
            z, lit, mod = (float(v) for v in line.split(",")[:3])
            q = math.sqrt(z)
            assert lit == pytest.approx(1 - q / math.tan(q), rel=1e-8)
            assert mod == pytest.approx(q / math.tanh(q) - 1, rel=1e-8)

    def test_eigen_and_kernel(self, tmp_path):
        assert run(["wedge", "--theta", "1", "-1", "--z", "1.0"], tmp_path) == cli.EXIT_OK
        eig = [line.split(",") for line in (tmp_path / "eigenvalues.csv").read_text().splitlines()[1:]]
        assert all(row[-1] == "ok" and float(row[4]) < 1e-5 for row in eig)
        kern = [line.split(",") for line in (tmp_path / "kernel.csv").read_text().splitlines()[1:]]
        boundary = [row for row in kern if row[-1] == "boundary"]
        assert boundary and all(float(row[2]) == 0.0 for row in boundary)


class TestConverge:
    def test_single_row(self, tmp_path):
        code = run(["converge", "--n-max", "0", "--allow-cap"], tmp_path)
        assert code == cli.EXIT_OK
        lines = (tmp_path / "converge.csv").read_text().splitlines()
        assert len(lines) == 2
        assert lines[0] == "N,r_N,s_N,theta_N,distance,distance_no_renorm,sensitivity,M_used,tail,truncation_flag"

    def test_cap_exit_code(self, tmp_path):
        assert run(["converge", "--n-max", "1"], tmp_path) == cli.EXIT_CAP

    def test_seed_irrelevant(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        run(["converge", "--n-max", "2", "--seed", "1"], a)
        run(["converge", "--n-max", "2", "--seed", "99"], b)
        assert (a / "converge.csv").read_bytes() == (b / "converge.csv").read_bytes()


class TestPI:
    def test_matrices(self, tmp_path):
        assert run(["pi", "--z", "1.0"], tmp_path) == cli.EXIT_OK
        rows = (tmp_path / "pi.csv").read_text().splitlines()
        assert len(rows) == 5


class TestCache:
    def test_build_list_clear(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("WEDGEKREIN_CACHE_DIR", str(tmp_path / "cache"))
        assert run(["cache", "build", "--kmax", "3", "--mmax", "4"], tmp_path) == 0
        assert run(["cache", "list"], tmp_path) == 0
        assert "basis-" in capsys.readouterr().out
        assert run(["cache", "clear"], tmp_path) == 0
        assert not list((tmp_path / "cache").glob("*.json"))
