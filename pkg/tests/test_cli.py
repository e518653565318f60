import csv
import io
import json

import pytest

from discrisk.cli import dumps, main


def _run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def _csv_rows(text):
    return list(csv.reader(l for l in text.splitlines() if not l.startswith("#")))


@pytest.fixture
def profile_file(tmp_path):
    rng_records = [f"c{i % 4000}" for i in range(20000)] + [f"u{i}" for i in range(3000)]
    rec = tmp_path / "records.txt"
    rec.write_text("\n".join(rng_records) + "\n")
    out = tmp_path / "p.json"
    assert main(["profile", "--in", str(rec), "--out", str(out)]) == 0
    return out


class TestProfile:
    def test_stdin(self, capsys, monkeypatch):
        monkeypatch.setattr("sys.stdin", io.StringIO("a\nb\nb\n"))
        code, out, _ = _run(capsys, ["profile", "--in", "-"])
        assert code == 0
        obj = json.loads(out)
        assert obj["data"] == {"n": 3, "k": 2, "z": {"1": 1, "2": 1}}
        assert obj["config"]["command"] == "profile"

    def test_counts_csv(self, capsys, tmp_path):
        f = tmp_path / "c.csv"
        f.write_text("cell,count\nx,3\ny,1\n")
        code, out, _ = _run(capsys, ["profile", "--in", str(f), "--counts", "--format", "csv"])
        assert code == 0
        assert out.startswith("# config: ")
        assert _csv_rows(out) == [["i", "z"], ["1", "1"], ["3", "1"]]

    def test_missing_file(self, capsys):
        code, out, err = _run(capsys, ["profile", "--in", "/nonexistent/x"])
        assert code == 1 and out == "" and err


class TestEstimate:
    def test_all(self, capsys, profile_file):
        code, out, _ = _run(capsys, ["estimate", "--profile", str(profile_file), "--lambda", "9",
                                     "--nbar", "230000", "--estimator", "all"])
        assert code == 0
        data = json.loads(out)["data"]
        assert isinstance(data, list) and len(data) == 6
        assert {d["name"] for d in data} == {"binomial2", "poisson", "naive", "dirichlet", "bethlehem", "skinner"}

    def test_json_and_csv_agree(self, capsys, profile_file):
        base = ["estimate", "--profile", str(profile_file), "--lambda", "9", "--nbar", "230000",
                "--estimator", "naive", "--estimator", "dirichlet"]
        _, js, _ = _run(capsys, base)
        _, cs, _ = _run(capsys, base + ["--format", "csv"])
        data = json.loads(js)["data"]
        rows = _csv_rows(cs)
        col = rows[0].index("value")
        assert [float(r[col]) for r in rows[1:]] == [d["value"] for d in data]

    def test_numerical_error_exit_two(self, capsys, tmp_path):
        f = tmp_path / "big.json"
        f.write_text(json.dumps({"n": 300, "z": {"300": 1}}))
        code, out, err = _run(capsys, ["estimate", "--profile", str(f), "--lambda", "50",
                                       "--estimator", "poisson", "--beta", "100"])
        assert code == 2 and out == "" and "NumericalError" in err

    def test_domain_error_exit_one(self, capsys, profile_file):
        code, _, err = _run(capsys, ["estimate", "--profile", str(profile_file), "--lambda", "0.5",
                                     "--estimator", "naive"])
        assert code == 1 and "n_bar" in err

    def test_all_reports_failing_estimator(self, capsys, tmp_path):
        f = tmp_path / "flat.json"
        f.write_text(json.dumps({"n": 4, "z": {"1": 2, "2": 1}}))
        code, out, _ = _run(capsys, ["estimate", "--profile", str(f), "--lambda", "2", "--nbar", "12",
                                     "--format", "json"])
        assert code == 0
        data = {r["name"]: r for r in json.loads(out)["data"]}
        assert data["dirichlet"]["value"] is None and "theta" in data["dirichlet"]["error"]
        assert data["naive"]["value"] == pytest.approx(2 * 4 / 12)
        code, _, err = _run(capsys, ["estimate", "--profile", str(f), "--lambda", "2", "--nbar", "12",
                                     "--estimator", "dirichlet"])
        assert code == 1 and "DomainError" in err


class TestUsage:
    @pytest.mark.parametrize("argv", [["nope"], ["bounds"], ["bounds", "--n", "10", "--wat"], [],
                                      ["simulate", "--seed", "-4", "--table", "1"]])
    def test_usage_errors(self, capsys, argv):
        code, out, err = _run(capsys, argv)
        assert code == 1 and out == "" and "error" in err

    def test_simulate_needs_table_or_scenario(self, capsys):
        code, _, err = _run(capsys, ["simulate", "--family", "uniform"])
        assert code == 1


class TestOutputs:
    def test_simulate_table(self, capsys):
        code, out, _ = _run(capsys, ["simulate", "--table", "1", "--seed", "42", "--scale", "0.005",
                                     "--iterations", "2"])
        assert code == 0
        rows = _csv_rows(out)
        assert len(rows) == 8 and len(rows[0]) == 15

    def test_simulate_scenario_json(self, capsys):
        code, out, _ = _run(capsys, ["simulate", "--family", "zipf:1", "--cells", "300", "--nbar", "1500",
                                     "--n", "1000", "--mode", "poisson", "--iterations", "5",
                                     "--estimator", "unbiased", "--format", "json"])
        assert code == 0
        data = json.loads(out)["data"]
        assert data["scenario"]["lambda"] == 0.5
        assert data["iterations"] == 5

    def test_bounds_csv(self, capsys):
        code, out, _ = _run(capsys, ["bounds", "--lambda-min", "1", "--lambda-max", "20", "--n", "100000"])
        assert code == 0
        rows = _csv_rows(out)
        assert rows[0] == ["kind", "lambda", "n", "value"]
        assert {r[0] for r in rows[1:]} >= {"nmse_poisson", "nmse_binomial2", "minimax_lower"}

    def test_polyapprox(self, capsys):
        code, out, _ = _run(capsys, ["polyapprox", "--n", "100000", "--lambda", "9", "--L", "6"])
        assert code == 0
        data = json.loads(out)["data"]
        assert data["eq19_holds"] is True and data["L"] == 6

    def test_polyapprox_explicit(self, capsys):
        code, out, _ = _run(capsys, ["polyapprox", "--xi", "30", "--B", "15", "--L", "0"])
        assert json.loads(out)["data"]["error_gamma"] > 0.49

    def test_out_file(self, tmp_path, capsys):
        f = tmp_path / "b.csv"
        assert main(["bounds", "--n", "1000", "--out", str(f)]) == 0
        assert capsys.readouterr().out == ""
        assert f.read_text().startswith("# config: ")


class TestDumps:
    def test_float_digits(self):
        assert dumps(0.1) == "0.10000000000000001"
        assert dumps(float("nan")) == "null"
        assert dumps({"a": [1, True, None, "x"]}) == '{\n  "a": [\n    1,\n    true,\n    null,\n    "x"\n  ]\n}'
