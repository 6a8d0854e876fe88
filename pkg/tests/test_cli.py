import csv
import io
import json
from fractions import Fraction as F

from dicehit.cli import main
from dicehit.polyring import parse_poly_text

SCHEMA_KEYS = {
    "spec", "R", "a_R", "tail", "M", "L_abs", "L_rel", "var_T", "skew_T",
    "kurt_T", "var_N", "cov", "corr", "status", "meta",
}


def call(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_run_json_schema(capsys):
    code, out = call(capsys, "run", "--faces", "6", "--predicate", "prime", "--init", "0", "--rounds", "200", "--digits", "20")
    payload = json.loads(out)
    assert code == 0 and payload["status"] == "ok"
    assert set(payload) == SCHEMA_KEYS
    assert payload["M"]["decimal"] == "2.4284979136935041712"
    for key in ("a_R", "tail", "M", "L_abs", "var_T", "kurt_T", "cov"):
        assert set(payload[key]) == {"num", "den", "decimal"}
        assert isinstance(payload[key]["num"], str)
        assert F(int(payload[key]["num"]), int(payload[key]["den"])) >= 0
    assert payload["corr"]["decimal"].startswith("0.965644")
    assert payload["meta"]["W"] == 6 and "kurtosis" in payload["meta"]
    assert F(int(payload["a_R"]["num"]), int(payload["a_R"]["den"])) + F(
        int(payload["tail"]["num"]), int(payload["tail"]["den"])
    ) == 1


def test_run_csv_matches_json(capsys):
    args = ["run", "--die", "1:2,2:1,3:1", "--predicate", "semiprime", "--init", "1", "--rounds", "60", "--digits", "12"]
    _, js = call(capsys, *args)
    _, cs = call(capsys, *args, "--format", "csv")
    payload = json.loads(js)
    (row,) = csv.DictReader(io.StringIO(cs))
    for key, v in row.items():
        if key in ("R", "status"):
            assert str(payload[key]) == v
        else:
            assert payload[key]["decimal"] == v


def test_run_other_predicates(capsys):
    _, out = call(capsys, "run", "--faces", "6", "--predicate", "semiprime", "--rounds", "400", "--digits", "10")
    assert json.loads(out)["M"]["decimal"].startswith("3.788921291")
    # the squares figure is M at the 1 - 1e-6 guarantee round, not the R -> infinity limit
    _, out = call(capsys, "run", "--faces", "6", "--predicate", "perfect-square", "--init", "2", "--eps", "1e-6", "--digits", "12")
    payload = json.loads(out)
    assert payload["R"] == 527 and payload["M"]["decimal"].startswith("9.01861")


def test_run_exit_codes(capsys):
    code, out = call(capsys, "run", "--faces", "6", "--init", "5", "--rounds", "3")
    assert code == 3 and json.loads(out)["status"] == "invalid-start"
    code, out = call(capsys, "run", "--faces", "6", "--init", "5", "--rounds", "3", "--allow-trivial-start")
    assert code == 0 and json.loads(out)["M"]["decimal"] == "0"
    code, out = call(capsys, "run", "--die", "4:1,6:1", "--rounds", "20")
    assert code == 4 and json.loads(out)["status"] == "no-hits"
    code, out = call(capsys, "run", "--die", "4:1,6:1", "--eps", "1e-3", "--rmax", "20")
    assert code == 5 and json.loads(out)["status"] == "not-converged"
    code, out = call(capsys, "run", "--faces", "6", "--eps", "1e-30", "--rmax", "50")
    assert code == 5 and json.loads(out)["status"] == "not-converged"


def test_usage_errors(capsys):
    assert main(["run", "--faces", "6", "--die", "1:1", "--rounds", "3"]) == 2
    assert main(["run", "--faces", "6"]) == 2
    assert main(["run", "--faces", "6", "--rounds", "3", "--predicate", "cube"]) == 2


def test_pgf_two_rounds(capsys):
    code, out = call(capsys, "pgf", "--faces", "6", "--predicate", "prime", "--init", "0", "--rounds", "2")
    assert code == 0
    base, groups = parse_poly_text(out)
    assert base == 6
    assert groups == [
        (1, {2: F(1, 6), 3: F(1, 6), 5: F(1, 6)}),
        (2, {2: F(1, 36), 3: F(1, 36), 5: F(2, 36), 7: F(3, 36), 11: F(1, 36)}),
    ]


def test_pgf_never_and_forced(capsys):
    _, out = call(capsys, "pgf", "--faces", "6", "--predicate", "never", "--rounds", "3")
    _, groups = parse_poly_text(out)
    assert groups == [(1, {}), (2, {}), (3, {})]
    _, out = call(capsys, "pgf", "--die", "1:1", "--predicate", "prime", "--rounds", "3")
    _, groups = parse_poly_text(out)
    assert [g for g in groups if g[1]] == [(2, {2: F(1)})]


def test_pgf_resums_to_a_R(capsys):
    args = ["--die", "1:1,2:2,5:1", "--predicate", "prime", "--init", "4"]
    _, text = call(capsys, "pgf", *args, "--rounds", "30")
    _, js = call(capsys, "run", *args, "--rounds", "30")
    _, groups = parse_poly_text(text)
    total = sum(sum(g.values(), F(0)) for _, g in groups)
    a = json.loads(js)["a_R"]
    assert total == F(int(a["num"]), int(a["den"]))


def test_pgf_json(capsys):
    _, out = call(capsys, "pgf", "--faces", "6", "--rounds", "1", "--format", "json")
    payload = json.loads(out)
    assert payload["rounds"] == [{"k": 1, "terms": [[2, "1", 1], [3, "1", 1], [5, "1", 1]]}]


def test_guarantee(capsys):
    code, out = call(capsys, "guarantee", "--faces", "6", "--predicate", "prime", "--init", "0", "--eps", "0.5")
    payload = json.loads(out)
    assert code == 0 and payload["R"] == 1 and payload["survivor_mass"]["num"] == "1"
    code, out = call(capsys, "guarantee", "--die", "4:1,6:1", "--eps", "0.5", "--rmax", "40")
    assert code == 5 and json.loads(out)["status"] == "not-converged"


def test_constant(capsys):
    code, out = call(capsys, "constant", "--faces", "6", "--predicate", "prime", "--init", "0", "--digits", "20")
    assert code == 0 and out.strip() == "2.4284979136935042304"
    code, out = call(capsys, "constant", "--faces", "6", "--digits", "10", "--format", "json")
    assert json.loads(out)["value"] == "2.428497914"


def test_sweep(capsys):
    code, out = call(capsys, "sweep", "--faces", "5..7", "--predicate", "prime", "--eps", "1e-7", "--digits", "12")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0
    assert list(rows[0]) == ["faces", "R", "tail", "M", "var", "skew", "kurt", "status"]
    assert [r["faces"] for r in rows] == ["5", "6", "7"]
    six = rows[1]
    # cross-check against an independent guarantee + run at the same parameters
    _, g = call(capsys, "guarantee", "--faces", "6", "--eps", "1e-7")
    R = json.loads(g)["R"]
    _, js = call(capsys, "run", "--faces", "6", "--rounds", str(R), "--digits", "12")
    assert six["R"] == str(R) and six["M"] == json.loads(js)["M"]["decimal"]
    assert six["kurt"] == json.loads(js)["kurt_T"]["decimal"]


def test_sweep_parallel_matches_serial(capsys):
    _, a = call(capsys, "sweep", "--faces", "2..9", "--eps", "1e-5", "--digits", "8")
    _, b = call(capsys, "sweep", "--faces", "2..9", "--eps", "1e-5", "--digits", "8", "--jobs", "3")
    assert a == b


def test_sweep_flags_bad_rows(capsys):
    code, out = call(capsys, "sweep", "--faces", "1..2", "--predicate", "perfect-square", "--init", "2", "--eps", "1e-3", "--rmax", "5")
    rows = {r["faces"]: r for r in csv.DictReader(io.StringIO(out))}
    assert code == 6
    assert rows["1"]["status"] == "ok"  # 2 -> 3 -> 4
    assert rows["2"]["status"] == "not-converged"


def test_simulate(capsys):
    code, out = call(capsys, "simulate", "--faces", "6", "--trials", "20000", "--seed", "9")
    payload = json.loads(out)
    assert code == 0 and payload["trials"] == 20000 and "PCG64" in payload["generator"]
    _, again = call(capsys, "simulate", "--faces", "6", "--trials", "20000", "--seed", "9")
    assert again == out


def test_plotdata(capsys):
    code, out = call(capsys, "plotdata", "--faces", "2..20", "--predicate", "prime", "--init", "0", "--eps", "1e-7", "--digits", "15")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 19
    for row in rows[::6]:
        _, js = call(capsys, "run", "--faces", row["faces"], "--eps", "1e-7", "--digits", "15")
        assert row["M"] == json.loads(js)["M"]["decimal"]
    assert all(0 < float(r["M"]) < float("inf") for r in rows)


def test_plotdata_grid(capsys):
    _, out = call(capsys, "plotdata", "--faces", "3..4", "--init", "0,10..11", "--rounds", "50")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [(r["faces"], r["init"]) for r in rows] == [
        ("3", "0"), ("3", "10"), ("3", "11"), ("4", "0"), ("4", "10"), ("4", "11")
    ]
    assert rows[2]["status"] == "invalid-start"  # 11 is prime


def test_output_file(tmp_path, capsys):
    target = tmp_path / "out.json"
    assert main(["run", "--faces", "6", "--rounds", "5", "-o", str(target)]) == 0
    assert json.loads(target.read_text())["R"] == 5
    assert capsys.readouterr().out == ""
