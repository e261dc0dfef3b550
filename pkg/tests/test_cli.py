import json
import subprocess
import sys

from maxmin_pb.cli import main, strip_timing
from maxmin_pb.ingest import native_fixture_dir

FIX = native_fixture_dir()


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv, "--out", "json")
    assert code == 0
    return json.loads(out)


def test_solve_brute(capsys):
    rep = run_json(capsys, "solve", "--input", str(FIX / "narrow_top.json"), "--method", "brute")
    (res,) = rep["results"]
    assert res["value"] == 3 and res["witness"] == ["p2", "p3"]
    assert rep["status"] == 0


def test_solve_relax_certify(capsys):
    rep = run_json(capsys, "solve", "--input", str(FIX / "narrow_top.json"),
                   "--method", "ordered-relax", "--certify")
    assert rep["results"][0]["value"] == 3
    cert = rep["certificates"]["additive_bound"]
    assert cert["holds"] and cert["eta"] == "1"


def test_solve_budget_override(capsys):
    rep = run_json(capsys, "solve", "--input", str(FIX / "limit.json"), "--method", "dp", "--budget", "13")
    assert rep["results"][0]["value"] == 1


def test_solve_all_optimal(capsys):
    rep = run_json(capsys, "solve", "--input", str(FIX / "discount.json"), "--all-optimal")
    res = rep["results"][0]
    assert res["all_optimal"] == [["p1", "p3", "p4"], ["p2", "p3", "p4"]]
    assert res["winners"] == ["p1", "p2", "p3", "p4"]


def test_exact_methods_agree(capsys):
    for name in ("villages", "counties", "discount"):
        values = set()
        for method in ("brute", "dp", "bnb"):
            rep = run_json(capsys, "solve", "--input", str(FIX / f"{name}.json"), "--method", method)
            values.add(rep["results"][0]["value"])
        assert len(values) == 1


def test_solve_minimax(capsys):
    path = str(FIX / "narrow_top.json")
    rep = run_json(capsys, "solve", "--input", path, "--method", "brute", "--objective", "minimax-disutility")
    assert rep["results"][0]["value"] == 3
    rep = run_json(capsys, "solve", "--input", path, "--method", "bnb", "--objective", "minimax-disutility")
    assert rep["results"][0]["value"] == 3
    rep = run_json(capsys, "solve", "--input", str(FIX / "appendix_hcbp.json"), "--method", "ordered-relax",
                   "--objective", "minimax-disutility", "--certify")
    assert rep["certificates"]["minimax_bound"]["holds"]


def test_info(capsys):
    rep = run_json(capsys, "info", "--input", str(FIX / "example1.json"))
    assert rep["analysis"]["l_o"] == 1 and rep["analysis"]["h_o"] == 2
    rep = run_json(capsys, "info", "--input", str(FIX / "scaled.json"))
    assert rep["analysis"]["scalable_limit"] == 3 and rep["analysis"]["gcd"] == 100
    rep = run_json(capsys, "info", "--input", str(FIX / "unit_cost.json"))
    assert rep["analysis"]["scalable_limit"] == 1


def test_axioms_command(capsys):
    rep = run_json(capsys, "axioms", "--input", str(FIX / "limit.json"), "--rule", "mpb")
    v = {r["axiom"]: r["verdict"] for r in rep["reports"]}
    assert v["limit-monotonicity"] == "violated"
    assert v["strong-exhaustiveness"] == "violated"
    assert v["weak-exhaustiveness"] == "holds"
    path = str(FIX / "counties.json")
    rep = run_json(capsys, "axioms", "--input", path, "--rule", "utilitarian", "--axiom", "maximal-coverage")
    assert [r["verdict"] for r in rep["reports"]] == ["violated"]
    rep = run_json(capsys, "axioms", "--input", path, "--rule", "mpb", "--axiom", "maximal-coverage")
    assert [r["verdict"] for r in rep["reports"]] == ["holds"]


def test_bench_fixture_dir(capsys):
    rep = run_json(capsys, "bench", "--dir", str(FIX))
    names = [r["name"] for r in rep["rows"]]
    assert names == sorted(names) and len(names) == len(list(FIX.glob("*.json")))
    assert all(r["certificate_holds"] for r in rep["rows"])
    assert rep["summary"]["failed"] == 0


def test_bench_synthetic(capsys):
    rep = run_json(capsys, "bench", "--synthetic", "15", "--seed", "3", "--m", "8")
    assert len(rep["rows"]) == 15
    assert all(r["certificate_holds"] for r in rep["rows"])


def test_bench_empty_dir(capsys, tmp_path):
    rep = run_json(capsys, "bench", "--dir", str(tmp_path))
    assert rep["rows"] == [] and rep["summary"]["rows"] == 0


def test_bench_records_bad_file(capsys, tmp_path):
    (tmp_path / "a.json").write_text("{oops")
    (tmp_path / "b.json").write_text((FIX / "narrow_top.json").read_text())
    rep = run_json(capsys, "bench", "--dir", str(tmp_path))
    assert "error" in rep["rows"][0] and rep["rows"][1]["exact_value"] == 3


def test_determinism(capsys):
    a = run(capsys, "bench", "--dir", str(FIX), "--no-timing")[1]
    b = run(capsys, "bench", "--dir", str(FIX), "--no-timing")[1]
    assert a == b
    c = json.loads(run(capsys, "bench", "--dir", str(FIX))[1])
    assert strip_timing(c) == json.loads(a)


def test_exit_codes(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"budget": 0}')
    assert run(capsys, "solve", "--input", str(bad))[0] == 2
    assert run(capsys, "solve", "--input", str(tmp_path / "missing.json"))[0] == 2
    path = str(FIX / "villages.json")
    assert run(capsys, "solve", "--input", path, "--method", "brute", "--brute-cap", "4")[0] == 3
    assert run(capsys, "solve", "--input", path, "--method", "dp", "--dp-states", "3")[0] == 3
    big = tmp_path / "big.json"
    projects = [{"id": f"p{k}", "cost": 1} for k in range(21)]
    big.write_text(json.dumps({"budget": 3, "projects": projects, "votes": [["p0"]]}))
    assert run(capsys, "axioms", "--input", str(big))[0] == 3


def test_out_file_and_formats(capsys, tmp_path):
    target = tmp_path / "r.csv"
    code, out, _ = run(capsys, "solve", "--input", str(FIX / "narrow_top.json"), "--out", "csv",
                       "--out-file", str(target), "--no-timing")
    assert code == 0 and out == ""
    assert target.read_text().splitlines() == ["method,objective,value,cost,witness", "bnb,maxmin,3,6,p2 p3"]
    code, out, _ = run(capsys, "info", "--input", str(FIX / "example1.json"), "--out", "text")
    assert "l_o=1" in out.replace("key=l_o  value=", "l_o=")


def test_pabulib_input_with_decimals(capsys, tmp_path):
    pb = tmp_path / "x.pb"
    pb.write_text("META\nkey;value\nbudget;6.5\nPROJECTS\nproject_id;cost\na;1.5\nb;5\n"
                  "VOTES\nvoter_id;vote\n1;a\n2;b\n")
    assert run(capsys, "solve", "--input", str(pb))[0] == 2
    rep = run_json(capsys, "solve", "--input", str(pb), "--decimals", "1", "--method", "brute")
    assert rep["results"][0]["value"] == 15


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "maxmin_pb", "solve", "--input", str(FIX / "narrow_top.json"),
         "--method", "brute", "--out", "text"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert "value=3" in proc.stdout
