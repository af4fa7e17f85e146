import json
import math
import subprocess
import sys


from lefgrowth.cli import CSV_HEADER, MANIFEST_NAME, main, parse_range
from lefgrowth.permissible import build_finite_action, make_table


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_range():
    assert parse_range("2..4") == [2, 3, 4]
    assert parse_range("1,3") == [1, 3]
    assert parse_range("5") == [5]
    assert parse_range("4..3") == []


def test_permissible_ok_and_violation(tmp_path, capsys):
    code, out, _ = run(["permissible", "--builtin", "pow2", "--depth", "10"], capsys)
    assert code == 0 and json.loads(out)["ok"]
    code, out, _ = run(["permissible", "--table", "1,2,3,10"], capsys)
    rep = json.loads(out)
    assert code == 1
    assert rep["violation"]["index"] == 2 and rep["violation"]["clause"] == "upper"


def test_permissible_malformed(capsys):
    code, _, err = run(["permissible", "--table", "[1, 2"], capsys)
    assert code == 2 and err


def test_usage_errors(capsys):
    assert run([], capsys)[0] == 2
    assert run(["permissible"], capsys)[0] == 2
    assert run(["permissible", "--table", "1,2", "--builtin", "pow2"], capsys)[0] == 2


def test_omega_outputs(tmp_path, capsys):
    code, _, _ = run(["omega", "--builtin", "linear", "--depth", "8", "--out-dir", str(tmp_path)], capsys)
    assert code == 0
    rows = (tmp_path / "growth.csv").read_text().splitlines()
    assert rows[0] == "radius,ball_size"
    assert [r.split(",") for r in rows[1:]] == [[str(i), str(i + 1)] for i in range(8)]
    dot = (tmp_path / "omega.dot").read_text()
    assert dot.startswith("digraph") and dot.count("[layer=") == 8
    manifest = json.loads((tmp_path / MANIFEST_NAME).read_text())
    assert set(manifest["outputs"]) == {"growth.csv", "omega.dot"}


def test_omega_pow2_stdout(capsys):
    code, out, _ = run(["omega", "--builtin", "pow2", "--depth", "6"], capsys)
    assert code == 0
    sizes = [int(r.split(",")[1]) for r in out.splitlines()[1:]]
    assert sizes == [2**n for n in range(6)]


def test_bounds_sym_linear(capsys):
    code, out, _ = run(["bounds", "--builtin", "linear", "--range", "5"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == CSV_HEADER
    rows = [l.split(",") for l in lines[1:]]
    upper = next(r for r in rows if r[0] == "5")
    lower = next(r for r in rows if r[0] == "72")
    a = build_finite_action(make_table("linear", 11), 5)
    assert int(upper[3]) == math.factorial(11) * a.Q_order == 10664491622400
    assert lower[1] == "720"


def test_bounds_elem_flavors(capsys):
    code, out, _ = run(["bounds", "--builtin", "linear", "--range", "2", "--flavor", "elem-Z"], capsys)
    assert code == 0
    row = out.splitlines()[1].split(",")
    # q = 2^(n+1) + 1 = 9, |X_2| = 5 and |Q_2| = 1200
    assert int(row[3]) == 9**25 * 1200
    code, out, _ = run(["bounds", "--builtin", "linear", "--range", "2", "--flavor", "elem-p", "--prime", "3"], capsys)
    assert code == 0 and int(out.splitlines()[1].split(",")[3]) == 3**25 * 1200
    assert run(["bounds", "--builtin", "linear", "--range", "2", "--flavor", "elem-p", "--prime", "4"], capsys)[0] == 2


def test_bounds_range_edges(capsys):
    code, out, _ = run(["bounds", "--builtin", "linear", "--range", "3..2"], capsys)
    assert code == 0 and out == CSV_HEADER + "\n"
    assert run(["bounds", "--builtin", "linear", "--range", "9"], capsys)[0] == 2


def test_witness_and_verify(tmp_path, capsys):
    path = tmp_path / "w.json"
    code, _, err = run(["witness", "--n", "1", "--json", str(path)], capsys)
    assert code == 0 and "18 elements" in err
    code, out, _ = run(["verify", str(path)], capsys)
    assert code == 0 and json.loads(out)["status"] == "verified"
    # corrupt one image: the replay must fail with a counterexample
    data = json.loads(path.read_text())
    data["entries"][1]["image"], data["entries"][2]["image"] = data["entries"][2]["image"], data["entries"][1]["image"]
    path.write_text(json.dumps(data))
    code, out, _ = run(["verify", str(path)], capsys)
    assert code == 1 and "counterexample" in json.loads(out)


def test_verify_usage(tmp_path, capsys):
    assert run(["verify", str(tmp_path / "missing.json")], capsys)[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["verify", str(bad)], capsys)[0] == 2
    bad.write_text(json.dumps({"format": "other"}))
    assert run(["verify", str(bad)], capsys)[0] == 2


def test_witness_permissible_pair(tmp_path, capsys):
    code, _, err = run(["witness", "--builtin", "linear", "--n", "2", "--out-dir", str(tmp_path)], capsys)
    assert code == 0 and "verified" in err
    assert run(["verify", str(tmp_path / "witness.json")], capsys)[0] == 0


def test_tc_run(tmp_path, capsys):
    p = tmp_path / "s3.txt"
    p.write_text("a b\na b a b\na^2\nb^3\n")
    code, out, _ = run(["tc", "run", str(p)], capsys)
    assert code == 0 and json.loads(out)["index"] == 6
    code, out, _ = run(["tc", "run", str(p), "--strategy", "felsch"], capsys)
    assert json.loads(out)["index"] == 6
    q = tmp_path / "z2.txt"
    q.write_text("a b\na b a^-1 b^-1\n")
    code, out, _ = run(["tc", "run", str(q), "--cap", "50"], capsys)
    assert code == 1 and json.loads(out)["status"] == "aborted"
    r = tmp_path / "bad.txt"
    r.write_text("a\nc\n")
    assert run(["tc", "run", str(r)], capsys)[0] == 2


def test_replay_identical(tmp_path, capsys):
    out_dir = tmp_path / "run"
    assert run(["bounds", "--builtin", "pow2", "--range", "2..3", "--out-dir", str(out_dir)], capsys)[0] == 0
    code, out, _ = run(["replay", str(out_dir)], capsys)
    assert code == 0 and json.loads(out)["identical"]
    # a tampered output is reported
    (out_dir / "bounds.csv").write_text("tampered\n")
    m = json.loads((out_dir / MANIFEST_NAME).read_text())
    m["outputs"]["bounds.csv"] = "0" * 64
    (out_dir / MANIFEST_NAME).write_text(json.dumps(m))
    code, out, _ = run(["replay", str(out_dir)], capsys)
    assert code == 1 and json.loads(out)["differing"] == ["bounds.csv"]


def test_console_script_entry():
    res = subprocess.run([sys.executable, "-m", "lefgrowth.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip()
