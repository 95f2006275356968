import json
import math
import shutil
import subprocess

import numpy as np
import pytest

from strongmac import __version__
from strongmac._serialize import csv_text, dumps, format_float, read_csv
from strongmac.cli import bht_payload, bound_payload, expurgate_payload, main, simulate_payload, wring_payload
from strongmac.macsim import Codebook, GaussianMacConfig, generate_codebook


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def write_json(tmp_path, doc, name="in.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def test_region_lists_three_constraints(capsys):
    code, out, _ = run(capsys, "region", "--powers", "1,1")
    assert code == 0
    manifest, header, rows = read_csv(out)
    assert header == ["subset_bitmask", "bound_bits"]
    assert manifest["subcommand"] == "region"
    assert [r[0] for r in rows] == ["1", "2", "3"]
    assert float(rows[2][1]) == pytest.approx(0.5 * math.log2(3), abs=1e-15)


def test_region_membership_status(capsys):
    code, out, _ = run(capsys, "region", "--powers", "1,1", "--rates", "0.3,0.3")
    assert code == 0
    assert json.loads(out)["result"] == {"inside": True, "violated_subset": None}
    code, out, _ = run(capsys, "region", "--powers", "1,1", "--rates", "0.45,0.45")
    assert code == 1
    assert json.loads(out)["result"]["violated_subset"] == [1, 2]


def test_region_ic(capsys, tmp_path):
    path = tmp_path / "ic.csv"
    code, out, _ = run(capsys, "region", "--powers", "1,1", "--gains", "2,2", "--out", str(path))
    assert code == 0 and out == ""
    manifest, header, rows = read_csv(path.read_text())
    assert len(rows) == 3 and manifest["params"]["gains"] == [2.0, 2.0]


def test_bound_matches_library_bytes(capsys):
    code, out, _ = run(capsys, "bound", "--n", "1000000", "--epsilon", "0", "--powers", "1,1", "--subset", "1,2")
    assert code == 0
    assert out.endswith(', "result": ' + dumps(bound_payload(1000000, 0.0, [1.0, 1.0], [1, 2])) + "}\n")
    doc = json.loads(out)
    assert doc["result"]["per_symbol_rate_upper"] == pytest.approx(0.97918125307261066, rel=1e-14)
    assert set(doc["manifest"]) == {"subcommand", "params", "seed", "version", "wall_time_s"}


def test_bound_gamma_one_gives_inf(capsys):
    code, out, _ = run(capsys, "bound", "--n", "1000", "--epsilon", "1", "--powers", "1,1", "--subset", "1,2")
    if code == 0:
        assert '"inf"' in out
    else:
        assert code == 1


def test_bound_scan_grid(capsys, tmp_path):
    path = tmp_path / "scan.csv"
    code, _, _ = run(capsys, "bound-scan", "--epsilon", "0.5", "--powers", "1,1", "--n-min", "1000",
                     "--n-max", "1000000", "--points", "4", "--out", str(path))
    assert code == 0
    _, header, rows = read_csv(path.read_text())
    assert header == ["n", "per_symbol_bound", "second_order_gap"]
    assert [int(r[0]) for r in rows] == [1000, 10000, 100000, 1000000]


def test_bht(capsys, tmp_path):
    doc = {"p": [0.5, 0.5], "q": [0.25, 0.75], "delta": 0.5}
    code, out, _ = run(capsys, "bht", write_json(tmp_path, doc))
    assert code == 0
    assert out.endswith(', "result": ' + dumps(bht_payload(doc)) + "}\n")
    assert json.loads(out)["result"]["beta"] == pytest.approx(0.25, abs=1e-15)


def test_bht_stdin(capsys, monkeypatch):
    import io

    monkeypatch.setattr("sys.stdin", io.StringIO('{"p": [1, 0], "q": [0, 1], "delta": 1}'))
    code, out, _ = run(capsys, "bht")
    assert code == 0 and json.loads(out)["result"]["beta"] == 0


def test_expurgate(capsys, tmp_path):
    doc = {"M": [2, 2], "epsilon": 0.2, "errors": [0.0, 0.1, 0.4, 0.1]}
    code, out, _ = run(capsys, "expurgate", write_json(tmp_path, doc))
    assert code == 0
    assert out.endswith(', "result": ' + dumps(expurgate_payload(doc)) + "}\n")


def test_wring_plain(capsys, tmp_path):
    doc = {
        "n": 1,
        "alphabet": [-1, 1],
        "p": [[[-1], 0.5], [[1], 0.5]],
        "u": [[[-1], 0.5], [[1], 0.5]],
        "c": 2.0,
        "delta": 0.5,
        "lambda": 0.1,
    }
    code, out, _ = run(capsys, "wring", write_json(tmp_path, doc))
    assert code == 0
    res = json.loads(out)["result"]
    assert res["certificate"]["passed"] is True
    assert out.endswith(', "result": ' + dumps(wring_payload(doc)) + "}\n")


def test_wring_unknown_symbol_is_domain_error(capsys, tmp_path):
    doc = {"n": 1, "alphabet": [0], "p": [[[5], 1.0]], "u": [[[0], 1.0]], "c": 2, "delta": 0.5, "lambda": 0.1}
    code, _, err = run(capsys, "wring", write_json(tmp_path, doc))
    assert code == 1 and "outside the alphabet" in err


def test_simulate_json_and_csv(capsys, tmp_path):
    args = ["simulate", "--n", "4", "--powers", "1,1", "--sizes", "2,2", "--trials", "300", "--seed", "7"]
    code, out, _ = run(capsys, *args)
    assert code == 0
    cfg = GaussianMacConfig(4, (1.0, 1.0), (2, 2))
    expected = simulate_payload(cfg, generate_codebook(cfg, "sphere", 7), 300, 7)
    assert out.endswith(', "result": ' + dumps(expected) + "}\n")
    code, out, _ = run(capsys, *args, "--out", "csv")
    assert code == 0
    manifest, header, rows = read_csv(out)
    assert header[:2] == ["trials", "errors"] and int(rows[0][1]) == expected["errors"]
    assert manifest["seed"] == 7


def test_simulate_codebook_round_trip(capsys, tmp_path):
    path = tmp_path / "book.macb"
    base = ["simulate", "--n", "3", "--powers", "2,1", "--rates", "0.3,0.4", "--trials", "200", "--seed", "3"]
    code, first, _ = run(capsys, *base, "--codebook", "iid", "--codebook-out", str(path))
    assert code == 0 and path.read_bytes()[:5] == b"MACB1"
    book = Codebook.load(path)
    assert book.sizes == (2, 3)
    code, second, _ = run(capsys, *base, "--codebook-in", str(path))
    assert json.loads(first)["result"] == json.loads(second)["result"]


def test_simulate_cap_is_domain_error(capsys):
    code, _, err = run(capsys, "simulate", "--n", "50", "--powers", "1,1", "--rates", "0.5,0.5", "--trials", "10")
    assert code == 1 and "cap" in err


def test_ic_simulate(capsys):
    code, out, _ = run(capsys, "ic-simulate", "--n", "4", "--powers", "2,2", "--gains", "1.5,1.5",
                       "--sizes", "2,2", "--trials", "400", "--seed", "1", "--out", "csv")
    assert code == 0
    _, header, rows = read_csv(out)
    assert header[-1] == "union_bound_holds" and len(rows) == 4


def test_ic_simulate_weak_interference(capsys):
    code, _, _ = run(capsys, "ic-simulate", "--n", "4", "--powers", "2,2", "--gains", "0.5,1.5",
                     "--sizes", "2,2", "--trials", "10")
    assert code == 1


def test_scan(capsys):
    code, out, _ = run(capsys, "scan", "--powers", "1,1", "--multipliers", "0,0.5", "--n-list", "4",
                       "--trials", "100")
    assert code == 0
    _, header, rows = read_csv(out)
    assert header == ["multiplier", "n", "Mi", "error", "ci_lo", "ci_hi"]
    assert len(rows) == 2 and rows[0][3] == "0"


@pytest.mark.parametrize(
    "argv",
    [
        ["frobnicate"],
        [],
        ["region"],
        ["region", "--powers", "1,x"],
        ["bound", "--n", "10", "--epsilon", "0", "--powers", "1", "--subset", "1", "--bogus"],
        ["simulate", "--n", "4", "--powers", "1", "--rates", "0.1", "--sizes", "2", "--trials", "3"],
    ],
)
def test_usage_errors_exit_2(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_malformed_documents_exit_2(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "bht", str(bad))[0] == 2
    assert run(capsys, "bht", write_json(tmp_path, {"p": [1]}))[0] == 2
    assert run(capsys, "bht", write_json(tmp_path, [1, 2]))[0] == 2
    assert run(capsys, "expurgate", write_json(tmp_path, {"M": "ab", "epsilon": 0.1, "errors": 3}))[0] in (1, 2)
    assert run(capsys, "bht", str(tmp_path / "missing.json"))[0] == 2


def test_domain_errors_exit_1(capsys, tmp_path):
    code, _, err = run(capsys, "bound", "--n", "10", "--epsilon", "0", "--powers=-1,1", "--subset", "1")
    assert code == 1 and err
    doc = {"p": [0.5, 0.6], "q": [0.5, 0.5], "delta": 0.5}
    assert run(capsys, "bht", write_json(tmp_path, doc))[0] == 1


def test_version(capsys):
    code, out, _ = run(capsys, "--version")
    assert code == 0 and out.startswith(f"strongmac {__version__}")


@pytest.mark.skipif(shutil.which("strongmac") is None, reason="console script not installed")
def test_console_script():
    proc = subprocess.run(["strongmac", "region", "--powers", "1,2,3"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert len(proc.stdout.strip().splitlines()) == 2 + 7


# -- serialization -----------------------------------------------------------


def test_float_formatting_round_trips():
    rng = np.random.default_rng(0)
    for x in rng.standard_normal(1000) * 10.0 ** rng.integers(-300, 300, 1000):
        assert float(format_float(x)) == x
    assert format_float(math.inf) == "inf" and format_float(-math.inf) == "-inf"


def test_dumps_is_single_line_and_valid():
    obj = {"a": [1, 2.5, math.inf], "b": {"c": None, "d": True}, "e": np.arange(3), "f": np.float64(0.1)}
    text = dumps(obj)
    assert "\n" not in text
    assert json.loads(text) == {"a": [1, 2.5, "inf"], "b": {"c": None, "d": True}, "e": [0, 1, 2], "f": 0.1}
    with pytest.raises(TypeError):
        dumps({"x": object()})


def test_csv_round_trip():
    text = csv_text(("a", "b"), [(1, 0.1), (2, math.inf)], {"k": 1})
    manifest, header, rows = read_csv(text)
    assert manifest == {"k": 1} and header == ["a", "b"]
    assert rows == [["1", "0.10000000000000001"], ["2", "inf"]]
