import csv

import pytest

from fslbm import sht
from fslbm.bitcode import ball_size
from fslbm.cli import main


@pytest.fixture
def two_points(tmp_path):
    path = tmp_path / "train.tsv"
    path.write_text("0000\t0\n1111\t1\n")
    return path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_train_small(tmp_path, capsys, two_points):
    model = tmp_path / "m.fslbm"
    code, out, _ = run(capsys, "train", "--input", two_points, "--output", model, "--f", 4, "--radius", 1)
    assert code == 0 and "phi=2" in out
    t = sht.load(model.read_bytes())
    assert len(t) <= 2 * ball_size(4, 1) and t.trained_count == 2


def test_train_is_byte_deterministic(tmp_path, capsys, two_points):
    a, b = tmp_path / "a", tmp_path / "b"
    for path in (a, b):
        assert run(capsys, "train", "--input", two_points, "--output", path, "--f", 4, "--seed", 3)[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_train_empty_dataset_writes_nothing(tmp_path, capsys):
    empty = tmp_path / "empty.tsv"
    empty.write_text("# nothing\n\n")
    model = tmp_path / "m"
    code, _, err = run(capsys, "train", "--input", empty, "--output", model, "--f", 4)
    assert code == 1 and "empty" in err
    assert not model.exists()
    assert list(tmp_path.iterdir()) == [empty]


def test_train_errors(tmp_path, capsys, two_points):
    bad = tmp_path / "bad.tsv"
    bad.write_text("0000\t0\n00x0\t1\n")
    code, _, err = run(capsys, "train", "--input", bad, "--output", tmp_path / "m", "--f", 4)
    assert code == 1 and "line 2" in err
    code, _, err = run(capsys, "train", "--input", two_points, "--output", tmp_path / "m", "--f", 4, "--radius", 9)
    assert code == 2
    code, _, err = run(capsys, "train", "--input", two_points, "--output", tmp_path / "m", "--f", 4, "--zeta", "x:1")
    assert code == 2
    code, _, err = run(
        capsys, "train", "--input", two_points, "--output", tmp_path / "m", "--f", 4,
        "--storage", "dense", "--memory-budget", 64,
    )
    assert code == 3 and "budget" in err
    assert not (tmp_path / "m").exists()


def test_predict(tmp_path, capsys):
    train = tmp_path / "train.tsv"
    # two centers four bits apart; 001100 is two bits from each, 000111 three from the first
    train.write_text("000000\t0\n111100\t1\n")
    model = tmp_path / "m"
    assert run(capsys, "train", "--input", train, "--output", model, "--f", 6, "--radius", 2)[0] == 0
    queries = tmp_path / "q.txt"
    queries.write_text("000000\n001100\n000111\n")
    code, out, _ = run(capsys, "predict", "--model", model, "--input", queries)
    assert code == 0
    assert out.splitlines() == [
        "000000\t1\t0:1.0000,1:0.0000\t-",
        "001100\t1\t0:0.5000,1:0.5000\t-",
        "000111\t0\tUNMATCHED\t-",
    ]
    code, out, _ = run(capsys, "predict", "--model", model, "--input", queries, "--fallback", "expand:1")
    assert out.splitlines()[2] == "000111\t0\t0:1.0000,1:0.0000\t1"


def test_predict_bad_lines(tmp_path, capsys, two_points):
    model = tmp_path / "m"
    run(capsys, "train", "--input", two_points, "--output", model, "--f", 4)
    queries = tmp_path / "q.txt"
    queries.write_text("0000\n00000\n01a0\n1111\n")
    code, out, err = run(capsys, "predict", "--model", model, "--input", queries)
    assert code == 1
    assert "line 2" in err and "line 3" in err
    assert len(out.splitlines()) == 2
    assert run(capsys, "predict", "--model", model, "--input", queries, "--fallback", "wide")[0] == 2


def test_predict_rejects_corrupt_model(tmp_path, capsys, two_points):
    model = tmp_path / "m"
    run(capsys, "train", "--input", two_points, "--output", model, "--f", 4)
    blob = bytearray(model.read_bytes())
    blob[-10] ^= 0xFF
    model.write_bytes(bytes(blob))
    code, _, err = run(capsys, "predict", "--model", model, "--input", two_points)
    assert code == 1 and "CRC" in err


def test_evaluate_separable(tmp_path, capsys):
    train = tmp_path / "train.tsv"
    train.write_text("00000000\t0\n11111111\t1\n00001111\t2\n")
    model = tmp_path / "m"
    run(capsys, "train", "--input", train, "--output", model, "--f", 8, "--radius", 1)
    report = tmp_path / "r.csv"
    code, out, _ = run(capsys, "evaluate", "--model", model, "--input", train, "--csv", report)
    assert code == 0 and "crisp accuracy     1.0000" in out
    row = next(csv.DictReader(report.open()))
    assert float(row["crisp_accuracy"]) == 1.0 and int(row["n_queries"]) == 3


def test_bench_shape(tmp_path, capsys):
    out_path = tmp_path / "bench.csv"
    code, _, _ = run(
        capsys, "bench", "--f", 16, "--radius", 1, "--phi", "1000,2000,4000,8000",
        "--queries", 100, "--output", out_path,
    )
    assert code == 0
    rows = list(csv.DictReader(out_path.open()))
    assert [int(r["phi"]) for r in rows] == [1000, 2000, 4000, 8000]
    assert run(capsys, "bench", "--phi", "10,x")[0] == 2


def test_make_template_then_encode(tmp_path, capsys):
    data = tmp_path / "raw.csv"
    rows = ["age,country,email,label"]
    for i in range(40):
        rows.append(f"{20 + i},{['US', 'DE', 'FR'][i % 3]},{'x@y' if i % 2 else ''},{'spam' if i >= 20 else 'ham'}")
    data.write_text("\n".join(rows) + "\n")
    tpl = tmp_path / "tpl.txt"
    code, _, err = run(capsys, "make-template", "--input", data, "--label-col", "label", "--f", 4, "--output", tpl)
    assert code == 0 and "classes: ham,spam" in err
    lines = tpl.read_text().splitlines()
    assert lines[0] == "FSLBM-TPL v1 f=4" and len(lines) == 5
    # the age median split separates the labels perfectly
    assert lines[1].split("\t")[:3] == ["0", "threshold", "age"]
    encoded = tmp_path / "codes.tsv"
    code, _, _ = run(capsys, "encode", "--template", tpl, "--input", data, "--label-col", "label", "--output", encoded)
    assert code == 0
    out = encoded.read_text().splitlines()
    assert len(out) == 40
    assert all(len(line.split("\t")[0]) == 4 for line in out)
    assert out[0].endswith("\t0:1") and out[-1].endswith("\t1:1")
    model = tmp_path / "m"
    assert run(capsys, "train", "--input", encoded, "--output", model, "--f", 4, "--radius", 0)[0] == 0
    code, out, _ = run(capsys, "evaluate", "--model", model, "--input", encoded)
    assert code == 0


def test_make_template_too_few_features(tmp_path, capsys):
    data = tmp_path / "raw.csv"
    data.write_text("a,label\n1,x\n2,y\n")
    code, _, err = run(capsys, "make-template", "--input", data, "--label-col", "label", "--f", 5)
    assert code == 1 and "candidate" in err


def test_encode_missing_column(tmp_path, capsys):
    tpl = tmp_path / "tpl.txt"
    tpl.write_text("FSLBM-TPL v1 f=1\n0\tpresence\tzzz\t\t0.0\n")
    data = tmp_path / "raw.csv"
    data.write_text("a\n1\n")
    code, _, err = run(capsys, "encode", "--template", tpl, "--input", data)
    assert code == 1 and "zzz" in err
