import json

import numpy as np

from alex.harness.cli import main
from alex.harness.datasets import read_dataset


def test_bench_json(tmp_path, capsys):
    out = tmp_path / "r.json"
    code = main(["bench", "--index", "alex", "--init-keys", "2000", "--total-keys", "3000", "--ops", "2000",
                 "--mix", "write_heavy", "--out", str(out)])
    assert code == 0
    rep = json.loads(out.read_text())[0]
    assert rep["ops"] == 2000 and rep["mismatches"] == 0 and rep["index"] == "alex"


def test_bench_custom_mix_csv(capsys):
    code = main(["bench", "--index", "btree", "--page-bytes", "256", "--init-keys", "1000",
                 "--total-keys", "1500", "--ops", "500", "--mix", "custom:60,20,20", "--format", "csv"])
    assert code == 0
    text = capsys.readouterr().out
    assert text.splitlines()[0].startswith("index,dataset,mix")


def test_gen_and_file_bench(tmp_path):
    f = tmp_path / "u.bin"
    assert main(["gen", "--dataset", "uniform64", "--total-keys", "4000", "--out", str(f)]) == 0
    keys = read_dataset(f, integer=True)
    assert keys.size == 4000 and np.all(np.diff(keys) > 0)
    code = main(["bench", "--dataset", "file", "--file", str(f), "--integer-keys", "--init-keys", "2000",
                 "--total-keys", "4000", "--ops", "1000", "--out", str(tmp_path / "r.json")])
    assert code == 0


def test_gen_needs_out():
    assert main(["gen"]) == 2


def test_microbench_csv(tmp_path):
    out = tmp_path / "m.csv"
    assert main(["microbench", "--total-keys", "20000", "--max-error", "63", "--queries", "100",
                 "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "method,error,mean_ns,iterations"
    assert len(lines) == 1 + 2 * 4


def test_audit(capsys):
    assert main(["audit", "--init-keys", "2000", "--ops", "3000", "--dataset", "uniform64"]) == 0
    rep = json.loads(capsys.readouterr().out)[0]
    assert rep["ok"] and rep["mismatches"] == []
