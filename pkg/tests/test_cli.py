import json

import numpy as np
import pytest

from erpquant import cli
from erpquant.modelfmt import load_model
from erpquant.synthdata import load_epochs


def run(argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture(scope="module")
def small_data(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    cfg = root / "gen.cfg"
    cfg.write_text("# small cohort\nsubjects = 5\nn_targets = 40\nn-nontargets = 360\n")
    assert run(["gen", "--config", cfg, "--seed", 3, "--out", root / "data"]) == 0
    return root


@pytest.mark.slow
def test_gen_full_cohort(tmp_path):
    assert run(["gen", "--subjects", 19, "--seed", 42, "--out", tmp_path]) == 0
    files = sorted(tmp_path.glob("*.erpq"))
    assert len(files) == 19
    for f in (files[0], files[-1]):
        e = load_epochs(f)
        assert (e.n_targets, e.n_nontargets) == (160, 1440)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["generator"]["seed"] == 42


def test_gen_is_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert run(["gen", "--subjects", 2, "--seed", 5, "--out", tmp_path / d]) == 0
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_gen_zero_subjects_is_usage_error(tmp_path, capsys):
    assert run(["gen", "--subjects", 0, "--out", tmp_path]) == 2
    assert "subjects" in capsys.readouterr().err


def test_flags_override_config(small_data):
    data = small_data / "data"
    assert len(list(data.glob("*.erpq"))) == 5
    assert load_epochs(data / "S01.erpq").n_targets == 40
    assert load_epochs(data / "S01.erpq").seed == 3


def test_run_blda_outputs(small_data, capsys):
    out = small_data / "blda"
    rc = run(["run", "--data", small_data / "data", "--out", out, "--classifier", "blda",
              "--conditions", "0/0,1/1", "--seed", 1])
    assert rc == 0
    for name in ("auc.csv", "sizes.csv", "significance.csv", "report.md"):
        assert (out / name).exists()
    auc = (out / "auc.csv").read_text().splitlines()
    assert auc[0] == "Method,0/0,1/1"
    assert auc[3] == "Total,81984,5252"
    assert len(auc) == 4 + 5 + 2
    assert (out / "sizes.csv").read_text().splitlines()[3] == "Total,81984,5252"
    sections = load_model(out / "models" / "blda_1-1.ptqm")
    assert sum(s.tensor.size_bits for s in sections) == 5252
    capsys.readouterr()
    assert run(["inspect", out / "models" / "blda_1-1.ptqm"]) == 0
    assert "total 5252 bits" in capsys.readouterr().out
    assert run(["inspect", out / "models" / "blda_0-0.ptqm"]) == 0
    assert "total 81984 bits" in capsys.readouterr().out
    assert run(["stats", out / "auc.csv"]) == 0
    assert "Bonferroni threshold: 0.05" in capsys.readouterr().out


def test_run_elm_paired_columns(small_data):
    out = small_data / "elm"
    assert run(["run", "--data", small_data / "data", "--out", out, "--classifier", "elm",
                "--conditions", "1,11", "--subjects", 3]) == 0
    rows = [r.split(",") for r in (out / "auc.csv").read_text().splitlines()]
    assert rows[0] == ["Method", "1", "11"]
    assert len(rows) == 1 + 3 + 2
    vals = np.array([[float(v) for v in r[1:]] for r in rows[1:4]])
    assert np.all(np.abs(vals[:, 0] - vals[:, 1]) < 0.05)
    sections = load_model(out / "models" / "elm_11.ptqm")
    assert sections[3].tensor.scheme.tag == "hist256"


def test_run_unknown_condition_lists_valid(small_data, capsys):
    assert run(["run", "--data", small_data / "data", "--out", small_data / "x",
                "--classifier", "blda", "--conditions", "9/9"]) == 2
    err = capsys.readouterr().err
    assert "9/9" in err and "0/0" in err and "4/4" in err


def test_run_missing_data_dir(tmp_path, capsys):
    assert run(["run", "--data", tmp_path / "nope", "--out", tmp_path / "o"]) == 3
    assert not (tmp_path / "o").exists()


def test_inspect_corrupted(tmp_path, capsys):
    bad = tmp_path / "bad.ptqm"
    bad.write_bytes(b"PTQX\x01\x00\x00\x00")
    assert run(["inspect", bad]) == 3
    assert "offset 0" in capsys.readouterr().err


def test_bad_config_value(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("subjects = many\n")
    assert run(["gen", "--config", cfg, "--out", tmp_path]) == 2
    cfg.write_text("colour = blue\n")
    assert run(["gen", "--config", cfg, "--out", tmp_path]) == 2
