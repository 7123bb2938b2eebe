import numpy as np
import pytest

from erpquant import evaluation as ev
from erpquant.errors import ReportError
from erpquant.report import build_report


@pytest.fixture
def blda_report(rng):
    labels = ev.BLDA_TABLE_LABELS
    results = {l: list(rng.uniform(0.6, 0.95, 19)) for l in labels}
    sizes = {l: ev.condition_sizes(ev.parse_condition("blda", l)) for l in labels}
    return build_report("blda", results, sizes)


def test_size_header_rows(blda_report):
    rows = blda_report.auc_csv().splitlines()
    assert rows[0].split(",")[:2] == ["Method", "0/0"]
    assert rows[1].split(",")[:2] == ["Filter", "16384"]
    assert rows[2].split(",")[:2] == ["Classifier", "65600"]
    assert rows[3].split(",")[:2] == ["Total", "81984"]
    assert rows[3].split(",")[-1] == "5252"
    assert rows[-2].startswith("Mean,") and rows[-1].startswith("SD,")
    assert len(rows) == 4 + 19 + 2


def test_mean_sd_consistent(blda_report):
    g = blda_report.per_subject_auc
    np.testing.assert_allclose(blda_report.mean, g.mean(axis=0), rtol=0, atol=1e-12)
    np.testing.assert_allclose(blda_report.sd, np.sqrt(((g - g.mean(0)) ** 2).mean(0)), rtol=0, atol=1e-12)


def test_three_decimal_cells(blda_report):
    row = blda_report.auc_csv().splitlines()[4].split(",")
    assert all(len(c.split(".")[1]) == 3 for c in row[1:])


def test_significance_symmetric(blda_report):
    s = blda_report.significance
    off = ~np.eye(10, dtype=bool)
    np.testing.assert_array_equal(s[off], s.T[off])
    rows = blda_report.significance_csv().splitlines()
    assert len(rows) == 10
    assert rows[1].split(",")[1] == "x"
    assert rows[2].split(",")[1] == "-"


def test_elm_table_has_no_size_rows(rng):
    results = {l: list(rng.uniform(0.4, 0.8, 6)) for l in ev.ELM_TABLE_LABELS}
    rep = build_report("elm", results, {})
    assert not any(r.startswith(("Filter", "Classifier", "Total")) for r in rep.auc_csv().splitlines())
    assert "Filter" not in rep.markdown()


def test_missing_cells_listed():
    with pytest.raises(ReportError, match="subject 2 / condition 1/1"):
        build_report("blda", {"0/0": [0.8, 0.9], "1/1": [0.7, None]},
                     {"0/0": ev.condition_sizes(ev.parse_condition("blda", "0/0")),
                      "1/1": ev.condition_sizes(ev.parse_condition("blda", "1/1"))})
    with pytest.raises(ReportError, match="sizes for condition 0/0"):
        build_report("blda", {"0/0": [0.8] * 5}, {})


def test_markdown_mirrors_csv(blda_report):
    md = blda_report.markdown()
    assert "| Total | 81984 |" in md
    assert "| Mean |" in md
