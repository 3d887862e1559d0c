import json
import math

import numpy as np
import pytest
from scipy import stats

from cilist.citest import (
    CATEGORICAL,
    CONTINUOUS,
    CiTestError,
    CiTestResult,
    DataError,
    Dataset,
    chi_square,
    f_test,
    fisher_z,
    fisher_z_from_r,
    load_csv,
    sample_linear_gaussian,
    test_model as run_model,
    test_statement as run_statement,
)
from cilist.clmp import CiStatement, iter_ci
from cilist.graph import CausalGraph


def gaussian(**cols):
    return Dataset({k: np.asarray(v, float) for k, v in cols.items()},
                   {k: CONTINUOUS for k in cols})


def categorical(**cols):
    return Dataset({k: np.asarray(v, np.int64) for k, v in cols.items()},
                   {k: CATEGORICAL for k in cols})


# -- loading -----------------------------------------------------------------


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_load_numeric_columns(tmp_path):
    rng = np.random.default_rng(0)
    rows = ["a,b,c"] + [",".join(f"{v:.6f}" for v in rng.normal(size=3)) for _ in range(100)]
    d = load_csv(write(tmp_path, "\n".join(rows) + "\n"))
    assert d.row_count == 100 and len(d.columns) == 3
    assert all(d.kind(c) == CONTINUOUS for c in "abc")


def test_load_categorical_detection(tmp_path):
    d = load_csv(write(tmp_path, "x,n\nyes,1\nno,2\nyes,1\n"))
    assert d.kind("x") == CATEGORICAL and d.levels["x"] == ("no", "yes")
    assert d.kind("n") == CATEGORICAL  # few distinct numeric values
    assert list(d.column("x")) == [1, 0, 1]


def test_load_hints_override(tmp_path):
    d = load_csv(write(tmp_path, "n\n1\n2\n3\n"), {"n": CONTINUOUS})
    assert d.kind("n") == CONTINUOUS
    with pytest.raises(DataError, match="non-numeric"):
        load_csv(write(tmp_path, "x\nyes\n", "e.csv"), {"x": CONTINUOUS})
    with pytest.raises(DataError, match="unknown column"):
        load_csv(write(tmp_path, "x\n1\n", "f.csv"), {"y": CATEGORICAL})


def test_load_drops_blank_cells(tmp_path):
    d = load_csv(write(tmp_path, "a,b\n1,2\n3,\n5,6\n"))
    assert d.row_count == 2 and d.dropped_rows == 1


@pytest.mark.parametrize(
    "text,msg",
    [("", "empty file"), ("a,b\n1,2\n3\n", "line 3"), ("a,b\n", "no complete"), ("a,a\n1,2\n", "duplicate")],
)
def test_load_errors(tmp_path, text, msg):
    with pytest.raises(DataError, match=msg):
        load_csv(write(tmp_path, text))


def test_unknown_column():
    d = gaussian(a=[1.0, 2.0])
    with pytest.raises(DataError, match="no column"):
        d.column("b")


def test_from_arrays_detects_types():
    d = Dataset.from_arrays({"x": np.arange(20) * 0.5, "c": ["u", "v"] * 10})
    assert d.kind("x") == CONTINUOUS and d.kind("c") == CATEGORICAL


# -- Fisher z ----------------------------------------------------------------


def test_fisher_z_closed_form():
    res = fisher_z_from_r(0.5, 100)
    assert res.statistic == pytest.approx(5.410, abs=1e-3)
    assert res.p_value == pytest.approx(6.3e-8, rel=0.05)
    # by hand: atanh(0.5) * sqrt(97)
    assert res.statistic == pytest.approx(math.atanh(0.5) * math.sqrt(97), rel=1e-12)


def test_fisher_z_perfect_dependence():
    x = np.random.default_rng(1).normal(size=100)
    res = fisher_z(gaussian(x=x, y=x), "x", "y")
    assert res.p_value < 1e-12 and math.isfinite(res.statistic)


def test_fisher_z_matches_regression_residuals():
    rng = np.random.default_rng(2)
    z = rng.normal(size=500)
    x = z + rng.normal(size=500)
    y = z + 0.3 * x + rng.normal(size=500)
    d = gaussian(x=x, y=y, z=z)
    rx = x - np.polyval(np.polyfit(z, x, 1), z)
    ry = y - np.polyval(np.polyfit(z, y, 1), z)
    r = np.corrcoef(rx, ry)[0, 1]
    assert fisher_z(d, "x", "y", ["z"]).statistic == pytest.approx(
        0.5 * math.log((1 + r) / (1 - r)) * math.sqrt(500 - 1 - 3), rel=1e-9
    )


def test_fisher_z_symmetric_and_affine_invariant():
    rng = np.random.default_rng(3)
    z = rng.normal(size=300)
    x = z + rng.normal(size=300)
    y = 0.2 * x + z + rng.normal(size=300)
    d = gaussian(x=x, y=y, z=z)
    base = fisher_z(d, "x", "y", ["z"]).statistic
    assert fisher_z(d, "y", "x", ["z"]).statistic == pytest.approx(base, rel=1e-9)
    d2 = gaussian(x=3 * x + 7, y=0.01 * y - 2, z=50 * z + 1)
    assert fisher_z(d2, "x", "y", ["z"]).statistic == pytest.approx(base, rel=1e-9)


def test_fisher_z_singular_names_collinear_set():
    rng = np.random.default_rng(4)
    a, b = rng.normal(size=(2, 50))
    d = gaussian(x=rng.normal(size=50), y=rng.normal(size=50), a=a, b=b, c=a + b)
    with pytest.raises(DataError) as info:
        fisher_z(d, "x", "y", ["a", "b", "c"])
    msg = str(info.value)
    assert "collinear" in msg and all(v in msg for v in "abc")


def test_fisher_z_insufficient_rows():
    with pytest.raises(DataError, match="rows"):
        fisher_z(gaussian(x=[1.0, 2, 3], y=[1.0, 0, 2]), "x", "y")


def test_fisher_z_rejects_categorical():
    d = Dataset({"x": np.zeros(10), "c": np.zeros(10, np.int64)}, {"x": CONTINUOUS, "c": CATEGORICAL})
    with pytest.raises(DataError, match="not continuous"):
        fisher_z(d, "x", "c")


def test_fisher_z_constant_column():
    with pytest.raises(DataError, match="constant"):
        fisher_z(gaussian(x=np.arange(10.0), y=np.ones(10)), "x", "y")


def test_permutation_breaks_dependence():
    ps = []
    for seed in range(20):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=200)
        y = x + 0.5 * rng.normal(size=200)
        ps.append(fisher_z(gaussian(x=x, y=rng.permutation(y)), "x", "y").p_value)
    assert np.median(ps) > 0.2


# -- F test ------------------------------------------------------------------


def test_f_test_single_witness_matches_t_test():
    rng = np.random.default_rng(5)
    z = rng.normal(size=200)
    x = z + rng.normal(size=200)
    y = z + 0.2 * x + rng.normal(size=200)
    d = gaussian(x=x, y=y, z=z)
    res = f_test(d, "x", ["y"], ["z"])
    zr = fisher_z(d, "x", "y", ["z"])
    # both test the same partial correlation; p-values agree closely at this N
    assert res.p_value == pytest.approx(zr.p_value, rel=0.2, abs=1e-4)


def test_f_test_calibrated_under_null():
    rejections = 0
    for seed in range(400):
        rng = np.random.default_rng(seed)
        d = gaussian(x=rng.normal(size=200), a=rng.normal(size=200), b=rng.normal(size=200))
        rejections += f_test(d, "x", ["a", "b"]).p_value < 0.05
    assert abs(rejections / 400 - 0.05) < 0.03


# -- chi-square --------------------------------------------------------------


def test_chi_square_copy_is_dependent():
    x = np.random.default_rng(6).integers(0, 2, 1000)
    assert chi_square(categorical(x=x, y=x.copy()), "x", "y").p_value < 1e-10


def test_chi_square_independent_coins_calibrated():
    rejections = 0
    for seed in range(300):
        rng = np.random.default_rng(seed)
        d = categorical(x=rng.integers(0, 2, 10000), y=rng.integers(0, 2, 10000))
        rejections += chi_square(d, "x", "y").p_value < 0.05
    assert abs(rejections / 300 - 0.05) < 0.03


def test_chi_square_xor_power():
    hits = 0
    for seed in range(50):
        rng = np.random.default_rng(seed)
        x = rng.integers(0, 2, 2000)
        z = rng.integers(0, 2, 2000)
        flip = rng.random(2000) < 0.1
        y = (x ^ z) ^ flip
        d = categorical(x=x, y=y, z=z)
        hits += chi_square(d, "x", "y", ["z"]).p_value < 0.05
    assert hits / 50 > 0.9


def test_chi_square_matches_scipy_without_strata():
    rng = np.random.default_rng(7)
    x = rng.integers(0, 3, 400)
    y = (x + rng.integers(0, 2, 400)) % 3
    table = np.zeros((3, 3))
    np.add.at(table, (x, y), 1)
    ref = stats.chi2_contingency(table, correction=False)
    res = chi_square(categorical(x=x, y=y), "x", "y")
    assert res.statistic == pytest.approx(ref.statistic)
    assert res.dof == ref.dof


def test_chi_square_low_count_flag():
    d = categorical(x=[0, 1, 0, 1, 0, 1], y=[0, 0, 1, 1, 0, 1])
    assert chi_square(d, "x", "y").low_count


# -- model testing -----------------------------------------------------------


def test_result_invariants():
    ci = CiStatement("B", ("A",))
    with pytest.raises(ValueError):
        CiTestResult(ci, 1.5, 0.0, "fisher_z", "consistent")


def test_mixed_types_become_error_entries():
    g = CausalGraph(["A", "B", "C"], [(0, 1), (1, 2)])
    d = Dataset({"A": np.arange(30.0), "B": np.random.default_rng(0).normal(size=30),
                 "C": np.arange(30) % 2}, {"A": CONTINUOUS, "B": CONTINUOUS, "C": CATEGORICAL})
    report = run_model(g, None, d)
    assert len(report.entries) == 1 and isinstance(report.entries[0], CiTestError)
    assert "mixes" in report.entries[0].error
    assert "could not be tested" in report.summary()


def test_empty_listing_report():
    g = CausalGraph(["A", "B", "C"], [], [(0, 1), (1, 2), (0, 2)])
    d = sample_linear_gaussian(g, 100, seed=0)
    report = run_model(g, None, d)
    assert report.summary() == "0 CIs to test" and not report.any_violation


def test_missing_columns(sachs_file):
    with pytest.raises(DataError, match="no column"):
        run_model(sachs_file.graph, None, gaussian(PKA=[1.0, 2.0]))


def test_sachs_report_layout_and_order(sachs_file):
    g, order = sachs_file.graph, sachs_file.variable_order()
    report = run_model(g, order, sample_linear_gaussian(g, 2000, seed=1))
    assert [e.statement for e in report.entries] == list(iter_ci(g, order))
    text = report.to_text().splitlines()
    assert text[0].split() == ["CI", "p-value", "verdict", "method"]
    assert len(text) == 12 and "of 10 CIs consistent" in text[-1]
    for line in report.to_json_lines():
        doc = json.loads(line)
        assert {"x", "w", "z", "p_value", "decision", "method"} <= set(doc)


def test_faithful_sem_false_violation_rate(sachs_file):
    g, order = sachs_file.graph, sachs_file.variable_order()
    total = violated = 0
    for seed in range(60):
        report = run_model(g, order, sample_linear_gaussian(g, 5000, seed=seed))
        total += len(report.results)
        violated += sum(r.decision == "violated" for r in report.results)
    assert total == 600
    assert abs(violated / total - 0.05) <= 0.03


def test_wrong_model_is_flagged(sachs_file):
    g, order = sachs_file.graph, sachs_file.variable_order()
    n = g.n
    dense = CausalGraph(g.names, [], [(i, j) for i in range(n) for j in range(i + 1, n)])
    report = run_model(g, order, sample_linear_gaussian(dense, 2000, seed=0))
    assert report.any_violation
    assert sum(r.decision == "violated" for r in report.results) >= 8


def test_single_statement_dispatch():
    rng = np.random.default_rng(0)
    d = gaussian(A=rng.normal(size=100), B=rng.normal(size=100), C=rng.normal(size=100))
    assert run_statement(d, CiStatement("C", ("A",))).method == "fisher_z"
    assert run_statement(d, CiStatement("C", ("A", "B"))).method == "f_test"
    cat = categorical(A=rng.integers(0, 2, 100), B=rng.integers(0, 2, 100))
    assert run_statement(cat, CiStatement("B", ("A",))).method == "chi_square"


def test_decision_threshold():
    rng = np.random.default_rng(0)
    d = gaussian(A=rng.normal(size=100), B=rng.normal(size=100))
    res = run_statement(d, CiStatement("B", ("A",)), alpha=0.05)
    assert (res.decision == "violated") == (res.p_value < 0.05)
    strict = run_statement(d, CiStatement("B", ("A",)), alpha=res.p_value)
    assert strict.decision == "consistent"
