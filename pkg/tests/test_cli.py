import json
import subprocess
import sys

import numpy as np
import pytest

from cilist import __version__
from cilist.citest import sample_linear_gaussian
from cilist.cli import main
from cilist.graphio import fixture_path, load_fixture, parse_text

G2 = str(fixture_path("g2"))
G1 = str(fixture_path("g1"))
SACHS = str(fixture_path("sachs"))


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_listci_count(capsys):
    assert run(capsys, "listci", "--graph", G2, "--count-only") == (0, "5\n", "")


def test_listci_text_lines(capsys):
    code, out, _ = run(capsys, "listci", "--graph", G2)
    assert code == 0
    assert out.splitlines()[-1] == "H _||_ A,E,F | B,C,D"
    assert out.splitlines()[0] == "C _||_ A | B"


def test_listci_json_lines(capsys):
    code, out, _ = run(capsys, "listci", "--graph", G2, "--format", "json")
    docs = [json.loads(line) for line in out.splitlines()]
    assert len(docs) == 5 and docs[-1] == {"x": "H", "w": ["A", "E", "F"], "z": ["B", "C", "D"]}


def test_listci_projects_latents(capsys):
    code, out, err = run(capsys, "listci", "--graph", G1, "--count-only")
    assert (code, out) == (0, "5\n")
    assert "projecting" in err


def test_listci_explicit_order(capsys):
    code, out, _ = run(capsys, "listci", "--graph", G2, "--order", "A,B,E,C,D,F,H", "--count-only")
    assert code == 0 and int(out) > 0
    code, _, err = run(capsys, "listci", "--graph", G2, "--order", "B,A,C,D,E,F,H")
    assert code == 3 and "not consistent" in err


def test_listgmp(capsys):
    assert run(capsys, "listgmp", "--graph", G2, "--count-only")[:2] == (0, "753\n")
    code, out, _ = run(capsys, "listgmp", "--graph", G2)
    assert code == 0 and len(out.splitlines()) == 753


def test_listgmp_cap_refusal(capsys):
    code, out, err = run(capsys, "listgmp", "--graph", G2, "--cap", "5")
    assert code == 4 and out == ""
    assert "6069" in err  # (4^7 + 2^7)/2 - 3^7


def test_listgmp_force(capsys):
    code, out, _ = run(capsys, "listgmp", "--graph", G2, "--cap", "5", "--force", "--count-only")
    assert (code, out) == (0, "753\n")


def test_listcibf(capsys):
    assert run(capsys, "listcibf", "--graph", G2, "--count-only")[:2] == (0, "5\n")
    code, out, _ = run(capsys, "listcibf", "--graph", G2, "--include-vacuous", "--count-only")
    assert code == 0 and int(out) > 5


def test_dsep(capsys):
    assert run(capsys, "dsep", "--graph", G2, "--x", "H", "--y", "A,E,F", "--z", "B,C,D")[:2] == (
        0, "separated\n")
    assert run(capsys, "dsep", "--graph", G2, "--x", "H", "--y", "C")[:2] == (1, "connected\n")


def test_dsep_unknown_node(capsys):
    code, out, err = run(capsys, "dsep", "--graph", G2, "--x", "Q", "--y", "A")
    assert code == 3 and out == "" and "Q" in err


def test_project(capsys, tmp_path):
    code, out, _ = run(capsys, "project", "--graph", G1)
    assert code == 0 and parse_text(out).graph == load_fixture("g2").graph
    dest = tmp_path / "p.json"
    assert run(capsys, "project", "--graph", G1, "--format", "json", "-o", str(dest))[0] == 0
    assert json.loads(dest.read_text())["bidirected"]


def test_randgen(capsys, tmp_path):
    dest = tmp_path / "g.graph"
    args = ["randgen", "--n", "10", "--pd", "0.1", "--pb", "0.2", "--seed", "42", "-o", str(dest)]
    assert run(capsys, *args)[0] == 0
    first = dest.read_text()
    assert run(capsys, *args)[0] == 0
    assert dest.read_text() == first
    assert parse_text(first).graph.n == 10


def test_randgen_requires_seed(capsys):
    code, _, err = run(capsys, "randgen", "--n", "5", "--pd", "0.1", "--pb", "0.1")
    assert code == 2 and "--seed" in err


def test_randgen_bad_probability(capsys):
    code, _, err = run(capsys, "randgen", "--n", "5", "--pd", "2", "--pb", "0.1", "--seed", "1")
    assert code == 3 and "pd" in err


def test_bench(capsys, tmp_path):
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({"n": [6], "md": [0], "pb": [0.0, 1.0], "samples": 2, "seed": 1}))
    dest = tmp_path / "out.csv"
    code, out, err = run(capsys, "bench", "--grid", str(grid), "-o", str(dest))
    assert code == 0 and out == "" and "4 records" in err
    lines = dest.read_text().splitlines()
    assert lines[0].startswith("#") and lines[1].startswith("n,md,mu,s,pd,pb,seed")
    assert len(lines) == 6


def test_bench_bad_grid(capsys, tmp_path):
    grid = tmp_path / "grid.json"
    grid.write_text('{"n": [5]}')
    assert run(capsys, "bench", "--grid", str(grid))[0] == 3


def test_citest(capsys, tmp_path):
    sachs = load_fixture("sachs").graph
    d = sample_linear_gaussian(sachs, 3000, seed=3)
    csv_path = tmp_path / "d.csv"
    cols = list(d.columns)
    rows = np.column_stack([d.columns[c] for c in cols])
    csv_path.write_text(",".join(cols) + "\n" + "\n".join(",".join(f"{v:.8g}" for v in r) for r in rows))
    code, out, _ = run(capsys, "citest", "--graph", SACHS, "--data", str(csv_path), "--alpha", "1e-6")
    assert code == 0
    assert "10 of 10 CIs consistent" in out
    code, out, err = run(capsys, "citest", "--graph", SACHS, "--data", str(csv_path),
                         "--alpha", "0.999999", "--format", "json")
    assert code == 1 and len(out.splitlines()) == 10 and "consistent" in err


def test_citest_clique_has_nothing_to_test(capsys, tmp_path):
    gpath = tmp_path / "c.graph"
    gpath.write_text("node A\nnode B\nedge A <-> B\n")
    dpath = tmp_path / "d.csv"
    rng = np.random.default_rng(0)
    dpath.write_text("A,B\n" + "\n".join(f"{a},{b}" for a, b in rng.normal(size=(50, 2))))
    code, out, _ = run(capsys, "citest", "--graph", str(gpath), "--data", str(dpath))
    assert code == 0 and "0 CIs to test" in out


def test_verify(capsys):
    code, out, _ = run(capsys, "verify", "--graph", G2)
    assert code == 0
    assert all(line.startswith("PASS") for line in out.splitlines())
    assert len(out.splitlines()) == 5


def test_verify_skips_over_cap(capsys):
    code, out, _ = run(capsys, "verify", "--graph", G2, "--cap", "3")
    assert code == 0 and "SKIP matches ordered local Markov" in out


@pytest.mark.parametrize(
    "argv",
    [[], ["listci"], ["listci", "--graph", G2, "--bogus"], ["frobnicate"],
     ["randgen", "--n", "3", "--pd", "0.1", "--md", "2", "--pb", "0", "--seed", "1"]],
)
def test_usage_errors(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_input_errors(capsys, tmp_path):
    bad = tmp_path / "bad.graph"
    bad.write_text("node A\nedge A -> A\n")
    code, out, err = run(capsys, "listci", "--graph", str(bad))
    assert code == 3 and "self-loop at line 2" in err and out == ""
    assert run(capsys, "listci", "--graph", str(tmp_path / "missing.graph"))[0] == 3


def test_version(capsys):
    code, out, _ = run(capsys, "--version")
    assert code == 0 and __version__ in out and "graph format 1" in out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "cilist", "listci", "--graph", G2, "--count-only"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stdout == "5\n"
