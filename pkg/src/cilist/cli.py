"""Command-line front end.

Exit codes: 0 success, 1 violation found (``dsep`` connected, ``citest``
rejection, ``verify`` failure), 2 usage error, 3 input error, 4 cap or
timeout refusal. Data goes to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .baselines import CapExceeded, count_gmp, format_gmp, iter_ci_bf, iter_gmp, oracle_ci_set
from .bench import BenchConfig, bench_sweep, write_csv
from .citest import CATEGORICAL, CONTINUOUS, DataError, load_csv, test_model
from .clmp import iter_ci
from .graph import CausalGraph, GraphError, VariableOrder, latent_project
from .graphio import FORMAT_VERSION, read_graph, to_json, to_text
from .randgen import RandomGraphSpec, random_graph
from .separation import d_separated

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_INPUT, EXIT_CAP = 0, 1, 2, 3, 4


class InputError(Exception):
    pass


def _err(msg: str) -> None:
    print(f"cilist: {msg}", file=sys.stderr)


def _split_names(text: str | None) -> list[str]:
    if not text:
        return []
    return [t for t in text.replace(",", " ").split() if t]


def load_graph(path: str, order_arg: str | None = None, project: bool = True):
    """Read a graph file, project latents away, and settle the ordering."""
    gf = read_graph(path)
    g = gf.graph
    if project and g.latent_mask:
        _err(f"projecting out {bin(g.latent_mask).count('1')} latent node(s)")
        g = latent_project(g)
    names = _split_names(order_arg) if order_arg else gf.order
    order = g.order_from_names(names) if names else g.default_order()
    return g, order


def _emit_cis(cis, fmt: str, count_only: bool) -> int:
    count = 0
    for ci in cis:
        count += 1
        if not count_only:
            print(ci.to_json() if fmt == "json" else ci.to_text(), flush=fmt == "json")
    if count_only:
        print(count)
    return EXIT_OK


def cmd_listci(a) -> int:
    g, order = load_graph(a.graph, a.order)
    return _emit_cis(iter_ci(g, order), a.format, a.count_only)


def cmd_listcibf(a) -> int:
    g, order = load_graph(a.graph, a.order)
    cap = 10**9 if a.force else a.cap
    return _emit_cis(iter_ci_bf(g, order, a.include_vacuous, cap), a.format, a.count_only)


def cmd_listgmp(a) -> int:
    g, _ = load_graph(a.graph)
    cap = 10**9 if a.force else a.cap
    if a.count_only:
        print(count_gmp(g, cap))
        return EXIT_OK
    for stmt in iter_gmp(g, cap):
        if a.format == "json":
            x, y, z = stmt
            print(json.dumps({"x": list(x), "y": list(y), "z": list(z)}))
        else:
            print(format_gmp(stmt))
    return EXIT_OK


def cmd_dsep(a) -> int:
    g, _ = load_graph(a.graph, project=False)
    sep = d_separated(g, g.mask(_split_names(a.x)), g.mask(_split_names(a.y)), g.mask(_split_names(a.z)))
    print("separated" if sep else "connected")
    return EXIT_OK if sep else EXIT_VIOLATION


def _write_graph(g: CausalGraph, order, fmt: str, out: str | None) -> None:
    text = to_json(g, order) + "\n" if fmt == "json" else to_text(g, order)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_project(a) -> int:
    gf = read_graph(a.graph)
    _write_graph(latent_project(gf.graph), gf.order, a.format, a.output)
    return EXIT_OK


def cmd_randgen(a) -> int:
    try:
        spec = RandomGraphSpec(a.n, a.pd if a.pd is not None else 0.0, a.pb, a.seed, a.md)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    _write_graph(random_graph(spec), None, a.format, a.output)
    return EXIT_OK


def cmd_bench(a) -> int:
    try:
        doc = json.loads(Path(a.grid).read_text(encoding="utf-8"))
        if a.workers is not None:
            doc["workers"] = a.workers
        if a.timeout is not None:
            doc["timeout"] = a.timeout
        config = BenchConfig.from_mapping(doc)
    except (OSError, ValueError, TypeError) as exc:
        raise InputError(f"bad grid file {a.grid}: {exc}") from None
    records = bench_sweep(config)
    if a.output:
        with open(a.output, "w", encoding="utf-8", newline="") as fh:
            rows = write_csv(records, fh, config)
        _err(f"wrote {rows} records to {a.output}")
    else:
        write_csv(records, sys.stdout, config)
    return EXIT_OK


def cmd_citest(a) -> int:
    g, order = load_graph(a.graph, a.order)
    hints = {c: CATEGORICAL for c in _split_names(a.categorical)}
    hints.update({c: CONTINUOUS for c in _split_names(a.continuous)})
    data = load_csv(a.data, hints)
    if data.dropped_rows:
        _err(f"dropped {data.dropped_rows} row(s) with missing values")
    report = test_model(g, order, data, a.alpha)
    if a.format == "json":
        for line in report.to_json_lines():
            print(line)
        _err(report.summary())
    else:
        print(report.to_text())
    return EXIT_VIOLATION if report.any_violation else EXIT_OK


def verify_graph(g: CausalGraph, order: VariableOrder, cap: int | None = None):
    """Cross-check suite; yields ``(property, status, detail)`` with status PASS/FAIL/SKIP."""
    listed = list(iter_ci(g, order))
    got = set(listed)
    yield "no duplicate statements", _status(len(got) == len(listed)), f"{len(listed)} statements"
    bound = g.n * 2 ** g.max_c_component_size if g.n else 0
    yield "count within n*2^s", _status(len(listed) <= bound), f"{len(listed)} <= {bound}"
    bad = [ci for ci in listed if not d_separated(g, *ci.masks(g))]
    yield "every statement d-separated", _status(not bad), "; ".join(map(str, bad[:3]))
    try:
        bf = {ci for ci in iter_ci_bf(g, order, include_vacuous=False, cap=cap)}
        yield "matches ordered local Markov brute force", _status(bf == got), _diff(got, bf)
    except CapExceeded as exc:
        yield "matches ordered local Markov brute force", "SKIP", str(exc)
    try:
        oracle = oracle_ci_set(g, order)
        yield "matches enumeration of all ancestral c-components", _status(oracle == got), _diff(got, oracle)
    except CapExceeded as exc:
        yield "matches enumeration of all ancestral c-components", "SKIP", str(exc)


def _status(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


def _diff(got: set, ref: set) -> str:
    parts = []
    if got - ref:
        parts.append("extra: " + "; ".join(map(str, sorted(got - ref)[:3])))
    if ref - got:
        parts.append("missing: " + "; ".join(map(str, sorted(ref - got)[:3])))
    return " ".join(parts)


def cmd_verify(a) -> int:
    g, order = load_graph(a.graph, a.order)
    failed = False
    for prop, status, detail in verify_graph(g, order, a.cap):
        print(f"{status} {prop}" + (f" ({detail})" if detail else ""))
        failed |= status == "FAIL"
    return EXIT_VIOLATION if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="cilist",
        description="List the testable conditional independences of a causal graph.",
    )
    p.add_argument("--version", action="version",
                   version=f"cilist {__version__} (graph format {FORMAT_VERSION})")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def graph_cmd(name, help_, fn, order=True):
        sp = sub.add_parser(name, help=help_, description=help_)
        sp.add_argument("--graph", required=True, help="graph file (.graph text or .json)")
        if order:
            sp.add_argument("--order", help="variable order, comma separated; overrides the file")
        sp.set_defaults(func=fn)
        return sp

    def fmt(sp):
        sp.add_argument("--format", choices=("text", "json"), default="text")

    sp = graph_cmd("listci", "list the non-vacuous C-LMP statements", cmd_listci)
    fmt(sp)
    sp.add_argument("--count-only", action="store_true")

    sp = graph_cmd("listgmp", "list every d-separation statement (exponential)", cmd_listgmp, order=False)
    fmt(sp)
    sp.add_argument("--count-only", action="store_true")
    sp.add_argument("--cap", type=int, default=None, help="node-count cap (env CILIST_GMP_CAP)")
    sp.add_argument("--force", action="store_true", help="ignore the cap")

    sp = graph_cmd("listcibf", "list ordered local Markov statements by brute force", cmd_listcibf)
    fmt(sp)
    sp.add_argument("--count-only", action="store_true")
    sp.add_argument("--include-vacuous", action="store_true")
    sp.add_argument("--cap", type=int, default=None, help="node-count cap (env CILIST_BF_CAP)")
    sp.add_argument("--force", action="store_true", help="ignore the cap")

    sp = graph_cmd("dsep", "test a d-separation statement", cmd_dsep, order=False)
    sp.add_argument("--x", required=True)
    sp.add_argument("--y", required=True)
    sp.add_argument("--z", default="")

    sp = graph_cmd("project", "project out latent nodes", cmd_project, order=False)
    fmt(sp)
    sp.add_argument("-o", "--output")

    sp = sub.add_parser("randgen", help="draw a seeded random graph")
    sp.set_defaults(func=cmd_randgen)
    sp.add_argument("--n", type=int, required=True)
    density = sp.add_mutually_exclusive_group(required=True)
    density.add_argument("--pd", type=float, help="directed-edge probability")
    density.add_argument("--md", type=int, help="exact number of directed edges")
    sp.add_argument("--pb", type=float, required=True, help="bidirected-edge probability")
    sp.add_argument("--seed", type=int, required=True)
    fmt(sp)
    sp.add_argument("-o", "--output")

    sp = sub.add_parser("bench", help="run a timing sweep over random graphs")
    sp.set_defaults(func=cmd_bench)
    sp.add_argument("--grid", required=True, help="JSON grid description")
    sp.add_argument("-o", "--output")
    sp.add_argument("--workers", type=int)
    sp.add_argument("--timeout", type=float, help="seconds per run")

    sp = graph_cmd("citest", "test the listed statements against a CSV dataset", cmd_citest)
    sp.add_argument("--data", required=True)
    sp.add_argument("--alpha", type=float, default=0.05)
    fmt(sp)
    sp.add_argument("--categorical", help="columns to treat as categorical")
    sp.add_argument("--continuous", help="columns to treat as continuous")

    sp = graph_cmd("verify", "cross-check listci against the brute-force baselines", cmd_verify)
    sp.add_argument("--cap", type=int, default=None)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except CapExceeded as exc:
        _err(f"refusing: {exc}; pass --force to run anyway")
        return EXIT_CAP
    except TimeoutError as exc:
        _err(str(exc))
        return EXIT_CAP
    except (GraphError, DataError, InputError, OSError) as exc:
        _err(str(exc))
        return EXIT_INPUT
    except KeyboardInterrupt:
        sys.stdout.flush()
        return 130
    except BrokenPipeError:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
