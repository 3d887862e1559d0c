"""Timing sweeps of the CI enumerator over random graphs.

A sweep is a grid of cells ``(n, md or pd, pb)`` with a fixed number of
samples per cell. Each sample's graph seed comes from
``SeedSequence(base_seed, spawn_key=(cell, sample))`` so any single run can
be regenerated without replaying the sweep.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import time
from collections.abc import Iterator, Mapping
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .clmp import iter_ci_masks
from .randgen import PRNG_NAME, RandomGraphSpec, random_graph

DEFAULT_TIMEOUT = 60.0
CSV_COLUMNS = (
    "n", "md", "mu", "s", "pd", "pb", "seed",
    "ci_count", "total_ms", "max_delay_ms", "timed_out",
)


@dataclass(frozen=True)
class BenchConfig:
    n: tuple[int, ...]
    pb: tuple[float, ...]
    pd: tuple[float, ...] = ()
    md: tuple[int, ...] = ()
    samples: int = 10
    seed: int = 0
    timeout: float = DEFAULT_TIMEOUT
    workers: int = 1
    keep_delays: bool = False

    def __post_init__(self):
        if bool(self.pd) == bool(self.md):
            raise ValueError("grid needs exactly one of 'pd' or 'md'")
        if self.samples < 1 or not self.n or not self.pb:
            raise ValueError("grid needs n, pb and samples >= 1")

    @classmethod
    def from_mapping(cls, doc: Mapping) -> BenchConfig:
        known = set(cls.__dataclass_fields__)
        extra = set(doc) - known
        if extra:
            raise ValueError(f"unknown grid keys: {', '.join(sorted(extra))}")

        def seq(key, cast):
            v = doc.get(key, ())
            return tuple(cast(x) for x in (v if isinstance(v, (list, tuple)) else [v]))

        kw = {k: doc[k] for k in ("samples", "seed", "timeout", "workers", "keep_delays") if k in doc}
        return cls(n=seq("n", int), pb=seq("pb", float), pd=seq("pd", float), md=seq("md", int), **kw)

    @classmethod
    def from_json(cls, text: str) -> BenchConfig:
        return cls.from_mapping(json.loads(text))

    def cells(self) -> list[tuple[int, float | None, int | None, float]]:
        """``(n, pd, md, pb)`` in sweep order; one of pd/md is None."""
        if self.md:
            return [(n, None, md, pb) for n, md, pb in itertools.product(self.n, self.md, self.pb)]
        return [(n, pd, None, pb) for n, pd, pb in itertools.product(self.n, self.pd, self.pb)]


@dataclass(frozen=True)
class BenchRecord:
    cell: int
    sample: int
    n: int
    md: int
    mu: int
    s: int
    pd: float | None
    pb: float
    seed: int
    ci_count: int
    total_ms: float
    max_delay_ms: float
    timed_out: bool
    delays_ms: tuple[float, ...] = field(default=(), compare=False)

    def csv_row(self) -> list:
        pd = "" if self.pd is None else self.pd
        return [self.n, self.md, self.mu, self.s, pd, self.pb, self.seed,
                self.ci_count, f"{self.total_ms:.3f}", f"{self.max_delay_ms:.3f}",
                int(self.timed_out)]


def run_seed(base_seed: int, cell: int, sample: int) -> int:
    ss = np.random.SeedSequence(base_seed, spawn_key=(cell, sample))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def time_listing(g, order=None, timeout: float | None = DEFAULT_TIMEOUT, keep_delays=False):
    """Enumerate the CIs of ``g`` and time the gaps between emissions.

    Returns ``(count, total_ms, max_delay_ms, timed_out, delays_ms)``. The
    first gap starts when enumeration starts and a final gap runs to the end.
    """
    order = g.default_order() if order is None else order
    start = time.perf_counter()
    deadline = None if timeout is None else start + timeout
    last, count, max_gap, delays, timed_out = start, 0, 0.0, [], False
    try:
        for _ in iter_ci_masks(g, order, deadline):
            now = time.perf_counter()
            gap = now - last
            max_gap = max(max_gap, gap)
            if keep_delays:
                delays.append(gap * 1e3)
            last, count = now, count + 1
    except TimeoutError:
        timed_out = True
    end = time.perf_counter()
    max_gap = max(max_gap, end - last)
    return count, (end - start) * 1e3, max_gap * 1e3, timed_out, tuple(delays)


def _run(args) -> BenchRecord:
    cell, sample, (n, pd, md, pb), base_seed, timeout, keep = args
    seed = run_seed(base_seed, cell, sample)
    g = random_graph(RandomGraphSpec(n, pd if pd is not None else 0.0, pb, seed, md))
    count, total, max_delay, timed_out, delays = time_listing(g, None, timeout, keep)
    return BenchRecord(
        cell, sample, n, len(g.directed_edges), len(g.bidirected_edges),
        g.max_c_component_size, pd, pb, seed, count, total, max_delay, timed_out, delays,
    )


def bench_sweep(config: BenchConfig) -> Iterator[BenchRecord]:
    """One record per (cell, sample), in that order, regardless of worker count."""
    tasks = [
        (ci, k, cell, config.seed, config.timeout, config.keep_delays)
        for ci, cell in enumerate(config.cells())
        for k in range(config.samples)
    ]
    if config.workers <= 1:
        yield from map(_run, tasks)
        return
    with ProcessPoolExecutor(max_workers=config.workers) as pool:
        yield from pool.map(_run, tasks, chunksize=max(1, len(tasks) // (4 * config.workers)))


def csv_header_comment(config: BenchConfig) -> str:
    return (f"# prng={PRNG_NAME}; per-run seed = SeedSequence({config.seed}, "
            f"spawn_key=(cell, sample)).generate_state(1, uint64)[0]; "
            f"timeout_s={config.timeout:g}")


def write_csv(records, fh, config: BenchConfig) -> int:
    """Stream records to ``fh`` as CSV; returns the number of rows written."""
    fh.write(csv_header_comment(config) + "\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    rows = 0
    for rec in records:
        w.writerow(rec.csv_row())
        fh.flush()
        rows += 1
    return rows


def records_to_csv(records, config: BenchConfig) -> str:
    buf = io.StringIO()
    write_csv(records, buf, config)
    return buf.getvalue()
