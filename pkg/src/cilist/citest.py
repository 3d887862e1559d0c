"""Testing a list of CI statements against tabular data.

Continuous statements with a single witness use the Fisher z-test on the
partial correlation. Continuous statements with several witnesses are tested
jointly with the nested-regression F-test (all witness coefficients zero),
which reduces to the partial-correlation t-test for one witness. Categorical
statements use the stratified chi-square test, with multi-column sides
encoded as one joint categorical variable.
"""

from __future__ import annotations

import csv
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy import stats

from .clmp import CiStatement, iter_ci
from .graph import CausalGraph, VariableOrder, bits

CONTINUOUS = "continuous"
CATEGORICAL = "categorical"
EPS = 1e-12


class DataError(ValueError):
    pass


@dataclass
class Dataset:
    """Columns keyed by name: float64 arrays or integer codes with level names."""

    columns: dict[str, np.ndarray]
    kinds: dict[str, str]
    levels: dict[str, tuple[str, ...]] = field(default_factory=dict)
    dropped_rows: int = 0

    def __post_init__(self):
        lengths = {len(v) for v in self.columns.values()}
        if len(lengths) > 1:
            raise DataError("columns have different lengths")

    @property
    def row_count(self) -> int:
        return len(next(iter(self.columns.values()))) if self.columns else 0

    def column(self, name: str) -> np.ndarray:
        try:
            return self.columns[name]
        except KeyError:
            raise DataError(f"no column named {name!r}") from None

    def kind(self, name: str) -> str:
        self.column(name)
        return self.kinds[name]

    @classmethod
    def from_arrays(cls, data: Mapping[str, Sequence], kinds: Mapping[str, str] | None = None):
        """Build from in-memory arrays; kinds default to auto-detection."""
        cols, kk, lv = {}, {}, {}
        for name, values in data.items():
            arr, kind, levels = _type_column([str(v) for v in values], (kinds or {}).get(name), name)
            cols[name], kk[name] = arr, kind
            if levels:
                lv[name] = levels
        return cls(cols, kk, lv)


def _parse_float(s: str) -> float | None:
    try:
        return float(s)
    except ValueError:
        return None


def _type_column(raw: list[str], hint: str | None, name: str):
    nums = [_parse_float(s) for s in raw]
    numeric = all(v is not None for v in nums)
    if hint == CONTINUOUS and not numeric:
        raise DataError(f"column {name!r} forced continuous but has non-numeric values")
    if hint == CONTINUOUS or (hint is None and numeric and len(set(nums)) > 10):
        return np.asarray(nums, dtype=float), CONTINUOUS, ()
    if numeric:
        keys = sorted(set(nums))
        labels = {v: s for v, s in zip(nums, raw)}
        levels = tuple(labels[k] for k in keys)
        code = {k: i for i, k in enumerate(keys)}
        return np.asarray([code[v] for v in nums], dtype=np.int64), CATEGORICAL, levels
    levels = tuple(sorted(set(raw)))
    code = {s: i for i, s in enumerate(levels)}
    return np.asarray([code[s] for s in raw], dtype=np.int64), CATEGORICAL, levels


def load_csv(path: str | Path, hints: Mapping[str, str] | None = None) -> Dataset:
    """Read a CSV with a header row into a typed :class:`Dataset`.

    Rows with a blank cell are dropped (count kept in ``dropped_rows``). A
    column is continuous when every value parses as a number and there are
    more than ten distinct values, categorical otherwise, unless ``hints``
    says so explicitly.
    """
    hints = dict(hints or {})
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if not header or any(not h for h in header):
            raise DataError(f"{path}: blank column name in header")
        if len(set(header)) != len(header):
            raise DataError(f"{path}: duplicate column names")
        rows, dropped = [], 0
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}: line {lineno} has {len(row)} fields, expected {len(header)}")
            cells = [c.strip() for c in row]
            if any(not c or c.upper() in ("NA", "NAN") for c in cells):
                dropped += 1
                continue
            rows.append(cells)
    if not rows:
        raise DataError(f"{path}: no complete data rows")
    for name, kind in hints.items():
        if name not in header:
            raise DataError(f"type hint for unknown column {name!r}")
        if kind not in (CONTINUOUS, CATEGORICAL):
            raise DataError(f"unknown column type {kind!r}")
    cols, kinds, levels = {}, {}, {}
    for j, name in enumerate(header):
        arr, kind, lv = _type_column([r[j] for r in rows], hints.get(name), name)
        cols[name], kinds[name] = arr, kind
        if lv:
            levels[name] = lv
    return Dataset(cols, kinds, levels, dropped)


# ---------------------------------------------------------------------------
# tests


class TestStat(NamedTuple):
    statistic: float
    p_value: float
    dof: float | None = None
    low_count: bool = False


def _as_list(v) -> list[str]:
    if isinstance(v, str):
        return [v]
    return list(v)


def _continuous_matrix(d: Dataset, names: list[str]) -> np.ndarray:
    for nm in names:
        if d.kind(nm) != CONTINUOUS:
            raise DataError(f"column {nm!r} is not continuous")
    return np.column_stack([d.column(nm) for nm in names]) if names else np.empty((d.row_count, 0))


def _collinear_members(corr: np.ndarray, names: list[str]) -> list[str]:
    _, s, vt = np.linalg.svd(corr)
    null = vt[-1]
    return [nm for nm, c in zip(names, null) if abs(c) > 1e-6]


def fisher_z(d: Dataset, x: str, y: str, z: Iterable[str] = ()) -> TestStat:
    """Fisher z-test of ``x _||_ y | z`` via the partial correlation.

    Raises
    ------
    DataError
        If a column is not continuous, there are too few rows, or the
        correlation matrix of ``x, y, z`` is singular.
    """
    zs = _as_list(z)
    names = [x, y] + zs
    n = d.row_count
    if n <= len(zs) + 3:
        raise DataError(f"need more than {len(zs) + 3} rows, have {n}")
    data = _continuous_matrix(d, names)
    sd = data.std(axis=0)
    flat = [nm for nm, s in zip(names, sd) if s == 0]
    if flat:
        raise DataError(f"constant column(s): {', '.join(flat)}")
    corr = np.corrcoef(data, rowvar=False)
    if np.linalg.matrix_rank(corr, tol=1e-10) < len(names):
        if len(names) == 2:
            r = float(np.clip(corr[0, 1], -1 + EPS, 1 - EPS))
            return _z_stat(r, n, 0)
        raise DataError(f"singular correlation matrix; collinear: {', '.join(_collinear_members(corr, names))}")
    prec = np.linalg.inv(corr)
    r = -prec[0, 1] / math.sqrt(prec[0, 0] * prec[1, 1])
    r = float(np.clip(r, -1 + EPS, 1 - EPS))
    return _z_stat(r, n, len(zs))


def _z_stat(r: float, n: int, k: int) -> TestStat:
    stat = 0.5 * math.log((1 + r) / (1 - r)) * math.sqrt(n - k - 3)
    return TestStat(stat, float(min(1.0, 2 * stats.norm.sf(abs(stat)))))


def fisher_z_from_r(r: float, n: int, k: int = 0) -> TestStat:
    """Statistic and p-value for a given partial correlation ``r``."""
    return _z_stat(float(np.clip(r, -1 + EPS, 1 - EPS)), n, k)


def f_test(d: Dataset, x: str, ys: Iterable[str], z: Iterable[str] = ()) -> TestStat:
    """Joint test that every coefficient of ``ys`` is zero in ``x ~ z + ys``."""
    ys, zs = _as_list(ys), _as_list(z)
    n, k = d.row_count, len(ys)
    df2 = n - len(zs) - k - 1
    if df2 <= 0:
        raise DataError(f"need more than {len(zs) + k + 1} rows, have {n}")
    target = _continuous_matrix(d, [x])[:, 0]
    base = np.column_stack([np.ones(n), _continuous_matrix(d, zs)])
    full = np.column_stack([base, _continuous_matrix(d, ys)])
    if np.linalg.matrix_rank(full) < full.shape[1]:
        corr = np.corrcoef(full[:, 1:], rowvar=False)
        raise DataError(f"singular design; collinear: {', '.join(_collinear_members(corr, zs + ys))}")
    rss0 = _rss(base, target)
    rss1 = _rss(full, target)
    stat = ((rss0 - rss1) / k) / max(rss1 / df2, EPS)
    return TestStat(float(stat), float(stats.f.sf(stat, k, df2)), float(k))


def _rss(design: np.ndarray, target: np.ndarray) -> float:
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    resid = target - design @ coef
    return float(resid @ resid)


def _joint_codes(d: Dataset, names: list[str]) -> np.ndarray:
    if not names:
        return np.zeros(d.row_count, dtype=np.int64)
    for nm in names:
        if d.kind(nm) != CATEGORICAL:
            raise DataError(f"column {nm!r} is not categorical")
    cols = [d.column(nm) for nm in names]
    if len(cols) == 1:
        return cols[0]
    return np.ravel_multi_index(cols, [int(c.max()) + 1 for c in cols])


def chi_square(d: Dataset, x, y, z: Iterable[str] = (), min_expected: float = 5.0) -> TestStat:
    """Stratified chi-square test of ``x _||_ y | z`` for categorical columns.

    Sums the Pearson statistic over strata of ``z``; each stratum contributes
    ``(r - 1)(c - 1)`` degrees of freedom counting only levels present in it.
    ``low_count`` flags a stratum with an expected cell count below
    ``min_expected``.
    """
    xs, ys, zs = _as_list(x), _as_list(y), _as_list(z)
    xc, yc, zc = _joint_codes(d, xs), _joint_codes(d, ys), _joint_codes(d, zs)
    stat, dof, low = 0.0, 0, False
    for stratum in np.unique(zc):
        sel = zc == stratum
        _, xi = np.unique(xc[sel], return_inverse=True)
        _, yi = np.unique(yc[sel], return_inverse=True)
        table = np.zeros((xi.max() + 1, yi.max() + 1))
        np.add.at(table, (xi, yi), 1)
        r, c = table.shape
        if r < 2 or c < 2:
            continue
        expected = np.outer(table.sum(1), table.sum(0)) / table.sum()
        if (expected < min_expected).any():
            low = True
        stat += float(((table - expected) ** 2 / expected).sum())
        dof += (r - 1) * (c - 1)
    p = float(stats.chi2.sf(stat, dof)) if dof > 0 else 1.0
    return TestStat(stat, p, float(dof), low)


# ---------------------------------------------------------------------------
# model testing


@dataclass(frozen=True)
class CiTestResult:
    statement: CiStatement
    p_value: float
    statistic: float
    method: str
    decision: str
    low_count: bool = False

    def __post_init__(self):
        if not 0.0 <= self.p_value <= 1.0:
            raise ValueError("p-value out of range")


@dataclass(frozen=True)
class CiTestError:
    statement: CiStatement
    error: str


@dataclass
class ModelReport:
    alpha: float
    entries: list = field(default_factory=list)
    dropped_rows: int = 0

    @property
    def results(self) -> list[CiTestResult]:
        return [e for e in self.entries if isinstance(e, CiTestResult)]

    @property
    def errors(self) -> list[CiTestError]:
        return [e for e in self.entries if isinstance(e, CiTestError)]

    @property
    def consistent(self) -> int:
        return sum(r.decision == "consistent" for r in self.results)

    @property
    def any_violation(self) -> bool:
        return any(r.decision == "violated" for r in self.results)

    def summary(self) -> str:
        m = len(self.entries)
        if m == 0:
            return "0 CIs to test"
        s = f"{self.consistent} of {m} CIs consistent at alpha={self.alpha:g}"
        if self.errors:
            s += f"; {len(self.errors)} could not be tested"
        return s

    def to_text(self) -> str:
        rows = [(str(e.statement), f"{e.p_value:.3f}", e.decision, e.method)
                if isinstance(e, CiTestResult) else (str(e.statement), "-", "error", e.error)
                for e in self.entries]
        width = max([len(r[0]) for r in rows] + [len("CI")])
        lines = [f"{'CI':<{width}}  {'p-value':>7}  {'verdict':<10}  method"]
        for ci, p, verdict, method in rows:
            lines.append(f"{ci:<{width}}  {p:>7}  {verdict:<10}  {method}")
        lines.append(self.summary())
        if self.dropped_rows:
            lines.append(f"{self.dropped_rows} rows with missing values dropped")
        return "\n".join(lines)

    def to_json_lines(self) -> list[str]:
        import json

        out = []
        for e in self.entries:
            doc = {"x": e.statement.x, "w": list(e.statement.w), "z": list(e.statement.z)}
            if isinstance(e, CiTestResult):
                doc.update(p_value=e.p_value, statistic=e.statistic, method=e.method,
                           decision=e.decision, low_count=e.low_count)
            else:
                doc["error"] = e.error
            out.append(json.dumps(doc))
        return out


def test_statement(d: Dataset, ci: CiStatement, alpha: float = 0.05):
    """Run the matching test for one statement; errors come back as :class:`CiTestError`."""
    names = [ci.x, *ci.w, *ci.z]
    try:
        kinds = {d.kind(nm) for nm in names}
        if len(kinds) > 1:
            raise DataError("statement mixes continuous and categorical columns")
        if kinds == {CONTINUOUS}:
            if len(ci.w) == 1:
                res, method = fisher_z(d, ci.x, ci.w[0], ci.z), "fisher_z"
            else:
                res, method = f_test(d, ci.x, ci.w, ci.z), "f_test"
        else:
            res, method = chi_square(d, ci.x, list(ci.w), ci.z), "chi_square"
    except DataError as exc:
        return CiTestError(ci, str(exc))
    decision = "violated" if res.p_value < alpha else "consistent"
    return CiTestResult(ci, res.p_value, res.statistic, method, decision, res.low_count)


test_statement.__test__ = False  # not a pytest test


def test_model(
    g: CausalGraph, order: VariableOrder | None, data: Dataset, alpha: float = 0.05
) -> ModelReport:
    """Test every non-vacuous C-LMP CI of ``g`` on ``data``, in listing order."""
    missing = [nm for nm in g.names if nm not in data.columns]
    if missing:
        raise DataError(f"data has no column for: {', '.join(missing)}")
    report = ModelReport(alpha, dropped_rows=data.dropped_rows)
    for ci in iter_ci(g, order):
        report.entries.append(test_statement(data, ci, alpha))
    return report


test_model.__test__ = False


# ---------------------------------------------------------------------------
# synthetic data


def sample_linear_gaussian(
    g: CausalGraph,
    n_samples: int,
    seed: int,
    weight_range: tuple[float, float] = (0.5, 1.5),
    confounder_weight: float = 0.8,
) -> Dataset:
    """Draw from a linear-Gaussian SEM with the structure of ``g``.

    Edge weights are uniform in ``weight_range`` with random sign; every
    bidirected edge gets its own standard-normal confounder feeding both ends.
    """
    rng = np.random.default_rng(seed)
    lo, hi = weight_range
    values = np.zeros((n_samples, g.n))
    noise = rng.standard_normal((n_samples, g.n))
    for a, b in g.bidirected_edges:
        u = rng.standard_normal(n_samples)
        noise[:, a] += confounder_weight * u
        noise[:, b] += confounder_weight * u
    weights = {}
    for a, b in g.directed_edges:
        weights[a, b] = rng.uniform(lo, hi) * rng.choice((-1.0, 1.0))
    for v in g.default_order().sequence:
        acc = noise[:, v].copy()
        for p in bits(g.parents_of(v)):
            acc += weights[p, v] * values[:, p]
        values[:, v] = acc
    values /= values.std(axis=0, keepdims=True)
    return Dataset({nm: values[:, i].copy() for i, nm in enumerate(g.names)},
                   {nm: CONTINUOUS for nm in g.names})
