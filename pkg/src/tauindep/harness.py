"""Monte Carlo size and power experiments over (n, d) grids."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

from . import moments
from .engine import StatisticKind, run_test
from .errors import DegenerateError, DomainError, InputError
from .synthetic import (DESIGNS, MECHANISMS, DesignSpec, MissSpec, amputate,
                        derive_seed, rates_for, sample)

FORMATS = ("csv", "markdown", "text", "json")
REPS_PER_TASK = 50


@dataclass(frozen=True)
class ExperimentConfig:
    n_values: tuple
    d_values: tuple
    designs: tuple
    rho: float = 0.0
    mechanism: str = "mcar"
    rate: float = 0.1
    rates: tuple = ()
    ref_col: int = 0
    statistic: str = "u_stat"
    alpha: float = 0.05
    sided: str = "two"
    replications: int = 2000
    master_seed: int = 0
    moment_estimator: str = "unbiased"

    def __post_init__(self):
        if not self.n_values or not self.d_values or not self.designs:
            raise DomainError("the grid is empty: n, d and design need at least one value each")
        if any(n < 2 for n in self.n_values) or any(d < 2 for d in self.d_values):
            raise DomainError("grid values need n >= 2 and d >= 2")
        for design in self.designs:
            if design not in DESIGNS:
                raise DomainError(f"unknown design {design!r}")
        if self.mechanism not in MECHANISMS:
            raise DomainError(f"unknown mechanism {self.mechanism!r}")
        if not 0.0 < self.alpha <= 1.0:
            raise DomainError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.replications < 100:
            raise DomainError("replications must be >= 100")
        if self.sided not in ("two", "upper"):
            raise DomainError(f"sided must be 'two' or 'upper', got {self.sided!r}")
        StatisticKind.parse(self.statistic)

    def column_rates(self, d: int) -> tuple:
        rates = rates_for(d, list(self.rates) or [self.rate], default=self.rate)
        if self.mechanism != "mcar":
            rates = rates[:self.ref_col] + (0.0,) + rates[self.ref_col + 1:]
        return rates

    def design_id(self, design: str) -> int:
        return zlib.crc32(f"{design}:{self.rho!r}".encode())


@dataclass
class CellResult:
    rejections: int
    replications: int
    degenerate: int = 0
    error: str | None = None

    @property
    def rejection_rate(self) -> float:
        return self.rejections / self.replications

    @property
    def mc_se(self) -> float:
        r = self.rejection_rate
        return math.sqrt(r * (1.0 - r) / self.replications)


@dataclass
class SimReport:
    config: ExperimentConfig
    cells: dict = field(default_factory=dict)          # (design, n, d) -> CellResult
    total_miss_rate: dict = field(default_factory=dict)  # d -> float
    wall_time: float = 0.0

    def cell(self, design: str, n: int, d: int) -> CellResult:
        return self.cells[(design, n, d)]


def _run_reps(cfg: ExperimentConfig, design: str, n: int, d: int, start: int, stop: int):
    did = cfg.design_id(design)
    rates = cfg.column_rates(d)
    rejections = degenerate = 0
    for rep in range(start, stop):
        spec = DesignSpec(n, d, design, derive_seed(cfg.master_seed, did, n, d, rep, 0), cfg.rho)
        miss = MissSpec(cfg.mechanism, rates, derive_seed(cfg.master_seed, did, n, d, rep, 1),
                        cfg.ref_col)
        try:
            res = run_test(amputate(sample(spec), miss), cfg.statistic, sided=cfg.sided,
                           moment_estimator=cfg.moment_estimator)
        except DegenerateError:
            degenerate += 1
            continue
        rejections += res.p_value < cfg.alpha
    return rejections, degenerate


def _tasks(cfg: ExperimentConfig):
    for design in cfg.designs:
        for n in cfg.n_values:
            for d in cfg.d_values:
                for start in range(0, cfg.replications, REPS_PER_TASK):
                    yield design, n, d, start, min(start + REPS_PER_TASK, cfg.replications)


def _run_task(args):
    cfg, task = args
    try:
        return task, _run_reps(cfg, *task), None
    except Exception as exc:  # recorded per cell, never aborts the grid
        return task, (0, 0), f"{type(exc).__name__}: {exc}"


def run_experiment(cfg: ExperimentConfig, workers: int = 1,
                   progress: Callable[[str], None] | None = None) -> SimReport:
    """Run every (design, n, d) cell of the grid.

    Each replication draws data and mask from seeds derived from
    ``(master_seed, design, n, d, rep)``, so results do not depend on
    ``workers`` or on which other cells are in the grid.  A replication whose
    test is degenerate counts as a non-rejection and is tallied separately.
    """
    t0 = time.perf_counter()
    tasks = list(_tasks(cfg))
    acc: dict = {}
    errors: dict = {}

    def collect(item):
        (design, n, d, _, _), (rej, deg), err = item
        key = (design, n, d)
        r0, g0 = acc.get(key, (0, 0))
        acc[key] = (r0 + rej, g0 + deg)
        if err:
            errors.setdefault(key, err)

    if workers <= 1:
        for task in tasks:
            collect(_run_task((cfg, task)))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for item in pool.map(_run_task, [(cfg, t) for t in tasks], chunksize=4):
                collect(item)

    report = SimReport(cfg)
    for design in cfg.designs:
        for n in cfg.n_values:
            for d in cfg.d_values:
                key = (design, n, d)
                rej, deg = acc[key]
                err = errors.get(key)
                if err is None and deg == cfg.replications:
                    err = "DegenerateError: every replication was degenerate"
                report.cells[key] = CellResult(rej, cfg.replications, deg, err)
                if progress:
                    c = report.cells[key]
                    progress(f"{design} n={n} d={d}: {100 * c.rejection_rate:.2f}%"
                             + (f" [{err}]" if err else ""))
    for d in cfg.d_values:
        profile = moments.profile_from_rates(cfg.column_rates(d))
        report.total_miss_rate[d] = moments.total_missingness_rate(profile)
    report.wall_time = time.perf_counter() - t0
    return report


def default_workers() -> int:
    return os.cpu_count() or 1


# --- rendering -------------------------------------------------------------

def design_label(cfg: ExperimentConfig, design: str) -> str:
    return f"{design}({cfg.rho:g})" if design == "equicorr_normal" else design


def table_rows(report: SimReport) -> list:
    """Header, one row per (design, n), then the total.miss.rate row."""
    cfg = report.config
    rows = [["design", "n"] + [str(d) for d in cfg.d_values]]
    for design in cfg.designs:
        for n in cfg.n_values:
            row = [design_label(cfg, design), str(n)]
            for d in cfg.d_values:
                c = report.cells[(design, n, d)]
                row.append("ERR" if c.error else f"{100 * c.rejection_rate:.2f}")
            rows.append(row)
    rows.append(["total.miss.rate", "-"]
                + [f"{report.total_miss_rate[d]:.2f}" for d in cfg.d_values])
    return rows


def emit_table(report: SimReport, fmt: str = "csv") -> str:
    """Render a report as ``csv``, ``markdown``, ``text`` or ``json``.

    Rejection rates are percentages with two decimals; the last row holds
    the probability that a row has at least one missing cell.
    """
    if not report.cells:
        raise DomainError("cannot render an empty report")
    if fmt in ("aligned_text",):
        fmt = "text"
    if fmt not in FORMATS:
        raise DomainError(f"unknown format {fmt!r}; choose from {FORMATS}")
    if fmt == "json":
        return _emit_json(report)
    rows = table_rows(report)
    if fmt == "csv":
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(rows)
        return buf.getvalue()
    if fmt == "markdown":
        lines = ["| " + " | ".join(rows[0]) + " |",
                 "|" + "|".join(["---"] * 2 + ["---:"] * (len(rows[0]) - 2)) + "|"]
        lines += ["| " + " | ".join(r) + " |" for r in rows[1:]]
        return "\n".join(lines) + "\n"
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = []
    for r in rows:
        cells = [r[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(r[1:], widths[1:])]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines) + "\n"


def _emit_json(report: SimReport) -> str:
    cfg = report.config
    cells = [{"design": design, "n": n, "d": d,
              "rejection_rate": c.rejection_rate, "mc_se": c.mc_se,
              "rejections": c.rejections, "replications": c.replications,
              "degenerate": c.degenerate, "error": c.error}
             for (design, n, d), c in report.cells.items()]
    doc = {"config": asdict(cfg), "cells": cells,
           "total_miss_rate": {str(d): v for d, v in report.total_miss_rate.items()}}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# --- config files ----------------------------------------------------------

_LIST_INT = {"n": "n_values", "d": "d_values"}
_SCALARS = {
    "rho": float, "mechanism": str, "rate": float, "ref_col": int,
    "statistic": str, "alpha": float, "sided": str, "replications": int,
    "seed": int, "moment_estimator": str,
}


def parse_config(text: str) -> ExperimentConfig:
    """Parse the ``key = value`` experiment format.

    Blank lines and ``#`` comments are ignored; lists are comma-separated.
    Keys: ``n``, ``d``, ``design`` (required), ``rates``, plus the scalars
    ``rho mechanism rate ref_col statistic alpha sided replications seed
    moment_estimator``.
    """
    fields: dict = {}
    seen: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in seen:
            raise InputError(f"line {lineno}: duplicate key {key!r} (first on line {seen[key]})")
        seen[key] = lineno
        items = [v.strip() for v in value.split(",") if v.strip()]
        try:
            if key in _LIST_INT:
                fields[_LIST_INT[key]] = tuple(int(v) for v in items)
            elif key == "design":
                fields["designs"] = tuple(items)
            elif key == "rates":
                fields["rates"] = tuple(float(v) for v in items)
            elif key in _SCALARS:
                if len(items) != 1:
                    raise ValueError("expected a single value")
                name = "master_seed" if key == "seed" else key
                fields[name] = _SCALARS[key](items[0])
            else:
                raise InputError(f"line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(f"line {lineno}: bad value for {key!r}: {value!r} ({exc})") from None
    for key, name in (("n", "n_values"), ("d", "d_values"), ("design", "designs")):
        if not fields.get(name):
            raise InputError(f"missing or empty required key {key!r}")
    if "statistic" in fields:
        fields["statistic"] = StatisticKind.parse(fields["statistic"]).value
    try:
        return ExperimentConfig(**fields)
    except DomainError as exc:
        raise InputError(str(exc)) from None
