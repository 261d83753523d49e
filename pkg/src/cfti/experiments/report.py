"""Experiment reports: flat metric rows with a fixed CSV schema."""

import json
from dataclasses import dataclass, field

import numpy as np

from ..io import REPORT_COLUMNS, format_report_csv, write_report_csv

__all__ = ["ExperimentReport", "write_report", "run_trials"]


@dataclass
class ExperimentReport:
    """Per-trial metric rows plus free-form run metadata.

    Aggregate rows use ``trial = -1``.
    """

    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def add(self, **row):
        unknown = set(row) - set(REPORT_COLUMNS)
        if unknown:
            raise ValueError(f"unknown report columns {sorted(unknown)}")
        self.rows.append(row)

    def select(self, **filters):
        return [r for r in self.rows if all(r.get(k) == v for k, v in filters.items())]

    def values(self, **filters):
        return np.array([r["metric_value"] for r in self.select(**filters)], dtype=float)

    def sort(self):
        key = lambda r: (str(r.get("scheme")), str(r.get("alpha")), float(r.get("ratio") or 0),
                         int(bool(r.get("constrained"))), str(r.get("metric_name")),
                         int(r.get("trial", 0)))
        self.rows.sort(key=key)
        return self

    def to_csv(self, include_timing=False):
        return format_report_csv(self.rows, include_timing)

    def to_json(self):
        def clean(v):
            if isinstance(v, (np.integer,)):
                return int(v)
            if isinstance(v, (np.floating,)):
                return float(v)
            return v

        payload = {"meta": self.meta,
                   "rows": [{k: clean(v) for k, v in r.items()} for r in self.rows]}
        return json.dumps(payload, sort_keys=True, indent=1)


def write_report(report, path, include_timing=False):
    """Write ``report`` as CSV (``.csv``) or JSON (``.json``)."""
    path = str(path)
    if path.endswith(".json"):
        with open(path, "w") as fh:
            fh.write(report.to_json())
    else:
        write_report_csv(path, report.rows, include_timing)


def run_trials(func, tasks, threads=1):
    """Evaluate ``func`` over ``tasks``, optionally in worker processes.

    Results come back in task order, so aggregates do not depend on the
    number of workers.
    """
    tasks = list(tasks)
    if threads is None or threads <= 1 or len(tasks) <= 1:
        return [func(t) for t in tasks]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=int(threads)) as pool:
        return list(pool.map(func, tasks))
