"""Machine-readable run reports.

A report is a list of named checks plus the resolved configuration.  The
JSON body is fully deterministic (sorted keys, no timestamps), so two
runs with the same configuration are byte-identical; the configuration
hash makes that comparable at a glance.  Files are written atomically.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import __version__

#: checks are one of these modes; "info" rows never fail a run
MODES = ("max_leq", "min_geq", "order_geq", "bool", "info")


@dataclass
class Check:
    """One verified statement: a value, how to judge it, and an anchor
    string naming the identity being exercised."""

    name: str
    mode: str
    value: float | bool | str
    threshold: float | None
    passed: bool
    anchor: str
    extras: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "mode": self.mode,
            "value": _jsonable(self.value),
            "threshold": _jsonable(self.threshold),
            "passed": bool(self.passed),
            "anchor": self.anchor,
            "extras": {k: _jsonable(v) for k, v in sorted(self.extras.items())},
        }


def make_check(name, mode, value, threshold, anchor, extras=None) -> Check:
    if mode == "max_leq":
        passed = value <= threshold
    elif mode == "min_geq":
        passed = value >= threshold
    elif mode == "order_geq":
        passed = value >= threshold
    elif mode == "bool":
        passed = bool(value)
    elif mode == "info":
        passed = True
    else:
        raise ValueError(f"unknown check mode {mode!r}")
    return Check(name, mode, value, threshold, passed, anchor, extras or {})


def _jsonable(v):
    if v is None or isinstance(v, (bool, str)):
        return v
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        if f == float("inf"):
            return "inf"
        if f == float("-inf"):
            return "-inf"
        return f
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in sorted(v.items())}
    return str(v)


def config_hash(config: dict) -> str:
    body = json.dumps(_jsonable(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(body.encode()).hexdigest()[:16]


def report_body(command: str, config: dict, checks: list[Check], tables: dict | None = None) -> dict:
    return {
        "tool": "minsurf-lab",
        "version": __version__,
        "command": command,
        "config": _jsonable(config),
        "config_hash": config_hash(config),
        "checks": [c.as_dict() for c in checks],
        "tables": _jsonable(tables or {}),
        "all_passed": all(c.passed for c in checks),
    }


def atomic_write_text(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def write_json_report(path: str, body: dict) -> None:
    atomic_write_text(path, json.dumps(body, sort_keys=True, indent=2) + "\n")


def write_checks_csv(path: str, checks: list[Check]) -> None:
    rows = [["name", "mode", "value", "threshold", "passed", "anchor"]]
    for c in checks:
        rows.append(
            [c.name, c.mode, _jsonable(c.value), _jsonable(c.threshold), c.passed, c.anchor]
        )
    _write_csv(path, rows)


def write_field_csv(path: str, domain, fields: dict[str, np.ndarray]) -> None:
    """Per-node field dump; column order is u, v, then the named fields in
    sorted order."""
    U, V = domain.mesh()
    names = sorted(fields)
    rows = [["u", "v"] + names]
    for i in range(U.shape[0]):
        for j in range(U.shape[1]):
            rows.append(
                [f"{U[i, j]:.17g}", f"{V[i, j]:.17g}"]
                + [f"{float(fields[n][i, j]):.17g}" for n in names]
            )
    _write_csv(path, rows)


def write_table_csv(path: str, table: dict) -> None:
    """Residual-vs-h table: columns h, residual, plus the fitted order in
    a trailing comment row."""
    rows = [["h", "residual"]]
    for h, r in zip(table["h"], table["residual"]):
        rows.append([f"{h:.17g}", f"{r:.17g}"])
    rows.append(["# fitted_order", _jsonable(table.get("order"))])
    _write_csv(path, rows)


def _write_csv(path: str, rows) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", newline="") as f:
            csv.writer(f).writerows(rows)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)
