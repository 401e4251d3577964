"""Scenario reports: named estimates, verdicts, csv/json serialization.

A report is reproducible evidence: the estimate table is a pure function of
(scenario, params, master_seed) and every verdict is recomputable from the
table alone, so a parsed report re-verdicts to the same outcome.  JSON output
is byte-stable for a fixed seed; timestamps and wall time are optional fields
so they can be suppressed when byte-identity matters.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["Estimate", "Verdict", "ScenarioReport", "parse_csv_estimates"]

_Z95 = 1.96


@dataclass(frozen=True)
class Estimate:
    """A named scalar result; std_error is None for exact (non-MC) values."""

    name: str
    value: float
    std_error: float | None = None
    n_paths: int | None = None

    @property
    def ci_low(self) -> float | None:
        if self.std_error is None:
            return None
        return self.value - _Z95 * self.std_error

    @property
    def ci_high(self) -> float | None:
        if self.std_error is None:
            return None
        return self.value + _Z95 * self.std_error


@dataclass(frozen=True)
class Verdict:
    """Pass/fail judgment referencing one named estimate in the table."""

    name: str
    estimate: str
    passed: bool
    detail: str = ""


@dataclass
class ScenarioReport:
    scenario: str
    params: dict
    master_seed: int
    estimates: list = field(default_factory=list)
    verdicts: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    started_at: str | None = None
    wall_seconds: float | None = None

    def __post_init__(self):
        names = {e.name for e in self.estimates}
        for v in self.verdicts:
            if v.estimate not in names:
                raise ValueError(
                    f"verdict {v.name!r} references unknown estimate {v.estimate!r}"
                )

    def estimate(self, name: str) -> Estimate:
        for e in self.estimates:
            if e.name == name:
                return e
        raise KeyError(name)

    @property
    def all_passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def verdict_for(self, estimate_name: str) -> Verdict | None:
        for v in self.verdicts:
            if v.estimate == estimate_name:
                return v
        return None

    def to_json(self) -> str:
        doc = {
            "scenario": self.scenario,
            "master_seed": self.master_seed,
            "params": _jsonify(self.params),
            "estimates": [
                {
                    "name": e.name,
                    "value": _jsonify(e.value),
                    "std_error": _jsonify(e.std_error),
                    "ci_low": _jsonify(e.ci_low),
                    "ci_high": _jsonify(e.ci_high),
                    "n_paths": e.n_paths,
                }
                for e in self.estimates
            ],
            "verdicts": [
                {
                    "name": v.name,
                    "estimate": v.estimate,
                    "passed": v.passed,
                    "detail": v.detail,
                }
                for v in self.verdicts
            ],
            "diagnostics": _jsonify(self.diagnostics),
        }
        if self.started_at is not None:
            doc["started_at"] = self.started_at
        if self.wall_seconds is not None:
            doc["wall_seconds"] = self.wall_seconds
        return json.dumps(doc, indent=2, allow_nan=False) + "\n"

    def to_csv(self) -> str:
        """One row per estimate: name,value,std_error,ci_low,ci_high,verdict."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["name", "value", "std_error", "ci_low", "ci_high", "verdict"])
        for e in self.estimates:
            v = self.verdict_for(e.name)
            writer.writerow(
                [
                    e.name,
                    repr(float(e.value)),
                    "" if e.std_error is None else repr(float(e.std_error)),
                    "" if e.ci_low is None else repr(float(e.ci_low)),
                    "" if e.ci_high is None else repr(float(e.ci_high)),
                    "" if v is None else ("pass" if v.passed else "fail"),
                ]
            )
        return buf.getvalue()


def parse_csv_estimates(text: str) -> list[Estimate]:
    """Inverse of ``to_csv`` for the estimate columns (verdicts are derived)."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0][:2] != ["name", "value"]:
        raise ValueError("not a report csv")
    out = []
    for row in rows[1:]:
        name, value, std_error = row[0], float(row[1]), row[2]
        out.append(
            Estimate(
                name=name,
                value=value,
                std_error=None if std_error == "" else float(std_error),
            )
        )
    return out


def _jsonify(obj):
    """Make a structure json-serializable and byte-stable.

    numpy scalars/arrays become python scalars/lists; non-finite floats become
    the strings "inf"/"-inf"/"nan" (strict JSON has no literals for them).
    """
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj.tolist()]
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    return repr(obj)
