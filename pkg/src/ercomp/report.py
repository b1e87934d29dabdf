"""Machine-readable experiment reports: one JSON object or one flat CSV row.

Numbers are serialized so a rerun can reproduce them: rationals as "num/den"
strings, extended-precision values as full-digit decimal strings, doubles as
round-tripping floats.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from fractions import Fraction


@dataclass
class ExperimentReport:
    experiment: str
    inputs: dict
    metrics: dict = field(default_factory=dict)
    verdict: str = "pass"
    runtime_seconds: float = 0.0

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "inputs": _encode(self.inputs),
            "metrics": _encode(self.metrics),
            "verdict": self.verdict,
            "runtime_seconds": self.runtime_seconds,
        }

    def write_json(self, fileobj):
        json.dump(self.to_dict(), fileobj, indent=2)
        fileobj.write("\n")

    def write_csv(self, fileobj):
        flat = {"experiment": self.experiment, "verdict": self.verdict}
        flat.update(_flatten("input", _encode(self.inputs)))
        flat.update(_flatten("metric", _encode(self.metrics)))
        flat["runtime_seconds"] = self.runtime_seconds
        writer = csv.writer(fileobj, lineterminator="\n")
        writer.writerow(flat.keys())
        writer.writerow(flat.values())


def _encode(value):
    """Recursively rewrite values into JSON/CSV-safe primitives."""
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, dict):
        return {str(k): _encode(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_encode(v) for v in value]
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, (int, float, str)):
        return value
    # mpfr and friends: full decimal digits, string-typed on purpose
    return str(value)


def _flatten(prefix: str, value, out=None) -> dict:
    if out is None:
        out = {}
    if isinstance(value, dict):
        for k, v in value.items():
            _flatten(f"{prefix}.{k}", v, out)
    elif isinstance(value, list):
        for i, v in enumerate(value):
            _flatten(f"{prefix}.{i}", v, out)
    else:
        out[prefix] = value
    return out
