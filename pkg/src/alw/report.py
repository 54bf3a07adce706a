"""Validation reports and deterministic JSON serialization.

All machine-readable output goes through ``canonical_json`` so that repeated
runs with identical inputs produce byte-identical reports (sorted keys, no
timestamps, no wall-clock statistics).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

SCHEMA = "alw/1"
VERSION = "0.1.0"

DEFAULT_BUDGET = 10_000_000


def global_budget() -> int:
    """Global candidate/position budget, overridable via ALW_BUDGET."""
    raw = os.environ.get("ALW_BUDGET")
    if raw is None:
        return DEFAULT_BUDGET
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"ALW_BUDGET must be an integer, got {raw!r}")
    if value <= 0:
        raise ValueError("ALW_BUDGET must be positive")
    return value


@dataclass
class Check:
    name: str
    passed: bool
    witness: object = None

    def to_json(self):
        out = {"name": self.name, "passed": self.passed}
        if self.witness is not None:
            out["witness"] = self.witness
        return out


@dataclass
class ValidationReport:
    subject: str
    checks: list[Check] = field(default_factory=list)

    def add(self, name, passed, witness=None):
        self.checks.append(Check(name, bool(passed), witness))

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def check(self, name) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json(self):
        return {
            "subject": self.subject,
            "passed": self.ok,
            "checks": [c.to_json() for c in self.checks],
        }

    def __str__(self):
        lines = [f"[{'PASS' if self.ok else 'FAIL'}] {self.subject}"]
        for c in self.checks:
            mark = "ok  " if c.passed else "FAIL"
            line = f"  {mark} {c.name}"
            if not c.passed and c.witness is not None:
                line += f"  witness={c.witness}"
            lines.append(line)
        return "\n".join(lines)


def wrap_report(command: str, params: dict, body: dict) -> dict:
    """Standard envelope for CLI-facing JSON reports."""
    return {
        "schema": SCHEMA,
        "version": VERSION,
        "command": command,
        "params": params,
        **body,
    }


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"
