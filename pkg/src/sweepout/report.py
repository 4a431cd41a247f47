"""Experiment configs and reports with byte-stable serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from . import __version__

FLOAT_FORMAT = ".12g"
SEED_LIMIT = 1 << 64


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def _canon(obj, out):
    if obj is None or isinstance(obj, bool):
        out.append(json.dumps(obj))
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        if not math.isfinite(obj):
            out.append("null")
        else:
            txt = format(obj, FLOAT_FORMAT)
            if txt in ("-0", "0") and obj == 0:
                txt = "0"
            out.append(txt)
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        out.append("{")
        for j, key in enumerate(sorted(obj, key=str)):
            if j:
                out.append(",")
            out.append(json.dumps(str(key), ensure_ascii=False))
            out.append(":")
            _canon(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for j, v in enumerate(obj):
            if j:
                out.append(",")
            _canon(v, out)
        out.append("]")
    elif hasattr(obj, "tolist"):
        _canon(obj.tolist(), out)
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def canonical_json(obj) -> str:
    """Sorted keys, floats as ``%.12g``, no whitespace, trailing newline."""
    out = []
    _canon(obj, out)
    return "".join(out) + "\n"


@dataclass(frozen=True)
class ExperimentConfig:
    """Subcommand, its parameters, the seed and output paths."""

    command: str
    params: dict
    seed: int
    outputs: dict = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.seed, int) or not 0 <= self.seed < SEED_LIMIT:
            raise ConfigError("seed must be an integer in [0, 2^64)")

    def to_json(self):
        return {"command": self.command, "params": self.params, "seed": self.seed, "outputs": self.outputs}

    def dumps(self) -> str:
        return canonical_json(self.to_json())

    @classmethod
    def loads(cls, text: str, allowed=None) -> "ExperimentConfig":
        data = json.loads(text)
        extra = set(data) - {"command", "params", "seed", "outputs"}
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        params = data.get("params", {})
        if allowed is not None:
            bad = set(params) - set(allowed)
            if bad:
                raise ConfigError(f"unknown parameters: {sorted(bad)}")
        return cls(data["command"], params, data.get("seed", 0), data.get("outputs", {}))


@dataclass
class Report:
    """Rows of one experiment plus fitted summaries that name the rows they use."""

    experiment: str
    config: ExperimentConfig
    rows: list
    summary: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    wall_time: float | None = None

    def add_summary(self, name, value, rows=None):
        self.summary[name] = {"value": value,
                              "rows": list(range(len(self.rows))) if rows is None else list(rows)}

    def metric(self, name):
        if name not in self.summary:
            raise KeyError(name)
        return self.summary[name]["value"]

    def to_json(self):
        out = {"experiment": self.experiment, "config": self.config.to_json(), "rows": self.rows,
               "summary": self.summary, "version": __version__, "notes": self.notes}
        if self.wall_time is not None:
            out["wall_time"] = self.wall_time
        return out


def emit_report(r: Report, path) -> None:
    """Write the canonical JSON of a successful report (``-`` for standard output)."""
    if not r.rows:
        raise ValueError("refusing to emit a report without rows")
    text = canonical_json(r.to_json())
    if str(path) == "-":
        import sys
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as err:
        raise OSError(f"{path}: {err.strerror}") from err


def rows_csv(rows) -> str:
    """Rows (dicts) as CSV with a header from the first row's keys, in sorted order."""
    if not rows:
        return ""
    keys = sorted(rows[0])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(keys)
    for row in rows:
        w.writerow([_cell(row.get(k)) for k in keys])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, float):
        return format(v, FLOAT_FORMAT)
    if isinstance(v, (list, tuple, dict)):
        return canonical_json(v).strip()
    return "" if v is None else v


def schema() -> dict:
    return json.loads(resources.files("sweepout").joinpath("schema/report.json").read_text())
