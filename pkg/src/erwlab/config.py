"""Experiment configuration, result bundles and their serialized forms."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

from . import __version__
from .verify import DEFAULT_SEED

FORMATS = ("csv", "json")


class ConfigError(ValueError):
    """Invalid configuration file or flag combination."""


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce a run.

    Defaults: n=1000, paths=100, seed=20170329, tests=[], format="csv",
    out=None (stdout), threads=0 (all available), scale=1.0 (protocol size
    of the verification catalogue). p and q have no default.
    """

    p: float | None = None
    q: float | None = None
    n: int = 1000
    paths: int = 100
    seed: int = DEFAULT_SEED
    tests: list[str] = field(default_factory=list)
    format: str = "csv"
    out: str | None = None
    threads: int = 0
    scale: float = 1.0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for name in ("p", "q"):
            v = getattr(self, name)
            if v is not None and not (isinstance(v, (int, float)) and 0.0 <= v <= 1.0):
                raise ConfigError(f"{name} must be a probability in [0, 1], got {v!r}")
        if not isinstance(self.n, int) or self.n < 1:
            raise ConfigError(f"n must be a positive integer, got {self.n!r}")
        if not isinstance(self.paths, int) or self.paths < 1:
            raise ConfigError(f"paths must be a positive integer, got {self.paths!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}, got {self.format!r}")
        if not isinstance(self.threads, int) or self.threads < 0:
            raise ConfigError(f"threads must be a nonnegative integer, got {self.threads!r}")
        if not 0.0 < self.scale <= 1.0:
            raise ConfigError(f"scale must lie in (0, 1], got {self.scale!r}")
        if not isinstance(self.tests, list) or not all(isinstance(t, str) for t in self.tests):
            raise ConfigError("tests must be a list of test names")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def loads(cls, text: str) -> "ExperimentConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        return cls.loads(Path(path).read_text())

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())


def _jsonable(x: Any) -> Any:
    if isinstance(x, float) and not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def render_json(config: ExperimentConfig, results: list[dict], duration_ms: float) -> str:
    doc = {
        "config": config.to_dict(),
        "results": results,
        "version": __version__,
        "duration_ms": duration_ms,
    }
    return json.dumps(_jsonable(doc), indent=2) + "\n"


def render_csv(columns: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in columns})
    return buf.getvalue()


REPORT_COLUMNS = [
    "name", "observed", "expected", "tolerance", "standard_error", "passed", "gate",
    "sample_size", "horizon", "seed", "provenance",
]


@dataclass
class ResultBundle:
    config: ExperimentConfig
    results: list  # TestReport
    version: str = __version__
    duration_ms: float = 0.0

    def to_json(self) -> str:
        return render_json(self.config, [r.to_dict() for r in self.results], self.duration_ms)

    def to_csv(self) -> str:
        return render_csv(REPORT_COLUMNS, [r.to_dict() for r in self.results])
