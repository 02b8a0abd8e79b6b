"""Append-only run records, one JSON line per run, grouped by config digest."""

import json
import os
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

from .config import _jsonable, config_digest

RESULTS_ENV = "REGTRACE_RESULTS"
RECORDS_FILE = "records.jsonl"


@dataclass(frozen=True)
class RunRecord:
    command: str
    digest: str
    timestamp: str
    config: dict
    report: dict
    passed: bool

    @classmethod
    def create(cls, command, resolved_config, report, passed):
        return cls(
            command=command,
            digest=config_digest(resolved_config),
            timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
            config=_jsonable(resolved_config),
            report=_jsonable(report),
            passed=bool(passed),
        )

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True)


def results_dir(out=None):
    """``out``, else ``$REGTRACE_RESULTS``, else ``./results``."""
    return Path(out or os.environ.get(RESULTS_ENV) or "results")


def append_record(record, out=None):
    folder = results_dir(out) / record.digest
    folder.mkdir(parents=True, exist_ok=True)
    path = folder / RECORDS_FILE
    with path.open("a") as fh:
        fh.write(record.to_json() + "\n")
    return path


def read_records(path):
    """Records from a ``records.jsonl`` file or a digest directory."""
    path = Path(path)
    if path.is_dir():
        path = path / RECORDS_FILE
    with path.open() as fh:
        return [RunRecord(**json.loads(line)) for line in fh if line.strip()]
