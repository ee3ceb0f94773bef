"""Reading and writing event streams, and cutting them into windows.

Column contract (CSV header or JSONL keys):

    event_id, t, score, label, label_arrival_t, f_0, f_1, ..., f_{k-1}

``score``, ``label`` and ``label_arrival_t`` may be absent or empty; label
and arrival time must be present together.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import re
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .events import EventTable, MonitoringWindow, PredictionEvent

logger = logging.getLogger(__name__)

REQUIRED = ("event_id", "t")
OPTIONAL = ("score", "label", "label_arrival_t")
_FEATURE = re.compile(r"^f_(\d+)$")


class IngestError(ValueError):
    def __init__(self, path, errors: Sequence[tuple[int, str]]):
        self.errors = list(errors)
        shown = "\n  ".join(f"line {ln}: {msg}" for ln, msg in self.errors[:20])
        more = f"\n  ... {len(self.errors) - 20} more" if len(self.errors) > 20 else ""
        super().__init__(f"{path}: {len(self.errors)} malformed row(s)\n  {shown}{more}")


def _feature_columns(columns: Iterable[str]) -> list[str]:
    found = sorted((int(m.group(1)), c) for c in columns if (m := _FEATURE.match(c)))
    idx = [i for i, _ in found]
    if idx != list(range(len(idx))):
        raise ValueError(f"feature columns must be f_0..f_{{k-1}} without gaps, got {idx}")
    return [c for _, c in found]


def _blank(value) -> bool:
    return value is None or (isinstance(value, str) and value.strip() == "")


def _row_to_event(row: dict, feature_cols: Sequence[str]) -> PredictionEvent:
    for col in REQUIRED:
        if _blank(row.get(col)):
            raise ValueError(f"missing {col}")
    try:
        features = tuple(float(row[c]) for c in feature_cols)
    except (TypeError, ValueError, KeyError):
        raise ValueError("non-numeric or missing feature value") from None
    if not all(math.isfinite(v) for v in features):
        raise ValueError("non-finite feature value")
    score = None if _blank(row.get("score")) else float(row["score"])
    label = None if _blank(row.get("label")) else int(float(row["label"]))
    arrival = None if _blank(row.get("label_arrival_t")) else float(row["label_arrival_t"])
    return PredictionEvent(str(row["event_id"]), float(row["t"]), features, score, label, arrival)


def _records(path: Path, fmt: str):
    if fmt == "csv":
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            columns = reader.fieldnames or []
            yield columns
            for row in reader:
                yield reader.line_num, row
    elif fmt == "jsonl":
        with path.open(encoding="utf-8") as fh:
            lines = [(n, ln) for n, ln in enumerate(fh, start=1) if ln.strip()]
        parsed = []
        for n, ln in lines:
            try:
                parsed.append((n, json.loads(ln)))
            except json.JSONDecodeError as exc:
                parsed.append((n, exc))
        columns = sorted({k for _, obj in parsed if isinstance(obj, dict) for k in obj})
        yield columns
        yield from parsed
    else:
        raise ValueError(f"unknown format {fmt!r}, expected csv or jsonl")


def ingest(path: str | Path, fmt: str | None = None, *, allow_unsorted: bool = False) -> list[PredictionEvent]:
    """Load and validate an event file.

    Every malformed row is collected and reported with its line number.
    Input must already be ordered by ``t`` unless ``allow_unsorted`` is set,
    in which case it is sorted (stably).
    """
    path = Path(path)
    fmt = fmt or path.suffix.lstrip(".").lower()
    records = _records(path, fmt)
    columns = next(records)
    missing = [c for c in REQUIRED if c not in columns]
    if missing:
        raise ValueError(f"{path}: missing required column(s) {missing}")
    feature_cols = _feature_columns(columns)

    events: list[PredictionEvent] = []
    errors: list[tuple[int, str]] = []
    for line, row in records:
        if isinstance(row, Exception):
            errors.append((line, f"invalid JSON: {row}"))
            continue
        if not isinstance(row, dict):
            errors.append((line, "expected an object"))
            continue
        try:
            events.append(_row_to_event(row, feature_cols))
        except ValueError as exc:
            errors.append((line, str(exc)))
    if errors:
        raise IngestError(path, errors)

    times = [ev.t for ev in events]
    if any(b < a for a, b in zip(times, times[1:])):
        if not allow_unsorted:
            raise ValueError(f"{path}: events are not ordered by t (pass allow_unsorted to sort)")
        events.sort(key=lambda ev: ev.t)
    return events


def _fmt(value) -> str:
    if value is None:
        return ""
    return repr(value) if isinstance(value, float) else str(value)


def export_events(events: Sequence[PredictionEvent], path: str | Path, fmt: str | None = None) -> None:
    path = Path(path)
    fmt = fmt or path.suffix.lstrip(".").lower()
    k = len(events[0].features) if events else 0
    header = [*REQUIRED, *OPTIONAL, *(f"f_{i}" for i in range(k))]
    if fmt == "csv":
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for ev in events:
                writer.writerow(
                    [ev.event_id, _fmt(ev.t), _fmt(ev.score), _fmt(ev.label), _fmt(ev.label_arrival_t)]
                    + [repr(v) for v in ev.features]
                )
    elif fmt == "jsonl":
        with path.open("w", encoding="utf-8") as fh:
            for ev in events:
                obj = {"event_id": ev.event_id, "t": ev.t}
                if ev.score is not None:
                    obj["score"] = ev.score
                if ev.label is not None:
                    obj["label"] = ev.label
                    obj["label_arrival_t"] = ev.label_arrival_t
                obj.update({f"f_{i}": v for i, v in enumerate(ev.features)})
                fh.write(json.dumps(obj) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}, expected csv or jsonl")


def window_partition(
    stream: Sequence[PredictionEvent] | EventTable,
    window_days: float,
    *,
    span_end: float | None = None,
    origin: float = 0.0,
) -> list[MonitoringWindow]:
    """Split a time-ordered stream into consecutive ``[k*w, (k+1)*w)`` windows.

    The observed span ends at ``span_end``, by default the day after the
    last event (``floor(t_max) + 1``). Only complete windows are kept; a
    trailing partial window is dropped with a warning. Window 0 is the
    reference window.
    """
    table = EventTable.from_events(stream)
    if not len(table):
        raise ValueError("empty stream")
    if not window_days > 0:
        raise ValueError("window_days must be > 0")
    if np.any(np.diff(table.t) < 0):
        raise ValueError("stream is not ordered by t")
    if span_end is None:
        span_end = math.floor(table.t[-1]) + 1.0
    n = int(math.floor((span_end - origin) / window_days + 1e-9))
    if n < 1:
        raise ValueError(
            f"window of {window_days} days exceeds the observed span of {span_end - origin} days"
        )
    edges = origin + window_days * np.arange(n + 1)
    cuts = np.searchsorted(table.t, edges, side="left")
    tail = span_end - origin - n * window_days
    if tail > 1e-9:
        logger.warning(
            "dropping %.3g-day partial tail window (%d events)", tail, len(table) - cuts[-1]
        )
    return [
        MonitoringWindow(k, float(edges[k]), float(edges[k + 1]), table.take(np.arange(cuts[k], cuts[k + 1])))
        for k in range(n)
    ]
