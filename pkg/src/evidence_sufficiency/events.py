"""Scored decisions, columnar event tables, and monitoring windows.

Events are stored column-wise (:class:`EventTable`) so that windows with
hundreds of thousands of rows stay cheap to slice and perturb. Indexing or
iterating a table yields :class:`PredictionEvent` rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Sequence, overload

import numpy as np

MISSING_LABEL = -1


@dataclass(frozen=True)
class PredictionEvent:
    """One scored decision.

    ``t`` and ``label_arrival_t`` are day offsets from the stream origin.
    ``score`` may be ``None`` for unscored input that a scorer fills later.
    """

    event_id: str
    t: float
    features: tuple[float, ...]
    score: float | None = None
    label: int | None = None
    label_arrival_t: float | None = None

    def __post_init__(self) -> None:
        if not math.isfinite(self.t):
            raise ValueError(f"event {self.event_id}: t must be finite")
        if self.score is not None and not 0.0 <= self.score <= 1.0:
            raise ValueError(f"event {self.event_id}: score {self.score} outside [0, 1]")
        if (self.label is None) != (self.label_arrival_t is None):
            raise ValueError(
                f"event {self.event_id}: label and label_arrival_t must be given together"
            )
        if self.label is not None:
            if self.label not in (0, 1):
                raise ValueError(f"event {self.event_id}: label must be 0 or 1")
            if self.label_arrival_t < self.t:
                raise ValueError(f"event {self.event_id}: label arrives before the event")

    def labeled_by(self, as_of_t: float) -> bool:
        return self.label_arrival_t is not None and self.label_arrival_t <= as_of_t


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


class EventTable(Sequence[PredictionEvent]):
    """Immutable column store for a sequence of events.

    Missing scores and arrival times are NaN, missing labels are -1.
    """

    __slots__ = ("event_ids", "t", "features", "score", "label", "label_arrival_t")

    def __init__(
        self,
        event_ids: Sequence[str],
        t,
        features,
        score=None,
        label=None,
        label_arrival_t=None,
    ):
        n = len(event_ids)
        t = np.asarray(t, dtype=float).reshape(n)
        features = np.asarray(features, dtype=float)
        if features.ndim != 2:
            features = features.reshape(n, -1) if n else np.empty((0, 0))
        score = np.full(n, np.nan) if score is None else np.asarray(score, dtype=float).reshape(n)
        label = (
            np.full(n, MISSING_LABEL, dtype=np.int8)
            if label is None
            else np.asarray(label, dtype=np.int8).reshape(n)
        )
        arrival = (
            np.full(n, np.nan) if label_arrival_t is None else np.asarray(label_arrival_t, dtype=float).reshape(n)
        )
        ids = np.asarray(event_ids, dtype=object).reshape(n)
        self._validate(ids, t, features, score, label, arrival)
        for name, arr in zip(self.__slots__, (ids, t, features, score, label, arrival)):
            object.__setattr__(self, name, _frozen(arr.copy() if arr.flags.writeable else arr))

    def __setattr__(self, name, value):
        raise AttributeError("EventTable is immutable")

    @staticmethod
    def _validate(ids, t, features, score, label, arrival) -> None:
        n = ids.size
        if features.shape[0] != n:
            raise ValueError(f"{features.shape[0]} feature rows for {n} events")

        def first(mask: np.ndarray) -> str:
            return str(ids[np.flatnonzero(mask)[0]])

        if np.any(~np.isfinite(t)):
            raise ValueError(f"event {first(~np.isfinite(t))}: t must be finite")
        present = ~np.isnan(score)
        bad = present & ((score < 0.0) | (score > 1.0))
        if np.any(bad):
            raise ValueError(f"event {first(bad)}: score outside [0, 1]")
        has_label = label != MISSING_LABEL
        has_arrival = ~np.isnan(arrival)
        if np.any(has_label != has_arrival):
            raise ValueError(
                f"event {first(has_label != has_arrival)}: label and label_arrival_t must be given together"
            )
        if np.any(has_label & (label != 0) & (label != 1)):
            raise ValueError(f"event {first(has_label & (label != 0) & (label != 1))}: label must be 0 or 1")
        early = has_arrival & (arrival < t)
        if np.any(early):
            raise ValueError(f"event {first(early)}: label arrives before the event")

    @classmethod
    def from_events(cls, events: Iterable[PredictionEvent]) -> "EventTable":
        if isinstance(events, EventTable):
            return events
        events = list(events)
        if not events:
            return cls.empty()
        dims = {len(ev.features) for ev in events}
        if len(dims) > 1:
            raise ValueError(f"events have differing feature dimensions {sorted(dims)}")
        return cls(
            [ev.event_id for ev in events],
            [ev.t for ev in events],
            np.array([ev.features for ev in events], dtype=float).reshape(len(events), dims.pop()),
            [np.nan if ev.score is None else ev.score for ev in events],
            [MISSING_LABEL if ev.label is None else ev.label for ev in events],
            [np.nan if ev.label_arrival_t is None else ev.label_arrival_t for ev in events],
        )

    @classmethod
    def empty(cls, n_features: int = 0) -> "EventTable":
        return cls([], np.empty(0), np.empty((0, n_features)))

    def __len__(self) -> int:
        return int(self.event_ids.size)

    @overload
    def __getitem__(self, i: int) -> PredictionEvent: ...
    @overload
    def __getitem__(self, i: slice) -> "EventTable": ...

    def __getitem__(self, i):
        if isinstance(i, slice):
            return self.take(np.arange(len(self))[i])
        i = range(len(self))[i]
        score = self.score[i]
        has_label = self.label[i] != MISSING_LABEL
        return PredictionEvent(
            str(self.event_ids[i]),
            float(self.t[i]),
            tuple(self.features[i].tolist()),
            None if np.isnan(score) else float(score),
            int(self.label[i]) if has_label else None,
            float(self.label_arrival_t[i]) if has_label else None,
        )

    def __iter__(self) -> Iterator[PredictionEvent]:
        return (self[i] for i in range(len(self)))

    def __repr__(self) -> str:
        return f"EventTable(n={len(self)}, n_features={self.n_features})"

    @property
    def n_features(self) -> int:
        return int(self.features.shape[1]) if self.features.ndim == 2 else 0

    @property
    def scored(self) -> bool:
        return not np.any(np.isnan(self.score))

    @property
    def fully_labeled(self) -> bool:
        return not np.any(self.label == MISSING_LABEL)

    def take(self, idx) -> "EventTable":
        idx = np.asarray(idx, dtype=int)
        return EventTable(
            self.event_ids[idx], self.t[idx], self.features[idx],
            self.score[idx], self.label[idx], self.label_arrival_t[idx],
        )

    def replace(self, *, features=None, score=None, label=None) -> "EventTable":
        return EventTable(
            self.event_ids,
            self.t,
            self.features if features is None else features,
            self.score if score is None else score,
            self.label if label is None else label,
            self.label_arrival_t,
        )

    @staticmethod
    def concat(tables: Sequence["EventTable"]) -> "EventTable":
        tables = [tb for tb in tables if len(tb)]
        if not tables:
            return EventTable.empty()
        return EventTable(
            np.concatenate([tb.event_ids for tb in tables]),
            np.concatenate([tb.t for tb in tables]),
            np.vstack([tb.features for tb in tables]),
            np.concatenate([tb.score for tb in tables]),
            np.concatenate([tb.label for tb in tables]),
            np.concatenate([tb.label_arrival_t for tb in tables]),
        )


@dataclass(frozen=True, eq=False)
class MonitoringWindow:
    """A contiguous ``[start_t, end_t)`` slice of a stream.

    ``events`` may be given as any sequence of :class:`PredictionEvent`; it
    is stored as an :class:`EventTable`.
    """

    index: int
    start_t: float
    end_t: float
    events: EventTable = EventTable.empty()

    def __post_init__(self) -> None:
        table = EventTable.from_events(self.events)
        object.__setattr__(self, "events", table)
        if self.index < 0:
            raise ValueError("window index must be >= 0")
        if not self.start_t < self.end_t:
            raise ValueError(f"window {self.index}: start_t must be < end_t")
        outside = (table.t < self.start_t) | (table.t >= self.end_t)
        if np.any(outside):
            i = np.flatnonzero(outside)[0]
            raise ValueError(
                f"window {self.index}: event {table.event_ids[i]} at t={table.t[i]} "
                f"outside [{self.start_t}, {self.end_t})"
            )
        if np.any(np.diff(table.t) < 0):
            raise ValueError(f"window {self.index}: events not ordered by t")

    def __len__(self) -> int:
        return len(self.events)

    @property
    def duration(self) -> float:
        return self.end_t - self.start_t

    @property
    def features(self) -> np.ndarray:
        return self.events.features

    @property
    def times(self) -> np.ndarray:
        return self.events.t

    @property
    def arrivals(self) -> np.ndarray:
        return self.events.label_arrival_t

    @property
    def scores(self) -> np.ndarray:
        if not self.events.scored:
            raise ValueError(f"window {self.index} contains unscored events")
        return self.events.score

    @cached_property
    def labels(self) -> np.ndarray:
        if not self.events.fully_labeled:
            raise ValueError(f"window {self.index} contains unlabeled events")
        return _frozen(self.events.label.astype(int))

    @property
    def fully_labeled(self) -> bool:
        return self.events.fully_labeled

    def with_events(self, events: Iterable[PredictionEvent] | EventTable) -> "MonitoringWindow":
        return MonitoringWindow(self.index, self.start_t, self.end_t, EventTable.from_events(events))

    def with_features(self, matrix: np.ndarray) -> "MonitoringWindow":
        matrix = np.asarray(matrix, dtype=float)
        if matrix.shape != self.features.shape:
            raise ValueError(f"feature matrix shape {matrix.shape} != {self.features.shape}")
        return self.with_events(self.events.replace(features=matrix))

    def with_scores(self, scores: Sequence[float]) -> "MonitoringWindow":
        scores = np.asarray(scores, dtype=float)
        if scores.shape != (len(self),):
            raise ValueError("one score per event required")
        return self.with_events(self.events.replace(score=scores))

    def with_labels(self, labels: Sequence[int]) -> "MonitoringWindow":
        labels = np.asarray(labels)
        if labels.shape != (len(self),):
            raise ValueError("one label per event required")
        return self.with_events(self.events.replace(label=labels))
