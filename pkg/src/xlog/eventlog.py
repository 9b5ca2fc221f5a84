"""Case-centric event log ingestion, cleaning and summary statistics.

A log is a set of cases (one per patient / process instance); each case is an
ordered sequence of timestamped activity events plus static attributes. Input
is a flat CSV with one event per row and static attributes repeated per row.
"""

from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone

import numpy as np

SECONDS_PER_YEAR = 365.25 * 24 * 3600

#: dynamic (per-event) fields, in canonical encoding order
DYNAMIC_CATEGORICAL = ("activity", "department", "activity_code", "producer_code", "section")
DYNAMIC_NUMERIC = ("num_executions",)
#: static (per-case) fields
STATIC_CATEGORICAL = ("treatment_code", "combination_id")
STATIC_NUMERIC = ("age", "years_in_treatment")


class SchemaError(Exception):
    pass


class EmptyLogError(Exception):
    pass


class CannotImputeError(Exception):
    pass


@dataclass(frozen=True)
class Event:
    activity: str
    timestamp: float  # UTC epoch seconds
    department: str = ""
    num_executions: int = 1
    activity_code: str = ""
    producer_code: str = ""
    section: str = ""


@dataclass
class Case:
    case_id: str
    events: list[Event]
    age: int = 0
    diagnosis_code: str | None = None
    treatment_code: str = ""
    combination_id: str = ""
    years_in_treatment: float = 0.0

    def activity_multiset(self) -> Counter:
        return Counter(e.activity for e in self.events)


@dataclass
class EventLog:
    cases: list[Case]
    #: fields whose values were collapsed from spread/repeated columns at parse time
    spread_features: list[str] = field(default_factory=list)
    #: parse-time issue counts (unparseable rows/timestamps), never silently dropped
    issues: dict[str, int] = field(default_factory=dict)

    @property
    def class_counts(self) -> dict[str, int]:
        counts = Counter(c.diagnosis_code for c in self.cases if c.diagnosis_code is not None)
        return dict(sorted(counts.items()))

    def n_events(self) -> int:
        return sum(len(c.events) for c in self.cases)


@dataclass
class CleaningReport:
    imputed_labels: int = 0
    dropped_cases: int = 0
    collapsed_features: list[str] = field(default_factory=list)
    kept_classes: set[str] = field(default_factory=set)
    dropped_classes: dict[str, int] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "imputed_labels": self.imputed_labels,
                "dropped_cases": self.dropped_cases,
                "collapsed_features": list(self.collapsed_features),
                "kept_classes": sorted(self.kept_classes),
                "dropped_classes": dict(sorted(self.dropped_classes.items())),
            },
            indent=2,
        )


def _parse_timestamp(raw: str) -> float:
    """ISO-8601 or ``YYYY-MM-DD HH:MM:SS`` to UTC epoch seconds."""
    raw = raw.strip()
    if raw.endswith("Z"):
        raw = raw[:-1] + "+00:00"
    dt = datetime.fromisoformat(raw)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def _columns(spec) -> list[str]:
    return [spec] if isinstance(spec, str) else list(spec)


def parse_log(path, schema: dict) -> EventLog:
    """Parse a one-event-per-row CSV into an EventLog.

    ``schema`` maps canonical field names (``case_id``, ``activity``,
    ``timestamp`` mandatory; ``department``, ``num_executions``,
    ``activity_code``, ``producer_code``, ``section``, ``age``,
    ``diagnosis_code``, ``treatment_code``, ``combination_id`` optional) to CSV
    column names. A static field may map to a list of columns (spread
    attributes); the last non-empty value wins and the field is recorded as
    collapsed. Events are sorted by timestamp within each case. Rows that
    cannot be parsed are counted in ``log.issues`` rather than silently lost.
    """
    for key in ("case_id", "activity", "timestamp"):
        if key not in schema:
            raise SchemaError(f"schema is missing mandatory field {key!r}")
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    header = reader.fieldnames or []
    for key, spec in schema.items():
        for col in _columns(spec):
            if col not in header:
                raise SchemaError(f"column {col!r} (field {key!r}) not in CSV header")
    rows = list(reader)

    statics = ("age", "diagnosis_code", "treatment_code", "combination_id")
    event_fields = ("department", "activity_code", "producer_code", "section")
    cases: dict[str, dict] = {}
    bad_rows = 0
    bad_timestamps = 0
    spread: set[str] = set()

    for row in rows:
        case_id = (row.get(_columns(schema["case_id"])[0]) or "").strip()
        activity = (row.get(_columns(schema["activity"])[0]) or "").strip()
        if not case_id or not activity:
            bad_rows += 1
            continue
        try:
            ts = _parse_timestamp(row[_columns(schema["timestamp"])[0]])
        except (ValueError, KeyError, TypeError):
            bad_timestamps += 1
            continue
        slot = cases.setdefault(case_id, {"events": [], "static": {}})
        kwargs = {}
        for f in event_fields:
            if f in schema:
                kwargs[f] = (row.get(_columns(schema[f])[0]) or "").strip()
        n_exec = 1
        if "num_executions" in schema:
            try:
                n_exec = max(1, int(float(row[_columns(schema["num_executions"])[0]])))
            except (ValueError, TypeError, KeyError):
                n_exec = 1
        slot["events"].append(Event(activity=activity, timestamp=ts,
                                    num_executions=n_exec, **kwargs))
        for f in statics:
            if f not in schema:
                continue
            for col in _columns(schema[f]):
                val = (row.get(col) or "").strip()
                if val:
                    prev = slot["static"].get(f)
                    if prev is not None and prev != val:
                        spread.add(f)
                    slot["static"][f] = val
            if len(_columns(schema[f])) > 1:
                spread.add(f)

    if not cases:
        raise EmptyLogError(f"{path}: no parseable event rows")

    out = []
    for case_id, slot in cases.items():
        st = slot["static"]
        age = 0
        if "age" in st:
            try:
                age = max(0, int(float(st["age"])))
            except ValueError:
                age = 0
        out.append(
            Case(
                case_id=case_id,
                events=sorted(slot["events"], key=lambda e: e.timestamp),
                age=age,
                diagnosis_code=st.get("diagnosis_code"),
                treatment_code=st.get("treatment_code", ""),
                combination_id=st.get("combination_id", ""),
            )
        )
    issues = {}
    if bad_rows:
        issues["unparseable_rows"] = bad_rows
    if bad_timestamps:
        issues["unparseable_timestamps"] = bad_timestamps
    return EventLog(cases=out, spread_features=sorted(spread), issues=issues)


def _jaccard(a: Counter, b: Counter) -> float:
    """Multiset Jaccard: sum of min counts over sum of max counts."""
    keys = set(a) | set(b)
    inter = sum(min(a[k], b[k]) for k in keys)
    union = sum(max(a[k], b[k]) for k in keys)
    return inter / union if union else 0.0


def _derive_years(case: Case) -> Case:
    span = case.events[-1].timestamp - case.events[0].timestamp
    return replace(case, years_in_treatment=span / SECONDS_PER_YEAR)


def clean_log(log: EventLog, min_class_count: int) -> tuple[EventLog, CleaningReport]:
    """Impute missing labels, derive treatment years, filter rare classes.

    Unlabeled cases inherit the label of the most similar labeled case, where
    similarity is the multiset Jaccard overlap of activities plus the
    treatment code; ties prefer the larger class, then the lexicographically
    smaller label. Unlabeled cases with zero similarity to every labeled case
    are dropped. Classes with fewer than ``min_class_count`` cases are removed
    and recorded in the report.
    """
    if min_class_count < 1:
        raise ValueError("min_class_count must be >= 1")
    labeled = [c for c in log.cases if c.diagnosis_code is not None]
    if not labeled:
        raise CannotImputeError("every case is unlabeled; nothing to impute from")
    label_counts = Counter(c.diagnosis_code for c in labeled)

    def signature(case: Case) -> Counter:
        sig = case.activity_multiset()
        if case.treatment_code:
            sig[("treatment", case.treatment_code)] += 1
        return sig

    labeled_sigs = [(c, signature(c)) for c in labeled]
    report = CleaningReport(collapsed_features=list(log.spread_features))
    cleaned: list[Case] = []
    for case in log.cases:
        if case.diagnosis_code is not None:
            cleaned.append(_derive_years(case))
            continue
        sig = signature(case)
        best = None  # (similarity, class size, label)
        for other, other_sig in labeled_sigs:
            sim = _jaccard(sig, other_sig)
            if sim <= 0.0:
                continue
            key = (sim, label_counts[other.diagnosis_code], _neg_lex(other.diagnosis_code))
            if best is None or key > best[0]:
                best = (key, other.diagnosis_code)
        if best is None:
            report.dropped_cases += 1
            continue
        report.imputed_labels += 1
        cleaned.append(_derive_years(replace(case, diagnosis_code=best[1])))

    counts = Counter(c.diagnosis_code for c in cleaned)
    report.kept_classes = {lab for lab, n in counts.items() if n >= min_class_count}
    report.dropped_classes = {
        lab: n for lab, n in sorted(counts.items()) if n < min_class_count
    }
    kept = [c for c in cleaned if c.diagnosis_code in report.kept_classes]
    return EventLog(cases=kept, spread_features=[], issues=dict(log.issues)), report


class _neg_lex(str):
    """Orders lexicographically smaller strings as larger, for max() tie-breaks."""

    def __lt__(self, other):
        return str.__gt__(self, other)

    def __gt__(self, other):
        return str.__lt__(self, other)


@dataclass
class CorrelationResult:
    features: list[str]
    matrix: np.ndarray
    zero_variance: list[str]


def _feature_rows(log: EventLog, features: list[str]) -> np.ndarray:
    """One row per event; categoricals encoded by frequency rank (1 = most common)."""
    cat_fields = set(DYNAMIC_CATEGORICAL) | set(STATIC_CATEGORICAL) | {"diagnosis_code"}
    columns = []
    for feat in features:
        vals = []
        for case in log.cases:
            for ev in case.events:
                if feat in ("age", "years_in_treatment", "diagnosis_code",
                            "treatment_code", "combination_id"):
                    vals.append(getattr(case, feat))
                else:
                    vals.append(getattr(ev, feat))
        if feat in cat_fields:
            freq = Counter(v if v is not None else "" for v in vals)
            order = sorted(freq.items(), key=lambda kv: (-kv[1], str(kv[0])))
            rank = {tok: i + 1 for i, (tok, _) in enumerate(order)}
            columns.append([float(rank[v if v is not None else ""]) for v in vals])
        else:
            columns.append([float(v) for v in vals])
    return np.asarray(columns, dtype=float).T


def correlation_matrix(log: EventLog, features: list[str]) -> CorrelationResult:
    """Pearson correlation over event rows; unit diagonal, symmetric.

    Zero-variance features get zero off-diagonal entries and are flagged.
    """
    if len(log.cases) < 2:
        raise ValueError("need at least 2 cases")
    X = _feature_rows(log, features)
    n, f = X.shape
    X = X - X.mean(axis=0)
    sd = X.std(axis=0)
    flat = [features[j] for j in range(f) if sd[j] == 0.0]
    safe = np.where(sd == 0.0, 1.0, sd)
    Z = X / safe
    M = (Z.T @ Z) / n
    for j in range(f):
        if sd[j] == 0.0:
            M[j, :] = 0.0
            M[:, j] = 0.0
    M = (M + M.T) / 2.0
    np.fill_diagonal(M, 1.0)
    np.clip(M, -1.0, 1.0, out=M)
    return CorrelationResult(features=list(features), matrix=M, zero_variance=flat)
