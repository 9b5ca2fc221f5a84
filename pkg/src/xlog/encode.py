"""Machine-learning representations of a cleaned event log.

Two encodings: a padded sequence tensor (cases x window x features) for the
recurrent networks and a positionally flattened matrix (cases x
features*window + statics) for classical learners. Index 0 is reserved for
padding/unknown tokens in every categorical vocabulary.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import container
from .eventlog import (
    DYNAMIC_CATEGORICAL,
    DYNAMIC_NUMERIC,
    STATIC_CATEGORICAL,
    STATIC_NUMERIC,
    EventLog,
)

DYNAMIC_FEATURES = DYNAMIC_CATEGORICAL + DYNAMIC_NUMERIC
STATIC_FEATURES = STATIC_CATEGORICAL + STATIC_NUMERIC


@dataclass
class Vocabulary:
    """Per-feature token -> index maps; index 0 is never assigned to a token."""

    maps: dict[str, dict[str, int]] = field(default_factory=dict)
    unknown_tokens: int = 0  # tokens seen at encode time that were absent here

    def index(self, feature: str, token: str) -> int:
        return self.maps.get(feature, {}).get(token, 0)

    def decode(self, feature: str, index: int) -> str | None:
        for tok, i in self.maps.get(feature, {}).items():
            if i == index:
                return tok
        return None

    def size(self, feature: str) -> int:
        return len(self.maps.get(feature, {}))

    def to_json(self, meta: dict | None = None) -> str:
        payload = {"maps": self.maps}
        if meta:
            payload["meta"] = meta
        return json.dumps(payload, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Vocabulary":
        d = json.loads(text)
        return cls(maps=d["maps"] if "maps" in d else d)


def build_vocab(log: EventLog, categorical_features: list[str]) -> Vocabulary:
    """Index tokens of each categorical feature by descending frequency, ties
    broken lexicographically; indices start at 1."""
    if not log.cases:
        raise ValueError("empty log")
    maps: dict[str, dict[str, int]] = {}
    for feat in categorical_features:
        freq: Counter = Counter()
        if feat in STATIC_CATEGORICAL:
            for case in log.cases:
                tok = getattr(case, feat)
                if tok:
                    freq[tok] += 1
        else:
            for case in log.cases:
                for ev in case.events:
                    tok = getattr(ev, feat)
                    if tok:
                        freq[tok] += 1
        order = sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))
        maps[feat] = {tok: i + 1 for i, (tok, _) in enumerate(order)}
    return Vocabulary(maps=maps)


@dataclass
class Split:
    train_indices: np.ndarray
    test_indices: np.ndarray


def stratified_split(Y, test_fraction: float, seed: int) -> Split:
    """Per-class shuffled split; deterministic for a fixed seed."""
    if not (0.0 < test_fraction < 1.0):
        raise ValueError("test_fraction must be in (0, 1)")
    Y = np.asarray(Y)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for label in np.unique(Y):
        idx = np.flatnonzero(Y == label)
        if len(idx) < 2:
            raise ValueError(f"class {label!r} has a single member; cannot split")
        idx = idx[rng.permutation(len(idx))]
        n_test = int(np.floor(len(idx) * test_fraction + 0.5))
        n_test = min(max(n_test, 0), len(idx) - 1)
        test.extend(idx[:n_test])
        train.extend(idx[n_test:])
    return Split(
        train_indices=np.sort(np.asarray(train, dtype=np.int64)),
        test_indices=np.sort(np.asarray(test, dtype=np.int64)),
    )


@dataclass
class SequenceDataset:
    X: np.ndarray            # (M, T, F) float64
    mask: np.ndarray         # (M, T) bool, true entries form a prefix
    Y: np.ndarray            # (M,) int64
    T: int
    label_names: list[str]
    feature_names: list[str]
    cat_sizes: list[int]     # vocabulary size per feature, 0 for numeric
    case_ids: list[str] = field(default_factory=list)

    @property
    def F(self) -> int:
        return self.X.shape[2]

    def take(self, indices) -> "SequenceDataset":
        idx = np.asarray(indices)
        return SequenceDataset(
            X=self.X[idx], mask=self.mask[idx], Y=self.Y[idx], T=self.T,
            label_names=self.label_names, feature_names=self.feature_names,
            cat_sizes=self.cat_sizes,
            case_ids=[self.case_ids[i] for i in idx] if self.case_ids else [],
        )

    def save(self, path, meta: dict | None = None) -> None:
        container.save_arrays(path, {"X": self.X, "mask": self.mask, "Y": self.Y})
        _write_manifest(path, self, meta)

    @classmethod
    def load(cls, path) -> "SequenceDataset":
        arrays = container.load_arrays(path)
        meta = _read_manifest(path)
        return cls(X=arrays["X"], mask=arrays["mask"], Y=arrays["Y"],
                   T=arrays["X"].shape[1], label_names=meta["label_names"],
                   feature_names=meta["feature_names"], cat_sizes=meta["cat_sizes"],
                   case_ids=meta.get("case_ids", []))

    def to_json(self) -> str:
        """Whole-dataset JSON, for small test fixtures only."""
        return json.dumps({
            "X": self.X.tolist(), "mask": self.mask.tolist(),
            "Y": self.Y.tolist(), "T": self.T, "label_names": self.label_names,
            "feature_names": self.feature_names, "cat_sizes": self.cat_sizes,
            "case_ids": self.case_ids})

    @classmethod
    def from_json(cls, text: str) -> "SequenceDataset":
        d = json.loads(text)
        return cls(X=np.asarray(d["X"], dtype=float),
                   mask=np.asarray(d["mask"], dtype=bool),
                   Y=np.asarray(d["Y"], dtype=np.int64), T=d["T"],
                   label_names=d["label_names"], feature_names=d["feature_names"],
                   cat_sizes=d["cat_sizes"], case_ids=d.get("case_ids", []))


@dataclass
class FlatDataset:
    X: np.ndarray            # (M, F*L + statics) float64
    Y: np.ndarray
    feature_names: list[str]
    label_names: list[str]
    categorical: list[bool]  # per column
    case_ids: list[str] = field(default_factory=list)

    def take(self, indices) -> "FlatDataset":
        idx = np.asarray(indices)
        return FlatDataset(
            X=self.X[idx], Y=self.Y[idx], feature_names=self.feature_names,
            label_names=self.label_names, categorical=self.categorical,
            case_ids=[self.case_ids[i] for i in idx] if self.case_ids else [],
        )

    def save(self, path, meta: dict | None = None) -> None:
        container.save_arrays(path, {"X": self.X, "Y": self.Y})
        _write_manifest(path, self, meta)

    @classmethod
    def load(cls, path) -> "FlatDataset":
        arrays = container.load_arrays(path)
        meta = _read_manifest(path)
        return cls(X=arrays["X"], Y=arrays["Y"], feature_names=meta["feature_names"],
                   label_names=meta["label_names"], categorical=meta["categorical"],
                   case_ids=meta.get("case_ids", []))

    def to_json(self) -> str:
        """Whole-dataset JSON, for small test fixtures only."""
        return json.dumps({
            "X": self.X.tolist(), "Y": self.Y.tolist(),
            "feature_names": self.feature_names, "label_names": self.label_names,
            "categorical": self.categorical, "case_ids": self.case_ids})

    @classmethod
    def from_json(cls, text: str) -> "FlatDataset":
        d = json.loads(text)
        return cls(X=np.asarray(d["X"], dtype=float),
                   Y=np.asarray(d["Y"], dtype=np.int64),
                   feature_names=d["feature_names"], label_names=d["label_names"],
                   categorical=d["categorical"], case_ids=d.get("case_ids", []))


def _write_manifest(path, ds, meta: dict | None = None) -> None:
    payload = {"label_names": ds.label_names, "feature_names": ds.feature_names,
               "case_ids": ds.case_ids}
    if isinstance(ds, SequenceDataset):
        payload["cat_sizes"] = ds.cat_sizes
        payload["T"] = ds.T
    else:
        payload["categorical"] = ds.categorical
    if meta:
        payload["meta"] = meta
    with open(str(path) + ".json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2)


def _read_manifest(path) -> dict:
    with open(str(path) + ".json", encoding="utf-8") as fh:
        return json.load(fh)


def _label_space(log: EventLog) -> tuple[list[str], dict[str, int]]:
    names = sorted({c.diagnosis_code for c in log.cases if c.diagnosis_code is not None})
    return names, {lab: i for i, lab in enumerate(names)}


def _numeric_stats(log: EventLog, split: "Split | None"):
    """Min/max of each numeric feature over train cases (or all cases)."""
    cases = log.cases
    if split is not None:
        cases = [log.cases[i] for i in split.train_indices]
    stats = {}
    execs = [ev.num_executions for c in cases for ev in c.events]
    stats["num_executions"] = (float(min(execs)), float(max(execs)))
    for feat in STATIC_NUMERIC:
        vals = [float(getattr(c, feat)) for c in cases]
        stats[feat] = (float(min(vals)), float(max(vals)))
    return stats


def _scale(value: float, lo: float, hi: float, clamp_zero: bool) -> float:
    if hi == lo:
        return 0.0
    v = (value - lo) / (hi - lo)
    if clamp_zero and v < 0.0:
        v = 0.0
    return v


def encode_sequences(log: EventLog, vocab: Vocabulary, T: int,
                     split: "Split | None" = None) -> SequenceDataset:
    """Pad/truncate each case to ``T`` events (keep-first) and emit the
    (M, T, F) tensor with a prefix mask.

    Categorical features carry vocabulary indices (0 = padding/unknown);
    numeric features are min-max scaled to [0, 1] with statistics from the
    train split when one is given, else from the whole log. Static features
    are replicated across timesteps. Counts are clamped at 0 below the train
    minimum; other numerics may leave [0, 1] on unseen data.
    """
    if T < 1:
        raise ValueError("window length T must be >= 1")
    label_names, label_idx = _label_space(log)
    stats = _numeric_stats(log, split)
    feature_names = list(DYNAMIC_FEATURES) + list(STATIC_FEATURES)
    cat_sizes = [vocab.size(f) if f in DYNAMIC_CATEGORICAL + STATIC_CATEGORICAL else 0
                 for f in feature_names]
    M, F = len(log.cases), len(feature_names)
    X = np.zeros((M, T, F))
    mask = np.zeros((M, T), dtype=bool)
    Y = np.zeros(M, dtype=np.int64)
    unknown = 0
    for m, case in enumerate(log.cases):
        Y[m] = label_idx[case.diagnosis_code]
        n = min(len(case.events), T)
        mask[m, :n] = True
        statics = []
        for feat in STATIC_CATEGORICAL:
            idx = vocab.index(feat, getattr(case, feat))
            if idx == 0 and getattr(case, feat):
                unknown += 1
            statics.append(float(idx))
        lo, hi = stats["age"]
        statics.append(_scale(float(case.age), lo, hi, clamp_zero=False))
        lo, hi = stats["years_in_treatment"]
        statics.append(_scale(case.years_in_treatment, lo, hi, clamp_zero=False))
        for t in range(n):
            ev = case.events[t]
            col = 0
            for feat in DYNAMIC_CATEGORICAL:
                idx = vocab.index(feat, getattr(ev, feat))
                if idx == 0 and getattr(ev, feat):
                    unknown += 1
                X[m, t, col] = float(idx)
                col += 1
            lo, hi = stats["num_executions"]
            X[m, t, col] = _scale(float(ev.num_executions), lo, hi, clamp_zero=True)
            col += 1
            X[m, t, col:] = statics
        # padded timesteps keep statics at zero; masked out downstream
    vocab.unknown_tokens = unknown
    return SequenceDataset(X=X, mask=mask, Y=Y, T=T, label_names=label_names,
                           feature_names=feature_names, cat_sizes=cat_sizes,
                           case_ids=[c.case_id for c in log.cases])


def encode_flat(log: EventLog, vocab: Vocabulary, L: int,
                split: "Split | None" = None,
                feature_labels: dict[str, str] | None = None) -> FlatDataset:
    """Concatenate the first ``L`` events positionally, then append statics.

    The dynamic block is position-major (all features of event 0, then event
    1, ...), padded with index 0 beyond the case length. Column names follow
    ``<feature>_<sequence_number>``; ``feature_labels`` overrides display
    names (e.g. {"activity": "Activity Coded"}).
    """
    if L < 1:
        raise ValueError("window length L must be >= 1")
    seq = encode_sequences(log, vocab, L, split)
    n_dyn = len(DYNAMIC_FEATURES)
    labels = feature_labels or {}
    names = []
    for t in range(L):
        for feat in DYNAMIC_FEATURES:
            names.append(f"{labels.get(feat, feat)}_{t}")
    names += [labels.get(f, f) for f in STATIC_FEATURES]
    dyn = seq.X[:, :, :n_dyn].reshape(len(log.cases), L * n_dyn)
    statics = seq.X[:, 0, n_dyn:]
    X = np.concatenate([dyn, statics], axis=1)
    cat_flags = [f in DYNAMIC_CATEGORICAL for f in DYNAMIC_FEATURES] * L
    cat_flags += [f in STATIC_CATEGORICAL for f in STATIC_FEATURES]
    return FlatDataset(X=X, Y=seq.Y, feature_names=names, label_names=seq.label_names,
                       categorical=cat_flags, case_ids=seq.case_ids)
