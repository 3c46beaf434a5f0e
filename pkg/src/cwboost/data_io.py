"""Dataset loading (CSV and sparse libsvm-style text), stratified splitting,
and model persistence."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .model import Dataset, Model, Stump


class DataError(ValueError):
    """Malformed input data; the message carries the file location."""


@dataclass(frozen=True)
class LabelMap:
    """Bijection between original label tokens and class indices 1..K.

    Tokens are ordered numerically when every token parses as a number
    (ties broken by the token string), lexicographically otherwise, so the
    mapping is stable across runs regardless of row order.
    """

    tokens: tuple[str, ...]

    @classmethod
    def from_tokens(cls, tokens) -> "LabelMap":
        distinct = set(str(t) for t in tokens)
        try:
            ordered = sorted(distinct, key=lambda t: (float(t), t))
        except ValueError:
            ordered = sorted(distinct)
        return cls(tokens=tuple(ordered))

    @property
    def num_classes(self) -> int:
        return len(self.tokens)

    def to_index(self, token: str) -> int:
        try:
            return self.tokens.index(str(token)) + 1
        except ValueError:
            raise KeyError(f"unknown label token {token!r}") from None

    def to_token(self, index: int) -> str:
        if not 1 <= index <= len(self.tokens):
            raise IndexError(f"class index {index} out of range [1, {len(self.tokens)}]")
        return self.tokens[index - 1]


def _parse_cell(text: str, row: int, col: int, path) -> float:
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"{path}: row {row}, column {col}: "
                        f"cannot parse {text!r} as a number") from None
    if not math.isfinite(value):
        raise DataError(f"{path}: row {row}, column {col}: non-finite value {text!r}")
    return value


def load_csv(path, label_column, has_header: bool = True,
             label_map: LabelMap | None = None):
    """Load a dense CSV file into (Dataset, LabelMap).

    label_column names a header column (requires has_header) or gives a
    0-based column index.  Every non-label cell must parse as a finite
    number; errors report the 1-based row and column.  Passing an existing
    label_map reuses its token -> class mapping (e.g. to load a test file
    under the training mapping even if it misses some class).
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    rows = [r for r in rows if r]
    if not rows:
        raise DataError(f"{path}: file is empty")

    header = None
    if has_header:
        header = rows[0]
        rows = rows[1:]
        if not rows:
            raise DataError(f"{path}: no data rows after the header")
    if isinstance(label_column, str):
        if header is None:
            raise DataError(f"{path}: label column {label_column!r} given by name "
                            "but the file has no header")
        try:
            label_idx = header.index(label_column)
        except ValueError:
            raise DataError(f"{path}: no column named {label_column!r} "
                            f"in header {header}") from None
    else:
        label_idx = int(label_column)

    width = len(rows[0])
    if not 0 <= label_idx < width:
        raise DataError(f"{path}: label column index {label_idx} out of range "
                        f"for {width} columns")
    if width < 2:
        raise DataError(f"{path}: need at least one feature column besides the label")

    first_data_row = 2 if has_header else 1
    tokens = []
    features = np.empty((len(rows), width - 1))
    for r, row in enumerate(rows):
        if len(row) != width:
            raise DataError(f"{path}: row {r + first_data_row} has {len(row)} cells, "
                            f"expected {width}")
        tokens.append(row[label_idx])
        k = 0
        for c, cell in enumerate(row):
            if c == label_idx:
                continue
            features[r, k] = _parse_cell(cell, r + first_data_row, c + 1, path)
            k += 1
    return _finish(path, features, tokens, label_map)


def load_libsvm(path):
    """Load sparse "<label> <idx>:<val> ..." text into (Dataset, LabelMap).

    Feature indices are 1-based and must be strictly increasing per line;
    the dense width is the largest index seen and absent entries are 0.
    """
    tokens = []
    entries = []  # per line: list of (0-based index, value)
    max_index = 0
    with open(path, "r", encoding="utf-8") as fh:
        for ln, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            tokens.append(parts[0])
            row = []
            prev = 0
            for pair in parts[1:]:
                idx_text, sep, val_text = pair.partition(":")
                if not sep:
                    raise DataError(f"{path}: line {ln}: malformed pair {pair!r}")
                try:
                    idx = int(idx_text)
                except ValueError:
                    raise DataError(f"{path}: line {ln}: bad feature index "
                                    f"{idx_text!r}") from None
                if idx < 1:
                    raise DataError(f"{path}: line {ln}: feature index {idx} < 1")
                if idx <= prev:
                    raise DataError(f"{path}: line {ln}: feature indices must be "
                                    f"strictly increasing ({idx} after {prev})")
                prev = idx
                try:
                    val = float(val_text)
                except ValueError:
                    raise DataError(f"{path}: line {ln}: bad feature value "
                                    f"{val_text!r}") from None
                if not math.isfinite(val):
                    raise DataError(f"{path}: line {ln}: non-finite value {val_text!r}")
                row.append((idx - 1, val))
            max_index = max(max_index, prev)
            entries.append(row)
    if not entries:
        raise DataError(f"{path}: file is empty")
    if max_index == 0:
        raise DataError(f"{path}: no feature indices anywhere in the file")
    features = np.zeros((len(entries), max_index))
    for r, row in enumerate(entries):
        for idx, val in row:
            features[r, idx] = val
    label_map = LabelMap.from_tokens(tokens)
    if label_map.num_classes < 2:
        raise DataError(f"{path}: found a single class "
                        f"{label_map.tokens}; need at least two")
    labels = np.array([label_map.to_index(t) for t in tokens], dtype=np.int64)
    return Dataset(features, labels, label_map.num_classes), label_map


def split(dataset: Dataset, train_fraction: float, seed: int):
    """Stratified train/test split, deterministic under the seed.

    Each class is split independently with its train count rounded half-up;
    a class that would end up with no training examples is an error.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    rng = np.random.default_rng(seed)
    train_rows = []
    test_rows = []
    for c in range(1, dataset.num_classes + 1):
        rows = np.flatnonzero(dataset.labels == c)
        if rows.size == 0:
            continue
        n_train = int(math.floor(train_fraction * rows.size + 0.5))
        n_train = min(n_train, rows.size)
        if n_train == 0:
            raise ValueError(
                f"class {c}: {rows.size} example(s) and fraction {train_fraction} "
                "would leave the training split empty")
        perm = rng.permutation(rows)
        train_rows.append(perm[:n_train])
        test_rows.append(perm[n_train:])
    train_rows = np.sort(np.concatenate(train_rows))
    test_rows = np.sort(np.concatenate(test_rows)) if any(a.size for a in test_rows) \
        else np.zeros(0, dtype=np.int64)
    if test_rows.size == 0:
        raise ValueError(f"fraction {train_fraction} left the test split empty")
    train = Dataset(dataset.features[train_rows], dataset.labels[train_rows],
                    dataset.num_classes)
    test = Dataset(dataset.features[test_rows], dataset.labels[test_rows],
                   dataset.num_classes)
    return train, test


def model_to_dict(model: Model, label_map: LabelMap | None = None) -> dict:
    doc = {
        "num_classes": model.num_classes,
        "num_features": model.num_features,
        "classes": [
            {
                "stumps": [
                    {"feature": s.feature_index, "threshold": s.threshold,
                     "polarity": s.polarity}
                    for s in learners
                ],
                "weights": [float(w) for w in weights],
            }
            for learners, weights in zip(model.per_class_learners,
                                         model.per_class_weights)
        ],
    }
    if label_map is not None:
        doc["labels"] = list(label_map.tokens)
    return doc


def _require(doc: dict, key: str, kind, where: str):
    if key not in doc:
        raise DataError(f"model file: missing field {where}{key!r}")
    value = doc[key]
    if not isinstance(value, kind) or isinstance(value, bool):
        names = "/".join(k.__name__ for k in (kind if isinstance(kind, tuple) else (kind,)))
        raise DataError(f"model file: field {where}{key!r} has type "
                        f"{type(value).__name__}, expected {names}")
    return value


def model_from_dict(doc: dict):
    num_classes = _require(doc, "num_classes", int, "")
    num_features = _require(doc, "num_features", int, "")
    classes = _require(doc, "classes", list, "")
    if len(classes) != num_classes:
        raise DataError(f"model file: 'classes' has {len(classes)} entries, "
                        f"expected num_classes = {num_classes}")
    learners = []
    weights = []
    for c, entry in enumerate(classes, 1):
        if not isinstance(entry, dict):
            raise DataError(f"model file: classes[{c - 1}] is not an object")
        where = f"classes[{c - 1}]."
        stumps = _require(entry, "stumps", list, where)
        ws = _require(entry, "weights", list, where)
        if len(stumps) != len(ws):
            raise DataError(f"model file: {where}stumps and {where}weights "
                            f"have different lengths ({len(stumps)} vs {len(ws)})")
        cls_stumps = []
        for t, s in enumerate(stumps):
            if not isinstance(s, dict):
                raise DataError(f"model file: {where}stumps[{t}] is not an object")
            sw = f"{where}stumps[{t}]."
            feature = _require(s, "feature", int, sw)
            threshold = _require(s, "threshold", (int, float), sw)
            polarity = _require(s, "polarity", int, sw)
            try:
                cls_stumps.append(Stump(feature, float(threshold), polarity))
            except ValueError as exc:
                raise DataError(f"model file: {sw[:-1]}: {exc}") from None
        learners.append(cls_stumps)
        weights.append(np.asarray(ws, dtype=np.float64))
    model = Model(learners, weights, num_classes, num_features)
    label_map = None
    if "labels" in doc:
        tokens = _require(doc, "labels", list, "")
        if len(tokens) != num_classes:
            raise DataError(f"model file: 'labels' has {len(tokens)} entries, "
                            f"expected {num_classes}")
        label_map = LabelMap(tokens=tuple(str(t) for t in tokens))
    return model, label_map


def save_model(path, model: Model, label_map: LabelMap | None = None) -> None:
    """Write the model as JSON; float serialization round-trips exactly."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model, label_map), fh, indent=1)
        fh.write("\n")


def load_model(path):
    """Read a model JSON file back into (Model, LabelMap | None)."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise DataError(f"{path}: top level must be a JSON object")
    try:
        return model_from_dict(doc)
    except (ValueError, IndexError) as exc:
        if isinstance(exc, DataError):
            raise
        raise DataError(f"{path}: {exc}") from None
