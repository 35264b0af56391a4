"""Fine-tuned prediction-task evaluation harness.

Builds leave-one-project-out and repeated stratified cross-validation
splits, orchestrates classifier backends (two deterministic builtins plus
an external command protocol), and computes precision/recall/F1 with the
0/0 := 0 convention.
"""

from __future__ import annotations

import json
import math
import random
import shlex
import subprocess
import tempfile
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Protocol, Sequence

from .wordpiece import pretokenize


class EvalError(Exception):
    pass


class BackendError(Exception):
    """A classifier backend failed; the affected fold is marked, the run continues."""


@dataclass(frozen=True)
class LabeledItem:
    id: str
    text: str
    label: str
    group: Optional[str] = None


@dataclass(frozen=True)
class LabeledDataset:
    items: tuple[LabeledItem, ...]
    label_set: tuple[str, ...]
    positive_label: Optional[str] = None

    def __post_init__(self) -> None:
        known = set(self.label_set)
        for item in self.items:
            if item.label not in known:
                raise EvalError(
                    f"item {item.id!r} has label {item.label!r} outside the "
                    f"label set {sorted(known)}")
        if self.positive_label is not None and self.positive_label not in known:
            raise EvalError(
                f"positive label {self.positive_label!r} not in label set")

    @classmethod
    def from_items(cls, items: Iterable[LabeledItem],
                   positive_label: Optional[str] = None) -> "LabeledDataset":
        items = tuple(items)
        labels = tuple(sorted({it.label for it in items}))
        return cls(items=items, label_set=labels, positive_label=positive_label)

    @classmethod
    def from_jsonl(cls, path, positive_label: Optional[str] = None
                   ) -> "LabeledDataset":
        items = []
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                    items.append(LabeledItem(
                        id=str(obj["id"]), text=obj["text"],
                        label=str(obj["label"]),
                        group=(str(obj["group"])
                               if obj.get("group") is not None else None)))
                except (KeyError, ValueError) as exc:
                    raise EvalError(f"{path}:{lineno}: bad record: {exc}") from exc
        return cls.from_items(items, positive_label=positive_label)


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Confusion:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0


def metrics(confusion: Confusion) -> tuple[float, float, float]:
    """(precision, recall, f1) over one confusion; 0/0 is defined as 0."""
    tp, fp, fn = confusion.tp, confusion.fp, confusion.fn
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = (2 * recall * precision / (recall + precision)
          if recall + precision else 0.0)
    return precision, recall, f1


def macro_metrics(confusions: dict[str, Confusion]) -> tuple[float, float, float]:
    """Unweighted mean of per-label precision/recall/f1."""
    if len(confusions) < 2:
        raise EvalError("macro averaging needs at least two labels")
    per_label = [metrics(c) for c in confusions.values()]
    n = len(per_label)
    return (sum(m[0] for m in per_label) / n,
            sum(m[1] for m in per_label) / n,
            sum(m[2] for m in per_label) / n)


def confusion_counts(true_labels: Sequence[str], predicted: Sequence[str],
                     label_set: Sequence[str]) -> dict[str, Confusion]:
    """One-vs-rest confusion counts for every label."""
    if len(true_labels) != len(predicted):
        raise EvalError("prediction count does not match item count")
    out = {}
    n = len(true_labels)
    for label in label_set:
        tp = sum(1 for t, p in zip(true_labels, predicted)
                 if t == label and p == label)
        fp = sum(1 for t, p in zip(true_labels, predicted)
                 if t != label and p == label)
        fn = sum(1 for t, p in zip(true_labels, predicted)
                 if t == label and p != label)
        out[label] = Confusion(tp=tp, fp=fp, fn=fn, tn=n - tp - fp - fn)
    return out


# ---------------------------------------------------------------------------
# Fold construction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Split:
    fold_id: str
    train: tuple[LabeledItem, ...]
    test: tuple[LabeledItem, ...]


def lopo_folds(data: LabeledDataset) -> list[Split]:
    """One fold per project group: that group tests, the rest train."""
    by_group: dict[str, list[LabeledItem]] = defaultdict(list)
    for item in data.items:
        if item.group is None:
            raise EvalError(f"item {item.id!r} has no group; LOPO needs one")
        by_group[item.group].append(item)
    if len(by_group) < 2:
        raise EvalError("LOPO needs at least two distinct groups")
    splits = []
    for group in sorted(by_group):
        test = tuple(by_group[group])
        train = tuple(it for it in data.items if it.group != group)
        splits.append(Split(fold_id=group, train=train, test=test))
    return splits


def repeated_cv_folds(data: LabeledDataset, repeats: int = 10,
                      folds: int = 10, seed: int = 0) -> list[Split]:
    """Repeats x folds stratified splits; every item tests once per repeat."""
    if len(data.items) < folds:
        raise EvalError(
            f"{len(data.items)} items cannot fill {folds} folds")
    label_counts = Counter(it.label for it in data.items)
    for label in data.label_set:
        if label_counts[label] < folds:
            raise EvalError(
                f"label {label!r} has only {label_counts[label]} items; "
                f"stratification over {folds} folds is impossible")

    splits = []
    for repeat in range(repeats):
        rng = random.Random(f"{seed}:{repeat}")
        fold_members: list[list[LabeledItem]] = [[] for _ in range(folds)]
        # Dealing round-robin with a pointer carried across labels keeps both
        # the per-label counts and the total fold sizes within one item.
        pointer = 0
        for label in data.label_set:
            members = [it for it in data.items if it.label == label]
            rng.shuffle(members)
            for item in members:
                fold_members[pointer % folds].append(item)
                pointer += 1
        for fold in range(folds):
            test = tuple(fold_members[fold])
            train = tuple(it for f in range(folds) if f != fold
                          for it in fold_members[f])
            splits.append(Split(
                fold_id=f"r{repeat:02d}f{fold:02d}", train=train, test=test))
    return splits


# ---------------------------------------------------------------------------
# Backends
# ---------------------------------------------------------------------------

class ClassifierBackend(Protocol):
    name: str

    def train(self, train_items: Sequence[LabeledItem],
              validation_items: Sequence[LabeledItem]) -> object: ...

    def predict(self, handle: object, texts: Sequence[str]) -> list[str]: ...


class MajorityBackend:
    """Predicts the most frequent training label; ties break lexicographically."""

    name = "majority"

    def train(self, train_items, validation_items):
        if not train_items:
            raise BackendError("majority backend needs training items")
        counts = Counter(it.label for it in train_items)
        top = max(counts.values())
        return min(label for label, n in counts.items() if n == top)

    def predict(self, handle, texts):
        return [handle] * len(texts)


class UnigramCountBackend:
    """Add-one smoothed word-count classifier with a log prior."""

    name = "unigram_count"

    def train(self, train_items, validation_items):
        if not train_items:
            raise BackendError("unigram backend needs training items")
        word_counts: dict[str, Counter[str]] = defaultdict(Counter)
        label_totals: Counter[str] = Counter()
        priors: Counter[str] = Counter()
        vocab: set[str] = set()
        for item in train_items:
            priors[item.label] += 1
            for word in pretokenize(item.text, lowercase=True):
                word_counts[item.label][word] += 1
                label_totals[item.label] += 1
                vocab.add(word)
        n = sum(priors.values())
        return {
            "labels": sorted(priors),
            "priors": {lb: priors[lb] / n for lb in priors},
            "word_counts": word_counts,
            "label_totals": label_totals,
            "vocab_size": len(vocab),
        }

    def predict(self, handle, texts):
        labels = handle["labels"]
        v = handle["vocab_size"]
        out = []
        for text in texts:
            words = pretokenize(text, lowercase=True)
            best_label, best_score = None, None
            for label in labels:  # sorted: ties go to the first label
                score = math.log(handle["priors"][label])
                denom = handle["label_totals"][label] + v
                counts = handle["word_counts"][label]
                for word in words:
                    score += math.log((counts[word] + 1) / denom)
                if best_score is None or score > best_score:
                    best_label, best_score = label, score
            out.append(best_label)
        return out


class CommandBackend:
    """Drives an external classifier through the train/predict file protocol."""

    def __init__(self, command: str, name: Optional[str] = None):
        self.command = command
        self.name = name or f"cmd:{Path(shlex.split(command)[0]).name}"

    @staticmethod
    def _write_jsonl(items: Sequence[LabeledItem], path: Path,
                     with_labels: bool = True) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for it in items:
                obj = {"id": it.id, "text": it.text}
                if with_labels:
                    obj["label"] = it.label
                if it.group is not None:
                    obj["group"] = it.group
                f.write(json.dumps(obj, ensure_ascii=False) + "\n")

    def _run(self, args: list[str]) -> None:
        cmd = shlex.split(self.command) + args
        proc = subprocess.run(cmd, capture_output=True, text=True)
        if proc.returncode != 0:
            raise BackendError(
                f"{self.name}: exit {proc.returncode}: {proc.stderr.strip()}")

    def train(self, train_items, validation_items):
        workdir = Path(tempfile.mkdtemp(prefix="sebench-backend-"))
        model_dir = workdir / "model"
        model_dir.mkdir()
        train_path = workdir / "train.jsonl"
        val_path = workdir / "val.jsonl"
        self._write_jsonl(train_items, train_path)
        self._write_jsonl(validation_items, val_path)
        self._run(["train", "--train", str(train_path), "--val", str(val_path),
                   "--model-dir", str(model_dir)])
        return model_dir

    def predict(self, handle, texts):
        model_dir = Path(handle)
        in_path = model_dir / "predict_in.jsonl"
        out_path = model_dir / "predict_out.jsonl"
        with open(in_path, "w", encoding="utf-8") as f:
            for i, text in enumerate(texts):
                f.write(json.dumps({"id": str(i), "text": text},
                                   ensure_ascii=False) + "\n")
        self._run(["predict", "--model-dir", str(model_dir),
                   "--in", str(in_path), "--out", str(out_path)])
        by_id = {}
        with open(out_path, encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if line:
                    obj = json.loads(line)
                    by_id[str(obj["id"])] = str(obj["label"])
        try:
            return [by_id[str(i)] for i in range(len(texts))]
        except KeyError as exc:
            raise BackendError(
                f"{self.name}: prediction file is missing id {exc}") from exc


def builtin_backends() -> dict[str, ClassifierBackend]:
    return {"majority": MajorityBackend(), "unigram_count": UnigramCountBackend()}


# ---------------------------------------------------------------------------
# Evaluation driver
# ---------------------------------------------------------------------------

@dataclass
class FoldResult:
    fold_id: str
    n_test: int
    per_label: dict[str, Confusion] = field(default_factory=dict)
    precision: float = 0.0
    recall: float = 0.0
    f1: float = 0.0
    macro_precision: Optional[float] = None
    macro_recall: Optional[float] = None
    macro_f1: Optional[float] = None
    predictions: list[dict] = field(default_factory=list)
    failed: bool = False
    error: Optional[str] = None

    def as_dict(self) -> dict:
        return {
            "fold_id": self.fold_id,
            "n_test": self.n_test,
            "failed": self.failed,
            "error": self.error,
            "per_label": {
                lb: {"tp": c.tp, "fp": c.fp, "fn": c.fn, "tn": c.tn}
                for lb, c in self.per_label.items()},
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "predictions": self.predictions,
        }


def _validation_split(train: Sequence[LabeledItem], fraction: float,
                      seed: int, fold_id: str
                      ) -> tuple[list[LabeledItem], list[LabeledItem]]:
    items = list(train)
    rng = random.Random(f"{seed}:val:{fold_id}")
    rng.shuffle(items)
    n_val = int(len(items) * fraction)
    return items[n_val:], items[:n_val]


def run_eval(data: LabeledDataset, splits: Sequence[Split],
             backend: ClassifierBackend,
             train_fraction_for_validation: float = 0.2,
             seed: int = 0) -> list[FoldResult]:
    """Train and score the backend on every split; failures mark their fold."""
    results = []
    for split in splits:
        true_labels = [it.label for it in split.test]
        try:
            train_items, val_items = _validation_split(
                split.train, train_fraction_for_validation, seed, split.fold_id)
            handle = backend.train(train_items, val_items)
            predicted = backend.predict(handle, [it.text for it in split.test])
        except BackendError as exc:
            results.append(FoldResult(
                fold_id=split.fold_id, n_test=len(split.test),
                failed=True, error=str(exc)))
            continue
        if len(predicted) != len(split.test):
            results.append(FoldResult(
                fold_id=split.fold_id, n_test=len(split.test), failed=True,
                error=f"backend returned {len(predicted)} predictions for "
                      f"{len(split.test)} items"))
            continue
        per_label = confusion_counts(true_labels, predicted, data.label_set)
        result = FoldResult(
            fold_id=split.fold_id, n_test=len(split.test), per_label=per_label,
            predictions=[
                {"id": it.id, "label": it.label, "predicted": pred}
                for it, pred in zip(split.test, predicted)])
        if len(data.label_set) > 2 or data.positive_label is None:
            macro = macro_metrics(per_label) if len(data.label_set) >= 2 \
                else metrics(next(iter(per_label.values())))
            result.precision, result.recall, result.f1 = macro
        else:
            result.precision, result.recall, result.f1 = metrics(
                per_label[data.positive_label])
        if len(data.label_set) >= 2:
            (result.macro_precision, result.macro_recall,
             result.macro_f1) = macro_metrics(per_label)
        results.append(result)
    return results


def median_f1(results: Sequence[FoldResult]) -> float:
    values = sorted(r.f1 for r in results if not r.failed)
    if not values:
        raise EvalError("no successful folds")
    mid = len(values) // 2
    if len(values) % 2:
        return values[mid]
    return (values[mid - 1] + values[mid]) / 2


def write_results_json(results: Sequence[FoldResult], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump([r.as_dict() for r in results], f, indent=2, ensure_ascii=False)
        f.write("\n")


def load_results_f1(path) -> list[float]:
    """Fold F1 values from a results file, ordered by fold id."""
    with open(path, encoding="utf-8") as f:
        rows = json.load(f)
    rows = [r for r in rows if not r.get("failed")]
    rows.sort(key=lambda r: r["fold_id"])
    return [float(r["f1"]) for r in rows]
