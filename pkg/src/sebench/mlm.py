"""Masked-sentence benchmark harness.

Runs a fixed set of single-[MASK] validation sentences against one or more
prediction backends and assembles a comparison report. Scoring is hit@1 /
hit@k against literal expectation tokens; examples with descriptive
expectations are reported without a score. A deterministic bigram/unigram
baseline backend makes the harness testable without any neural model.
"""

from __future__ import annotations

import json
import re
import urllib.error
import urllib.request
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Optional, Protocol

from .pipeline import normalize_basic
from .wordpiece import pretokenize

MASK = "[MASK]"
CATEGORIES = ("positive", "negative", "neutral")


class BenchmarkError(Exception):
    pass


class BackendFailure(Exception):
    """One backend failed on one example; the run continues."""


@dataclass(frozen=True)
class MaskedExample:
    id: int
    sentence: str
    category: str
    expectation: tuple[str, ...] = ()
    expectation_note: str = ""

    def __post_init__(self) -> None:
        if self.sentence.count(MASK) != 1:
            raise BenchmarkError(
                f"example {self.id}: expected exactly one {MASK}, got "
                f"{self.sentence.count(MASK)}")
        if self.category not in CATEGORIES:
            raise BenchmarkError(
                f"example {self.id}: unknown category {self.category!r}")
        object.__setattr__(self, "expectation",
                           tuple(t.lower() for t in self.expectation))

    @property
    def scored(self) -> bool:
        return bool(self.expectation)

    def as_dict(self) -> dict:
        return {
            "id": self.id,
            "sentence": self.sentence,
            "category": self.category,
            "expectation": list(self.expectation),
            "expectation_note": self.expectation_note,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "MaskedExample":
        return cls(
            id=int(obj["id"]),
            sentence=obj["sentence"],
            category=obj["category"],
            expectation=tuple(obj.get("expectation") or ()),
            expectation_note=obj.get("expectation_note", ""),
        )


@dataclass(frozen=True)
class PredictionSet:
    model_name: str
    example_id: int
    predictions: tuple[tuple[str, float], ...]

    def __post_init__(self) -> None:
        probs = [p for _, p in self.predictions]
        if any(not 0.0 <= p <= 1.0 for p in probs):
            raise BenchmarkError(
                f"{self.model_name}/{self.example_id}: probability out of [0,1]")
        if any(a < b for a, b in zip(probs, probs[1:])):
            raise BenchmarkError(
                f"{self.model_name}/{self.example_id}: probabilities must be "
                f"non-increasing by rank")

    def top_token(self) -> Optional[str]:
        return self.predictions[0][0] if self.predictions else None

    def as_dict(self) -> dict:
        return {
            "model_name": self.model_name,
            "example_id": self.example_id,
            "predictions": [
                {"token": t, "prob": p} for t, p in self.predictions],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "PredictionSet":
        return cls(
            model_name=obj["model_name"],
            example_id=int(obj["example_id"]),
            predictions=tuple(
                (p["token"], float(p["prob"])) for p in obj["predictions"]),
        )


class MlmBackend(Protocol):
    name: str

    def predict(self, sentence: str, top_k: int) -> PredictionSet: ...


# ---------------------------------------------------------------------------
# Fixtures
# ---------------------------------------------------------------------------

def load_examples(path=None) -> list[MaskedExample]:
    """Load MaskedExamples from a JSON file, or the bundled 30-sentence set."""
    if path is None:
        text = (resources.files("sebench") / "fixtures"
                / "validation_examples.json").read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    data = json.loads(text)
    examples = [MaskedExample.from_dict(obj) for obj in data]
    ids = [e.id for e in examples]
    if len(set(ids)) != len(ids):
        raise BenchmarkError("duplicate example ids in benchmark file")
    return examples


def load_published_predictions(path=None) -> list[PredictionSet]:
    """Prediction sets transcribed from the published comparison tables."""
    if path is None:
        text = (resources.files("sebench") / "fixtures"
                / "published_predictions.json").read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    return [PredictionSet.from_dict(obj) for obj in json.loads(text)]


# ---------------------------------------------------------------------------
# Baseline backend: previous-word bigram counts with unigram backoff
# ---------------------------------------------------------------------------

class BaselineBackend:
    """Counts-based mask filler; deterministic given its training sentences."""

    def __init__(self, sentences: Iterable[str], name: str = "baseline"):
        self.name = name
        self.unigrams: Counter[str] = Counter()
        self.bigrams: dict[str, Counter[str]] = defaultdict(Counter)
        for sentence in sentences:
            words = pretokenize(normalize_basic(sentence), lowercase=True)
            for word in words:
                self.unigrams[word] += 1
            for prev, word in zip(words, words[1:]):
                self.bigrams[prev][word] += 1
        if not self.unigrams:
            raise BenchmarkError("baseline backend needs a nonempty corpus")

    def _distribution(self, prev: Optional[str]) -> Counter[str]:
        if prev is not None and prev in self.bigrams:
            return self.bigrams[prev]
        return self.unigrams

    def predict(self, sentence: str, top_k: int) -> PredictionSet:
        words = pretokenize(sentence, lowercase=True)
        if words.count(MASK) != 1:
            raise BackendFailure(
                f"sentence must contain exactly one {MASK}")
        idx = words.index(MASK)
        prev = words[idx - 1] if idx > 0 else None
        dist = self._distribution(prev)
        total = sum(dist.values())
        ranked = sorted(dist.items(), key=lambda kv: (-kv[1], kv[0]))[:top_k]
        return PredictionSet(
            model_name=self.name,
            example_id=-1,
            predictions=tuple((tok, count / total) for tok, count in ranked),
        )


def baseline_backend(corpus: Iterable[str], name: str = "baseline") -> BaselineBackend:
    return BaselineBackend(corpus, name=name)


# ---------------------------------------------------------------------------
# HTTP backend speaking the /predict wire protocol
# ---------------------------------------------------------------------------

class HttpBackend:
    """POSTs {"sentence", "top_k"} and parses {"predictions": [...]}."""

    def __init__(self, endpoint_url: str, name: str, timeout: float = 10.0):
        self.endpoint_url = endpoint_url
        self.name = name
        self.timeout = timeout
        self.warnings: list[str] = []

    def predict(self, sentence: str, top_k: int) -> PredictionSet:
        body = json.dumps({"sentence": sentence, "top_k": top_k}).encode()
        req = urllib.request.Request(
            self.endpoint_url, data=body,
            headers={"Content-Type": "application/json"}, method="POST")
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                payload = json.loads(resp.read().decode("utf-8"))
        except (urllib.error.URLError, urllib.error.HTTPError, OSError,
                ValueError) as exc:
            raise BackendFailure(f"{self.name}: {exc}") from exc
        try:
            preds = [(p["token"], float(p["prob"]))
                     for p in payload["predictions"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise BackendFailure(
                f"{self.name}: malformed response body: {exc}") from exc
        probs = [p for _, p in preds]
        if any(a < b for a, b in zip(probs, probs[1:])):
            self.warnings.append(
                f"{self.name}: response probabilities not sorted; re-sorted")
            preds.sort(key=lambda tp: -tp[1])
        return PredictionSet(
            model_name=self.name, example_id=-1,
            predictions=tuple(preds[:top_k]))


def http_backend(endpoint_url: str, name: str) -> HttpBackend:
    return HttpBackend(endpoint_url, name)


# ---------------------------------------------------------------------------
# Benchmark runner
# ---------------------------------------------------------------------------

@dataclass
class CategoryScore:
    n_scored: int = 0
    hits_at_1: int = 0
    hits_at_k: int = 0

    @property
    def hit_at_1(self) -> Optional[float]:
        return self.hits_at_1 / self.n_scored if self.n_scored else None

    @property
    def hit_at_k(self) -> Optional[float]:
        return self.hits_at_k / self.n_scored if self.n_scored else None


@dataclass
class BenchmarkResult:
    examples: list[MaskedExample]
    backend_names: list[str]
    top_k: int
    predictions: dict[tuple[int, str], PredictionSet] = field(default_factory=dict)
    failures: dict[tuple[int, str], str] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    scores: dict[str, dict[str, CategoryScore]] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "top_k": self.top_k,
            "backends": self.backend_names,
            "examples": [e.as_dict() for e in self.examples],
            "predictions": [ps.as_dict()
                            for _, ps in sorted(self.predictions.items())],
            "failures": [
                {"example_id": ex, "backend": b, "error": msg}
                for (ex, b), msg in sorted(self.failures.items())],
            "warnings": list(self.warnings),
            "scores": {
                backend: {
                    cat: {
                        "n_scored": s.n_scored,
                        "hit_at_1": s.hit_at_1,
                        "hit_at_k": s.hit_at_k,
                    } for cat, s in per_cat.items()
                } for backend, per_cat in self.scores.items()
            },
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "BenchmarkResult":
        result = cls(
            examples=[MaskedExample.from_dict(e) for e in obj["examples"]],
            backend_names=list(obj["backends"]),
            top_k=int(obj.get("top_k", 5)),
            warnings=list(obj.get("warnings", [])),
        )
        for ps_obj in obj.get("predictions", []):
            ps = PredictionSet.from_dict(ps_obj)
            result.predictions[(ps.example_id, ps.model_name)] = ps
        for failure in obj.get("failures", []):
            key = (int(failure["example_id"]), failure["backend"])
            result.failures[key] = failure.get("error", "failed")
        for backend, per_cat in obj.get("scores", {}).items():
            result.scores[backend] = {
                cat: CategoryScore(
                    n_scored=int(s.get("n_scored", 0)),
                    hits_at_1=int(round((s.get("hit_at_1") or 0)
                                        * s.get("n_scored", 0))),
                    hits_at_k=int(round((s.get("hit_at_k") or 0)
                                        * s.get("n_scored", 0))),
                ) for cat, s in per_cat.items()}
        return result


def _matches(token: str, expectation: tuple[str, ...]) -> bool:
    return token.lower() in expectation


def run_benchmark(examples: list[MaskedExample], backends: list[MlmBackend],
                  top_k: int = 5) -> BenchmarkResult:
    """Query every backend on every example; failures are recorded, not fatal."""
    if top_k < 1:
        raise BenchmarkError(f"top_k must be >= 1, got {top_k}")
    if not examples:
        raise BenchmarkError("no examples to run")
    result = BenchmarkResult(
        examples=sorted(examples, key=lambda e: e.id),
        backend_names=[b.name for b in backends],
        top_k=top_k,
    )
    for backend in backends:
        per_cat = {cat: CategoryScore() for cat in CATEGORIES}
        for example in result.examples:
            try:
                ps = backend.predict(example.sentence, top_k)
            except BackendFailure as exc:
                result.failures[(example.id, backend.name)] = str(exc)
                continue
            ps = PredictionSet(
                model_name=backend.name, example_id=example.id,
                predictions=ps.predictions[:top_k])
            result.predictions[(example.id, backend.name)] = ps
            if example.scored and ps.predictions:
                score = per_cat[example.category]
                score.n_scored += 1
                if _matches(ps.predictions[0][0], example.expectation):
                    score.hits_at_1 += 1
                if any(_matches(t, example.expectation)
                       for t, _ in ps.predictions):
                    score.hits_at_k += 1
        result.scores[backend.name] = per_cat
        result.warnings.extend(getattr(backend, "warnings", []))
    return result


# ---------------------------------------------------------------------------
# Report rendering
# ---------------------------------------------------------------------------

def _fmt_prob(p: float) -> str:
    return f"{p:.4f}"


def render_report(result: BenchmarkResult, fmt: str = "markdown") -> str:
    """Markdown or JSON comparison table, one row per sentence."""
    if not result.examples:
        raise BenchmarkError("empty benchmark result")
    if fmt == "json":
        return json.dumps(result.as_dict(), indent=2, ensure_ascii=False)
    if fmt != "markdown":
        raise BenchmarkError(f"unknown report format: {fmt!r}")

    lines: list[str] = []
    backends = result.backend_names
    for category in CATEGORIES:
        examples = [e for e in result.examples if e.category == category]
        if not examples:
            continue
        lines.append(f"## {category.capitalize()} examples")
        lines.append("")
        header = ["Id", "Sentence", "Expectation"]
        for b in backends:
            header += [f"{b} prediction", f"{b} prob."]
        lines.append("| " + " | ".join(header) + " |")
        lines.append("|" + " --- |" * len(header))
        for ex in examples:
            expectation = ", ".join(ex.expectation) or ex.expectation_note
            row = [str(ex.id), ex.sentence.replace("|", "\\|"), expectation]
            for b in backends:
                ps = result.predictions.get((ex.id, b))
                if ps is None:
                    reason = result.failures.get((ex.id, b), "no prediction")
                    row += [f"FAILED ({reason})", "-"]
                elif not ps.predictions:
                    row += ["-", "-"]
                else:
                    tok, prob = ps.predictions[0]
                    row += [tok, _fmt_prob(prob)]
            lines.append("| " + " | ".join(row) + " |")
        lines.append("")

    lines.append("## Scores")
    lines.append("")
    lines.append(f"| Backend | Category | n | hit@1 | hit@{result.top_k} |")
    lines.append("| --- | --- | --- | --- | --- |")
    for b in backends:
        for cat in CATEGORIES:
            score = result.scores.get(b, {}).get(cat)
            if score is None or score.n_scored == 0:
                lines.append(f"| {b} | {cat} | 0 | n/a | n/a |")
            else:
                lines.append(
                    f"| {b} | {cat} | {score.n_scored} "
                    f"| {score.hit_at_1:.3f} | {score.hit_at_k:.3f} |")
    if result.warnings:
        lines.append("")
        lines.append("## Warnings")
        lines.append("")
        for w in result.warnings:
            lines.append(f"- {w}")
    return "\n".join(lines) + "\n"


_MASK_RE = re.compile(re.escape(MASK))


def validate_mask_sentence(sentence: str) -> None:
    """Raise unless the sentence contains exactly one [MASK]."""
    n = len(_MASK_RE.findall(sentence))
    if n != 1:
        raise BenchmarkError(
            f"sentence must contain exactly one {MASK} (found {n})")
