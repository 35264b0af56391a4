"""Corpus preprocessing pipeline for SE text sources.

Eight cleaning steps (lowercasing/whitespace, language filtering, HTML,
Markdown, hash masking, code masking, user mentions, source-specific
formatting) applied per data source according to a configurable step
matrix. Code regions are replaced by the [CODE] sentinel inside the HTML,
Markdown and Jira handlers rather than by a standalone step; bare code in
prose is left alone.
"""

from __future__ import annotations

import html.parser
import json
import re
import unicodedata
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Optional


class PipelineError(Exception):
    """Raised when a document cannot be processed (e.g. detector failure)."""


class ConfigError(Exception):
    """Raised for invalid pipeline configuration or unknown sources."""


class Source(str, Enum):
    GITHUB_ISSUE = "github_issue"
    COMMIT_MESSAGE = "commit_message"
    STACKOVERFLOW = "stackoverflow"
    JIRA_ISSUE = "jira_issue"


class Step(str, Enum):
    BASIC = "basic"
    ENGLISH = "english"
    HTML = "html"
    MARKDOWN = "markdown"
    HASHES = "hashes"
    CODE = "code"
    USER_MENTIONS = "user_mentions"
    SPECIAL_FORMATTING = "special_formatting"


STEP_ORDER: tuple[Step, ...] = (
    Step.BASIC,
    Step.ENGLISH,
    Step.HTML,
    Step.MARKDOWN,
    Step.HASHES,
    Step.CODE,
    Step.USER_MENTIONS,
    Step.SPECIAL_FORMATTING,
)

# Which steps run for which source by default (the published per-source matrix).
DEFAULT_MATRIX: dict[Source, frozenset[Step]] = {
    Source.GITHUB_ISSUE: frozenset({
        Step.BASIC, Step.ENGLISH, Step.MARKDOWN, Step.HASHES, Step.CODE,
        Step.USER_MENTIONS,
    }),
    Source.COMMIT_MESSAGE: frozenset({
        Step.BASIC, Step.ENGLISH, Step.HASHES, Step.SPECIAL_FORMATTING,
    }),
    Source.STACKOVERFLOW: frozenset({
        Step.BASIC, Step.HTML, Step.HASHES, Step.CODE, Step.USER_MENTIONS,
    }),
    Source.JIRA_ISSUE: frozenset({
        Step.BASIC, Step.HASHES, Step.CODE, Step.SPECIAL_FORMATTING,
    }),
}

CODE_TOKEN = "[CODE]"
HASH_TOKEN = "[HASH]"
USER_TOKEN = "[USER]"
SENTINELS = (HASH_TOKEN, CODE_TOKEN, USER_TOKEN)


@dataclass(frozen=True)
class Document:
    """One raw source text with provenance metadata."""

    id: str
    source: Source
    text: str
    meta: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.id:
            raise ConfigError("document id must be nonempty")
        if not isinstance(self.source, Source):
            object.__setattr__(self, "source", Source(self.source))


@dataclass(frozen=True)
class PipelineConfig:
    """Ordered step list plus the per-source step matrix."""

    steps: tuple[Step, ...] = STEP_ORDER
    per_source_matrix: dict[Source, frozenset[Step]] = field(
        default_factory=lambda: dict(DEFAULT_MATRIX))
    stopword_threshold: float = 0.06

    def __post_init__(self) -> None:
        for source, enabled in self.per_source_matrix.items():
            missing = [s for s in enabled if s not in self.steps]
            if missing:
                raise ConfigError(
                    f"steps {sorted(s.value for s in missing)} enabled for "
                    f"{source.value} but absent from the global step list")

    def steps_for(self, source: Source) -> tuple[Step, ...]:
        try:
            enabled = self.per_source_matrix[source]
        except KeyError:
            raise ConfigError(f"unknown source: {source!r}") from None
        return tuple(s for s in self.steps if s in enabled)


@dataclass(frozen=True)
class CleanDocument:
    """Pipeline output: sentence-split text or a drop marker."""

    id: str
    source: Source
    sentences: tuple[str, ...]
    dropped: bool = False
    drop_reason: Optional[str] = None  # "non_english" | "empty_after_cleaning"


# ---------------------------------------------------------------------------
# Step 1: basic normalization
# ---------------------------------------------------------------------------

_QUOTE_MAP = str.maketrans({
    "“": '"', "”": '"', "„": '"', "«": '"', "»": '"',
    "‘": "'", "’": "'", "‚": "'", "′": "'",
})

# Sentinels (and the model special tokens) keep their case through every step.
_PROTECTED_TOKENS = (
    HASH_TOKEN, CODE_TOKEN, USER_TOKEN,
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
)
_PROTECTED_RE = re.compile("(" + "|".join(map(re.escape, _PROTECTED_TOKENS)) + ")")


def normalize_basic(text: str) -> str:
    """Lowercase, strip control characters, normalize quotes and whitespace."""

    def clean(segment: str) -> str:
        segment = segment.lower().translate(_QUOTE_MAP)
        return "".join(
            " " if (c in "\n\r\t" or unicodedata.category(c) == "Cc") else c
            for c in segment)

    parts = _PROTECTED_RE.split(text)
    text = "".join(p if p in _PROTECTED_TOKENS else clean(p) for p in parts)
    return " ".join(text.split())


# ---------------------------------------------------------------------------
# Step 2: language detection
# ---------------------------------------------------------------------------

# Compact high-frequency English stopword list for the ratio heuristic.
ENGLISH_STOPWORDS = frozenset("""
the of and a to in is you that it he was for on are as with his they i at be
this have from or one had by word but not what all were we when your can said
there use an each which she do how their if will up other about out many then
them these so some her would make like him into time has look two more write
go see number no way could people my than first been call who its now find
long down day did get come made may part over new sound take only little work
know place year live me back give most very after thing our just name good
""".split())


class LanguageDetector:
    """English detector based on the ratio of English stopwords."""

    def __init__(self, threshold: float = 0.06,
                 stopwords: frozenset[str] = ENGLISH_STOPWORDS):
        self.threshold = threshold
        self.stopwords = stopwords

    def is_english(self, text: str) -> bool:
        words = re.findall(r"[a-z']+", text.lower())
        if not words:
            return False
        hits = sum(1 for w in words if w.strip("'") in self.stopwords)
        return hits / len(words) >= self.threshold


def detect_english(text: str, detector: LanguageDetector) -> bool:
    """True iff the detector classifies ``text`` as English."""
    try:
        return bool(detector.is_english(text))
    except Exception as exc:
        raise PipelineError(f"language detector failed: {exc}") from exc


# ---------------------------------------------------------------------------
# Step 3: HTML
# ---------------------------------------------------------------------------

class _TextExtractor(html.parser.HTMLParser):
    """Collects text content, replacing <code> elements by [CODE]."""

    # Breaking these elements keeps adjacent blocks from fusing into one word.
    _BLOCK = {"p", "div", "br", "li", "ul", "ol", "tr", "table", "pre",
              "blockquote", "h1", "h2", "h3", "h4", "h5", "h6"}

    def __init__(self, replace_code: bool):
        super().__init__(convert_charrefs=True)
        self.out: list[str] = []
        self.replace_code = replace_code
        self._code_depth = 0

    def handle_starttag(self, tag, attrs):
        if tag == "code" and self.replace_code:
            if self._code_depth == 0:
                self.out.append(f" {CODE_TOKEN} ")
            self._code_depth += 1
        elif tag in self._BLOCK:
            self.out.append(" ")

    def handle_endtag(self, tag):
        if tag == "code" and self.replace_code:
            self._code_depth = max(0, self._code_depth - 1)
        elif tag in self._BLOCK:
            self.out.append(" ")

    def handle_data(self, data):
        if self._code_depth == 0:
            self.out.append(data)


def strip_html(text: str, replace_code: bool = True) -> str:
    """Remove HTML markup, keep element text, mask <code> content."""
    parser = _TextExtractor(replace_code)
    parser.feed(text)
    parser.close()
    return " ".join("".join(parser.out).split())


# ---------------------------------------------------------------------------
# Step 4: Markdown
# ---------------------------------------------------------------------------

_MD_FENCE = re.compile(r"```.*?```", re.DOTALL)
_MD_INLINE_CODE = re.compile(r"`[^`]*`")
_MD_IMAGE = re.compile(r"!\[[^\[\]]*\]\([^()]*\)")
# Sentinel labels stay intact even when something that looks like a link
# target follows them.
_MD_LINK = re.compile(r"\[(?!(?:HASH|CODE|USER|MASK)\])([^\[\]]+)\]\([^()]*\)")
# Marker characters count as line-initial after newlines were collapsed.
_MD_HEADING = re.compile(r"(^|(?<=\s))#{1,6}(?=\s|\w)")
_MD_QUOTE = re.compile(r"(^|(?<=\s))>+(?=\s)")
_MD_BULLET = re.compile(r"(^|(?<=\s))(?:[-*+]|\d+\.)(?=\s)")
_MD_EMPHASIS_STAR = re.compile(r"\*+")
# Keep word-internal underscores (snake_case); emphasis only wraps word edges.
_MD_EMPHASIS_UNDERSCORE = re.compile(r"(^|(?<=[^0-9a-z_]))_+|_+($|(?=[^0-9a-z_]))")


def strip_markdown(text: str, replace_code: bool = True) -> str:
    """Remove Markdown formatting; code fences and spans become [CODE]."""
    if replace_code:
        text = _MD_FENCE.sub(f" {CODE_TOKEN} ", text)
        text = _MD_INLINE_CODE.sub(f" {CODE_TOKEN} ", text)
    else:
        text = _MD_FENCE.sub(lambda m: m.group(0).strip("`"), text)
        text = _MD_INLINE_CODE.sub(lambda m: m.group(0).strip("`"), text)
    text = _MD_IMAGE.sub(" ", text)
    text = _MD_LINK.sub(r"\1", text)
    text = _MD_HEADING.sub(" ", text)
    text = _MD_QUOTE.sub(" ", text)
    text = _MD_BULLET.sub(" ", text)
    text = _MD_EMPHASIS_STAR.sub("", text)
    text = _MD_EMPHASIS_UNDERSCORE.sub("", text)
    return " ".join(text.split())


# ---------------------------------------------------------------------------
# Step 5: hashes
# ---------------------------------------------------------------------------

_HEX_WORD = re.compile(r"^[0-9a-f]{7,}$")


def mask_hashes(text: str) -> str:
    """Replace hex-castable words of length >= 7 by [HASH]."""
    return " ".join(
        HASH_TOKEN if _HEX_WORD.match(tok) else tok
        for tok in text.split())


# ---------------------------------------------------------------------------
# Step 7: user mentions
# ---------------------------------------------------------------------------

_MENTION = re.compile(r"(?<!\S)@[\w-]+")


def mask_user_mentions(text: str) -> str:
    """Replace token-initial @mentions by [USER]; emails are untouched."""
    return " ".join(_MENTION.sub(USER_TOKEN, text).split())


# ---------------------------------------------------------------------------
# Step 8: source-specific formatting
# ---------------------------------------------------------------------------

_TRAILER_LINE = re.compile(
    r"^\s*(signed-off-by|co-authored-by|git-svn-id)\s*:.*$",
    re.MULTILINE | re.IGNORECASE)
# Inline forms survive newline collapsing: name words followed by <email>,
# or the svn revision/uuid pair.
_TRAILER_INLINE = re.compile(
    r"(signed-off-by|co-authored-by)\s*:\s*(?:[^\s<]+\s+){0,6}<[^>\s]+>",
    re.IGNORECASE)
_SVN_ID_INLINE = re.compile(
    r"git-svn-id\s*:\s*\S+@\d+(?:\s+[0-9a-f-]+)?", re.IGNORECASE)

_JIRA_CODE = re.compile(r"\{code(?::[^}]*)?\}.*?\{code\}", re.DOTALL)
_JIRA_NOFORMAT = re.compile(r"\{noformat\}.*?\{noformat\}", re.DOTALL)
_JIRA_QUOTE = re.compile(r"\{quote\}")
_JIRA_HEADING = re.compile(r"(^|(?<=\s))h[1-6]\.(?=\s)")
_JIRA_MENTION = re.compile(r"\[~[^\[\]]+\]")
_JIRA_BOLD = re.compile(r"\*(\S(?:[^*]*\S)?)\*")


def strip_special_formatting(text: str, source: Source,
                             replace_code: bool = True) -> str:
    """Remove commit trailers or Jira wiki markup, depending on source."""
    source = Source(source)
    if source == Source.COMMIT_MESSAGE:
        text = _TRAILER_LINE.sub(" ", text)
        text = _TRAILER_INLINE.sub(" ", text)
        text = _SVN_ID_INLINE.sub(" ", text)
    elif source == Source.JIRA_ISSUE:
        code_repl = f" {CODE_TOKEN} " if replace_code else " "
        text = _JIRA_CODE.sub(code_repl, text)
        text = _JIRA_NOFORMAT.sub(code_repl, text)
        text = _JIRA_QUOTE.sub(" ", text)
        text = _JIRA_HEADING.sub(" ", text)
        text = _JIRA_MENTION.sub(USER_TOKEN, text)
        text = _JIRA_BOLD.sub(r"\1", text)
    else:
        raise ConfigError(
            f"special_formatting applies to commit messages and Jira issues, "
            f"not {source.value}")
    return " ".join(text.split())


# ---------------------------------------------------------------------------
# Sentence splitting
# ---------------------------------------------------------------------------

# Words that end in '.' without terminating a sentence.
ABBREVIATIONS = frozenset({
    "i.e", "e.g", "vs", "etc", "cf", "al", "fig", "dr", "mr", "mrs", "ms",
    "no", "approx",
})

_BOUNDARY = re.compile(r"([.!?]+)(\s+)")


def split_sentences(text: str) -> list[str]:
    """Rule-based splitting on ./!/? + whitespace, abbreviation-aware."""
    sentences = []
    start = 0
    for m in _BOUNDARY.finditer(text):
        if m.group(1).startswith("."):
            prev = text[start:m.start()].rsplit(None, 1)
            last_word = prev[-1] if prev else ""
            if last_word.rstrip(".").lstrip("(\"'").rstrip(")\"'") in ABBREVIATIONS:
                continue
            # "i.e." style: the final period belongs to the abbreviation
            if (last_word + ".").rstrip(".") in ABBREVIATIONS:
                continue
        sentences.append(text[start:m.end(1)].strip())
        start = m.end()
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return [s for s in sentences if s]


# ---------------------------------------------------------------------------
# Pipeline driver
# ---------------------------------------------------------------------------

@dataclass
class PipelineReport:
    """Counts of sentinel replacements per step and dropped documents."""

    replacements: dict[str, int] = field(default_factory=dict)
    drops: dict[str, int] = field(default_factory=dict)
    documents: int = 0
    kept: int = 0

    def add_replacements(self, step: Step, count: int) -> None:
        if count:
            key = step.value
            self.replacements[key] = self.replacements.get(key, 0) + count

    def add_drop(self, reason: str) -> None:
        self.drops[reason] = self.drops.get(reason, 0) + 1

    def as_dict(self) -> dict:
        return {
            "documents": self.documents,
            "kept": self.kept,
            "replacements": dict(sorted(self.replacements.items())),
            "drops": dict(sorted(self.drops.items())),
        }


def _count_sentinels(text: str) -> int:
    return sum(text.count(s) for s in SENTINELS)


def run_pipeline(doc: Document, config: PipelineConfig,
                 detector: Optional[LanguageDetector] = None,
                 report: Optional[PipelineReport] = None) -> CleanDocument:
    """Apply the steps enabled for ``doc.source`` in global step order."""
    if not isinstance(doc.source, Source):
        raise ConfigError(f"unknown source: {doc.source!r}")
    steps = config.steps_for(doc.source)
    replace_code = Step.CODE in steps
    if detector is None:
        detector = LanguageDetector(threshold=config.stopword_threshold)
    if report is not None:
        report.documents += 1

    text = doc.text
    for step in steps:
        before = _count_sentinels(text)
        if step == Step.BASIC:
            text = normalize_basic(text)
        elif step == Step.ENGLISH:
            if not detect_english(text, detector):
                if report is not None:
                    report.add_drop("non_english")
                return CleanDocument(doc.id, doc.source, (), True, "non_english")
        elif step == Step.HTML:
            text = strip_html(text, replace_code=replace_code)
        elif step == Step.MARKDOWN:
            text = strip_markdown(text, replace_code=replace_code)
        elif step == Step.HASHES:
            text = mask_hashes(text)
        elif step == Step.CODE:
            pass  # realized inside the html/markdown/jira handlers
        elif step == Step.USER_MENTIONS:
            text = mask_user_mentions(text)
        elif step == Step.SPECIAL_FORMATTING:
            text = strip_special_formatting(
                text, doc.source, replace_code=replace_code)
        if report is not None:
            report.add_replacements(step, _count_sentinels(text) - before)

    sentences = tuple(split_sentences(text))
    if not sentences:
        if report is not None:
            report.add_drop("empty_after_cleaning")
        return CleanDocument(doc.id, doc.source, (), True, "empty_after_cleaning")
    if report is not None:
        report.kept += 1
    return CleanDocument(doc.id, doc.source, sentences)


def run_corpus(docs: Iterable[Document], config: PipelineConfig,
               detector: Optional[LanguageDetector] = None,
               report: Optional[PipelineReport] = None,
               ) -> Iterator[CleanDocument]:
    """Process documents independently, preserving input order."""
    seen: set[str] = set()
    for doc in docs:
        if doc.id in seen:
            raise ConfigError(f"duplicate document id: {doc.id!r}")
        seen.add(doc.id)
        yield run_pipeline(doc, config, detector=detector, report=report)


# ---------------------------------------------------------------------------
# I/O: JSON-lines in, sentence-per-line corpus out
# ---------------------------------------------------------------------------

def read_documents_jsonl(path) -> Iterator[Document]:
    """Read one JSON document per line: {"id","source","text","meta"?}."""
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                yield Document(
                    id=str(obj["id"]),
                    source=Source(obj["source"]),
                    text=obj["text"],
                    meta=dict(obj.get("meta") or {}),
                )
            except (KeyError, ValueError) as exc:
                raise PipelineError(f"{path}:{lineno}: bad document: {exc}") from exc


def write_corpus(clean_docs: Iterable[CleanDocument], path) -> int:
    """Write kept documents as sentence-per-line blocks separated by blank lines."""
    written = 0
    with open(path, "w", encoding="utf-8") as f:
        first = True
        for doc in clean_docs:
            if doc.dropped:
                continue
            if not first:
                f.write("\n")
            f.write("\n".join(doc.sentences))
            f.write("\n")
            first = False
            written += 1
    return written


def read_corpus(path) -> list[list[str]]:
    """Read a sentence-per-line corpus back into per-document sentence lists."""
    docs: list[list[str]] = []
    current: list[str] = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if line.strip():
                current.append(line.strip())
            elif current:
                docs.append(current)
                current = []
    if current:
        docs.append(current)
    return docs
