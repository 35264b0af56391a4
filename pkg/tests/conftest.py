import json
from pathlib import Path

import pytest

from sebench.pipeline import Document, Source
from sebench.wordpiece import Vocabulary

_ACCEPTANCE_RESULTS: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance" in report.nodeid and report.when == "call":
        _ACCEPTANCE_RESULTS[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for nodeid in sorted(_ACCEPTANCE_RESULTS):
        outcome = _ACCEPTANCE_RESULTS[nodeid]
        label = "PASS" if outcome == "passed" else outcome.upper()
        name = nodeid.split("::", 1)[1]
        terminalreporter.write_line(f"[{label}] {name}")

FIXTURES = Path(__file__).parent / "fixtures"
VOCAB_DIR = FIXTURES / "vocab"

BERT_VOCAB_PATH = VOCAB_DIR / "bert_base_uncased_vocab.txt"
SEBERT_VOCAB_PATH = VOCAB_DIR / "sebert_vocab.txt"
BERTOVERFLOW_VOCAB_PATH = VOCAB_DIR / "bertoverflow_vocab.txt"


def _require(path: Path) -> Path:
    if not path.exists():
        pytest.fail(f"missing vocabulary fixture: {path}")
    return path


@pytest.fixture(scope="session")
def bert_vocab() -> Vocabulary:
    return Vocabulary.from_file(_require(BERT_VOCAB_PATH))


@pytest.fixture(scope="session")
def sebert_vocab() -> Vocabulary:
    return Vocabulary.from_file(_require(SEBERT_VOCAB_PATH))


@pytest.fixture(scope="session")
def bertoverflow_vocab() -> Vocabulary:
    return Vocabulary.from_file(_require(BERTOVERFLOW_VOCAB_PATH))


# ---------------------------------------------------------------------------
# Synthetic corpus of >= 50 documents exercising every source and step
# ---------------------------------------------------------------------------

_GITHUB_TEMPLATES = [
    "## Bug in *parser* module\nSee [the docs]({url}) for details.\n"
    "Commit {sha} breaks `parse()` when @{user} runs it. This is bad.",
    "The function fails on empty input. Fixed in {sha}.\n"
    "- first item\n- second item\nPlease review @{user}, this is urgent.",
    "```\nraise ValueError()\n```\nThe traceback above shows the error when "
    "the file is missing. See issue {num} from @{user}.",
]
_COMMIT_TEMPLATES = [
    "Fix the race condition in the <b>writer</b> pool\n\n"
    "The lock is now held for the whole flush.\n"
    "Signed-off-by: Dev One <dev{n}@example.com>",
    "Refactor {sha} follow-up: rename the helpers for clarity.\n"
    "Co-authored-by: Pair Dev <pair{n}@example.com>",
    "Bump the parser to version 2. This is a breaking change for the API.",
]
_STACKOVERFLOW_TEMPLATES = [
    "<p>You can use <code>pip install {pkg}</code> to fix this.</p>"
    "<p>Thanks @{user} &amp; good luck! It works for me.</p>",
    "<div>The answer is to check the <code>PATH</code> variable first. "
    "It is a common mistake &amp; easy to miss.</div>",
    "<p>Duplicate of question {num}. The accepted answer explains the "
    "garbage collector in detail.</p>",
]
_JIRA_TEMPLATES = [
    "h2. Steps to reproduce\n{{code}}SELECT * FROM t{{code}} fails for "
    "[~user{n}] on build {num}. The table is locked.",
    "h1. Crash report\n{{quote}}it broke{{quote}} The stack trace in build "
    "{num} points to the allocator. This blocks the release.",
    "The *bold claim* is that build {num} fixed it. It did not, see log {sha}.",
]
_GERMAN = ("Das Programm stürzt ab wenn man die Datei öffnet und der "
           "Parser meldet einen Fehler")


@pytest.fixture(scope="session")
def property_corpus() -> list[Document]:
    docs: list[Document] = []
    n = 0
    for i in range(14):
        sha = f"{0xdeadbeef + i:08x}{i % 10}{(i * 7) % 10}"
        docs.append(Document(
            id=f"gh{i}", source=Source.GITHUB_ISSUE,
            text=_GITHUB_TEMPLATES[i % 3].format(
                url=f"http://ex.com/{i}", sha=sha, user=f"user-{i}",
                num=1000000 + i)))
        n += 1
    for i in range(14):
        sha = f"{0xabcdef12 + i:08x}"
        docs.append(Document(
            id=f"cm{i}", source=Source.COMMIT_MESSAGE,
            text=_COMMIT_TEMPLATES[i % 3].format(sha=sha, n=i)))
    for i in range(14):
        docs.append(Document(
            id=f"so{i}", source=Source.STACKOVERFLOW,
            text=_STACKOVERFLOW_TEMPLATES[i % 3].format(
                pkg=f"package{i}", user=f"user{i}", num=2000000 + i)))
    for i in range(14):
        docs.append(Document(
            id=f"ji{i}", source=Source.JIRA_ISSUE,
            text=_JIRA_TEMPLATES[i % 3].format(
                n=i, num=3000000 + i, sha=f"{0xfeedface + i:08x}")))
    for i in range(4):
        docs.append(Document(
            id=f"de{i}", source=Source.GITHUB_ISSUE, text=_GERMAN))
    assert len(docs) >= 50
    return docs


@pytest.fixture(scope="session")
def validation_examples_raw() -> list[dict]:
    path = Path(__file__).parents[1] / "src" / "sebench" / "fixtures" / \
        "validation_examples.json"
    with open(path, encoding="utf-8") as f:
        return json.load(f)
