"""Solidity source normalization.

Turns raw contract source into two synchronized views:

* ``tokens`` -- punctuation-free, keyword-stripped word sequence feeding the
  embedding and TF-IDF stages;
* ``lines`` -- comment-stripped source lines with original line boundaries,
  feeding the regex detectors (their patterns need dots, parens and line
  starts that full normalization destroys).
"""

from __future__ import annotations

import logging
import string
from dataclasses import dataclass

from .ingest import source_hash

logger = logging.getLogger(__name__)

# Reserved Solidity words dropped from the token stream (52 entries,
# matched case-sensitively; Solidity keywords are lowercase).
SOLIDITY_KEYWORDS = frozenset([
    "pragma", "import", "contract", "interface", "library", "struct",
    "enum", "function", "event", "error", "using", "for", "constructor",
    "mapping", "address", "bool", "string", "var", "bytes", "uint", "int",
    "if", "else", "while", "do", "break", "continue", "return", "throw",
    "emit", "public", "private", "internal", "external", "constant",
    "immutable", "view", "pure", "virtual", "override", "storage",
    "memory", "calldata", "try", "catch", "revert", "assert", "require",
    "new", "delete", "this", "solidity",
])

# The 32 ASCII punctuation characters, each replaced by a space.
_PUNCT_TABLE = str.maketrans({ch: " " for ch in string.punctuation})


@dataclass(frozen=True)
class TokenDoc:
    """Preprocessed view of one contract."""

    contract_hash: str
    tokens: tuple[str, ...]
    lines: tuple[str, ...]


def strip_comments(source: str) -> str:
    """Remove ``//`` line comments and ``/* */`` block comments.

    Line boundaries outside comments are preserved: a line comment keeps its
    trailing newline, a block comment vanishes together with its interior
    newlines. An unterminated block comment is stripped to end of input and
    logged as a warning rather than rejected, so malformed real-world
    contracts still flow through.
    """
    out: list[str] = []
    i = 0
    n = len(source)
    while i < n:
        ch = source[i]
        if ch == "/" and i + 1 < n:
            nxt = source[i + 1]
            if nxt == "/":
                # line comment: drop up to (not including) the next newline
                end = source.find("\n", i + 2)
                i = n if end == -1 else end
                continue
            if nxt == "*":
                end = source.find("*/", i + 2)
                if end == -1:
                    logger.warning("unterminated block comment; stripping to end of input")
                    i = n
                else:
                    i = end + 2
                continue
        out.append(ch)
        i += 1
    return "".join(out)


def normalize(source: str) -> str:
    """Collapse source to a single line of space-separated words.

    Applies, in order: comment stripping, replacement of every ASCII
    punctuation character by a space, newline-to-space conversion, and
    whitespace collapsing with trimming.
    """
    text = strip_comments(source)
    text = text.translate(_PUNCT_TABLE)
    text = text.replace("\n", " ")
    return " ".join(text.split())


def remove_keywords(words: list[str]) -> list[str]:
    """Drop reserved Solidity keywords, preserving the order of survivors."""
    return [w for w in words if w not in SOLIDITY_KEYWORDS]


def preprocess_contract(source: str) -> TokenDoc:
    """Produce the token sequence and comment-stripped line view of a contract."""
    stripped = strip_comments(source)
    tokens = remove_keywords(normalize(source).split())
    digest = source_hash(source) if source.strip() else _EMPTY_HASH
    return TokenDoc(
        contract_hash=digest,
        tokens=tuple(tokens),
        lines=tuple(stripped.split("\n")),
    )


# Hash slot used when the contract is empty/whitespace-only; source_hash
# rejects empty input but preprocessing stays total.
_EMPTY_HASH = "0" * 64
