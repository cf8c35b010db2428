"""Pattern-matching DOI extraction from plain-text CVs."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .model import Doi, MalformedDoi, normalize_doi

__all__ = ["ExtractionResult", "extract_dois", "strip_trailing_punctuation"]

# A candidate starts at "10.<digits>/" not glued to a preceding word or number
# and runs until the next whitespace. Resolver prefixes end in "/" or ":", so
# they do not block the lookbehind.
_CANDIDATE_RE = re.compile(r"(?<![\w.])10\.\d+/\S*")

_TRAILING = ".,;)]}"
_CLOSERS = {")": "(", "]": "[", "}": "{"}


@dataclass
class ExtractionResult:
    dois: list[Doi] = field(default_factory=list)
    rejected: list[tuple[str, str]] = field(default_factory=list)


def strip_trailing_punctuation(token: str) -> str:
    """Drop sentence punctuation from the end of ``token``.

    A closing bracket is only dropped when it has no opener inside the token,
    so suffixes like ``10.1002/(sici)1097-4571(199806)`` survive intact.
    """
    while token and token[-1] in _TRAILING:
        last = token[-1]
        opener = _CLOSERS.get(last)
        if opener is not None and token.count(opener) >= token.count(last):
            break
        token = token[:-1]
    return token


def extract_dois(text: str) -> ExtractionResult:
    result = ExtractionResult()
    seen: set[str] = set()
    for match in _CANDIDATE_RE.finditer(text):
        raw = match.group(0)
        token = strip_trailing_punctuation(raw)
        try:
            doi = normalize_doi(token)
        except MalformedDoi:
            result.rejected.append((raw, "malformed"))
            continue
        if doi not in seen:
            seen.add(doi)
            result.dois.append(doi)
    return result
