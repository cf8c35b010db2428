"""Readers and writers for the plain-text input and output files."""

from __future__ import annotations

import csv
import io
import os
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from pathlib import Path

from .analysis import OfficialRecord
from .evaluation import CandidateEvaluation, Comparison, evaluate
from .extract import extract_dois
from .model import (
    Candidate,
    Condition,
    Doi,
    EvaluationOutcome,
    IndicatorTriple,
    MalformedDoi,
    Role,
    ThresholdSet,
    normalize_doi,
)

__all__ = [
    "DataError",
    "PublicationMeta",
    "RESULT_COLUMNS",
    "evaluations_to_csv",
    "load_evaluations",
    "load_metadata",
    "load_official",
    "load_roster",
    "metadata_to_csv",
    "parse_flag",
    "read_doi_list",
]

RESULT_COLUMNS = ["candidate_id", "role", "condition", "a", "b", "c", "pass_a", "pass_b", "pass_c", "overall"]
METADATA_COLUMNS = ["doi", "dblp_kind", "crossref_type", "year"]


class DataError(ValueError):
    """An input file is present but its content is unusable."""


@dataclass(frozen=True)
class PublicationMeta:
    dblp_kind: str | None = None
    crossref_type: str | None = None
    year: int | None = None


def _open_csv(path: str | os.PathLike[str]) -> tuple[csv.DictReader, io.TextIOBase]:
    fh = open(path, newline="", encoding="utf-8-sig")
    return csv.DictReader(fh), fh


def _require_columns(reader: csv.DictReader, path, *columns: str) -> None:
    header = reader.fieldnames or []
    missing = [c for c in columns if c not in header]
    if missing:
        raise DataError(f"{path}: missing column(s) {', '.join(missing)}")


def parse_flag(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "t", "yes", "y", "pass", "p"):
        return True
    if value in ("0", "false", "f", "no", "n", "fail", ""):
        return False
    raise DataError(f"not a pass/fail flag: {text!r}")


def _optional_int(text: str | None) -> int | None:
    text = (text or "").strip()
    return int(text) if text else None


def format_number(value: float) -> str:
    value = float(value)
    return str(int(value)) if value.is_integer() else repr(value)


def read_doi_list(path: str | os.PathLike[str]) -> frozenset[Doi]:
    """One DOI per line; blank lines and ``#`` comments are skipped."""
    dois = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                dois.add(normalize_doi(line))
            except MalformedDoi:
                raise DataError(f"{path}:{lineno}: malformed DOI {line!r}") from None
    return frozenset(dois)


def load_roster(path: str | os.PathLike[str]) -> list[Candidate]:
    """Read the candidate roster.

    Columns: ``id``, ``role``, ``name``, and optionally ``orcid``,
    ``first_pub_year``, ``cv_text_path``, ``cv_dois_path``, ``dblp_dois_path``.
    Relative file paths are resolved against the roster's directory.
    """
    base = Path(path).parent
    reader, fh = _open_csv(path)
    with fh:
        _require_columns(reader, path, "id", "role")
        candidates = []
        seen: set[str] = set()
        for row in reader:
            cid = (row.get("id") or "").strip()
            if not cid:
                raise DataError(f"{path}:{reader.line_num}: empty candidate id")
            if cid in seen:
                raise DataError(f"{path}: duplicate candidate id {cid!r}")
            seen.add(cid)
            try:
                role = Role.parse(row["role"])
                first_year = _optional_int(row.get("first_pub_year"))
            except ValueError as exc:
                raise DataError(f"{path}:{reader.line_num}: {exc}") from None

            def resolve(column: str) -> Path | None:
                value = (row.get(column) or "").strip()
                return (base / value) if value else None

            cv_dois: frozenset[Doi] = frozenset()
            if (p := resolve("cv_dois_path")) is not None:
                cv_dois = read_doi_list(p)
            elif (p := resolve("cv_text_path")) is not None:
                cv_dois = frozenset(extract_dois(p.read_text(encoding="utf-8", errors="replace")).dois)
            dblp_dois: frozenset[Doi] = frozenset()
            if (p := resolve("dblp_dois_path")) is not None:
                dblp_dois = read_doi_list(p)
            candidates.append(
                Candidate(
                    id=cid,
                    role=role,
                    name=(row.get("name") or "").strip(),
                    orcid=(row.get("orcid") or "").strip() or None,
                    cv_dois=cv_dois,
                    dblp_dois=dblp_dois,
                    first_pub_year=first_year,
                )
            )
    return candidates


def load_metadata(path: str | os.PathLike[str]) -> dict[Doi, PublicationMeta]:
    reader, fh = _open_csv(path)
    with fh:
        _require_columns(reader, path, "doi")
        table = {}
        for row in reader:
            try:
                doi = normalize_doi(row["doi"])
                year = _optional_int(row.get("year"))
            except ValueError as exc:
                raise DataError(f"{path}:{reader.line_num}: {exc}") from None
            table[doi] = PublicationMeta(
                (row.get("dblp_kind") or "").strip() or None,
                (row.get("crossref_type") or "").strip() or None,
                year,
            )
    return table


def metadata_to_csv(table: Mapping[Doi, PublicationMeta]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(METADATA_COLUMNS)
    for doi in sorted(table):
        meta = table[doi]
        writer.writerow([doi, meta.dblp_kind or "", meta.crossref_type or "", meta.year or ""])
    return buf.getvalue()


def _triple_from(row: Mapping[str, str]) -> IndicatorTriple | None:
    values = [(row.get(k) or "").strip() for k in ("a", "b", "c")]
    if not all(values):
        return None
    return IndicatorTriple(*(float(v) for v in values))


def load_official(
    path: str | os.PathLike[str],
    thresholds: Mapping[Role, ThresholdSet] | None = None,
    comparison: Comparison = Comparison.GREATER_EQUAL,
) -> list[OfficialRecord]:
    """Read official outcomes.

    Each row needs ``candidate_id`` and ``role`` plus either the three flags
    ``pass_a``/``pass_b``/``pass_c`` or the three values ``a``/``b``/``c``.
    Rows with values only get their flags from ``thresholds``. An ``overall``
    column, when present, must agree with the flags.
    """
    reader, fh = _open_csv(path)
    records = []
    with fh:
        id_col = "candidate_id" if "candidate_id" in (reader.fieldnames or []) else "id"
        _require_columns(reader, path, id_col, "role")
        for row in reader:
            where = f"{path}:{reader.line_num}"
            try:
                role = Role.parse(row["role"])
                triple = _triple_from(row)
                flags = [(row.get(k) or "").strip() for k in ("pass_a", "pass_b", "pass_c")]
                if all(flags):
                    outcome = EvaluationOutcome(*(parse_flag(f) for f in flags))
                elif triple is not None:
                    if thresholds is None or role not in thresholds:
                        raise DataError(f"no official thresholds to derive flags for {role.value}")
                    outcome = evaluate(triple, thresholds[role], comparison)
                else:
                    raise DataError("needs pass_a/pass_b/pass_c flags or a/b/c values")
                overall = (row.get("overall") or "").strip()
                if overall and parse_flag(overall) != outcome.overall:
                    raise DataError("overall flag disagrees with the 2-of-3 rule")
            except (ValueError, KeyError) as exc:
                raise DataError(f"{where}: {exc}") from None
            records.append(OfficialRecord(row[id_col].strip(), role, outcome, triple))
    return records


def evaluations_to_csv(evaluations: Iterable[CandidateEvaluation]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RESULT_COLUMNS)
    for ev in evaluations:
        o = ev.outcome
        writer.writerow([
            ev.candidate_id,
            ev.role.value,
            ev.condition.value,
            *(format_number(v) for v in ev.triple.as_tuple()),
            *(int(f) for f in (o.pass_a, o.pass_b, o.pass_c, o.overall)),
        ])
    return buf.getvalue()


def load_evaluations(path: str | os.PathLike[str]) -> list[CandidateEvaluation]:
    reader, fh = _open_csv(path)
    out = []
    with fh:
        _require_columns(reader, path, *RESULT_COLUMNS[:-1])
        for row in reader:
            try:
                outcome = EvaluationOutcome(*(parse_flag(row[k]) for k in ("pass_a", "pass_b", "pass_c")))
                triple = _triple_from(row)
                if triple is None:
                    raise DataError("missing indicator values")
                out.append(
                    CandidateEvaluation(
                        row["candidate_id"].strip(),
                        Role.parse(row["role"]),
                        Condition(row["condition"].strip().upper()),
                        triple,
                        outcome,
                    )
                )
            except (ValueError, KeyError) as exc:
                raise DataError(f"{path}:{reader.line_num}: {exc}") from None
    return out
