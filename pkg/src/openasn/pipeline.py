"""End-to-end run: condition sets, citation counts, indicators, evaluation."""

from __future__ import annotations

import json
import logging
import threading
from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

from .analysis import DatasetStats, RoleStats, dataset_stats
from .citindex import CitationIndex
from .evaluation import (
    RECONCILED_THRESHOLDS,
    CandidateEvaluation,
    Comparison,
    build_condition_sets,
    evaluate,
)
from .formats import PublicationMeta, evaluations_to_csv
from .harvest import CociClient, CrossrefClient, HarvestSettings, NotFound
from .indicators import (
    NormalizationStrategy,
    ScientificAge,
    classify_publication,
    compute_indicators,
    scientific_age,
)
from .model import (
    Candidate,
    Condition,
    Doi,
    EvaluationOutcome,
    IndicatorTriple,
    Publication,
    Role,
    Source,
    ThresholdSet,
)

__all__ = [
    "CitationCounter",
    "CitationSourceSpec",
    "CohortResult",
    "EmptyCohort",
    "MetadataSource",
    "MetadataTable",
    "CrossrefMetadata",
    "PipelineConfig",
    "PipelineError",
    "export_results",
    "import_results",
    "run_cohort",
]

logger = logging.getLogger(__name__)


class EmptyCohort(ValueError):
    pass


class PipelineError(RuntimeError):
    def __init__(self, candidate_id: str, cause: BaseException) -> None:
        super().__init__(f"candidate {candidate_id}: {cause}")
        self.candidate_id = candidate_id
        self.cause = cause


class CitationCounter(Protocol):
    def citation_counts(self, dois: Iterable[Doi]) -> dict[Doi, int]: ...


class MetadataSource(Protocol):
    def lookup(self, doi: Doi) -> PublicationMeta: ...


class MetadataTable:
    """Metadata from a pre-harvested table; unknown DOIs have no types."""

    def __init__(self, table: Mapping[Doi, PublicationMeta] | None = None) -> None:
        self.table = dict(table or {})

    def lookup(self, doi: Doi) -> PublicationMeta:
        return self.table.get(doi, PublicationMeta())


class CrossrefMetadata:
    """Table first, then a Crossref lookup for DOIs the table has no type for."""

    def __init__(self, client: CrossrefClient, table: Mapping[Doi, PublicationMeta] | None = None) -> None:
        self.client = client
        self.table = dict(table or {})

    def lookup(self, doi: Doi) -> PublicationMeta:
        known = self.table.get(doi, PublicationMeta())
        if known.crossref_type:
            return known
        try:
            work = self.client.work(doi)
        except NotFound:
            return known
        return PublicationMeta(known.dblp_kind, work.type_label or None, known.year or work.year)


@dataclass(frozen=True)
class CitationSourceSpec:
    kind: str = "dump"  # "dump" (local index directory) or "rest" (COCI API)
    path: Path | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("dump", "rest"):
            raise ValueError(f"unknown citation source {self.kind!r}")
        if self.kind == "dump" and self.path is None:
            raise ValueError("a local dump citation source needs an index path")


@dataclass
class PipelineConfig:
    reference_year: int = 2016
    normalization: NormalizationStrategy = field(default_factory=NormalizationStrategy)
    thresholds: dict[Role, ThresholdSet] = field(default_factory=lambda: dict(RECONCILED_THRESHOLDS))
    citation_source: CitationSourceSpec | None = None
    comparison: Comparison = Comparison.GREATER_EQUAL
    harvest: HarvestSettings = field(default_factory=HarvestSettings)
    metadata_path: Path | None = None
    metadata_lookup: str = "file"  # "file" or "crossref"
    parallelism: int = 1


@dataclass
class CohortResult:
    evaluations: list[CandidateEvaluation]
    stats: DatasetStats
    report: dict[str, int] = field(default_factory=dict, compare=False)

    def get(self, candidate_id: str, condition: Condition) -> CandidateEvaluation:
        for ev in self.evaluations:
            if ev.candidate_id == candidate_id and ev.condition is condition:
                return ev
        raise KeyError((candidate_id, condition))


def _citation_counter(config: PipelineConfig) -> CitationCounter:
    spec = config.citation_source
    if spec is None:
        raise ValueError("no citation source configured")
    if spec.kind == "dump":
        assert spec.path is not None
        return CitationIndex.load(spec.path)
    return CociClient(config.harvest)


def _metadata_source(config: PipelineConfig) -> MetadataSource:
    from .formats import load_metadata

    table = load_metadata(config.metadata_path) if config.metadata_path else {}
    if config.metadata_lookup == "crossref":
        return CrossrefMetadata(CrossrefClient(config.harvest), table)
    return MetadataTable(table)


def _evaluate_candidate(
    cand: Candidate,
    config: PipelineConfig,
    citations: CitationCounter,
    metadata: MetadataSource,
    tally: Counter[str],
    tally_lock: threading.Lock,
) -> list[CandidateEvaluation]:
    thresholds = config.thresholds[cand.role]
    sets = build_condition_sets(cand.cv_dois, cand.dblp_dois)
    union = sorted(sets.cu)

    local: Counter[str] = Counter()
    metas: dict[Doi, PublicationMeta] = {}
    for doi in union:
        try:
            metas[doi] = metadata.lookup(doi)
        except Exception as exc:  # noqa: BLE001 - a failed lookup only loses the venue type
            logger.warning("metadata lookup failed for %s (%s): %s", doi, cand.id, exc)
            local["metadata_failures"] += 1
            metas[doi] = PublicationMeta()
        local["metadata_lookups"] += 1
    counts = citations.citation_counts(union)

    if cand.first_pub_year is not None:
        age = scientific_age(cand.first_pub_year, config.reference_year)
    else:
        years = [m.year for m in metas.values() if m.year is not None and m.year <= config.reference_year]
        if years:
            age = scientific_age(min(years), config.reference_year)
        else:
            local["age_unknown"] += 1
            age = ScientificAge(1)

    pubs = {}
    for doi in union:
        meta = metas[doi]
        venue = classify_publication(meta.dblp_kind, meta.crossref_type)
        sources = frozenset(
            s for s, members in ((Source.CV, sets.ccv), (Source.DBLP, sets.cdblp)) if doi in members
        )
        pubs[doi] = Publication(doi, meta.year, venue, sources)

    out = []
    for condition in Condition:
        selected = [pubs[doi] for doi in sorted(sets.for_condition(condition))]
        triple = compute_indicators(selected, counts, age, config.normalization)
        out.append(
            CandidateEvaluation(cand.id, cand.role, condition, triple, evaluate(triple, thresholds, config.comparison))
        )
    with tally_lock:
        tally.update(local)
    return out


def run_cohort(
    candidates: Sequence[Candidate],
    config: PipelineConfig,
    citations: CitationCounter | None = None,
    metadata: MetadataSource | None = None,
) -> CohortResult:
    """Evaluate every candidate under CCV, CDBLP and CU.

    ``citations`` and ``metadata`` default to the sources named in ``config``.
    Results are sorted by candidate id, then condition.
    """
    if not candidates:
        raise EmptyCohort("the roster has no candidates")
    missing = sorted({c.role.value for c in candidates} - {r.value for r in config.thresholds})
    if missing:
        raise KeyError(f"no thresholds configured for role(s): {', '.join(missing)}")
    citations = citations if citations is not None else _citation_counter(config)
    metadata = metadata if metadata is not None else _metadata_source(config)

    tally: Counter[str] = Counter()
    lock = threading.Lock()

    def work(cand: Candidate) -> list[CandidateEvaluation]:
        try:
            return _evaluate_candidate(cand, config, citations, metadata, tally, lock)
        except Exception as exc:
            raise PipelineError(cand.id, exc) from exc

    with ThreadPoolExecutor(max_workers=max(1, config.parallelism)) as pool:
        chunks = list(pool.map(work, candidates))

    order = {c: i for i, c in enumerate(Condition)}
    evaluations = sorted(
        (ev for chunk in chunks for ev in chunk), key=lambda ev: (ev.candidate_id, order[ev.condition])
    )
    report = {"candidates": len(candidates), "evaluations": len(evaluations), **tally}
    for c in candidates:
        if not c.cv_dois and not c.dblp_dois:
            logger.warning("candidate %s has no DOIs", c.id)
            report["candidates_without_dois"] = report.get("candidates_without_dois", 0) + 1
    return CohortResult(evaluations, dataset_stats(candidates), report)


def _result_to_dict(result: CohortResult) -> dict:
    return {
        "evaluations": [
            {
                "candidate_id": ev.candidate_id,
                "role": ev.role.value,
                "condition": ev.condition.value,
                "triple": list(ev.triple.as_tuple()),
                "pass": [ev.outcome.pass_a, ev.outcome.pass_b, ev.outcome.pass_c],
                "overall": ev.outcome.overall,
            }
            for ev in result.evaluations
        ],
        "stats": {
            role.value: {
                "cv_count": s.cv_count,
                "dois_dblp": s.dois_dblp,
                "dois_cv": s.dois_cv,
                "dois_union": s.dois_union,
            }
            for role, s in sorted(result.stats.per_role.items(), key=lambda kv: kv[0].value)
        },
    }


def export_results(result: CohortResult, format: str = "csv") -> bytes:
    if format == "csv":
        return evaluations_to_csv(result.evaluations).encode("utf-8")
    if format == "json":
        return (json.dumps(_result_to_dict(result), indent=2, sort_keys=True) + "\n").encode("utf-8")
    raise ValueError(f"unknown export format {format!r}")


def import_results(data: bytes) -> CohortResult:
    """Inverse of ``export_results(result, "json")``."""
    doc = json.loads(data.decode("utf-8"))
    evaluations = [
        CandidateEvaluation(
            item["candidate_id"],
            Role(item["role"]),
            Condition(item["condition"]),
            IndicatorTriple(*item["triple"]),
            EvaluationOutcome(*item["pass"]),
        )
        for item in doc["evaluations"]
    ]
    per_role = {Role(k): RoleStats(**v) for k, v in doc["stats"].items()}
    for role in Role:
        per_role.setdefault(role, RoleStats())
    return CohortResult(evaluations, DatasetStats(per_role))
