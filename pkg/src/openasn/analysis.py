"""Agreement, flip and threshold-sweep comparisons against official outcomes."""

from __future__ import annotations

import csv
import io
import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction

from .evaluation import CandidateEvaluation, Comparison, evaluate, scale_thresholds
from .model import Candidate, Condition, EvaluationOutcome, IndicatorTriple, Role, ThresholdSet

__all__ = [
    "ROWS",
    "ROW_LABELS",
    "AgreementReport",
    "DatasetStats",
    "FlipReport",
    "OfficialRecord",
    "RoleMismatch",
    "RoleStats",
    "SweepSeries",
    "UnmatchedCandidate",
    "agreement_table",
    "dataset_stats",
    "default_ratios",
    "flip_table",
    "format_pct",
    "threshold_sweep",
]

logger = logging.getLogger(__name__)

# Row order follows EvaluationOutcome.flags(): overall, then A, B, C.
ROWS = ("overall", "journals", "citations", "h-index")
ROW_LABELS = {"overall": "Overall", "journals": "Journals", "citations": "Citations", "h-index": "h-index"}
INDICATOR_ROWS = ROWS[1:]


class UnmatchedCandidate(KeyError):
    pass


class RoleMismatch(ValueError):
    pass


@dataclass(frozen=True)
class OfficialRecord:
    candidate_id: str
    role: Role
    outcome: EvaluationOutcome
    triple: IndicatorTriple | None = None


def pct(count: int, total: int) -> Fraction:
    return Fraction(100 * count, total) if total else Fraction(0)


def format_pct(value: Fraction) -> str:
    """Two decimals, halves rounded up."""
    exact = Decimal(value.numerator) / Decimal(value.denominator)
    return str(exact.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


@dataclass
class AgreementReport:
    """Counts of agreeing candidates per condition and row; percentages are exact fractions."""

    agree: dict[Condition, dict[str, int]] = field(default_factory=dict)
    cohort_sizes: dict[Condition, int] = field(default_factory=dict)

    @property
    def cohort_size(self) -> int:
        return max(self.cohort_sizes.values(), default=0)

    def percentage(self, condition: Condition, row: str) -> Fraction:
        return pct(self.agree[condition][row], self.cohort_sizes[condition])

    @property
    def conditions(self) -> list[Condition]:
        return [c for c in Condition if c in self.agree]

    def to_rows(self) -> list[list[str]]:
        rows = [["", *(c.value for c in self.conditions)]]
        for row in ROWS:
            rows.append([ROW_LABELS[row], *(format_pct(self.percentage(c, row)) for c in self.conditions)])
        return rows


@dataclass
class FlipReport:
    plus: dict[Condition, dict[str, int]] = field(default_factory=dict)
    minus: dict[Condition, dict[str, int]] = field(default_factory=dict)
    cohort_sizes: dict[Condition, int] = field(default_factory=dict)

    def plus_pct(self, condition: Condition, row: str) -> Fraction:
        return pct(self.plus[condition][row], self.cohort_sizes[condition])

    def minus_pct(self, condition: Condition, row: str) -> Fraction:
        return pct(self.minus[condition][row], self.cohort_sizes[condition])

    @property
    def conditions(self) -> list[Condition]:
        return [c for c in Condition if c in self.plus]

    def to_rows(self) -> list[list[str]]:
        header = [""]
        for c in self.conditions:
            header += [f"{c.value} +", f"{c.value} -"]
        rows = [header]
        for row in ROWS:
            line = [ROW_LABELS[row].lower()]
            for c in self.conditions:
                line += [format_pct(self.plus_pct(c, row)), format_pct(self.minus_pct(c, row))]
            rows.append(line)
        return rows


@dataclass
class SweepSeries:
    ratios: list[float]
    thresholds: list[ThresholdSet]
    agreement: dict[str, list[Fraction]]
    cohort_size: int

    def to_rows(self) -> list[list[str]]:
        rows = [["ratio", "indicator", "agreement_pct"]]
        for row in ROWS:
            for ratio, value in zip(self.ratios, self.agreement[row]):
                rows.append([f"{ratio:.2f}", row, format_pct(value)])
        return rows


def _pair_up(
    open_evals: Iterable[CandidateEvaluation],
    official: Iterable[OfficialRecord],
    drop_unmatched: bool,
) -> dict[Condition, list[tuple[EvaluationOutcome, EvaluationOutcome]]]:
    by_id = {rec.candidate_id: rec for rec in official}
    grouped: dict[Condition, list[tuple[EvaluationOutcome, EvaluationOutcome]]] = {}
    seen: dict[Condition, set[str]] = {}
    for ev in open_evals:
        rec = by_id.get(ev.candidate_id)
        if rec is None:
            if not drop_unmatched:
                raise UnmatchedCandidate(f"no official record for candidate {ev.candidate_id!r}")
            logger.warning("dropping %s: no official record", ev.candidate_id)
            continue
        if rec.role is not ev.role:
            raise RoleMismatch(
                f"candidate {ev.candidate_id!r} is {ev.role.value} in results "
                f"but {rec.role.value} in the official records"
            )
        grouped.setdefault(ev.condition, []).append((ev.outcome, rec.outcome))
        seen.setdefault(ev.condition, set()).add(ev.candidate_id)
    for condition, ids in seen.items():
        missing = sorted(set(by_id) - ids)
        if missing:
            if not drop_unmatched:
                raise UnmatchedCandidate(
                    f"official records without {condition.value} results: {', '.join(missing[:5])}"
                )
            logger.warning("dropping %d official records without %s results", len(missing), condition.value)
    return grouped


def agreement_table(
    open_evals: Sequence[CandidateEvaluation],
    official: Sequence[OfficialRecord],
    drop_unmatched: bool = False,
) -> AgreementReport:
    report = AgreementReport()
    for condition, pairs in _pair_up(open_evals, official, drop_unmatched).items():
        counts = dict.fromkeys(ROWS, 0)
        for mine, theirs in pairs:
            for row, a, b in zip(ROWS, mine.flags(), theirs.flags()):
                counts[row] += a == b
        report.agree[condition] = counts
        report.cohort_sizes[condition] = len(pairs)
    return report


def flip_table(
    open_evals: Sequence[CandidateEvaluation],
    official: Sequence[OfficialRecord],
    drop_unmatched: bool = False,
) -> FlipReport:
    report = FlipReport()
    for condition, pairs in _pair_up(open_evals, official, drop_unmatched).items():
        plus = dict.fromkeys(ROWS, 0)
        minus = dict.fromkeys(ROWS, 0)
        for mine, theirs in pairs:
            for row, a, b in zip(ROWS, mine.flags(), theirs.flags()):
                plus[row] += a and not b
                minus[row] += b and not a
        report.plus[condition] = plus
        report.minus[condition] = minus
        report.cohort_sizes[condition] = len(pairs)
    return report


def default_ratios() -> list[float]:
    return [round(0.50 + 0.05 * i, 2) for i in range(11)]


def threshold_sweep(
    open_triples: Sequence[tuple[str, IndicatorTriple]],
    official: Sequence[OfficialRecord],
    base: ThresholdSet,
    ratios: Sequence[float],
    comparison: Comparison = Comparison.GREATER_EQUAL,
    drop_unmatched: bool = False,
) -> SweepSeries:
    """Re-evaluate the open triples at each scaled threshold set.

    Only the open-data thresholds move; the official flags stay fixed.
    """
    if not ratios:
        raise ValueError("at least one ratio is required")
    ordered = sorted(ratios)
    scaled = [scale_thresholds(base, r) for r in ordered]

    by_id = {rec.candidate_id: rec for rec in official}
    pairs: list[tuple[IndicatorTriple, EvaluationOutcome]] = []
    matched: set[str] = set()
    for cid, triple in open_triples:
        rec = by_id.get(cid)
        if rec is None:
            if not drop_unmatched:
                raise UnmatchedCandidate(f"no official record for candidate {cid!r}")
            continue
        pairs.append((triple, rec.outcome))
        matched.add(cid)
    if not drop_unmatched and set(by_id) - matched:
        raise UnmatchedCandidate(f"official records without results: {sorted(set(by_id) - matched)[:5]}")

    agreement: dict[str, list[Fraction]] = {row: [] for row in ROWS}
    for thresholds in scaled:
        counts = dict.fromkeys(ROWS, 0)
        for triple, theirs in pairs:
            mine = evaluate(triple, thresholds, comparison)
            for row, a, b in zip(ROWS, mine.flags(), theirs.flags()):
                counts[row] += a == b
        for row in ROWS:
            agreement[row].append(pct(counts[row], len(pairs)))
    return SweepSeries(list(ordered), scaled, agreement, len(pairs))


@dataclass(frozen=True)
class RoleStats:
    cv_count: int = 0
    dois_dblp: int = 0
    dois_cv: int = 0
    dois_union: int = 0

    @property
    def empty(self) -> bool:
        return self.cv_count == 0

    def average(self, total: int) -> float:
        # Empty roles report 0 and are marked by ``empty``.
        return total / self.cv_count if self.cv_count else 0.0


@dataclass
class DatasetStats:
    per_role: dict[Role, RoleStats]

    def to_rows(self) -> list[list[str]]:
        rows = [["Level", "CVs", "DOI DBLP", "DOI CV", "DOI UNION"]]
        for role in (Role.ASSOCIATE, Role.FULL):
            s = self.per_role[role]
            cells = [
                f"{total} ({s.average(total):.1f})" for total in (s.dois_dblp, s.dois_cv, s.dois_union)
            ]
            rows.append([role.label, str(s.cv_count), *cells])
        return rows

    def to_csv_rows(self) -> list[list[str]]:
        rows = [[
            "level", "cvs", "dois_dblp", "dois_cv", "dois_union",
            "avg_dblp", "avg_cv", "avg_union", "empty",
        ]]
        for role in (Role.ASSOCIATE, Role.FULL):
            s = self.per_role[role]
            rows.append([
                role.value, str(s.cv_count), str(s.dois_dblp), str(s.dois_cv), str(s.dois_union),
                *(f"{s.average(t):.1f}" for t in (s.dois_dblp, s.dois_cv, s.dois_union)),
                str(s.empty).lower(),
            ])
        return rows


def dataset_stats(candidates: Iterable[Candidate]) -> DatasetStats:
    totals = {role: [0, 0, 0, 0] for role in Role}
    for cand in candidates:
        t = totals[cand.role]
        t[0] += 1
        t[1] += len(cand.dblp_dois)
        t[2] += len(cand.cv_dois)
        t[3] += len(cand.cv_dois | cand.dblp_dois)
    return DatasetStats({role: RoleStats(*t) for role, t in totals.items()})


def rows_to_csv(rows: Sequence[Sequence[str]]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def rows_to_text(rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = []
    for n, row in enumerate(rows):
        cells = [row[0].ljust(widths[0]), *(c.rjust(w) for c, w in zip(row[1:], widths[1:]))]
        lines.append("  ".join(cells).rstrip())
        if n == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


_SVG_COLOURS = {"journals": "#1f77b4", "citations": "#d62728", "h-index": "#2ca02c", "overall": "#7f7f7f"}


def sweep_svg(series: SweepSeries, rows: Sequence[str] = INDICATOR_ROWS, title: str = "") -> str:
    """Line chart of agreement against threshold ratio, one line per row."""
    width, height, margin = 640, 400, 50
    x_lo, x_hi = series.ratios[0], series.ratios[-1]
    span = (x_hi - x_lo) or 1.0

    def x(r: float) -> float:
        return margin + (r - x_lo) / span * (width - 2 * margin)

    def y(p: float) -> float:
        return height - margin - p / 100 * (height - 2 * margin)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{y(0):.1f}" x2="{width - margin}" y2="{y(0):.1f}" stroke="black"/>',
        f'<line x1="{margin}" y1="{y(0):.1f}" x2="{margin}" y2="{y(100):.1f}" stroke="black"/>',
    ]
    if title:
        parts.append(f'<text x="{width / 2:.1f}" y="20" text-anchor="middle">{_escape(title)}</text>')
    for p in range(0, 101, 20):
        parts.append(f'<text x="{margin - 6}" y="{y(p) + 4:.1f}" text-anchor="end">{p}%</text>')
    for r in series.ratios:
        parts.append(
            f'<text x="{x(r):.1f}" y="{height - margin + 16}" text-anchor="middle">{r * 100:.0f}%</text>'
        )
    for i, row in enumerate(rows):
        colour = _SVG_COLOURS.get(row, "black")
        points = " ".join(f"{x(r):.1f},{y(float(v)):.1f}" for r, v in zip(series.ratios, series.agreement[row]))
        parts.append(f'<polyline fill="none" stroke="{colour}" stroke-width="2" points="{points}"/>')
        ly = margin + 14 * i
        parts.append(f'<line x1="{width - margin - 90}" y1="{ly}" x2="{width - margin - 70}" y2="{ly}" '
                     f'stroke="{colour}" stroke-width="2"/>')
        parts.append(f'<text x="{width - margin - 64}" y="{ly + 4}">{_escape(ROW_LABELS[row])}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
