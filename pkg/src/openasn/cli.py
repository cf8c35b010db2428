"""Command-line interface: ``openasn <command> ...``.

Exit codes: 0 success, 1 data or runtime error, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections.abc import Sequence
from decimal import Decimal, InvalidOperation
from pathlib import Path

from . import __version__
from .analysis import (
    RoleMismatch,
    UnmatchedCandidate,
    agreement_table,
    dataset_stats,
    flip_table,
    rows_to_csv,
    rows_to_text,
    sweep_svg,
    threshold_sweep,
)
from .citindex import CsvSyntaxError, IndexFormatError, MissingColumn, build_index
from .config import ConfigError, load_config
from .evaluation import Comparison, InvalidRatio, scale_thresholds
from .extract import extract_dois
from .formats import (
    DataError,
    PublicationMeta,
    load_evaluations,
    load_official,
    load_roster,
    metadata_to_csv,
)
from .fsutil import atomic_write
from .harvest import (
    ACCEPT_SCORE,
    ConfigurationError,
    EndpointError,
    Harvester,
    NetworkError,
    NotFound,
    Resolution,
    UnknownPerson,
)
from .model import Condition, Role
from .pipeline import EmptyCohort, PipelineError, export_results, run_cohort

logger = logging.getLogger("openasn")

EXIT_OK, EXIT_DATA, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def parse_ratios(text: str) -> list[float]:
    """``start:stop:step`` (inclusive) or a comma-separated list."""
    try:
        if ":" in text:
            start, stop, step = (Decimal(p) for p in text.split(":"))
            if step <= 0 or start > stop:
                raise UsageError(f"bad ratio range {text!r}")
            values, current = [], start
            while current <= stop:
                values.append(float(current))
                current += step
        else:
            values = [float(Decimal(p)) for p in text.split(",") if p.strip()]
    except (InvalidOperation, ValueError):
        raise UsageError(f"cannot parse ratios {text!r}") from None
    if not values or any(not 0 < v <= 1 for v in values):
        raise UsageError(f"ratios must lie in (0, 1]: {text!r}")
    return values


# -- commands ---------------------------------------------------------------


def cmd_extract(args: argparse.Namespace) -> int:
    out_dir = Path(args.out)
    status = EXIT_OK
    for name in args.inputs:
        path = Path(name)
        try:
            text = path.read_text(encoding="utf-8", errors="replace")
        except OSError as exc:
            print(f"error: cannot read {path}: {exc.strerror}", file=sys.stderr)
            status = EXIT_DATA
            continue
        result = extract_dois(text)
        target = out_dir / f"{path.stem}.dois.txt"
        atomic_write(target, "".join(f"{doi}\n" for doi in result.dois))
        print(f"{path}: {len(result.dois)} DOIs -> {target}")
        if not result.dois:
            print(f"warning: no DOIs found in {path}", file=sys.stderr)
        for raw, reason in result.rejected:
            logger.info("%s: rejected %r (%s)", path, raw, reason)
    return status


def cmd_index_build(args: argparse.Namespace) -> int:
    _, report = build_index(args.csv, args.out, args.citing_col, args.cited_col)
    for key, value in report.as_dict().items():
        print(f"{key}: {value}")
    atomic_write(Path(args.out) / "build_report.json", json.dumps(report.as_dict(), indent=2) + "\n")
    return EXIT_OK


def cmd_harvest(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    settings = config.harvest
    if args.cache:
        settings.cache_root = Path(args.cache)
    harvester = Harvester.from_settings(settings)
    roster = load_roster(args.roster)
    out_dir = Path(args.out)
    metadata: dict[str, PublicationMeta] = {}
    tallies = {"low_score_skipped": 0, "no_dblp_match": 0, "not_resolving": 0, "resolve_transient": 0,
               "crossref_missing": 0, "crossref_failed": 0}
    rows = []
    for cand in roster:
        dblp_dois = set(cand.dblp_dois)
        if not dblp_dois and cand.name:
            matches = harvester.dblp.search_person(cand.name, cand.orcid)
            if not matches:
                tallies["no_dblp_match"] += 1
                logger.warning("%s: no DBLP match for %r", cand.id, cand.name)
            elif matches[0].score < ACCEPT_SCORE and not args.confirm_low_score:
                tallies["low_score_skipped"] += 1
                logger.warning("%s: best DBLP match %s scored %.2f; pass --confirm-low-score to accept",
                               cand.id, matches[0].source_person_id, matches[0].score)
            else:
                for work in harvester.dblp.publications(matches[0].source_person_id):
                    dblp_dois.add(work.doi)
                    metadata[work.doi] = PublicationMeta(work.type_label, None, work.year)

        cv_dois = set(cand.cv_dois)
        if not args.no_validate:
            for doi in sorted(cv_dois):
                status = harvester.doi.resolve(doi)
                if status.kind is Resolution.NOT_FOUND:
                    tallies["not_resolving"] += 1
                    logger.warning("%s: %s does not resolve; dropped", cand.id, doi)
                    cv_dois.discard(doi)
                elif status.kind is Resolution.TRANSIENT_FAILURE:
                    tallies["resolve_transient"] += 1
                    logger.warning("%s: could not verify %s (%s); kept", cand.id, doi, status.detail)

        for doi in sorted(cv_dois | dblp_dois):
            known = metadata.get(doi, PublicationMeta())
            try:
                work = harvester.crossref.work(doi)
            except NotFound:
                tallies["crossref_missing"] += 1
                metadata[doi] = known
                continue
            except (NetworkError, EndpointError) as exc:
                tallies["crossref_failed"] += 1
                logger.warning("crossref lookup failed for %s: %s", doi, exc)
                metadata[doi] = known
                continue
            metadata[doi] = PublicationMeta(known.dblp_kind, work.type_label or None, known.year or work.year)

        cv_file, dblp_file = f"dois/{cand.id}.cv.txt", f"dois/{cand.id}.dblp.txt"
        atomic_write(out_dir / cv_file, "".join(f"{d}\n" for d in sorted(cv_dois)))
        atomic_write(out_dir / dblp_file, "".join(f"{d}\n" for d in sorted(dblp_dois)))
        rows.append([cand.id, cand.role.value, cand.name, cand.orcid or "",
                     "" if cand.first_pub_year is None else str(cand.first_pub_year), cv_file, dblp_file])
        print(f"{cand.id}: {len(cv_dois)} CV DOIs, {len(dblp_dois)} DBLP DOIs")

    header = ["id", "role", "name", "orcid", "first_pub_year", "cv_dois_path", "dblp_dois_path"]
    atomic_write(out_dir / "roster.csv", rows_to_csv([header, *rows]))
    atomic_write(out_dir / "metadata.csv", metadata_to_csv(metadata))
    report = {"tallies": tallies, "requests": harvester.stats(),
              "dblp_dropped": dict(harvester.dblp.drop_stats)}
    atomic_write(out_dir / "harvest_report.json", json.dumps(report, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    if config.citation_source is None:
        raise ConfigError("[citations] needs `index = <dir>` for source = dump")
    roster = load_roster(args.roster)
    missing = sorted({c.role for c in roster} - set(config.thresholds), key=lambda r: r.value)
    if missing:
        raise ConfigError(f"no thresholds for role(s): {', '.join(r.value for r in missing)}")
    result = run_cohort(roster, config)
    out = Path(args.out)
    atomic_write(out / "results.csv", export_results(result, "csv"))
    atomic_write(out / "results.json", export_results(result, "json"))
    report = {**result.report, "comparison": config.comparison.value}
    atomic_write(out / "run_report.json", json.dumps(report, indent=2, sort_keys=True) + "\n")
    print(f"{len(result.evaluations)} evaluations for {len(roster)} candidates written to {out}")
    return EXIT_OK


def _by_role(items, role):
    return [x for x in items if x.role is role]


def _load_comparison_inputs(args):
    config = load_config(args.config)
    open_evals = load_evaluations(args.open)
    official = load_official(args.official, config.thresholds, config.comparison)
    roles = [r for r in (Role.FULL, Role.ASSOCIATE) if _by_role(open_evals, r) or _by_role(official, r)]
    if args.role:
        roles = [Role.parse(args.role)]
    print(f"comparison: value {'>=' if config.comparison is Comparison.GREATER_EQUAL else '>'} threshold")
    return config, open_evals, official, roles


def _emit_table(role: Role, n: int, rows, csv_chunks: list[str]) -> None:
    print(f"{role.label} (n={n})")
    print(rows_to_text(rows))
    csv_chunks.append(rows_to_csv([["role", "row", *rows[0][1:]], *([role.value, *r] for r in rows[1:])]))


def cmd_agree(args: argparse.Namespace) -> int:
    _, open_evals, official, roles = _load_comparison_inputs(args)
    chunks: list[str] = []
    for role in roles:
        report = agreement_table(_by_role(open_evals, role), _by_role(official, role), args.drop_unmatched)
        _emit_table(role, report.cohort_size, report.to_rows(), chunks)
    if args.out:
        atomic_write(args.out, _merge_csv(chunks))
    return EXIT_OK


def cmd_flips(args: argparse.Namespace) -> int:
    _, open_evals, official, roles = _load_comparison_inputs(args)
    chunks: list[str] = []
    for role in roles:
        report = flip_table(_by_role(open_evals, role), _by_role(official, role), args.drop_unmatched)
        _emit_table(role, max(report.cohort_sizes.values(), default=0), report.to_rows(), chunks)
    if args.out:
        atomic_write(args.out, _merge_csv(chunks))
    return EXIT_OK


def _merge_csv(chunks: list[str]) -> str:
    if not chunks:
        return ""
    header, *_ = chunks[0].splitlines(keepends=True)
    body = [line for chunk in chunks for line in chunk.splitlines(keepends=True)[1:]]
    return header + "".join(body)


def cmd_sweep(args: argparse.Namespace) -> int:
    config, open_evals, official, roles = _load_comparison_inputs(args)
    ratios = parse_ratios(args.ratios)
    conditions = [Condition(args.condition.upper())] if args.condition else list(Condition)
    out = Path(args.out)
    rows = [["role", "condition", "ratio", "indicator", "agreement_pct"]]
    threshold_rows = [["role", "ratio", "a", "b", "c"]]
    for role in roles:
        base = config.thresholds.get(role)
        if base is None:
            raise ConfigError(f"no thresholds for {role.value}")
        role_official = _by_role(official, role)
        for condition in conditions:
            triples = [(ev.candidate_id, ev.triple) for ev in _by_role(open_evals, role)
                       if ev.condition is condition]
            if not triples:
                continue
            series = threshold_sweep(triples, role_official, base, ratios, config.comparison,
                                     args.drop_unmatched)
            rows += [[role.value, condition.value, *r] for r in series.to_rows()[1:]]
            if args.svg:
                name = f"sweep_{role.value}_{condition.value}.svg"
                atomic_write(out / name, sweep_svg(series, title=f"{role.label}, {condition.value}"))
        for ratio in sorted(ratios):
            t = scale_thresholds(base, ratio)
            threshold_rows.append([role.value, f"{ratio:.2f}", str(t.t_a), str(t.t_b), str(t.t_c)])
            logger.info("%s ratio %.2f: thresholds (%d, %d, %d)", role.value, ratio, t.t_a, t.t_b, t.t_c)
    atomic_write(out / "sweep.csv", rows_to_csv(rows))
    atomic_write(out / "sweep_thresholds.csv", rows_to_csv(threshold_rows))
    print(f"{len(rows) - 1} sweep rows written to {out / 'sweep.csv'}")
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    stats = dataset_stats(load_roster(args.roster))
    print(rows_to_text(stats.to_rows()), end="")
    if args.out:
        atomic_write(args.out, rows_to_csv(stats.to_csv_rows()))
    return EXIT_OK


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="openasn", description="Evaluate habilitation candidates with open bibliographic data."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("extract", help="extract DOIs from plain-text CVs")
    p.add_argument("--in", dest="inputs", nargs="+", required=True, metavar="TXT", help="plain-text CV files")
    p.add_argument("--out", required=True, help="output directory for <name>.dois.txt files")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("harvest", help="collect DBLP publications, validate DOIs, fetch Crossref types")
    p.add_argument("--roster", required=True)
    p.add_argument("--cache", help="cache directory (overrides config)")
    p.add_argument("--config", help="INI config (default: packaged defaults)")
    p.add_argument("--out", default="harvest", help="output directory (default: harvest)")
    p.add_argument("--confirm-low-score", action="store_true",
                   help=f"accept DBLP matches scoring below {ACCEPT_SCORE}")
    p.add_argument("--no-validate", action="store_true", help="skip DOI proxy validation of CV DOIs")
    p.set_defaults(func=cmd_harvest)

    p = sub.add_parser("index", help="local citation index")
    isub = p.add_subparsers(dest="index_command", required=True, metavar="action")
    b = isub.add_parser("build", help="ingest a COCI-style CSV dump")
    b.add_argument("--csv", required=True, help="CSV dump with a header row")
    b.add_argument("--out", required=True, help="index directory")
    b.add_argument("--citing-col", default="citing")
    b.add_argument("--cited-col", default="cited")
    b.set_defaults(func=cmd_index_build)

    p = sub.add_parser("run", help="evaluate the roster under CCV, CDBLP and CU")
    p.add_argument("--roster", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_run)

    for name, func, what in (("agree", cmd_agree, "agreement percentages"),
                             ("flips", cmd_flips, "'+' and '-' flip percentages")):
        p = sub.add_parser(name, help=f"{what} against official outcomes")
        p.add_argument("--open", required=True, help="results.csv from `run`")
        p.add_argument("--official", required=True, help="official outcomes CSV")
        p.add_argument("--config", help="INI config for thresholds and comparison")
        p.add_argument("--role", help="restrict to one role (full|associate)")
        p.add_argument("--drop-unmatched", action="store_true",
                       help="drop candidates present on only one side instead of failing")
        p.add_argument("--out", help="also write the table as CSV")
        p.set_defaults(func=func)

    p = sub.add_parser("sweep", help="agreement while scaling the open-data thresholds")
    p.add_argument("--open", required=True)
    p.add_argument("--official", required=True)
    p.add_argument("--ratios", default="0.5:1.0:0.05", help="start:stop:step or a,b,c (default 0.5:1.0:0.05)")
    p.add_argument("--config")
    p.add_argument("--role")
    p.add_argument("--condition", help="CCV, CDBLP or CU (default: all)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--svg", action="store_true", help="also draw one SVG chart per role and condition")
    p.add_argument("--drop-unmatched", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("stats", help="dataset statistics per role")
    p.add_argument("--roster", required=True)
    p.add_argument("--out", help="also write CSV")
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (ConfigError, ConfigurationError, UsageError, InvalidRatio) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, UnmatchedCandidate, RoleMismatch, MissingColumn, CsvSyntaxError,
            IndexFormatError, EmptyCohort, PipelineError, UnknownPerson, NetworkError,
            EndpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        where = f" {exc.filename}" if exc.filename else ""
        print(f"error:{where} {exc.strerror or exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
