"""Local incoming-citation index built from a COCI-style CSV dump.

On-disk layout (all integers little-endian), written by :meth:`CitationIndex.save`:

``intern.bin``
    8-byte magic ``OASNINT\\0``, u32 format version, u64 DOI count, u64 length
    of the compressed block, then a zlib block holding the DOIs as UTF-8 joined
    by ``\\n`` in DoiId order.

``adjacency.bin``
    8-byte magic ``OASNADJ\\0``, u32 format version, u64 node count, u64 edge
    count, then two length-prefixed (u64) zlib blocks: the offset array
    (node count + 1 u64 values) and the payload of citing DoiIds (u32), grouped
    by cited DoiId and ascending within each group.
"""

from __future__ import annotations

import csv
import logging
import os
import struct
import zlib
from array import array
from collections.abc import Iterable
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import TextIO

import numpy as np

from .fsutil import atomic_write
from .model import Doi, MalformedDoi, normalize_doi

__all__ = [
    "CitationIndex",
    "CsvSyntaxError",
    "IndexBuildReport",
    "IndexFormatError",
    "IndexNotLoaded",
    "MissingColumn",
    "build_index",
]

logger = logging.getLogger(__name__)

INTERN_FILE = "intern.bin"
ADJACENCY_FILE = "adjacency.bin"
INTERN_MAGIC = b"OASNINT\0"
ADJACENCY_MAGIC = b"OASNADJ\0"
FORMAT_VERSION = 1

DEFAULT_CITING_COLUMN = "citing"
DEFAULT_CITED_COLUMN = "cited"


class MissingColumn(KeyError):
    pass


class CsvSyntaxError(ValueError):
    def __init__(self, line: int, detail: str = "") -> None:
        super().__init__(f"CSV syntax error at line {line}: {detail}".rstrip(": "))
        self.line = line


class IndexNotLoaded(RuntimeError):
    pass


class IndexFormatError(ValueError):
    pass


@dataclass
class IndexBuildReport:
    rows_read: int = 0
    edges_kept: int = 0
    duplicates_dropped: int = 0
    self_loops_dropped: int = 0
    malformed_dropped: int = 0
    distinct_dois: int = 0

    def balanced(self) -> bool:
        dropped = self.duplicates_dropped + self.self_loops_dropped + self.malformed_dropped
        return self.rows_read == self.edges_kept + dropped

    def as_dict(self) -> dict[str, int]:
        return asdict(self)


class CitationIndex:
    """Immutable-after-build map from a cited DOI to its distinct citing DOIs."""

    def __init__(self) -> None:
        self._dois: list[str] | None = None
        self._ids: dict[str, int] | None = None
        self._offsets: np.ndarray | None = None
        self._citing: np.ndarray | None = None

    @property
    def loaded(self) -> bool:
        return self._dois is not None

    def _require(self) -> None:
        if not self.loaded:
            raise IndexNotLoaded("citation index has not been built or loaded")

    # -- building -------------------------------------------------------

    def ingest_csv(
        self,
        stream: TextIO,
        citing_col: str = DEFAULT_CITING_COLUMN,
        cited_col: str = DEFAULT_CITED_COLUMN,
    ) -> IndexBuildReport:
        reader = csv.reader(stream, strict=True)
        try:
            header = next(reader, None)
        except csv.Error as exc:
            raise CsvSyntaxError(reader.line_num, str(exc)) from exc
        if header is None:
            raise MissingColumn(f"empty CSV, expected columns {citing_col!r} and {cited_col!r}")
        header = [h.strip().lstrip("\ufeff") for h in header]
        for col in (citing_col, cited_col):
            if col not in header:
                raise MissingColumn(f"column {col!r} not in header {header}")
        ci, di = header.index(citing_col), header.index(cited_col)

        report = IndexBuildReport()
        ids: dict[str, int] = {}
        dois: list[str] = []
        keys = array("Q")

        def normalized(raw: str) -> str | None:
            # Dumps are usually already normalized; skip the regex when we can.
            if raw in ids:
                return raw
            try:
                return normalize_doi(raw)
            except MalformedDoi:
                return None

        def intern(doi: str) -> int:
            ident = ids.get(doi)
            if ident is None:
                ident = ids[doi] = len(dois)
                dois.append(doi)
            return ident

        try:
            for row in reader:
                report.rows_read += 1
                try:
                    citing, cited = normalized(row[ci]), normalized(row[di])
                except IndexError:
                    citing = cited = None
                if citing is None or cited is None:
                    report.malformed_dropped += 1
                    continue
                citing_id, cited_id = intern(citing), intern(cited)
                if citing_id == cited_id:
                    report.self_loops_dropped += 1
                    continue
                keys.append((cited_id << 32) | citing_id)
        except csv.Error as exc:
            raise CsvSyntaxError(reader.line_num, str(exc)) from exc

        packed = np.unique(np.frombuffer(keys, dtype=np.uint64)) if keys else np.zeros(0, np.uint64)
        report.duplicates_dropped = len(keys) - len(packed)
        report.edges_kept = len(packed)
        report.distinct_dois = len(dois)

        cited_ids = (packed >> np.uint64(32)).astype(np.int64)
        self._citing = (packed & np.uint64(0xFFFFFFFF)).astype(np.uint32)
        self._offsets = np.zeros(len(dois) + 1, dtype=np.uint64)
        self._offsets[1:] = np.cumsum(np.bincount(cited_ids, minlength=len(dois)))
        self._dois = dois
        self._ids = ids
        logger.info("ingested %s", report)
        return report

    # -- queries --------------------------------------------------------

    def _span(self, doi: str) -> tuple[int, int] | None:
        self._require()
        assert self._ids is not None and self._offsets is not None
        ident = self._ids.get(doi)
        if ident is None:
            return None
        return int(self._offsets[ident]), int(self._offsets[ident + 1])

    def incoming_count(self, doi: Doi) -> int:
        span = self._span(doi)
        return 0 if span is None else span[1] - span[0]

    def incoming_list(self, doi: Doi) -> list[Doi]:
        span = self._span(doi)
        if span is None:
            return []
        assert self._citing is not None and self._dois is not None
        return [Doi(self._dois[i]) for i in self._citing[span[0]:span[1]]]

    def citation_counts(self, dois: Iterable[Doi]) -> dict[Doi, int]:
        return {doi: self.incoming_count(doi) for doi in dois}

    def doi_id(self, doi: Doi) -> int | None:
        self._require()
        assert self._ids is not None
        return self._ids.get(doi)

    @property
    def distinct_dois(self) -> int:
        self._require()
        assert self._dois is not None
        return len(self._dois)

    @property
    def edge_count(self) -> int:
        self._require()
        assert self._citing is not None
        return len(self._citing)

    def storage_cells(self) -> int:
        """Number of stored array cells: one per DOI, per edge and per offset."""
        self._require()
        assert self._dois is not None and self._offsets is not None and self._citing is not None
        return len(self._dois) + len(self._offsets) + len(self._citing)

    # -- persistence ----------------------------------------------------

    def save(self, directory: str | os.PathLike[str]) -> None:
        self._require()
        assert self._dois is not None and self._offsets is not None and self._citing is not None
        out = Path(directory)
        out.mkdir(parents=True, exist_ok=True)

        names = zlib.compress("\n".join(self._dois).encode("utf-8"))
        intern_blob = (
            INTERN_MAGIC
            + struct.pack("<IQQ", FORMAT_VERSION, len(self._dois), len(names))
            + names
        )
        offsets = zlib.compress(self._offsets.astype("<u8").tobytes())
        payload = zlib.compress(self._citing.astype("<u4").tobytes())
        adjacency_blob = (
            ADJACENCY_MAGIC
            + struct.pack("<IQQ", FORMAT_VERSION, len(self._dois), len(self._citing))
            + struct.pack("<Q", len(offsets))
            + offsets
            + struct.pack("<Q", len(payload))
            + payload
        )
        atomic_write(out / INTERN_FILE, intern_blob)
        atomic_write(out / ADJACENCY_FILE, adjacency_blob)

    @classmethod
    def load(cls, directory: str | os.PathLike[str]) -> CitationIndex:
        src = Path(directory)
        intern_blob = (src / INTERN_FILE).read_bytes()
        adjacency_blob = (src / ADJACENCY_FILE).read_bytes()

        if intern_blob[:8] != INTERN_MAGIC:
            raise IndexFormatError(f"{src / INTERN_FILE}: bad magic")
        version, count, size = struct.unpack_from("<IQQ", intern_blob, 8)
        if version != FORMAT_VERSION:
            raise IndexFormatError(f"unsupported intern table version {version}")
        start = 8 + struct.calcsize("<IQQ")
        text = zlib.decompress(intern_blob[start:start + size]).decode("utf-8")
        dois = text.split("\n") if count else []
        if len(dois) != count:
            raise IndexFormatError("intern table count mismatch")

        if adjacency_blob[:8] != ADJACENCY_MAGIC:
            raise IndexFormatError(f"{src / ADJACENCY_FILE}: bad magic")
        version, nodes, edges = struct.unpack_from("<IQQ", adjacency_blob, 8)
        if version != FORMAT_VERSION:
            raise IndexFormatError(f"unsupported adjacency version {version}")
        if nodes != count:
            raise IndexFormatError("adjacency node count does not match intern table")
        pos = 8 + struct.calcsize("<IQQ")
        blocks = []
        for _ in range(2):
            (length,) = struct.unpack_from("<Q", adjacency_blob, pos)
            pos += 8
            blocks.append(zlib.decompress(adjacency_blob[pos:pos + length]))
            pos += length
        offsets = np.frombuffer(blocks[0], dtype="<u8").astype(np.uint64)
        citing = np.frombuffer(blocks[1], dtype="<u4").astype(np.uint32)
        if len(offsets) != nodes + 1 or len(citing) != edges:
            raise IndexFormatError("adjacency arrays truncated")

        index = cls()
        index._dois = dois
        index._ids = {doi: i for i, doi in enumerate(dois)}
        index._offsets = offsets
        index._citing = citing
        return index


def build_index(
    csv_path: str | os.PathLike[str],
    out_dir: str | os.PathLike[str],
    citing_col: str = DEFAULT_CITING_COLUMN,
    cited_col: str = DEFAULT_CITED_COLUMN,
) -> tuple[CitationIndex, IndexBuildReport]:
    """Ingest ``csv_path`` and persist the index under ``out_dir``."""
    index = CitationIndex()
    with open(csv_path, newline="", encoding="utf-8") as fh:
        report = index.ingest_csv(fh, citing_col, cited_col)
    index.save(out_dir)
    return index, report
