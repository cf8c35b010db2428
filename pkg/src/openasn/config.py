"""INI configuration for the pipeline and harvest clients."""

from __future__ import annotations

import configparser
import os
from importlib import resources
from pathlib import Path

from .evaluation import PRINTED_THRESHOLDS, RECONCILED_THRESHOLDS, Comparison
from .harvest import HarvestSettings
from .indicators import NormalizationStrategy
from .model import Role, ThresholdSet
from .pipeline import CitationSourceSpec, PipelineConfig

__all__ = ["ConfigError", "default_config_text", "load_config", "parse_config"]

ENV_PREFIX = "OPENASN_"
_ENDPOINTS = ("dblp", "crossref", "doi", "coci")
_ROLE_SECTIONS = {Role.FULL: "thresholds.full", Role.ASSOCIATE: "thresholds.associate"}


class ConfigError(ValueError):
    pass


def default_config_text() -> str:
    return resources.files("openasn").joinpath("default.ini").read_text(encoding="utf-8")


def _path(value: str, base: Path) -> Path | None:
    value = value.strip()
    if not value:
        return None
    p = Path(os.path.expanduser(value))
    return p if p.is_absolute() else base / p


def parse_config(
    text: str, base_dir: Path | None = None, env: dict[str, str] | None = None
) -> PipelineConfig:
    """Build a :class:`PipelineConfig` from INI text.

    Relative paths resolve against ``base_dir``. ``OPENASN_*`` variables in
    ``env`` override the cache root, endpoint URLs, rate limit and user agent.
    """
    base = base_dir or Path.cwd()
    env = dict(os.environ if env is None else env)
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None

    def get(section: str, key: str, fallback: str = "") -> str:
        return parser.get(section, key, fallback=fallback).strip() if parser.has_section(section) else fallback

    try:
        preset = get("thresholds", "preset")
        if preset in ("", "none"):
            thresholds: dict[Role, ThresholdSet] = {}
        elif preset == "reconciled":
            thresholds = dict(RECONCILED_THRESHOLDS)
        elif preset == "printed":
            thresholds = dict(PRINTED_THRESHOLDS)
        else:
            raise ConfigError(f"unknown threshold preset {preset!r}")
        for role, section in _ROLE_SECTIONS.items():
            if parser.has_section(section):
                s = parser[section]
                thresholds[role] = ThresholdSet(role, s.getint("a"), s.getint("b"), s.getint("c"))

        strategy_name = get("normalization", "strategy", "none").lower()
        if strategy_name == "window":
            strategy = NormalizationStrategy.window(int(get("normalization", "window_years", "10")))
        else:
            strategy = NormalizationStrategy(strategy_name)
        reference_year = int(get("normalization", "reference_year", "2016"))

        comparison = Comparison.parse(get("comparison", "operator", "ge"))

        source_kind = get("citations", "source", "dump").lower()
        index_path = _path(get("citations", "index"), base)
        citation_source = None
        if source_kind == "rest":
            citation_source = CitationSourceSpec("rest")
        elif source_kind == "dump":
            citation_source = CitationSourceSpec("dump", index_path) if index_path else None
        else:
            raise ConfigError(f"unknown citation source {source_kind!r}")
        metadata_lookup = get("citations", "metadata_lookup", "file").lower()
        if metadata_lookup not in ("file", "crossref"):
            raise ConfigError(f"unknown metadata_lookup {metadata_lookup!r}")

        cache_value = env.get(ENV_PREFIX + "CACHE_DIR") or get("harvest", "cache_root", ".openasn-cache")
        harvest = HarvestSettings(
            user_agent=env.get(ENV_PREFIX + "USER_AGENT") or get("harvest", "user_agent") or None,
            rate_limit=float(env.get(ENV_PREFIX + "RATE_LIMIT") or get("harvest", "rate_limit", "2")),
            retries=int(get("harvest", "retries", "3")),
            backoff=float(get("harvest", "backoff", "1.0")),
            timeout=float(get("harvest", "timeout", "30")),
            max_in_flight=int(get("harvest", "max_in_flight", "4")),
            cache_root=_path(cache_value, base),
            base_urls={
                name: url
                for name in _ENDPOINTS
                if (url := env.get(f"{ENV_PREFIX}{name.upper()}_URL") or get("harvest", f"{name}_url"))
            },
        )
        if harvest.rate_limit <= 0 or harvest.retries < 0:
            raise ConfigError("rate_limit must be positive and retries non-negative")
        return PipelineConfig(
            reference_year=reference_year,
            normalization=strategy,
            thresholds=thresholds,
            citation_source=citation_source,
            comparison=comparison,
            harvest=harvest,
            metadata_path=_path(get("citations", "metadata"), base),
            metadata_lookup=metadata_lookup,
            parallelism=int(get("harvest", "parallelism", "1")),
        )
    except ConfigError:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | os.PathLike[str] | None = None, env: dict[str, str] | None = None) -> PipelineConfig:
    if path is None:
        return parse_config(default_config_text(), Path.cwd(), env)
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc.strerror}") from None
    return parse_config(text, p.parent, env)
