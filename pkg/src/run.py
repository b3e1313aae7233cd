#!/usr/bin/env python3
"""
Command-line entry point: ``python -m src.run <command> [options]``.

Data goes to standard output, diagnostics to standard error and the
optional log file. Exit code 0 on success, 1 on data errors, 2 on usage
or configuration errors.
"""
import argparse
import json
import logging
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

from src.core.errors import GazetteerError
from src.core.export import export_variants, summarize
from src.core.models import is_valid_scope
from src.core.moderation import apply_edits, parse_edit_log
from src.core.repository import Repository
from src.core.resource_io import encode_surface, load_repository, save_repository
from src.normalize.keys import NameKeyBuilder
from src.normalize.rules import DEFAULT_RULES, load_rule_set
from src.normalize.transliteration import load_default_table, load_transliteration_table
from src.pipeline.inflector import (
    DEFAULT_PARTICLES,
    EmptyRuleSet,
    IneligibleVariant,
    expand_inflections,
    expand_repository,
    load_inflection_rules,
)
from src.pipeline.matcher import compile_matcher, find_all_documents
from src.pipeline.merger import MergerConfig, format_candidate, merge_batch, parse_candidates
from src.pipeline.recognizer import LexiconError, extract_candidates, load_lexicon
from src.pipeline.type_model import train_type_model
from src.utils.loader import (
    ConfigError,
    RuleFileError,
    load_config,
    read_word_list,
    resolve_path,
)
from src.utils.logging_config import setup_logging

logger = logging.getLogger(__name__)

COMMANDS = ("compile", "match", "merge", "expand", "moderate", "export", "stats", "extract")
OUTPUT_FORMATS = ("tsv", "jsonl")

EXIT_OK = 0
EXIT_DATA_ERROR = 1
EXIT_USAGE_ERROR = 2

USAGE_ERRORS = (ConfigError, RuleFileError, LexiconError, EmptyRuleSet)


@dataclass
class CliConfig:
    """Settings for one command: the YAML mapping overlaid with flags."""

    resource: Optional[Path] = None
    language: Optional[str] = None
    threshold: Optional[float] = None
    output_format: str = "tsv"
    rules: Optional[Path] = None
    lexicon: Optional[Path] = None
    inflection_dir: Optional[Path] = None
    lexicon_dir: Optional[Path] = None
    log_dir: Optional[Path] = None
    log_level: str = "INFO"
    workers: int = 1
    raw: Dict[str, Any] = field(default_factory=dict, repr=False)

    def validate(self) -> "CliConfig":
        if self.threshold is not None and not 0.0 < self.threshold <= 1.0:
            raise ConfigError(f"threshold must lie in (0, 1], got {self.threshold}")
        if self.output_format not in OUTPUT_FORMATS:
            raise ConfigError(f"unknown output format {self.output_format!r}")
        if self.language is not None and not is_valid_scope(self.language):
            raise ConfigError(f"invalid language {self.language!r}")
        if self.workers < 1:
            raise ConfigError(f"workers must be at least 1, got {self.workers}")
        return self

    @classmethod
    def from_sources(cls, cfg: Dict[str, Any], args: argparse.Namespace) -> "CliConfig":
        def pick(flag: Optional[Any], key: str, default: Any = None) -> Any:
            if flag is not None:
                return flag
            value = cfg.get(key)
            return default if value is None else value

        def as_path(value: Optional[Any]) -> Optional[Path]:
            return resolve_path(value) if value not in (None, "") else None

        try:
            threshold = args.threshold
            if threshold is None and cfg.get("merge", {}).get("threshold") is not None:
                threshold = float(cfg["merge"]["threshold"])
            workers = int(pick(args.workers, "workers", 1))
        except (TypeError, ValueError, AttributeError) as exc:
            raise ConfigError(f"invalid numeric setting: {exc}") from exc

        return cls(
            resource=as_path(pick(args.resource, "resource")),
            language=pick(args.lang, "language"),
            threshold=threshold,
            output_format=pick(args.format, "output_format", "tsv"),
            rules=as_path(args.rules),
            lexicon=as_path(args.lexicon),
            inflection_dir=as_path(cfg.get("inflection_dir")),
            lexicon_dir=as_path(cfg.get("lexicon_dir")),
            log_dir=as_path(pick(args.log_dir, "log_dir")),
            log_level=str(cfg.get("log_level") or "INFO"),
            workers=workers,
            raw=cfg,
        ).validate()

    def section(self, name: str) -> Dict[str, Any]:
        return self.raw.get(name) or {}

    def require_resource(self) -> Path:
        if self.resource is None:
            raise ConfigError("no resource given (use --resource or set 'resource' in the config)")
        return self.resource


# ---------- output helpers ----------
def _emit(records: Iterable[Dict[str, Any]], columns: Sequence[str], fmt: str) -> None:
    out = sys.stdout
    for record in records:
        if fmt == "jsonl":
            out.write(json.dumps(record, ensure_ascii=False) + "\n")
        else:
            out.write("\t".join(_tsv_field(record[c]) for c in columns) + "\n")
    out.flush()


def _tsv_field(value: Any) -> str:
    if value is None:
        return "-"
    # tabs and newlines inside matched text would break the row
    return " ".join(str(value).split()) if isinstance(value, str) else str(value)


def _surface_field(value: str, fmt: str) -> str:
    """Names in TSV rows use the resource file's '+' encoding."""
    if fmt == "jsonl":
        return value
    return encode_surface(" ".join(value.split()))


def _read_documents(inputs: Sequence[str]) -> List[Tuple[str, str]]:
    """One document per file, or NUL-separated documents on standard input."""
    if inputs:
        return [(name, Path(name).read_text(encoding="utf-8")) for name in inputs]
    data = sys.stdin.buffer.read().decode("utf-8")
    if not data:
        return []
    return [(str(i), text) for i, text in enumerate(data.split("\x00"))]


def _key_builder(cfg: CliConfig) -> NameKeyBuilder:
    normalize_cfg = cfg.section("normalize")
    tables = normalize_cfg.get("transliteration_tables")
    table = load_transliteration_table(tables) if tables else load_default_table()
    rules = load_rule_set(normalize_cfg["rules"]) if normalize_cfg.get("rules") else DEFAULT_RULES
    return NameKeyBuilder(table=table, rules=rules)


def _save(repo: Repository, cfg: CliConfig, output: Optional[str]) -> Path:
    target = Path(output) if output else cfg.require_resource()
    return save_repository(repo, target)


# ---------- commands ----------
def cmd_compile(cfg: CliConfig, args: argparse.Namespace) -> int:
    repo = load_repository(cfg.require_resource())
    matcher = compile_matcher(repo, cfg.language)
    stats = matcher.stats()
    if cfg.output_format == "jsonl":
        _emit([stats], (), "jsonl")
    else:
        sys.stdout.write(" ".join(f"{k}={v}" for k, v in stats.items()) + "\n")
    return EXIT_OK


def cmd_match(cfg: CliConfig, args: argparse.Namespace) -> int:
    repo = load_repository(cfg.require_resource())
    matcher = compile_matcher(repo, cfg.language)
    documents = _read_documents(args.inputs)
    logger.info("Matching %d documents with %d workers", len(documents), cfg.workers)

    records = (
        {
            "doc": doc_id,
            "offset": m.offset,
            "length": m.length,
            "id": m.id,
            "main_name": _surface_field(m.main_name, cfg.output_format),
            "surface_found": _surface_field(m.surface_found, cfg.output_format),
        }
        for doc_id, matches in find_all_documents(matcher, documents, cfg.workers)
        for m in matches
    )
    _emit(records, ("doc", "offset", "length", "id", "main_name", "surface_found"), cfg.output_format)
    return EXIT_OK


def cmd_merge(cfg: CliConfig, args: argparse.Namespace) -> int:
    if not args.candidates:
        raise ConfigError("merge needs --candidates")
    repo = load_repository(cfg.require_resource())
    candidates, problems = parse_candidates(Path(args.candidates).read_text(encoding="utf-8"))

    merger_cfg = MergerConfig.from_dict(cfg.raw)
    if cfg.threshold is not None:
        merger_cfg = replace(merger_cfg, threshold=cfg.threshold)
    updated, report = merge_batch(repo, candidates, merger_cfg, _key_builder(cfg))
    report.rejected_lines.extend(problems)
    _save(updated, cfg, args.output)
    if problems:
        logger.warning("%d candidate lines rejected before merging", len(problems))

    if cfg.output_format == "jsonl":
        _emit(report.records(), (), "jsonl")
    else:
        for row in report.rows():
            sys.stdout.write("\t".join(row) + "\n")
    return EXIT_OK


def _inflection_rules(cfg: CliConfig):
    if cfg.rules is not None:
        return load_inflection_rules(cfg.rules)
    if cfg.language and cfg.inflection_dir is not None:
        candidate = cfg.inflection_dir / f"{cfg.language}.txt"
        if candidate.exists():
            return load_inflection_rules(candidate)
    return None


def cmd_expand(cfg: CliConfig, args: argparse.Namespace) -> int:
    repo = load_repository(cfg.require_resource())
    rules = _inflection_rules(cfg)

    if args.pattern_only:
        if rules is None:
            raise ConfigError("--pattern-only needs --rules or a language with an inflection file")
        records = []
        for entity, _idx, variant in repo.iter_variants():
            try:
                expansion = expand_inflections(variant, rules, enumerate_forms=False)
            except IneligibleVariant:
                continue
            records.append({"id": entity.id, "surface": variant.surface, "pattern": expansion.pattern})
        _emit(records, ("id", "surface", "pattern"), cfg.output_format)
        return EXIT_OK

    particles = cfg.section("surface_variants").get("particles") or DEFAULT_PARTICLES
    updated, added = expand_repository(repo, rules, particles)
    _save(updated, cfg, args.output)
    logger.info("Expansion wrote %d new variants", added)
    return EXIT_OK


def cmd_moderate(cfg: CliConfig, args: argparse.Namespace) -> int:
    if not args.edits:
        raise ConfigError("moderate needs --edits")
    repo = load_repository(cfg.require_resource())
    edits = parse_edit_log(Path(args.edits).read_text(encoding="utf-8"))
    updated = apply_edits(repo, edits)
    _save(updated, cfg, args.output)
    return EXIT_OK


def cmd_export(cfg: CliConfig, args: argparse.Namespace) -> int:
    repo = load_repository(cfg.require_resource())
    if args.release:
        repo = repo.release_view()
    records = (
        {"id": row.entity_id, "type": row.etype.value, "scope": row.scope, "surface": row.surface}
        for row in export_variants(repo, cfg.language)
    )
    _emit(records, ("id", "type", "scope", "surface"), cfg.output_format)
    return EXIT_OK


def cmd_stats(cfg: CliConfig, args: argparse.Namespace) -> int:
    summary = summarize(load_repository(cfg.require_resource()))
    if cfg.output_format == "jsonl":
        _emit([summary], (), "jsonl")
        return EXIT_OK

    rows = [("entities", "", summary["entities"]), ("variants", "", summary["variants"])]
    for group, key in (("type", "by_type"), ("script", "by_script"), ("scope", "by_scope")):
        rows.extend((group, name, count) for name, count in summary[key].items())
    rows.extend(("variants_per_entity", k, v) for k, v in summary["variants_per_entity"].items())
    for group, name, count in rows:
        sys.stdout.write("\t".join(p for p in (group, name, str(count)) if p) + "\n")
    return EXIT_OK


def cmd_extract(cfg: CliConfig, args: argparse.Namespace) -> int:
    ner_cfg = cfg.section("ner")
    particles = ner_cfg.get("particles") or None
    if cfg.lexicon is not None:
        lexicon_path = cfg.lexicon
    elif cfg.language and cfg.lexicon_dir is not None:
        lexicon_path = cfg.lexicon_dir / f"{cfg.language}.txt"
    else:
        raise ConfigError("extract needs --lexicon or --lang with a lexicon directory")
    if particles:
        lexicon = load_lexicon(lexicon_path, cfg.language, particles)
    else:
        lexicon = load_lexicon(lexicon_path, cfg.language)

    if cfg.resource is not None and cfg.resource.exists():
        lexicon = lexicon.with_stop_words(load_repository(cfg.resource).stop_words(lexicon.language))

    model = None
    model_cfg = cfg.section("type_model")
    if model_cfg.get("persons") and model_cfg.get("orgs"):
        model = train_type_model(
            read_word_list(model_cfg["persons"]),
            read_word_list(model_cfg["orgs"]),
            float(model_cfg.get("smoothing", 1.0)),
        )

    documents = _read_documents(args.inputs)
    candidates = extract_candidates(
        documents,
        lexicon,
        model,
        max_tokens=int(ner_cfg.get("max_name_tokens", 4)),
        workers=cfg.workers,
    )

    if cfg.output_format == "jsonl":
        lines = [
            json.dumps(
                {
                    "surface": c.surface,
                    "language": c.language,
                    "type": c.guessed_type.value,
                    "cluster_count": c.cluster_count,
                    "evidence": list(c.evidence),
                },
                ensure_ascii=False,
            )
            for c in candidates
        ]
    else:
        lines = [format_candidate(c) for c in candidates]
    text = "".join(line + "\n" for line in lines)

    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
        logger.info("Wrote %d candidates to %s", len(candidates), args.output)
    else:
        sys.stdout.write(text)
    return EXIT_OK


HANDLERS = {
    "compile": cmd_compile,
    "match": cmd_match,
    "merge": cmd_merge,
    "expand": cmd_expand,
    "moderate": cmd_moderate,
    "export": cmd_export,
    "stats": cmd_stats,
    "extract": cmd_extract,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="namebank", description="Multilingual person and organisation name toolkit"
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("inputs", nargs="*", help="Documents for match/extract (default: stdin)")
    parser.add_argument("--config", default=None, help="Config file (default: config/config.yaml)")
    parser.add_argument("--resource", default=None, help="Resource file, plain text or .zip")
    parser.add_argument("--lang", default=None, help="Target language code, e.g. fr")
    parser.add_argument("--threshold", type=float, default=None, help="Merge threshold in (0, 1]")
    parser.add_argument("--rules", default=None, help="Inflection rule file for expand")
    parser.add_argument("--lexicon", default=None, help="Trigger lexicon file for extract")
    parser.add_argument("--format", choices=OUTPUT_FORMATS, default=None)
    parser.add_argument("--pattern-only", action="store_true", help="expand: print patterns only")
    parser.add_argument("--candidates", default=None, help="merge: candidate file")
    parser.add_argument("--edits", default=None, help="moderate: edit log")
    parser.add_argument("--output", default=None, help="Write the result here instead of in place")
    parser.add_argument("--release", action="store_true", help="export: released names only")
    parser.add_argument("--log-dir", default=None)
    parser.add_argument("--workers", type=int, default=None)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    try:
        cfg = CliConfig.from_sources(load_config(args.config), args)
    except ConfigError as exc:
        setup_logging()
        logger.error("%s", exc)
        return EXIT_USAGE_ERROR

    log_path = setup_logging(cfg.log_dir, cfg.log_level)
    if log_path is not None:
        logger.info("Log file for this run: %s", log_path)
    logger.info("Running %s (language=%s)", args.command, cfg.language or "u")

    try:
        return HANDLERS[args.command](cfg, args)
    except USAGE_ERRORS as exc:
        logger.error("%s", exc)
        return EXIT_USAGE_ERROR
    except (GazetteerError, OSError, UnicodeDecodeError) as exc:
        logger.error("%s failed: %s", args.command, exc)
        return EXIT_DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
