import io
import json
import logging
from pathlib import Path

import pytest

from src.core.models import EntityType, NameVariant, VariantFlag
from src.core.repository import Repository
from src.core.resource_io import load_repository, save_repository
from src.run import EXIT_DATA_ERROR, EXIT_OK, EXIT_USAGE_ERROR, main

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(autouse=True)
def _drop_cli_handlers():
    """main() installs stream handlers bound to the captured stderr; remove them afterwards."""
    yield
    root = logging.getLogger()
    for handler in list(root.handlers):
        if getattr(handler, "_namebank_handler", False):
            root.removeHandler(handler)
            handler.close()


@pytest.fixture
def sample(tmp_path) -> Path:
    path = tmp_path / "entities.txt"
    path.write_bytes((FIXTURES / "un_front_national.txt").read_bytes())
    return path


def _stdin(monkeypatch, data: bytes) -> None:
    monkeypatch.setattr("sys.stdin", io.TextIOWrapper(io.BytesIO(data), encoding="utf-8"))


def test_compile_prints_counts(sample, capsys):
    code = main(["compile", "--resource", str(sample)])

    out = capsys.readouterr().out
    assert code == EXIT_OK
    assert out.startswith("entities=2 variants=10 patterns=7 states=")


def test_compile_empty_resource(tmp_path, capsys):
    path = tmp_path / "empty.txt"
    path.write_bytes(b"")

    assert main(["compile", "--resource", str(path)]) == EXIT_OK
    assert capsys.readouterr().out == "entities=0 variants=0 patterns=0 states=0\n"


def test_malformed_resource_reports_line(tmp_path, capsys):
    """A bad third line fails with exit 1 and names the line on stderr."""
    path = tmp_path / "bad.txt"
    path.write_bytes(b"1\tP\tu\tAnna\n1\tP\tu\tAna\n2\tP\tu\n")

    code = main(["compile", "--resource", str(path)])

    captured = capsys.readouterr()
    assert code == EXIT_DATA_ERROR
    assert captured.out == ""
    assert "line 3" in captured.err


def test_missing_resource_is_a_data_error(tmp_path):
    assert main(["compile", "--resource", str(tmp_path / "absent.txt")]) == EXIT_DATA_ERROR


@pytest.mark.parametrize(
    "argv",
    [
        ["merge", "--threshold", "1.5"],
        ["compile", "--lang", "french"],
        ["merge"],
        ["extract"],
    ],
)
def test_usage_errors_exit_2(sample, argv):
    assert main(argv + ["--resource", str(sample)]) == EXIT_USAGE_ERROR


def test_match_reads_nul_separated_stdin(sample, monkeypatch, capsys):
    _stdin(monkeypatch, "Le FN a gagné\x00Sverige och FN".encode("utf-8"))

    code = main(["match", "--resource", str(sample), "--lang", "fr"])

    assert code == EXIT_OK
    assert capsys.readouterr().out.splitlines() == [
        "0\t3\t2\t13752\tFront+National\tFN",
        "1\t12\t2\t13752\tFront+National\tFN",
    ]


def test_match_tsv_encodes_surfaces(sample, monkeypatch, capsys):
    """Names in TSV rows use '+' for spaces; JSON lines keep the text as found."""
    _stdin(monkeypatch, "Le Front \n National a gagné".encode("utf-8"))

    assert main(["match", "--resource", str(sample), "--lang", "fr"]) == EXIT_OK
    assert capsys.readouterr().out.splitlines() == ["0\t3\t16\t13752\tFront+National\tFront+National"]

    _stdin(monkeypatch, "Le Front \n National a gagné".encode("utf-8"))
    assert main(["match", "--resource", str(sample), "--lang", "fr", "--format", "jsonl"]) == EXIT_OK
    record = json.loads(capsys.readouterr().out)
    assert record["main_name"] == "Front National"
    assert record["surface_found"] == "Front \n National"


def test_match_files_as_jsonl(sample, tmp_path, capsys):
    doc = tmp_path / "doc.txt"
    doc.write_text("Pohjola och FN", encoding="utf-8")

    code = main(["match", str(doc), "--resource", str(sample), "--lang", "sv", "--format", "jsonl"])

    records = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
    assert code == EXIT_OK
    assert records == [
        {
            "doc": str(doc),
            "offset": 12,
            "length": 2,
            "id": 3202,
            "main_name": "United Nations",
            "surface_found": "FN",
        }
    ]


def test_match_empty_stdin(sample, monkeypatch, capsys):
    _stdin(monkeypatch, b"")
    assert main(["match", "--resource", str(sample)]) == EXIT_OK
    assert capsys.readouterr().out == ""


def test_merge_updates_resource_in_place(tmp_path, capsys):
    resource = tmp_path / "names.txt"
    resource.write_bytes(b"1\tP\tu\tMuammar+Gaddafi\n")
    candidates = tmp_path / "candidates.txt"
    candidates.write_text("Muamar+Gaddafi\tu\tP\t6\nMummar+Gaddafi\tu\tP\t1\n", encoding="utf-8")

    code = main(["merge", "--resource", str(resource), "--candidates", str(candidates)])

    assert code == EXIT_OK
    assert capsys.readouterr().out.splitlines() == [
        "Muamar+Gaddafi\tMERGED\t1\t0.9667",
        "Mummar+Gaddafi\tCREATED\t2\t0.9282",
    ]
    repo = load_repository(resource)
    assert [v.surface for v in repo.get(1).variants] == ["Muammar Gaddafi", "Muamar Gaddafi"]
    assert repo.get(1).variants[1].eligible



def test_merge_reports_rejected_candidate_lines(tmp_path, capsys):
    """Malformed candidate lines are skipped, listed with their line numbers, and do not fail the run."""
    resource = tmp_path / "names.txt"
    resource.write_bytes(b"1\tP\tu\tMuammar+Gaddafi\n")
    candidates = tmp_path / "candidates.txt"
    candidates.write_text("Muamar+Gaddafi\tu\tP\t6\nbroken line\nAnna+Lindh\tu\tX\t1\n", encoding="utf-8")

    code = main(["merge", "--resource", str(resource), "--candidates", str(candidates)])

    assert code == EXIT_OK
    assert capsys.readouterr().out.splitlines() == [
        "Muamar+Gaddafi\tMERGED\t1\t0.9667",
        "-\tSKIPPED\t-\tline 2: expected 4 fields, got 1",
        "-\tSKIPPED\t-\tline 3: invalid type 'X'",
    ]

    assert main(["merge", "--resource", str(resource), "--candidates", str(candidates), "--format", "jsonl"]) == EXIT_OK
    records = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
    assert [r.get("line") for r in records] == [None, 2, 3]


def test_expand_pattern_only(tmp_path, capsys):
    repo = Repository()
    repo.add_entity(
        EntityType.PERSON,
        [NameVariant("Tony Blair", flags={VariantFlag.FREQUENCY_ELIGIBLE}), NameVariant("Blair")],
    )
    resource = save_repository(repo, tmp_path / "names.txt")

    code = main(["expand", "--resource", str(resource), "--lang", "sl", "--pattern-only"])

    suffixes = "(a|o|u|om|em|m|ju|jem|ja)?"
    assert code == EXIT_OK
    assert capsys.readouterr().out.splitlines() == [
        "1\tTony Blair\tTony" + suffixes + r"\s+Blair" + suffixes,
    ]


def test_expand_writes_inflected_variants(tmp_path):
    repo = Repository()
    repo.add_entity(EntityType.PERSON, [NameVariant("Tony Blair", flags={VariantFlag.FREQUENCY_ELIGIBLE})])
    resource = save_repository(repo, tmp_path / "names.txt")
    output = tmp_path / "expanded.txt"

    code = main(["expand", "--resource", str(resource), "--rules", "resources/inflection/sl.txt", "--output", str(output)])

    assert code == EXIT_OK
    assert load_repository(output).get(1).has("Tonyjem Blairom", "sl")
    assert len(load_repository(resource).get(1).variants) == 1


def test_moderate_applies_edit_log(sample, tmp_path):
    edits = tmp_path / "edits.txt"
    edits.write_text("TYPE\t3202\tP\nSTOP\ten\tReport\n", encoding="utf-8")

    assert main(["moderate", "--resource", str(sample), "--edits", str(edits)]) == EXIT_OK

    repo = load_repository(sample)
    assert repo.get(3202).etype is EntityType.PERSON
    assert repo.stop_words("en") == {"Report"}


def test_moderate_bad_edit_leaves_resource(sample, tmp_path, capsys):
    before = sample.read_bytes()
    edits = tmp_path / "edits.txt"
    edits.write_text("TYPE\t3202\tP\nMAIN\t3202\tVereinte+Nationen\n", encoding="utf-8")

    code = main(["moderate", "--resource", str(sample), "--edits", str(edits)])

    assert code == EXIT_DATA_ERROR
    assert sample.read_bytes() == before
    assert "line 2" in capsys.readouterr().err


def test_export_for_swedish(sample, capsys):
    assert main(["export", "--resource", str(sample), "--lang", "sv"]) == EXIT_OK

    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 8
    assert lines[0] == "3202\tO\tu\tUnited Nations"
    assert "3202\tO\tsv\tFN" in lines
    assert "13752\tO\tfr\tFN" not in lines


def test_export_release_is_empty_without_flags(sample, capsys):
    assert main(["export", "--resource", str(sample), "--release"]) == EXIT_OK
    assert capsys.readouterr().out == ""


def test_stats_tsv_and_jsonl(sample, capsys):
    assert main(["stats", "--resource", str(sample)]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[:3] == ["entities\t2", "variants\t10", "type\tO\t2"]
    assert "script\tKANNADA\t1" in lines

    assert main(["stats", "--resource", str(sample), "--format", "jsonl"]) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["by_scope"] == {"fr": 2, "sv": 1, "u": 7}


def test_extract_writes_candidates(sample, tmp_path, capsys):
    docs = [tmp_path / "a.txt", tmp_path / "b.txt"]
    docs[0].write_text("President Tony Blair said", encoding="utf-8")
    docs[1].write_text("Chancellor Angela Merkel and Mr Tony Blair announced", encoding="utf-8")

    code = main(
        ["extract", *map(str, docs), "--resource", str(sample), "--lexicon", "resources/lexicon/en.txt"]
    )

    assert code == EXIT_OK
    assert capsys.readouterr().out.splitlines() == [
        "Tony+Blair\ten\tP\t2",
        "Angela+Merkel\ten\tP\t1",
    ]


def test_log_file_is_written(sample, tmp_path):
    log_dir = tmp_path / "logs"

    assert main(["compile", "--resource", str(sample), "--log-dir", str(log_dir)]) == EXIT_OK

    logs = list(log_dir.glob("run_*.log"))
    assert len(logs) == 1
    assert "Running compile" in logs[0].read_text(encoding="utf-8")
