"""Python access to the pathforge core: validation, parsing, interviews and matching."""

import json

from . import _pathforge
from ._pathforge import PathforgeError, automatic_shown_first, dice_similarity, grounding_score

__all__ = [
    "PathforgeError",
    "automatic_shown_first",
    "build_prompt",
    "canonical_document",
    "dice_similarity",
    "extract_with_fixtures",
    "grounding_score",
    "interview",
    "match",
    "parse_model_json",
    "run_cli",
    "validate",
]


def _text(document):
    return document if isinstance(document, str) else json.dumps(document)


def parse_model_json(text):
    return json.loads(_pathforge.parse_model_json(text))


def validate(document):
    """Validation report for a pathway document (str or dict)."""
    return json.loads(_pathforge.validate_document(_text(document)))


def canonical_document(document):
    """Canonical bytes of a structurally valid document, as str."""
    return _pathforge.canonical_document(_text(document))


def build_prompt(article):
    return json.loads(_pathforge.build_prompt(_text(article)))


def interview(document, answers):
    """Session state after applying answers ("yes", "no" or "undo")."""
    return json.loads(_pathforge.interview(_text(document), list(answers)))


def match(a, b, threshold=0.5):
    return json.loads(_pathforge.match_documents(_text(a), _text(b), threshold))


def extract_with_fixtures(article, fixture_dir):
    return json.loads(_pathforge.extract_with_fixtures(_text(article), str(fixture_dir)))


def run_cli(args, input=""):
    """Runs the command-line tool in-process; returns (exit_code, stdout, stderr)."""
    return _pathforge.run_cli([str(a) for a in args], input)
