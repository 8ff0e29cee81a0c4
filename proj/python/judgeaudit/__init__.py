"""Persuasion-bias audit harness for LLM judges.

Thin wrapper around the C++ core: corpus handling, cue injection, judge
prompts, response parsing, the audit protocols, and the bias metrics.
"""

import json as _json

from ._core import (
    CandidateSolution,
    Corpus,
    CorpusItem,
    DIRECT_MITIGATION_SENTENCE,
    MathProblem,
    PersuadedSolution,
    PromptBundle,
    PromptSet,
    TemplateBank,
    builtin_bank,
    default_prompts,
    inject,
    load_bank_with_overrides,
    load_corpus,
    load_prompts,
    parse_choice,
    parse_score,
    pairwise_percentages_from_counts,
    relative_change,
    report_markdown_from_records,
    sample_balanced,
    save_corpus,
    select_template,
    sha256_hex,
    stacked_condition_pairs,
    technique_mode,
    technique_names,
)
from ._core import fixture_check_json as _fixture_check_json
from ._core import run_audit_json as _run_audit_json

__all__ = [
    "CandidateSolution",
    "Corpus",
    "CorpusItem",
    "DIRECT_MITIGATION_SENTENCE",
    "MathProblem",
    "PersuadedSolution",
    "PromptBundle",
    "PromptSet",
    "TemplateBank",
    "builtin_bank",
    "default_prompts",
    "fixture_check",
    "inject",
    "load_bank_with_overrides",
    "load_corpus",
    "load_prompts",
    "parse_choice",
    "parse_score",
    "pairwise_percentages_from_counts",
    "relative_change",
    "report_markdown_from_records",
    "run_audit",
    "sample_balanced",
    "save_corpus",
    "select_template",
    "sha256_hex",
    "stacked_condition_pairs",
    "technique_mode",
    "technique_names",
]


def run_audit(config):
    """Runs an audit from a config dict (same schema as the CLI config file).

    Returns a dict with exit_code, stats, output paths, and the full report.
    """
    return _json.loads(_run_audit_json(_json.dumps(config)))


def fixture_check(fixture_path):
    """Recomputes the reference-fixture aggregates; returns the check lines."""
    return _json.loads(_fixture_check_json(str(fixture_path)))
