"""Python access to the tabletop exercise core (scoring, tokens, scripted runs)."""

from ._core import (
    TtxError,
    alpha_grid,
    count_words,
    estimate_tokens,
    format_score,
    parse_action_items,
    preparedness,
    run_scripted,
    tokens_for_words,
    upbs,
    workflow_edges,
)

__all__ = [
    "TtxError",
    "alpha_grid",
    "count_words",
    "estimate_tokens",
    "format_score",
    "parse_action_items",
    "preparedness",
    "run_scripted",
    "tokens_for_words",
    "upbs",
    "workflow_edges",
]
