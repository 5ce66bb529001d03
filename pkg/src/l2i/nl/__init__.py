"""Natural-language descriptions: templates, paraphrases and the rule-based parser."""

from .text import (FORMAT, Clause, DetailedDescription, InteractionSummary, Paragraph, ParsedDescription, Sentence,
                   bank, describe_detailed, describe_program, paraphrase, parse_description, scene_text,
                   split_sentences, summarize)

__all__ = [
    "FORMAT", "Clause", "DetailedDescription", "InteractionSummary", "Paragraph", "ParsedDescription", "Sentence",
    "bank", "describe_detailed", "describe_program", "paraphrase", "parse_description", "scene_text",
    "split_sentences", "summarize",
]
