"""Syntax-aware neural machine translation with tree encoders and coverage."""

from ._core import (
    EOS,
    PAD,
    UNK,
    AlignmentError,
    BinaryTree,
    BleuScore,
    ConfigError,
    Example,
    Hypothesis,
    Model,
    ParseError,
    SyntheticTask,
    TrainingError,
    Vocabulary,
    attention_csv,
    bleu,
    bracket_task,
    copy_task,
    read_tree,
)

__all__ = [
    "EOS",
    "PAD",
    "UNK",
    "AlignmentError",
    "BinaryTree",
    "BleuScore",
    "ConfigError",
    "Example",
    "Hypothesis",
    "Model",
    "ParseError",
    "SyntheticTask",
    "TrainingError",
    "Vocabulary",
    "attention_csv",
    "bleu",
    "bracket_task",
    "copy_task",
    "read_tree",
]
