"""Loop to tail-recursion transpiler for MiniJava-L."""

import json

from ._core import (
    ParseError,
    SemanticError,
    UnsupportedConstruct,
    check,
    format,
    generate,
    run,
    transform,
)
from . import _core

__all__ = [
    "ParseError",
    "SemanticError",
    "UnsupportedConstruct",
    "analyze",
    "check",
    "diff",
    "format",
    "fuzz",
    "generate",
    "run",
    "transform",
]


def analyze(text, optimize=True):
    """Per-loop analysis as a dict with a "loops" list."""
    return json.loads(_core.analyze_json(text, optimize))


def diff(text, optimize=True, budget=1_000_000):
    """Runs a program and its transformed form and compares them."""
    return json.loads(_core.diff_json(text, optimize, budget))


def fuzz(n=500, seed=0, optimize=True, budget=1_000_000):
    """Differential fuzzing over seeds seed .. seed + n - 1."""
    return json.loads(_core.fuzz_json(n, seed, optimize, budget))
