"""Model language, command runner and sampling oracle."""

from .commands import Report, run
from .dsl import ModelSpec, ParseError, parse, render
from .oracle import oracle_sample

__all__ = ["ModelSpec", "ParseError", "Report", "oracle_sample", "parse", "render", "run"]
