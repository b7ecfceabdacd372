"""Typed-norm size analysis for rule-based programs."""

from importlib.resources import files

from .parser import parse, pretty
from .typecheck import typecheck

__all__ = ["parse", "pretty", "typecheck", "load_corpus", "corpus_text"]


def corpus_text(name: str) -> str:
    """Source of a bundled example program, e.g. ``corpus_text("running")``."""
    return (files(__package__) / "corpus" / f"{name}.rbr").read_text()


def load_corpus(name: str):
    return parse(corpus_text(name), f"{name}.rbr")
