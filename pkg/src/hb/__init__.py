"""hb: templated identity-descriptor prompts and demographic-bias
measurement for generative language models."""

__version__ = "0.1.0"

from .compiler import (SentenceCompiler, SentenceRecord, build_noun_phrase,
                       compile_dataset, render_sentence, select_article)
from .registry import (Registry, compatible_nouns, load_default_registry,
                       load_registry, validate_registry)

__all__ = [
    "Registry",
    "SentenceCompiler",
    "SentenceRecord",
    "build_noun_phrase",
    "compatible_nouns",
    "compile_dataset",
    "load_default_registry",
    "load_registry",
    "render_sentence",
    "select_article",
    "validate_registry",
    "__version__",
]
