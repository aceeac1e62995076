"""Bias-reduction data pipeline: descriptor masking, unsafe-token stripping,
per-response bias values, and emission of tagged (context, response)
training pairs.

A response's bias value is the projection of its style offset from the
global mean onto the direction from the global mean to its descriptor's mean
profile, scaled by that direction's norm raised to a configurable exponent.
Responses whose value exceeds the threshold are tagged ``bias``, the rest
``no_bias``; the tag is appended to the context as a final token.
"""
from __future__ import annotations

import re
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDirectionError
from .genbias import mean_style_profiles

MASK_TOKEN = "left-handed"
UNSAFE_TOKEN = "_POTENTIALLY_UNSAFE__"

# Word boundary: adjacent character is not alphanumeric (underscores and
# hyphens do separate words); string edges qualify.
_BOUNDARY_BEFORE = r"(?<![^\W_])"
_BOUNDARY_AFTER = r"(?![^\W_])"


def _descriptor_pattern(descriptor):
    variants = {descriptor}
    dehyphenated = descriptor.replace("-", " ")
    if dehyphenated != descriptor:
        variants.add(dehyphenated)
    alternation = "|".join(re.escape(v) for v in sorted(variants, key=len,
                                                        reverse=True))
    return re.compile(_BOUNDARY_BEFORE + f"(?:{alternation})" + _BOUNDARY_AFTER,
                      re.IGNORECASE)


def mask_descriptor(response, descriptor):
    """Replace every case-insensitive word-boundary occurrence of the
    descriptor (or its dehyphenated form) with the neutral mask token.

    When the descriptor survives inside the mask token itself (e.g. the mask
    token is the descriptor), occurrences already part of a mask token are
    left alone, which keeps masking idempotent.
    """
    if not descriptor:
        raise ValueError("empty descriptor")
    pattern = _descriptor_pattern(descriptor)
    if not pattern.search(MASK_TOKEN):
        return pattern.sub(MASK_TOKEN, response)

    # Pathological case: replacement would reintroduce the descriptor.
    mask_pattern = re.compile(_BOUNDARY_BEFORE + re.escape(MASK_TOKEN)
                              + _BOUNDARY_AFTER, re.IGNORECASE)
    protected = [m.span() for m in mask_pattern.finditer(response)]

    def replace(match):
        start, end = match.span()
        for p_start, p_end in protected:
            if start >= p_start and end <= p_end:
                return match.group(0)
        return MASK_TOKEN

    return pattern.sub(replace, response)


_UNSAFE_RUN = re.compile(
    r"\s*" + re.escape(UNSAFE_TOKEN) + r"(?:\s*" + re.escape(UNSAFE_TOKEN) + r")*\s*")


def strip_unsafe_token(text):
    """Remove every occurrence of the unsafe marker, collapsing surrounding
    whitespace to a single space (none at the string edges)."""
    def replace(match):
        if match.start() == 0 or match.end() == len(text):
            return ""
        return " " if any(ch.isspace() for ch in match.group(0)) else ""
    return _UNSAFE_RUN.sub(replace, text)


def prepare_response_for_style_scoring(text, descriptor):
    """Canonical preprocessing before a response reaches a style classifier:
    strip the unsafe marker first, then mask the descriptor."""
    return mask_descriptor(strip_unsafe_token(text), descriptor)


@dataclass(frozen=True)
class BiasProjectionConfig:
    alpha: int = 0
    beta: float = 0.003

    def __post_init__(self):
        if self.alpha not in (0, 1, 2):
            raise ValueError("alpha must be 0, 1, or 2")
        if not self.beta > 0:
            raise ValueError("beta must be positive")


def bias_value(probs, descriptor_mean, global_mean, alpha=0):
    """Scaled projection of (probs - global_mean) onto the descriptor's bias
    direction (descriptor_mean - global_mean).

    alpha = 0 skips the norm division entirely; for alpha > 0 a zero-length
    direction is an error.
    """
    if alpha not in (0, 1, 2):
        raise ValueError("alpha must be 0, 1, or 2")
    p = np.asarray(probs, dtype=float)
    m_d = np.asarray(descriptor_mean, dtype=float)
    m_bar = np.asarray(global_mean, dtype=float)
    if not (p.shape == m_d.shape == m_bar.shape):
        raise ValueError("vector dimensions differ")
    direction = m_d - m_bar
    numerator = float(np.dot(p - m_bar, direction))
    if alpha == 0:
        return numerator
    norm = float(np.linalg.norm(direction))
    if norm == 0.0:
        raise DegenerateDirectionError(
            "descriptor mean equals the global mean; direction undefined for "
            f"alpha={alpha}")
    return numerator / norm ** alpha


@dataclass(frozen=True)
class TaggedPair:
    context: str
    response: str
    label: str  # "bias" | "no_bias"
    bias_value: float
    descriptor: str
    template_id: str
    response_id: str = ""

    def to_record(self):
        return {
            "schema_version": 1,
            "context": self.context,
            "response": self.response,
            "label": self.label,
            "bias_value": self.bias_value,
            "descriptor": self.descriptor,
            "template_id": self.template_id,
            "response_id": self.response_id,
        }


def _append_tag(context, label):
    context = context.rstrip()
    return f"{context} {label}" if context else label


def tag_pairs(grid, contexts, config, response_texts=None):
    """Label every response in the grid and emit tagged training pairs.

    contexts maps response_id -> context string; response_texts (optional)
    maps response_id -> response text, defaulting to empty. Pairs are emitted
    sorted by (template_id, descriptor, response index). Descriptors with a
    degenerate direction under alpha > 0 are skipped with a warning.
    """
    profiles = mean_style_profiles(grid)
    pairs = []
    skipped = set()
    for t, d, i, rid, vec in grid.iter_responses():
        m_d = profiles.descriptor_means[d]
        try:
            value = bias_value(vec, m_d, profiles.global_mean, config.alpha)
        except DegenerateDirectionError:
            skipped.add(d)
            continue
        label = "bias" if value > config.beta else "no_bias"
        context = contexts.get(rid, "") if rid is not None else ""
        text = (response_texts or {}).get(rid, "") if rid is not None else ""
        pairs.append(TaggedPair(
            context=_append_tag(context, label), response=text, label=label,
            bias_value=value, descriptor=d, template_id=t,
            response_id=rid or ""))
    if skipped:
        warnings.warn(
            f"skipped descriptors with degenerate bias direction: "
            f"{', '.join(sorted(skipped))}")
    return pairs


def alpha_comparison(grid, exemplar_sets):
    """Mean |bias value| per exemplar set and their ratio, for each scaling
    exponent. Supports picking the exponent that equalizes magnitudes across
    two known categories of harm."""
    if len(exemplar_sets) != 2:
        raise ValueError("exactly two named exemplar sets required")
    (name_a, ids_a), (name_b, ids_b) = exemplar_sets.items()
    if not ids_a or not ids_b:
        raise ValueError("exemplar sets must be non-empty")
    ids_a, ids_b = set(ids_a), set(ids_b)

    profiles = mean_style_profiles(grid)
    values = {}  # response_id -> (descriptor, vector)
    for t, d, i, rid, vec in grid.iter_responses():
        if rid in ids_a or rid in ids_b:
            values[rid] = (d, vec)
    missing = (ids_a | ids_b) - set(values)
    if missing:
        raise ValueError(f"exemplar response ids not in grid: {sorted(missing)[:5]}")

    out = {}
    for alpha in (0, 1, 2):
        means = {}
        for name, ids in ((name_a, ids_a), (name_b, ids_b)):
            mags = []
            for rid in sorted(ids):
                d, vec = values[rid]
                mags.append(abs(bias_value(vec, profiles.descriptor_means[d],
                                           profiles.global_mean, alpha)))
            means[name] = float(np.mean(mags))
        ratio = means[name_a] / means[name_b] if means[name_b] else float("inf")
        out[alpha] = {"mean_abs": means, "ratio": ratio}
    return out
