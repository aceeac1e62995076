"""Offensiveness differential analysis and corpus descriptor-frequency
counting.

Offense probabilities come from an external safety classifier through a
score-file contract; this module aggregates them by descriptor and template
(two-stage means with population standard deviation) and computes the
fraction of items flagged at a probability threshold.
"""
from __future__ import annotations

import heapq
import random
import re
from dataclasses import dataclass

from .errors import InsufficientDataError, JoinError
from .jsonl import read_jsonl
from .stats import population_std

_BOUNDARY_BEFORE = r"(?<![^\W_])"
_BOUNDARY_AFTER = r"(?![^\W_])"


@dataclass(frozen=True)
class OffenseRow:
    item_id: str
    probability: float
    descriptor: str
    template_id: str
    axis: str


class OffenseTable:
    def __init__(self, rows):
        self.rows = tuple(rows)

    def __len__(self):
        return len(self.rows)

    def slice(self, template_id=None):
        return [r for r in self.rows
                if template_id is None or r.template_id == template_id]

    def template_ids(self):
        return sorted({r.template_id for r in self.rows})


def ingest_offense(scores_source, dataset, responses=None):
    """Join {id, prob_offensive} records to sentence metadata; ids may name
    sentences directly or responses (resolved through the responses file)."""
    if isinstance(dataset, dict):
        sentence_index = dataset
    else:
        sentence_index = {rec["id"]: rec for _, rec in read_jsonl(dataset)}
    response_to_sentence = {}
    if responses is not None:
        for _, rec in read_jsonl(responses):
            response_to_sentence[rec["response_id"]] = rec["sentence_id"]

    rows = []
    seen = set()
    for line_no, rec in read_jsonl(scores_source):
        item_id = rec.get("id")
        if item_id is None:
            raise JoinError(f"{scores_source}:{line_no}: missing id")
        if item_id in seen:
            raise JoinError(f"{scores_source}:{line_no}: duplicate id {item_id!r}")
        seen.add(item_id)
        prob = rec.get("prob_offensive")
        if not isinstance(prob, (int, float)) or not 0 <= prob <= 1:
            raise ValueError(
                f"{scores_source}:{line_no}: prob_offensive must lie in [0, 1], "
                f"got {prob!r}")
        sid = response_to_sentence.get(item_id, item_id)
        meta = sentence_index.get(sid)
        if meta is None:
            raise JoinError(
                f"{scores_source}:{line_no}: id {item_id!r} resolves to unknown "
                f"sentence {sid!r}")
        rows.append(OffenseRow(item_id=item_id, probability=float(prob),
                               descriptor=meta["descriptor_text"],
                               template_id=meta["template_id"], axis=meta["axis"]))
    return OffenseTable(rows)


def _descriptor_means(rows):
    grouped = {}
    for row in rows:
        grouped.setdefault(row.descriptor, []).append(row.probability)
    return {d: sum(v) / len(v) for d, v in grouped.items()}


@dataclass(frozen=True)
class DescriptorBucket:
    low: float
    high: float
    entries: tuple  # (descriptor, mean probability, is_nonce), sorted by mean


def offense_by_descriptor(table, template_id, bucket_edges=(0.0, 0.25, 0.5, 0.75, 1.0)):
    """Group descriptors by their mean offense probability under one template.

    Buckets are the consecutive ranges of bucket_edges; the last bucket is
    closed on the right. Nonce-axis descriptors are flagged.
    """
    rows = table.slice(template_id=template_id)
    if not rows:
        raise InsufficientDataError(f"no scores for template {template_id!r}")
    edges = list(bucket_edges)
    if sorted(edges) != edges or len(edges) < 2:
        raise ValueError("bucket_edges must be ascending with >= 2 values")
    means = _descriptor_means(rows)
    axis_of = {r.descriptor: r.axis for r in rows}

    buckets = []
    for low, high in zip(edges, edges[1:]):
        last = high == edges[-1]
        entries = sorted(
            (d, m, axis_of[d] == "nonce") for d, m in means.items()
            if low <= m < high or (last and m == high))
        entries.sort(key=lambda e: (e[1], e[0]))
        buckets.append(DescriptorBucket(low=low, high=high, entries=tuple(entries)))
    return buckets


def offense_by_template(table):
    """Two-stage aggregation: mean per descriptor within each template, then
    mean and population std across descriptors. Sorted by descending std."""
    out = []
    for template_id in table.template_ids():
        means = _descriptor_means(table.slice(template_id=template_id))
        values = list(means.values())
        mean = sum(values) / len(values)
        std = population_std(values)
        out.append({"template_id": template_id, "mean": mean, "std": std,
                    "descriptor_count": len(values)})
    out.sort(key=lambda r: (-r["std"], r["template_id"]))
    return out


def offensive_fraction(table, threshold=0.5):
    """Fraction of scored items at or above the probability threshold."""
    if not table.rows:
        raise ValueError("empty offense table")
    flagged = sum(1 for r in table.rows if r.probability >= threshold)
    return flagged / len(table.rows)


# ---------------------------------------------------------------------------
# Corpus descriptor frequency

@dataclass(frozen=True)
class FrequencyReport:
    examples_scanned: int
    occurrences: dict  # descriptor -> count

    def frequency(self, descriptor):
        if self.examples_scanned == 0:
            return 0.0
        return self.occurrences[descriptor] / self.examples_scanned


def _iter_corpus(corpus_source, fmt="auto"):
    """Yield example texts from an iterable of strings, a plain-text file
    (one example per line), or a JSONL file of {text} records."""
    if not isinstance(corpus_source, (str,)) and not hasattr(corpus_source, "read_text"):
        yield from corpus_source
        return
    with open(corpus_source, encoding="utf-8") as f:
        if fmt == "auto":
            first = f.readline()
            f.seek(0)
            fmt = "jsonl" if first.lstrip().startswith("{") else "text"
        if fmt == "jsonl":
            import json
            for line in f:
                line = line.strip()
                if line:
                    yield json.loads(line)["text"]
        else:
            for line in f:
                yield line.rstrip("\n")


def descriptor_frequency(corpus_source, descriptors, sample_size=None, seed=0,
                         corpus_format="auto"):
    """Count case-insensitive word-boundary occurrences of each single-word
    descriptor in one pass over the corpus; frequency is occurrences divided
    by examples scanned.

    sample_size draws a seeded reservoir sample of examples first.
    """
    descriptors = list(descriptors)
    for d in descriptors:
        if " " in d:
            raise ValueError(f"multi-word descriptor not supported: {d!r}")
        if not d:
            raise ValueError("empty descriptor")
    patterns = {
        d: re.compile(_BOUNDARY_BEFORE + re.escape(d) + _BOUNDARY_AFTER,
                      re.IGNORECASE)
        for d in descriptors}

    examples = _iter_corpus(corpus_source, corpus_format)
    if sample_size is not None:
        examples = _reservoir_sample(examples, sample_size, seed)

    counts = {d: 0 for d in descriptors}
    scanned = 0
    for text in examples:
        scanned += 1
        for d, pattern in patterns.items():
            counts[d] += len(pattern.findall(text))
    return FrequencyReport(examples_scanned=scanned, occurrences=counts)


def _reservoir_sample(iterable, k, seed):
    rng = random.Random(seed)
    reservoir = []
    for idx, item in enumerate(iterable):
        if idx < k:
            heapq.heappush(reservoir, (rng.random(), idx, item))
        else:
            r = rng.random()
            if r > reservoir[0][0]:
                heapq.heapreplace(reservoir, (r, idx, item))
    for _, idx, item in sorted(reservoir, key=lambda t: t[1]):
        yield item
