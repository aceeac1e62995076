"""Token-likelihood bias analysis over per-sentence perplexities.

Joins external perplexity scores to compiled sentence metadata, summarizes
distributions by axis and template, and measures what fraction of descriptor
pairs within an axis have significantly different perplexity distributions
under the Mann-Whitney U test.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import quantiles

from .errors import InsufficientDataError, JoinError
from .jsonl import read_jsonl
from .stats import mann_whitney_u, median

DEFAULT_ANALYSIS_TEMPLATE = "love_pnp"
DEFAULT_MIN_DESCRIPTOR_LEN = 6
DEFAULT_MAX_DESCRIPTOR_LEN = 19
DEFAULT_ALPHA = 0.05
TOP_K_DESCRIPTORS = 3


@dataclass(frozen=True)
class ScoredSentence:
    sentence_id: str
    perplexity: float
    descriptor: str
    axis: str
    template_id: str
    noun: str


class PerplexityTable:
    """Perplexities joined to sentence metadata, indexed for grouping."""

    def __init__(self, rows):
        self.rows = tuple(rows)
        self._by_axis_template = {}
        for row in self.rows:
            key = (row.axis, row.template_id)
            self._by_axis_template.setdefault(key, []).append(row)

    def __len__(self):
        return len(self.rows)

    def slice(self, axis=None, template_id=None):
        return [r for r in self.rows
                if (axis is None or r.axis == axis)
                and (template_id is None or r.template_id == template_id)]

    def axes(self):
        return sorted({r.axis for r in self.rows})

    def template_ids(self):
        return sorted({r.template_id for r in self.rows})


def _load_sentence_index(dataset_path):
    index = {}
    for line_no, rec in read_jsonl(dataset_path):
        index[rec["id"]] = rec
    return index


def ingest_perplexities(scores_source, dataset):
    """Join {sentence_id, perplexity} records against a sentences file.

    Unknown ids, duplicate ids, and non-positive perplexities are errors.
    """
    index = dataset if isinstance(dataset, dict) else _load_sentence_index(dataset)
    rows = []
    seen = set()
    unknown = []
    for line_no, rec in read_jsonl(scores_source):
        sid = rec.get("sentence_id")
        if sid is None:
            raise JoinError(f"{scores_source}:{line_no}: missing sentence_id")
        if sid in seen:
            raise JoinError(f"{scores_source}:{line_no}: duplicate sentence_id {sid!r}")
        seen.add(sid)
        ppl = rec.get("perplexity")
        if not isinstance(ppl, (int, float)) or not math.isfinite(ppl) or ppl <= 0:
            raise ValueError(
                f"{scores_source}:{line_no}: perplexity must be positive and "
                f"finite, got {ppl!r}")
        meta = index.get(sid)
        if meta is None:
            unknown.append(sid)
            continue
        rows.append(ScoredSentence(
            sentence_id=sid, perplexity=float(ppl),
            descriptor=meta["descriptor_text"],
            axis=meta["axis"], template_id=meta["template_id"],
            noun=meta["noun_singular"]))
    if unknown:
        shown = ", ".join(repr(u) for u in unknown[:5])
        raise JoinError(
            f"{scores_source}: {len(unknown)} score ids not in dataset: {shown}"
            + ("..." if len(unknown) > 5 else ""))
    return PerplexityTable(rows)


@dataclass(frozen=True)
class GroupSummary:
    axis: str
    template_id: str
    count: int
    median: float
    q1: float
    q3: float
    min: float
    max: float


def distribution_summary(table, group_by=("axis", "template")):
    """Per-group perplexity summaries (median, quartiles, min/max, count)."""
    if not table.rows:
        raise ValueError("empty perplexity table")
    for dim in group_by:
        if dim not in ("axis", "template"):
            raise ValueError(f"unknown grouping dimension: {dim}")
    groups = {}
    for row in table.rows:
        key = (row.axis if "axis" in group_by else "",
               row.template_id if "template" in group_by else "")
        groups.setdefault(key, []).append(row.perplexity)

    summaries = []
    for (axis, template_id) in sorted(groups):
        values = sorted(groups[(axis, template_id)])
        if len(values) == 1:
            q1 = med = q3 = values[0]
        else:
            q1, med, q3 = quantiles(values, n=4, method="inclusive")
        summaries.append(GroupSummary(
            axis=axis, template_id=template_id, count=len(values),
            median=med, q1=q1, q3=q3, min=values[0], max=values[-1]))
    return summaries


@dataclass(frozen=True)
class PairwiseSigReport:
    axis: str
    template_id: str
    percent_significant: float
    low_ppl_descriptors: tuple
    high_ppl_descriptors: tuple
    pair_count: int
    eligible_descriptors: tuple


def pairwise_significance(table, axis, template_id,
                          min_len=DEFAULT_MIN_DESCRIPTOR_LEN,
                          max_len=DEFAULT_MAX_DESCRIPTOR_LEN,
                          alpha=DEFAULT_ALPHA):
    """U-test every unordered descriptor pair within one axis and template.

    Descriptors are filtered by character length (spaces and hyphens count);
    each descriptor's sample pools all of its scored sentences under the
    template, across nouns and variants.
    """
    rows = table.slice(axis=axis, template_id=template_id)
    samples = {}
    for row in rows:
        if min_len <= len(row.descriptor) <= max_len:
            samples.setdefault(row.descriptor, []).append(row.perplexity)
    eligible = sorted(samples)
    if len(eligible) < 2:
        raise InsufficientDataError(
            f"axis {axis!r} / template {template_id!r}: need >= 2 descriptors "
            f"after the {min_len}-{max_len} character filter, got {len(eligible)}")

    significant = 0
    pair_count = 0
    for i in range(len(eligible)):
        for j in range(i + 1, len(eligible)):
            result = mann_whitney_u(samples[eligible[i]], samples[eligible[j]])
            pair_count += 1
            if result.p_value < alpha:
                significant += 1

    medians = {d: median(vals) for d, vals in samples.items()}
    ranked = sorted(eligible, key=lambda d: (medians[d], d))
    low = tuple(ranked[:TOP_K_DESCRIPTORS])
    high = tuple(ranked[::-1][:TOP_K_DESCRIPTORS])
    return PairwiseSigReport(
        axis=axis, template_id=template_id,
        percent_significant=100.0 * significant / pair_count,
        low_ppl_descriptors=low, high_ppl_descriptors=high,
        pair_count=pair_count, eligible_descriptors=tuple(eligible))
