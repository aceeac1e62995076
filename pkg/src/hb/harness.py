"""Deterministic mock scorers and score-file schema validation.

The mocks let every pipeline run end to end without real models: scores are
pure functions of (record id, profile), derived from a stable 64-bit hash
(see hashing module), so repeated runs are byte-identical.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from statistics import NormalDist

from .hashing import unit_uniform
from .jsonl import read_jsonl

_NORMAL = NormalDist()


@dataclass(frozen=True)
class MockProfile:
    seed: int = 0
    ppl_base: float = 50.0
    ppl_log_sigma: float = 0.5
    descriptor_ppl_spread: float = 0.0
    nonce_ppl_multiplier: float = 1.0
    axis_style_skew: dict = field(default_factory=dict)  # axis -> (style index, shift)
    offense_negativity_boost: float = 0.0
    style_count: int = 8
    responses_per_sentence: int = 1

    def __post_init__(self):
        if self.ppl_base <= 0:
            raise ValueError("ppl_base must be positive")
        if self.nonce_ppl_multiplier < 1:
            raise ValueError("nonce_ppl_multiplier must be >= 1")
        if not 0 <= self.offense_negativity_boost <= 1:
            raise ValueError("offense_negativity_boost must be in [0, 1]")
        if self.descriptor_ppl_spread < 0:
            raise ValueError("descriptor_ppl_spread must be >= 0")
        for axis, (idx, shift) in self.axis_style_skew.items():
            if not 0 <= shift <= 0.5:
                raise ValueError(
                    f"style shift for axis {axis!r} must be in [0, 0.5], got {shift}")
            if not 0 <= idx < self.style_count:
                raise ValueError(
                    f"style index for axis {axis!r} out of range: {idx}")

    @classmethod
    def from_file(cls, path):
        with open(path, encoding="utf-8") as f:
            raw = json.load(f)
        raw.pop("schema_version", None)
        skew = {axis: (int(v[0]), float(v[1]))
                for axis, v in raw.pop("axis_style_skew", {}).items()}
        return cls(axis_style_skew=skew, **raw)


def mock_perplexity(record, profile):
    """Log-normal perplexity around ppl_base, with an optional stable
    per-descriptor offset and a multiplier for the nonce axis."""
    z = _NORMAL.inv_cdf(unit_uniform(f"ppl|{record.id}|{profile.seed}"))
    offset = 0.0
    if profile.descriptor_ppl_spread > 0:
        u = unit_uniform(f"descppl|{record.descriptor_text}|{profile.seed}")
        offset = profile.descriptor_ppl_spread * (2 * u - 1)
    ppl = profile.ppl_base * math.exp(profile.ppl_log_sigma * z + offset)
    if record.axis == "nonce":
        ppl *= profile.nonce_ppl_multiplier
    return ppl


def mock_style_vector(record, profile, style_count=None, response_index=0):
    """Near-uniform probability vector; the configured axis skew moves mass
    onto one style while keeping the vector a valid distribution.

    The skew amplitude is modulated per descriptor (a stable factor in
    [0.5, 1.5] around the configured shift), so a skewed axis both raises the
    target style's mean by ~shift and spreads descriptors apart within the
    axis. Amplitudes stay below 0.75, keeping every vector valid.
    """
    s = style_count if style_count is not None else profile.style_count
    raw = [1.0 + (unit_uniform(f"style|{record.id}|r{response_index}|{k}|{profile.seed}")
                  - 0.5)
           for k in range(s)]
    total = sum(raw)
    probs = [v / total for v in raw]
    skew = profile.axis_style_skew.get(record.axis)
    if skew is not None:
        idx, shift = skew
        if idx >= s:
            raise ValueError(f"skewed style index {idx} out of range for S={s}")
        amplitude = shift * (0.5 + unit_uniform(
            f"skewamp|{record.descriptor_text}|{profile.seed}"))
        probs = [(1 - amplitude) * p for p in probs]
        probs[idx] += amplitude
    return probs


def mock_offense(record, profile, stance="neutral"):
    """Uniform base probability, floored at the negativity boost for
    negative-stance templates."""
    u = unit_uniform(f"offense|{record.id}|{profile.seed}")
    if stance == "negative":
        return profile.offense_negativity_boost + (1 - profile.offense_negativity_boost) * u
    return u


def mock_response_id(sentence_id, response_index):
    return f"{sentence_id}#r{response_index}"


def mock_responses(record, profile):
    """Deterministic synthetic responses (with contexts) for one sentence."""
    out = []
    for j in range(profile.responses_per_sentence):
        out.append({
            "schema_version": 1,
            "response_id": mock_response_id(record.id, j),
            "sentence_id": record.id,
            "context": f"your persona: I am a chatty partner.\n{record.text}",
            "text": f"I hear you: {record.text}",
        })
    return out


# ---------------------------------------------------------------------------
# Score-file schema validation

SCHEMA_KINDS = ("sentences", "ppl", "responses", "styles", "offense")


@dataclass(frozen=True)
class FileValidationReport:
    path: str
    kind: str
    violations: tuple = ()
    record_count: int = 0

    @property
    def ok(self):
        return not self.violations


def validate_schema(path, kind, sentence_ids=None, response_ids=None,
                    style_count=None, max_violations=50):
    """Check required fields, value ranges, and referential integrity of a
    score/response file. Report-only; diagnostics carry line numbers."""
    if kind not in SCHEMA_KINDS:
        raise ValueError(f"unknown schema kind: {kind}")
    violations = []
    count = 0
    seen_ids = set()

    def bad(line_no, msg):
        if len(violations) < max_violations:
            violations.append(f"{path}:{line_no}: {msg}")

    for line_no, rec in read_jsonl(path):
        count += 1
        if kind == "sentences":
            for key in ("id", "text", "descriptor_text", "axis", "noun_singular",
                        "template_id"):
                if key not in rec:
                    bad(line_no, f"missing field {key!r}")
            rid = rec.get("id")
        elif kind == "ppl":
            rid = rec.get("sentence_id")
            if rid is None:
                bad(line_no, "missing field 'sentence_id'")
            ppl = rec.get("perplexity")
            if not isinstance(ppl, (int, float)) or not math.isfinite(ppl) or ppl <= 0:
                bad(line_no, f"perplexity must be a positive finite number, got {ppl!r}")
            if sentence_ids is not None and rid is not None and rid not in sentence_ids:
                bad(line_no, f"unknown sentence_id {rid!r}")
        elif kind == "responses":
            rid = rec.get("response_id")
            if rid is None:
                bad(line_no, "missing field 'response_id'")
            sid = rec.get("sentence_id")
            if sid is None:
                bad(line_no, "missing field 'sentence_id'")
            elif sentence_ids is not None and sid not in sentence_ids:
                bad(line_no, f"unknown sentence_id {sid!r}")
            if "text" not in rec:
                bad(line_no, "missing field 'text'")
        elif kind == "styles":
            rid = rec.get("response_id")
            if rid is None:
                bad(line_no, "missing field 'response_id'")
            elif response_ids is not None and rid not in response_ids:
                bad(line_no, f"unknown response_id {rid!r}")
            probs = rec.get("probs")
            if not isinstance(probs, list) or not probs:
                bad(line_no, "missing or empty 'probs'")
            else:
                if style_count is not None and len(probs) != style_count:
                    bad(line_no, f"probs has length {len(probs)}, expected {style_count}")
                if any(not isinstance(p, (int, float)) or p < 0 or p > 1
                       for p in probs):
                    bad(line_no, "probs entries must lie in [0, 1]")
                elif abs(sum(probs) - 1.0) > 1e-4:
                    bad(line_no, f"probs sum to {sum(probs):.6f}, expected 1 +/- 1e-4")
        else:  # offense
            rid = rec.get("id")
            if rid is None:
                bad(line_no, "missing field 'id'")
            prob = rec.get("prob_offensive")
            if not isinstance(prob, (int, float)) or not 0 <= prob <= 1:
                bad(line_no, f"prob_offensive must lie in [0, 1], got {prob!r}")
            if (sentence_ids is not None and rid is not None
                    and rid not in sentence_ids
                    and (response_ids is None or rid not in response_ids)):
                bad(line_no, f"unknown id {rid!r}")
        if rid is not None:
            if rid in seen_ids:
                bad(line_no, f"duplicate id {rid!r}")
            seen_ids.add(rid)

    return FileValidationReport(path=str(path), kind=kind,
                                violations=tuple(violations), record_count=count)
