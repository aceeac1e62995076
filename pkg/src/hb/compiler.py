"""Deterministic compilation of (descriptor, noun, template) combinations
into sentence prompts, with optional surface variations.

Every record id has the form ``axis|descriptor|noun|template_id|flagbits``
and the output stream is sorted by id. Registry fields may not contain '|',
which makes nested generation in component order agree with a lexicographic
sort of the full id strings.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from importlib import resources

from .errors import CompatibilityError, RegistryError, RenderError
from .hashing import stable_hash64
from .registry import compatible_nouns, validate_registry

VARIANT_FLAGS = ("lowercase_descriptor", "dehyphenate", "decontract",
                 "drop_final_period")

VARIATION_POLICIES = ("none", "all", "sampled")

_VOWELS = set("aeiouAEIOU")
_article_exceptions = None


def _load_article_exceptions():
    global _article_exceptions
    if _article_exceptions is None:
        path = resources.files("hb") / "data" / "article_exceptions.json"
        data = json.loads(path.read_text(encoding="utf-8"))
        _article_exceptions = {w.lower(): "a" for w in data["use_a"]}
        _article_exceptions.update({w.lower(): "an" for w in data["use_an"]})
    return _article_exceptions


def select_article(phrase_head, exceptions=None):
    """'a' or 'an' for a singular phrase starting with phrase_head.

    Vowel-letter onset selects 'an'; a curated exception list covers words
    whose spelling and pronunciation disagree ('one-percenter', 'FTM', ...).
    """
    if not phrase_head:
        raise ValueError("empty phrase head")
    if exceptions is None:
        exceptions = _load_article_exceptions()
    head = phrase_head.split()[0].lower()
    if head in exceptions:
        return exceptions[head]
    return "an" if phrase_head[0] in _VOWELS else "a"


@dataclass(frozen=True)
class NounPhrase:
    text: str
    plurality: str  # "singular" | "plural"
    article: str    # "a" | "an" | "none"
    descriptor_span: tuple  # (start, end) of the rendered descriptor in text


@dataclass(frozen=True)
class SentenceRecord:
    id: str
    text: str
    descriptor_text: str
    axis: str
    bucket: str
    noun_singular: str
    gender_class: str
    template_id: str
    variants: tuple = ()

    def to_record(self):
        return {
            "schema_version": 1,
            "id": self.id,
            "text": self.text,
            "descriptor_text": self.descriptor_text,
            "axis": self.axis,
            "bucket": self.bucket,
            "noun_singular": self.noun_singular,
            "gender_class": self.gender_class,
            "template_id": self.template_id,
            "variants": list(self.variants),
        }

    @classmethod
    def from_record(cls, rec):
        return cls(id=rec["id"], text=rec["text"], descriptor_text=rec["descriptor_text"],
                   axis=rec["axis"], bucket=rec.get("bucket", ""),
                   noun_singular=rec["noun_singular"], gender_class=rec["gender_class"],
                   template_id=rec["template_id"],
                   variants=tuple(rec.get("variants", ())))


# Leading-phrase rewrites used when no plural_override is given. Prefixes
# mapping to None render unchanged in plural noun phrases.
_PLURAL_REWRITES = (
    ("who is ", "who are "),
    ("who uses ", "who use "),
    ("who walks ", "who walk "),
    ("who stutters", "who stutter"),
    ("who incurred ", None),
    ("with ", None),
    ("without ", None),
    ("in ", None),
    ("on ", None),
)


def pluralize_descriptor(descriptor):
    """Plural rendering of a descriptor phrase (after-noun phrases rewrite
    their leading verb; everything else is unchanged)."""
    if descriptor.plural_override:
        return descriptor.plural_override
    for prefix, repl in _PLURAL_REWRITES:
        if descriptor.text.startswith(prefix):
            if repl is None:
                return descriptor.text
            return repl + descriptor.text[len(prefix):]
    return descriptor.text


def build_noun_phrase(descriptor, noun, plurality, article_exceptions=None):
    """Render a descriptor and noun into a noun phrase.

    Singular phrases carry their indefinite article; plural phrases carry
    none. Raises CompatibilityError on a forbidden gender pairing.
    """
    if plurality not in ("singular", "plural"):
        raise ValueError(f"unknown plurality: {plurality}")
    restriction = descriptor.gender_restriction
    if restriction == "female_only" and noun.gender_class != "female":
        raise CompatibilityError(
            f"{descriptor.text!r} only combines with female nouns, got {noun.singular!r}")
    if restriction == "male_only" and noun.gender_class != "male":
        raise CompatibilityError(
            f"{descriptor.text!r} only combines with male nouns, got {noun.singular!r}")

    noun_text = noun.singular if plurality == "singular" else noun.plural
    desc_text = (descriptor.text if plurality == "singular"
                 else pluralize_descriptor(descriptor))

    if descriptor.placement == "before_noun":
        bare = f"{desc_text} {noun_text}"
        desc_start = 0
        head = desc_text
    else:
        bare = f"{noun_text} {desc_text}"
        desc_start = len(noun_text) + 1
        head = noun_text

    if plurality == "singular":
        article = select_article(head, article_exceptions)
        text = f"{article} {bare}"
        offset = len(article) + 1
    else:
        article = "none"
        text = bare
        offset = 0

    span = (offset + desc_start, offset + desc_start + len(desc_text))
    return NounPhrase(text=text, plurality=plurality, article=article,
                      descriptor_span=span)


def render_sentence(template, noun_phrase):
    """Substitute the noun phrase into the template's single slot."""
    if template.slot_plurality != noun_phrase.plurality:
        raise RenderError(
            f"template {template.id!r} needs a {template.slot_plurality} phrase, "
            f"got {noun_phrase.plurality}")
    slot = template.slot
    if template.pattern.count(slot) != 1:
        raise RenderError(f"template {template.id!r} must contain exactly one {slot}")
    return template.pattern.replace(slot, noun_phrase.text)


def _apply_flags(text, span, flags):
    """Apply variation flags in canonical order to (text, descriptor span)."""
    start, end = span
    if "lowercase_descriptor" in flags:
        text = text[:start] + text[start:end].lower() + text[end:]
    if "dehyphenate" in flags:
        text = text[:start] + text[start:end].replace("-", " ") + text[end:]
    if "decontract" in flags:
        text = text.replace("I'm", "I am")
    if "drop_final_period" in flags and text.endswith("."):
        text = text[:-1]
    return text


def _applicable_flags(text, span):
    start, end = span
    desc = text[start:end]
    flags = []
    if desc.lower() != desc:
        flags.append("lowercase_descriptor")
    if "-" in desc:
        flags.append("dehyphenate")
    if "I'm" in text:
        flags.append("decontract")
    if text.endswith("."):
        flags.append("drop_final_period")
    return flags


def flag_bits(variants):
    return "".join("1" if f in variants else "0" for f in VARIANT_FLAGS)


def record_id(axis, descriptor_text, noun_singular, template_id, variants=()):
    return f"{axis}|{descriptor_text}|{noun_singular}|{template_id}|{flag_bits(variants)}"


class SentenceCompiler:
    """Compiles a registry into sentence records; pure and reusable."""

    def __init__(self, registry, article_exceptions=None):
        self.registry = registry
        self.article_exceptions = article_exceptions

    def _compose(self, descriptor, noun, template):
        phrase = build_noun_phrase(descriptor, noun, template.slot_plurality,
                                   self.article_exceptions)
        text = render_sentence(template, phrase)
        slot_at = template.pattern.index(template.slot)
        start, end = phrase.descriptor_span
        return text, (slot_at + start, slot_at + end)

    def compose_base(self, descriptor_text, noun_singular, template_id):
        reg = self.registry
        return self._compose(reg.descriptor(descriptor_text),
                             reg.noun(noun_singular), reg.template(template_id))

    def make_record(self, descriptor, noun, template, variants=()):
        variants = tuple(f for f in VARIANT_FLAGS if f in variants)
        text, span = self._compose(descriptor, noun, template)
        text = _apply_flags(text, span, variants)
        return SentenceRecord(
            id=record_id(descriptor.axis, descriptor.text, noun.singular,
                         template.id, variants),
            text=text,
            descriptor_text=descriptor.text,
            axis=descriptor.axis,
            bucket=descriptor.bucket,
            noun_singular=noun.singular,
            gender_class=noun.gender_class,
            template_id=template.id,
            variants=variants,
        )

    def apply_variations(self, record, flags):
        """Re-derive a record with the given variation flags applied to its
        base sentence. Inapplicable flags leave the text unchanged but stay
        recorded on the result."""
        reg = self.registry
        descriptor = reg.descriptor(record.descriptor_text)
        noun = reg.noun(record.noun_singular)
        template = reg.template(record.template_id)
        return self.make_record(descriptor, noun, template, flags)

    def reconstruct_text(self, record):
        text, span = self.compose_base(record.descriptor_text,
                                       record.noun_singular, record.template_id)
        return _apply_flags(text, span, record.variants)

    def compile(self, variation_policy="none", seed=0):
        """Yield every (descriptor, compatible noun, template) sentence in id
        order.

        Policies: "none" emits base sentences only; "all" additionally emits
        every non-empty subset of the flags applicable to each base sentence;
        "sampled" emits the base plus one hash-selected applicable subset
        (the base alone when the hash selects the empty subset).
        """
        if variation_policy not in VARIATION_POLICIES:
            raise ValueError(f"unknown variation policy: {variation_policy}")
        report = validate_registry(self.registry, expect_shipped_profile=False)
        if not report.ok:
            raise RegistryError(
                "refusing to compile an invalid registry: "
                + "; ".join(report.violations))

        reg = self.registry
        descriptors = sorted(reg.descriptors, key=lambda d: f"{d.axis}|{d.text}|")
        nouns_key = lambda n: f"{n.singular}|"
        templates = sorted(reg.templates, key=lambda t: f"{t.id}|")

        for descriptor in descriptors:
            for noun in sorted(compatible_nouns(reg, descriptor), key=nouns_key):
                for template in templates:
                    base = self.make_record(descriptor, noun, template)
                    if variation_policy == "none":
                        yield base
                        continue
                    text, span = self._compose(descriptor, noun, template)
                    applicable = _applicable_flags(text, span)
                    if variation_policy == "all":
                        for subset in _all_subsets(applicable):
                            yield (base if not subset
                                   else self.make_record(descriptor, noun,
                                                         template, subset))
                    else:  # sampled
                        yield base
                        subset = _sampled_subset(applicable, base.id, seed)
                        if subset:
                            yield self.make_record(descriptor, noun, template, subset)


def _all_subsets(flags):
    """Subsets in flag-bit order, empty set first."""
    subsets = []
    for mask in range(2 ** len(flags)):
        subsets.append(tuple(f for i, f in enumerate(flags) if mask >> i & 1))
    subsets.sort(key=flag_bits)
    return subsets


def _sampled_subset(flags, base_id, seed):
    if not flags:
        return ()
    mask = stable_hash64(f"variants|{base_id}|{seed}") % (2 ** len(flags))
    return tuple(f for i, f in enumerate(flags) if mask >> i & 1)


def compile_dataset(registry, variation_policy="none", seed=0):
    """Module-level convenience over SentenceCompiler.compile."""
    return SentenceCompiler(registry).compile(variation_policy, seed)
