"""Descriptor, noun, and template registries.

The three collections are loaded from line-delimited JSON files and are
immutable after load. Validation distinguishes structural problems (bad
enums, duplicate descriptors, malformed template slots) from deviations
against the shipped dataset profile (594 descriptors, 30 nouns, 26
templates), so that small custom registries remain usable.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import RegistryError
from .jsonl import read_jsonl

AXES = (
    "ability",
    "age",
    "body_type",
    "characteristics",
    "cultural",
    "gender_and_sex",
    "nationality",
    "nonce",
    "political_ideologies",
    "race_ethnicity",
    "religion",
    "sexual_orientation",
    "socioeconomic_class",
)

PLACEMENTS = ("before_noun", "after_noun")
GENDER_RESTRICTIONS = ("none", "female_only", "male_only")
PREFERREDNESS = ("reviewed_unlabeled", "dispreferred", "polarizing", "unreviewed")
GENDER_CLASSES = ("female", "male", "unspecified")
STANCES = ("positive", "negative", "neutral")

SINGULAR_SLOT = "[NOUN PHRASE]"
PLURAL_SLOT = "[PLURAL NOUN PHRASE]"

# Expected shape of the shipped data files.
SHIPPED_DESCRIPTOR_COUNT = 594
SHIPPED_NOUN_CLASS_COUNTS = {"female": 10, "male": 11, "unspecified": 9}
SHIPPED_TEMPLATE_COUNT = 26


@dataclass(frozen=True)
class Descriptor:
    text: str
    axis: str
    bucket: str
    placement: str
    gender_restriction: str
    preferredness: str
    plural_override: str = ""


@dataclass(frozen=True)
class NounEntry:
    singular: str
    plural: str
    gender_class: str


@dataclass(frozen=True)
class Template:
    id: str
    pattern: str
    slot_plurality: str
    stance: str

    @property
    def slot(self):
        return SINGULAR_SLOT if self.slot_plurality == "singular" else PLURAL_SLOT


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = ()
    warnings: tuple = ()
    gender_restricted_counts: dict = field(default_factory=dict)

    @property
    def ok(self):
        return not self.violations


class Registry:
    """Immutable bundle of descriptors, nouns, and templates."""

    def __init__(self, descriptors, nouns, templates):
        self.descriptors = tuple(descriptors)
        self.nouns = tuple(nouns)
        self.templates = tuple(templates)
        self._descriptor_by_text = {d.text: d for d in self.descriptors}
        self._template_by_id = {t.id: t for t in self.templates}
        self._noun_by_singular = {n.singular: n for n in self.nouns}

    def descriptor(self, text):
        try:
            return self._descriptor_by_text[text]
        except KeyError:
            raise RegistryError(f"descriptor not in registry: {text!r}") from None

    def noun(self, singular):
        try:
            return self._noun_by_singular[singular]
        except KeyError:
            raise RegistryError(f"noun not in registry: {singular!r}") from None

    def template(self, template_id):
        try:
            return self._template_by_id[template_id]
        except KeyError:
            raise RegistryError(f"template not in registry: {template_id!r}") from None

    def __eq__(self, other):
        return (isinstance(other, Registry)
                and self.descriptors == other.descriptors
                and self.nouns == other.nouns
                and self.templates == other.templates)


def default_data_dir():
    """Directory holding the data files shipped with the package."""
    return Path(resources.files("hb") / "data")


def _require(record, key, path, line):
    if key not in record:
        raise RegistryError(f"{path}:{line}: missing field {key!r}")
    return record[key]


def _check_token(value, what, path, line):
    if not isinstance(value, str) or not value:
        raise RegistryError(f"{path}:{line}: {what} must be a non-empty string")
    if "|" in value:
        raise RegistryError(f"{path}:{line}: {what} must not contain '|': {value!r}")
    return value


def load_registry(descriptor_source, noun_source, template_source):
    """Load and structurally validate the three registry files.

    Raises RegistryError on duplicates, unknown enum values, or malformed
    template slots; raises SchemaError on unparseable lines. An empty
    descriptor file loads but emits a warning.
    """
    descriptors = []
    seen_desc = set()
    for line_no, rec in read_jsonl(descriptor_source):
        text = _check_token(_require(rec, "text", descriptor_source, line_no),
                            "descriptor text", descriptor_source, line_no)
        if text in seen_desc:
            raise RegistryError(
                f"{descriptor_source}:{line_no}: duplicate descriptor {text!r}")
        seen_desc.add(text)
        axis = _require(rec, "axis", descriptor_source, line_no)
        if axis not in AXES:
            raise RegistryError(f"{descriptor_source}:{line_no}: unknown axis {axis!r}")
        placement = _require(rec, "placement", descriptor_source, line_no)
        if placement not in PLACEMENTS:
            raise RegistryError(
                f"{descriptor_source}:{line_no}: unknown placement {placement!r}")
        gender = rec.get("gender_restriction", "none")
        if gender not in GENDER_RESTRICTIONS:
            raise RegistryError(
                f"{descriptor_source}:{line_no}: unknown gender_restriction {gender!r}")
        pref = rec.get("preferredness", "unreviewed")
        if pref not in PREFERREDNESS:
            raise RegistryError(
                f"{descriptor_source}:{line_no}: unknown preferredness {pref!r}")
        descriptors.append(Descriptor(
            text=text,
            axis=axis,
            bucket=rec.get("bucket", ""),
            placement=placement,
            gender_restriction=gender,
            preferredness=pref,
            plural_override=rec.get("plural_override", ""),
        ))
    if not descriptors:
        warnings.warn(f"descriptor file {descriptor_source} is empty")

    nouns = []
    seen_noun = set()
    for line_no, rec in read_jsonl(noun_source):
        singular = _check_token(_require(rec, "singular", noun_source, line_no),
                                "noun singular", noun_source, line_no)
        plural = _check_token(_require(rec, "plural", noun_source, line_no),
                              "noun plural", noun_source, line_no)
        if singular in seen_noun:
            raise RegistryError(f"{noun_source}:{line_no}: duplicate noun {singular!r}")
        seen_noun.add(singular)
        gender_class = _require(rec, "gender_class", noun_source, line_no)
        if gender_class not in GENDER_CLASSES:
            raise RegistryError(
                f"{noun_source}:{line_no}: unknown gender_class {gender_class!r}")
        nouns.append(NounEntry(singular=singular, plural=plural,
                               gender_class=gender_class))

    templates = []
    seen_tmpl = set()
    for line_no, rec in read_jsonl(template_source):
        tid = _check_token(_require(rec, "id", template_source, line_no),
                           "template id", template_source, line_no)
        if tid in seen_tmpl:
            raise RegistryError(f"{template_source}:{line_no}: duplicate template id {tid!r}")
        seen_tmpl.add(tid)
        pattern = _require(rec, "pattern", template_source, line_no)
        plurality = _require(rec, "slot_plurality", template_source, line_no)
        if plurality not in ("singular", "plural"):
            raise RegistryError(
                f"{template_source}:{line_no}: unknown slot_plurality {plurality!r}")
        stance = rec.get("stance", "neutral")
        if stance not in STANCES:
            raise RegistryError(f"{template_source}:{line_no}: unknown stance {stance!r}")
        tmpl = Template(id=tid, pattern=pattern, slot_plurality=plurality, stance=stance)
        _check_template_slot(tmpl, template_source, line_no)
        templates.append(tmpl)

    return Registry(descriptors, nouns, templates)


def _check_template_slot(tmpl, path, line_no):
    # "[NOUN PHRASE]" is not a substring of "[PLURAL NOUN PHRASE]", so the
    # two counts are independent.
    counts = {"singular": tmpl.pattern.count(SINGULAR_SLOT),
              "plural": tmpl.pattern.count(PLURAL_SLOT)}
    if counts[tmpl.slot_plurality] != 1 or counts["singular"] + counts["plural"] != 1:
        raise RegistryError(
            f"{path}:{line_no}: template {tmpl.id!r} must contain exactly one "
            f"{tmpl.slot} slot")


def load_default_registry():
    data = default_data_dir()
    return load_registry(data / "descriptors.jsonl", data / "nouns.jsonl",
                         data / "templates.jsonl")


def validate_registry(reg, expect_shipped_profile=True):
    """Report every invariant violation; empty report means the registry is
    valid. Shipped-profile checks (594/30/26 counts and noun class counts) can
    be switched off for custom registries.
    """
    violations = []
    warns = []

    texts = [d.text for d in reg.descriptors]
    if len(set(texts)) != len(texts):
        dupes = sorted({t for t in texts if texts.count(t) > 1})
        violations.append(f"duplicate descriptors: {', '.join(dupes)}")
    for d in reg.descriptors:
        if d.axis not in AXES:
            violations.append(f"unknown axis {d.axis!r} on descriptor {d.text!r}")
        if (d.bucket == "after_the_noun") != (d.placement == "after_noun"):
            violations.append(
                f"descriptor {d.text!r}: bucket {d.bucket!r} inconsistent with "
                f"placement {d.placement!r}")

    for n in reg.nouns:
        if n.plural == n.singular:
            violations.append(f"noun {n.singular!r}: plural equals singular")

    class_counts = {c: 0 for c in GENDER_CLASSES}
    for n in reg.nouns:
        class_counts[n.gender_class] += 1

    if expect_shipped_profile:
        if len(reg.descriptors) != SHIPPED_DESCRIPTOR_COUNT:
            violations.append(
                f"descriptor count != {SHIPPED_DESCRIPTOR_COUNT} "
                f"(got {len(reg.descriptors)})")
        if class_counts != SHIPPED_NOUN_CLASS_COUNTS:
            violations.append(
                f"noun class counts != {SHIPPED_NOUN_CLASS_COUNTS} (got {class_counts})")
        if len(reg.templates) != SHIPPED_TEMPLATE_COUNT:
            violations.append(
                f"template count != {SHIPPED_TEMPLATE_COUNT} (got {len(reg.templates)})")

    if not reg.descriptors:
        warns.append("registry has no descriptors")

    restricted = {
        "female_only": sum(1 for d in reg.descriptors
                           if d.gender_restriction == "female_only"),
        "male_only": sum(1 for d in reg.descriptors
                         if d.gender_restriction == "male_only"),
    }
    return ValidationReport(violations=tuple(violations), warnings=tuple(warns),
                            gender_restricted_counts=restricted)


def compatible_nouns(reg, descriptor):
    """Nouns a descriptor may combine with, honoring its gender restriction."""
    if isinstance(descriptor, str):
        descriptor = reg.descriptor(descriptor)
    elif descriptor.text not in reg._descriptor_by_text:
        raise RegistryError(f"descriptor not in registry: {descriptor.text!r}")
    if descriptor.gender_restriction == "none":
        return list(reg.nouns)
    wanted = {"female_only": "female", "male_only": "male"}[descriptor.gender_restriction]
    return [n for n in reg.nouns if n.gender_class == wanted]
