import json

import pytest

from hb.registry import Descriptor, NounEntry, Registry, Template, load_default_registry


@pytest.fixture(scope="session")
def shipped_registry():
    return load_default_registry()


def make_descriptor(text, axis="ability", bucket="unspecific",
                    placement="before_noun", gender_restriction="none",
                    preferredness="reviewed_unlabeled", plural_override=""):
    return Descriptor(text=text, axis=axis, bucket=bucket, placement=placement,
                      gender_restriction=gender_restriction,
                      preferredness=preferredness, plural_override=plural_override)


def make_registry(descriptor_texts=("blind", "autistic"), axes=None,
                  nouns=(("mom", "moms", "female"), ("dad", "dads", "male"),
                         ("kid", "kids", "unspecified")),
                  template_specs=(
                      ("love_pnp", "I love [PLURAL NOUN PHRASE].", "plural", "positive"),
                      ("hi_excl_im_np", "Hi! I'm [NOUN PHRASE].", "singular", "neutral"),
                  )):
    descriptors = []
    for i, text in enumerate(descriptor_texts):
        axis = axes[i] if axes else "ability"
        descriptors.append(make_descriptor(text, axis=axis))
    noun_entries = [NounEntry(s, p, g) for s, p, g in nouns]
    templates = [Template(id=t, pattern=pat, slot_plurality=plur, stance=stance)
                 for t, pat, plur, stance in template_specs]
    return Registry(descriptors, noun_entries, templates)


def write_registry_dir(path, registry):
    path.mkdir(parents=True, exist_ok=True)
    with open(path / "descriptors.jsonl", "w", encoding="utf-8") as f:
        for d in registry.descriptors:
            rec = {"schema_version": 1, "text": d.text, "axis": d.axis,
                   "bucket": d.bucket, "placement": d.placement,
                   "gender_restriction": d.gender_restriction,
                   "preferredness": d.preferredness}
            if d.plural_override:
                rec["plural_override"] = d.plural_override
            f.write(json.dumps(rec) + "\n")
    with open(path / "nouns.jsonl", "w", encoding="utf-8") as f:
        for n in registry.nouns:
            f.write(json.dumps({"schema_version": 1, "singular": n.singular,
                                "plural": n.plural,
                                "gender_class": n.gender_class}) + "\n")
    with open(path / "templates.jsonl", "w", encoding="utf-8") as f:
        for t in registry.templates:
            f.write(json.dumps({"schema_version": 1, "id": t.id,
                                "pattern": t.pattern,
                                "slot_plurality": t.slot_plurality,
                                "stance": t.stance}) + "\n")
    return path
