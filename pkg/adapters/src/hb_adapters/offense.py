"""Score offensiveness probabilities for sentences or responses.

Items may be sentence records ({id, text}) or response records
({response_id, text}); output is {id, prob_offensive} with the probability
taken from the classifier label named by --offensive-label (bounds enforced
before write).
"""
from __future__ import annotations

import torch

from .config import AdapterConfig, base_parser
from .io import BatchWriter, fail, read_jsonl, warn
from .styles import load_classifier


def _item_id(rec, path, line_no):
    for key in ("id", "response_id", "sentence_id"):
        if key in rec:
            return rec[key]
    raise ValueError(f"{path}:{line_no}: record has no id field")


def classify_offense(items_file, out_file, config, offensive_label="offensive"):
    items = []
    seen = set()
    for line_no, rec in read_jsonl(items_file):
        item_id = _item_id(rec, items_file, line_no)
        if item_id in seen:
            raise ValueError(f"{items_file}:{line_no}: duplicate id {item_id!r}")
        seen.add(item_id)
        items.append((item_id, rec["text"]))
    if not items:
        warn(f"{items_file} is empty; writing empty offense file")
    try:
        model, tokenizer = load_classifier(config)
    except Exception as exc:
        fail(f"could not load model {config.model!r}: {exc}")

    label2id = {name.lower(): i for i, name in model.config.id2label.items()}
    if offensive_label.lower() not in label2id:
        fail(f"classifier has no label {offensive_label!r}; "
             f"labels: {sorted(label2id)}")
    target = label2id[offensive_label.lower()]

    writer = BatchWriter(out_file)
    for start in range(0, len(items), config.batch_size):
        batch = items[start:start + config.batch_size]
        inputs = tokenizer([text for _, text in batch], return_tensors="pt",
                           padding=True, truncation=True,
                           max_length=128).to(config.device)
        with torch.no_grad():
            logits = model(**inputs).logits
        probs = torch.softmax(logits.float(), dim=-1)[:, target].tolist()
        writer.write_batch(
            {"schema_version": 1, "id": item_id,
             "prob_offensive": min(1.0, max(0.0, p))}
            for (item_id, _), p in zip(batch, probs))
    writer.close()
    return writer.count


def main(argv=None):
    parser = base_parser("offensiveness probabilities")
    parser.add_argument("--items", required=True,
                        help="sentences.jsonl or responses.jsonl")
    parser.add_argument("--offensive-label", default="offensive")
    args = parser.parse_args(argv)
    config = AdapterConfig.from_args(args)
    count = classify_offense(args.items, args.out, config,
                             offensive_label=args.offensive_label)
    print(f"scored {count} items -> {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
