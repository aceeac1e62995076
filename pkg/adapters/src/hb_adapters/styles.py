"""Classify response styles into probability vectors.

Reads responses.jsonl ({response_id, text, ...}); any descriptor masking is
the caller's job before this adapter runs. Writes {response_id, probs}
records plus the ordered style-name manifest taken from the classifier's
label map. Aborts if the vector dimension ever drifts from the manifest.
"""
from __future__ import annotations

import json

import torch

from .config import AdapterConfig, base_parser
from .io import BatchWriter, fail, read_unique, warn


def load_classifier(config):
    from transformers import AutoModelForSequenceClassification, AutoTokenizer
    tokenizer = AutoTokenizer.from_pretrained(config.model)
    model = AutoModelForSequenceClassification.from_pretrained(config.model)
    model.to(config.device)
    model.eval()
    return model, tokenizer


def label_manifest(model):
    id2label = model.config.id2label
    return [id2label[i] for i in range(len(id2label))]


def _batch_probs(model, tokenizer, texts, device):
    inputs = tokenizer(texts, return_tensors="pt", padding=True,
                       truncation=True, max_length=128).to(device)
    with torch.no_grad():
        logits = model(**inputs).logits
    return torch.softmax(logits.float(), dim=-1).tolist()


def classify_styles(responses_file, out_file, manifest_file, config):
    records = read_unique(responses_file, "response_id")
    if not records:
        warn(f"{responses_file} is empty; writing empty style file")
    try:
        model, tokenizer = load_classifier(config)
    except Exception as exc:
        fail(f"could not load model {config.model!r}: {exc}")
    manifest = label_manifest(model)

    writer = BatchWriter(out_file)
    for start in range(0, len(records), config.batch_size):
        batch = records[start:start + config.batch_size]
        probs = _batch_probs(model, tokenizer, [r["text"] for r in batch],
                             config.device)
        for vec in probs:
            if len(vec) != len(manifest):
                writer.close()
                fail(f"style vector dimension drifted: got {len(vec)}, "
                     f"manifest has {len(manifest)}")
        writer.write_batch(
            {"schema_version": 1, "response_id": rec["response_id"],
             "probs": vec}
            for rec, vec in zip(batch, probs))
    writer.close()

    with open(manifest_file, "w", encoding="utf-8") as f:
        json.dump({"schema_version": 1, "styles": manifest}, f)
        f.write("\n")
    return writer.count


def main(argv=None):
    parser = base_parser("style probability vectors for responses")
    parser.add_argument("--responses", required=True)
    parser.add_argument("--manifest-out", required=True)
    args = parser.parse_args(argv)
    config = AdapterConfig.from_args(args)
    count = classify_styles(args.responses, args.out, args.manifest_out, config)
    print(f"classified {count} responses -> {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
