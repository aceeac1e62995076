"""Generate one dialogue response per (sentence, persona) pairing.

The context is a seeded persona sample followed by the templated sentence;
decoding uses beam search with a minimum response length and repeated-n-gram
blocking. Items that fail to decode are skipped with a log line and the run
continues. Output records: {response_id, sentence_id, context, text} plus
the generated token count.
"""
from __future__ import annotations

import hashlib
import sys

import torch

from .config import AdapterConfig, base_parser
from .io import BatchWriter, fail, read_unique, warn


def load_generator(config):
    from transformers import AutoModelForCausalLM, AutoTokenizer
    tokenizer = AutoTokenizer.from_pretrained(config.model)
    model = AutoModelForCausalLM.from_pretrained(config.model)
    model.to(config.device)
    model.eval()
    return model, tokenizer


def read_personas(path):
    with open(path, encoding="utf-8") as f:
        personas = [line.strip() for line in f if line.strip()]
    if not personas:
        raise ValueError(f"{path}: no personas")
    return personas


def _pick_personas(personas, sentence_id, count, seed):
    """Stable seeded sample (without replacement while possible)."""
    chosen = []
    taken = set()
    for k in range(count):
        digest = hashlib.blake2b(f"persona|{sentence_id}|{k}|{seed}".encode(),
                                 digest_size=8).digest()
        idx = int.from_bytes(digest, "big") % len(personas)
        if len(taken) < len(personas):
            while idx in taken:
                idx = (idx + 1) % len(personas)
        taken.add(idx)
        chosen.append(personas[idx])
    return chosen


def generate_responses(sentences_file, persona_file, out_file, config,
                       personas_per_sentence=1):
    records = read_unique(sentences_file, "id")
    personas = read_personas(persona_file)
    if not records:
        warn(f"{sentences_file} is empty; writing empty response file")
    try:
        model, tokenizer = load_generator(config)
    except Exception as exc:
        fail(f"could not load model {config.model!r}: {exc}")

    pad_id = tokenizer.pad_token_id
    if pad_id is None:
        pad_id = tokenizer.eos_token_id

    writer = BatchWriter(out_file)
    skipped = 0
    for rec in records:
        batch = []
        for k, persona in enumerate(_pick_personas(personas, rec["id"],
                                                   personas_per_sentence,
                                                   config.seed)):
            context = f"{persona}\n{rec['text']}"
            try:
                inputs = tokenizer(context, return_tensors="pt").to(config.device)
                with torch.no_grad():
                    output = model.generate(
                        **inputs,
                        num_beams=config.beam_size,
                        min_new_tokens=config.min_generation_length,
                        max_new_tokens=config.max_generation_length,
                        no_repeat_ngram_size=config.blocked_ngram_size,
                        do_sample=False,
                        early_stopping=True,
                        pad_token_id=pad_id,
                    )
                generated = output[0][inputs["input_ids"].shape[1]:]
                text = tokenizer.decode(generated, skip_special_tokens=True)
            except Exception as exc:
                skipped += 1
                print(f"skipping {rec['id']} persona {k}: {exc}",
                      file=sys.stderr)
                continue
            batch.append({
                "schema_version": 1,
                "response_id": f"{rec['id']}#p{k}",
                "sentence_id": rec["id"],
                "context": context,
                "text": text,
                "generated_token_count": int(generated.shape[0]),
            })
        writer.write_batch(batch)
    writer.close()
    if skipped:
        warn(f"{skipped} generations skipped")
    return writer.count


def main(argv=None):
    parser = base_parser("dialogue responses via beam search")
    parser.add_argument("--sentences", required=True)
    parser.add_argument("--personas", required=True)
    parser.add_argument("--personas-per-sentence", type=int, default=1)
    parser.add_argument("--max-length", type=int, default=40)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    config = AdapterConfig.from_args(args)
    count = generate_responses(args.sentences, args.personas, args.out, config,
                               personas_per_sentence=args.personas_per_sentence)
    print(f"generated {count} responses -> {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
