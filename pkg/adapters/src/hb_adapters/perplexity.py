"""Score full-sentence perplexity under a causal language model.

Reads sentences.jsonl ({id, text, ...}), writes {sentence_id, perplexity}
records. Perplexity is exp of the mean token negative log-likelihood over
the whole sentence, with the BOS token prepended as context for the first
token when the tokenizer defines one.
"""
from __future__ import annotations

import torch

from .config import AdapterConfig, base_parser
from .io import BatchWriter, fail, read_unique, warn


def load_causal_lm(config):
    from transformers import AutoModelForCausalLM, AutoTokenizer
    tokenizer = AutoTokenizer.from_pretrained(config.model)
    model = AutoModelForCausalLM.from_pretrained(config.model)
    model.to(config.device)
    model.eval()
    return model, tokenizer


def _batch_perplexities(model, tokenizer, texts, device):
    encoded = [tokenizer.encode(t) for t in texts]
    if tokenizer.bos_token_id is not None:
        encoded = [[tokenizer.bos_token_id] + ids for ids in encoded]
    max_len = max(len(ids) for ids in encoded)
    pad_id = tokenizer.pad_token_id
    if pad_id is None:
        pad_id = 0
    input_ids = torch.full((len(encoded), max_len), pad_id, dtype=torch.long)
    attention = torch.zeros((len(encoded), max_len), dtype=torch.long)
    for i, ids in enumerate(encoded):
        input_ids[i, :len(ids)] = torch.tensor(ids)
        attention[i, :len(ids)] = 1
    input_ids = input_ids.to(device)
    attention = attention.to(device)

    with torch.no_grad():
        logits = model(input_ids=input_ids, attention_mask=attention).logits
    log_probs = torch.log_softmax(logits[:, :-1].float(), dim=-1)
    targets = input_ids[:, 1:]
    target_mask = attention[:, 1:].float()
    token_nll = -log_probs.gather(-1, targets.unsqueeze(-1)).squeeze(-1)
    per_seq = (token_nll * target_mask).sum(dim=1) / target_mask.sum(dim=1)
    return torch.exp(per_seq).tolist()


def score_perplexity(sentences_file, out_file, config):
    records = read_unique(sentences_file, "id")
    if not records:
        warn(f"{sentences_file} is empty; writing empty score file")
    try:
        model, tokenizer = load_causal_lm(config)
    except Exception as exc:
        unscored = [rec["id"] for rec in records]
        fail(f"could not load model {config.model!r}: {exc}; "
             f"{len(unscored)} ids unscored: {unscored[:5]}")
    writer = BatchWriter(out_file)
    for start in range(0, len(records), config.batch_size):
        batch = records[start:start + config.batch_size]
        ppls = _batch_perplexities(model, tokenizer, [r["text"] for r in batch],
                                   config.device)
        writer.write_batch(
            {"schema_version": 1, "sentence_id": rec["id"], "perplexity": ppl}
            for rec, ppl in zip(batch, ppls))
    writer.close()
    return writer.count


def main(argv=None):
    parser = base_parser("full-sentence perplexity under a causal LM")
    parser.add_argument("--sentences", required=True)
    args = parser.parse_args(argv)
    config = AdapterConfig.from_args(args)
    count = score_perplexity(args.sentences, args.out, config)
    print(f"scored {count} sentences -> {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
