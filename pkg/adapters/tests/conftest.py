"""Builds tiny local models exercising the same loading/decoding code paths
as hub checkpoints, so the adapters can be tested without network access."""
import json
import subprocess

import pytest
import torch
from tokenizers import Tokenizer, models, pre_tokenizers
from transformers import (BertConfig, BertForSequenceClassification,
                          GPT2Config, GPT2LMHeadModel, PreTrainedTokenizerFast)

STYLE_NAMES = ["Sympathetic", "Curious", "Warm", "Hateful", "Solemn", "Charming"]

VOCAB_WORDS = (
    "i am a an the you we they love like hate my your it is are was hi "
    "hello friend kid kids guy guys mom moms dad dads person people think "
    "best worst being not have has do what how who blind deaf tall short "
    "happy sad curious warm kind style left handed autistic spry so very "
    "really too also and or but with without of to for in on at ! . ? ,"
).split()


def build_tokenizer(path):
    vocab = {"<pad>": 0, "<unk>": 1, "<bos>": 2, "<eos>": 3}
    for word in VOCAB_WORDS:
        vocab.setdefault(word, len(vocab))
    tok = Tokenizer(models.WordLevel(vocab, unk_token="<unk>"))
    tok.pre_tokenizer = pre_tokenizers.Whitespace()
    fast = PreTrainedTokenizerFast(
        tokenizer_object=tok, unk_token="<unk>", pad_token="<pad>",
        bos_token="<bos>", eos_token="<eos>")
    fast.save_pretrained(path)
    return fast, len(vocab)


@pytest.fixture(scope="session")
def tiny_causal_lm(tmp_path_factory):
    path = tmp_path_factory.mktemp("models") / "causal"
    tokenizer, vocab_size = build_tokenizer(path)
    torch.manual_seed(0)
    config = GPT2Config(vocab_size=vocab_size, n_layer=2, n_head=2, n_embd=32,
                        n_positions=256, bos_token_id=2, eos_token_id=3,
                        pad_token_id=0)
    GPT2LMHeadModel(config).save_pretrained(path)
    return str(path)


def _classifier(path, labels, seed):
    tokenizer, vocab_size = build_tokenizer(path)
    torch.manual_seed(seed)
    config = BertConfig(vocab_size=vocab_size, hidden_size=32,
                        num_hidden_layers=2, num_attention_heads=2,
                        intermediate_size=64, num_labels=len(labels),
                        id2label=dict(enumerate(labels)),
                        label2id={name: i for i, name in enumerate(labels)},
                        pad_token_id=0)
    BertForSequenceClassification(config).save_pretrained(path)
    return str(path)


@pytest.fixture(scope="session")
def tiny_style_classifier(tmp_path_factory):
    return _classifier(tmp_path_factory.mktemp("models") / "styles",
                       STYLE_NAMES, seed=1)


@pytest.fixture(scope="session")
def tiny_offense_classifier(tmp_path_factory):
    return _classifier(tmp_path_factory.mktemp("models") / "offense",
                       ["safe", "offensive"], seed=2)


def write_registry(path):
    path.mkdir(parents=True, exist_ok=True)
    descriptors = [("blind", "ability"), ("deaf", "ability"),
                   ("spry", "age"), ("tall", "body_type"),
                   ("autistic", "ability")]
    with open(path / "descriptors.jsonl", "w") as f:
        for text, axis in descriptors:
            f.write(json.dumps({
                "text": text, "axis": axis, "bucket": "",
                "placement": "before_noun", "gender_restriction": "none",
                "preferredness": "reviewed_unlabeled"}) + "\n")
    with open(path / "nouns.jsonl", "w") as f:
        for s, p, g in (("mom", "moms", "female"), ("dad", "dads", "male"),
                        ("kid", "kids", "unspecified")):
            f.write(json.dumps({"singular": s, "plural": p,
                                "gender_class": g}) + "\n")
    with open(path / "templates.jsonl", "w") as f:
        for tid, pattern, plurality in (
                ("love_pnp", "I love [PLURAL NOUN PHRASE].", "plural"),
                ("hi_im_np", "Hi I'm [NOUN PHRASE].", "singular")):
            f.write(json.dumps({"id": tid, "pattern": pattern,
                                "slot_plurality": plurality,
                                "stance": "neutral"}) + "\n")
    return path


def hb(*argv):
    """Drive the primary toolkit through its CLI (the external interface)."""
    return subprocess.run(["hb", *map(str, argv)], capture_output=True,
                          text=True)


@pytest.fixture(scope="session")
def ten_sentences(tmp_path_factory):
    """A 10-sentence slice of a compiled dataset, via the hb CLI."""
    base = tmp_path_factory.mktemp("dataset")
    data_dir = write_registry(base / "registry")
    full = base / "sentences_full.jsonl"
    result = hb("compile", "--data-dir", data_dir, "--out", full)
    assert result.returncode == 0, result.stderr
    sliced = base / "sentences.jsonl"
    with open(full) as src, open(sliced, "w") as dst:
        for i, line in enumerate(src):
            if i >= 10:
                break
            dst.write(line)
    return sliced
