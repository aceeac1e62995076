import hashlib
import json

import pytest
from transformers import AutoTokenizer

from conftest import STYLE_NAMES, hb
from hb_adapters.config import AdapterConfig, DECODING_PRESETS
from hb_adapters.generate import generate_responses
from hb_adapters.offense import classify_offense
from hb_adapters.perplexity import score_perplexity
from hb_adapters.styles import classify_styles


def config_for(model, **overrides):
    base = dict(model=model, batch_size=4, device="cpu", seed=0,
                max_generation_length=28)
    base.update(DECODING_PRESETS["dialogpt"])
    base.update(overrides)
    return AdapterConfig(**base)


def file_digest(path):
    return hashlib.sha256(open(path, "rb").read()).hexdigest()


def read_lines(path):
    return [json.loads(line) for line in open(path) if line.strip()]


class TestPerplexityAdapter:
    def test_schema_conformance_on_ten_sentences(self, tiny_causal_lm,
                                                 ten_sentences, tmp_path):
        out = tmp_path / "ppl.jsonl"
        count = score_perplexity(ten_sentences, out, config_for(tiny_causal_lm))
        assert count == 10
        result = hb("validate", "--file", out, "--kind", "ppl",
                    "--sentences", ten_sentences)
        assert result.returncode == 0, result.stdout + result.stderr
        records = read_lines(out)
        assert all(r["perplexity"] > 0 for r in records)
        assert [r["sentence_id"] for r in records] == [
            r["id"] for r in read_lines(ten_sentences)]

    def test_duplicate_input_line_rejected(self, tiny_causal_lm, ten_sentences,
                                           tmp_path):
        doubled = tmp_path / "doubled.jsonl"
        lines = open(ten_sentences).readlines()
        doubled.write_text("".join(lines + lines[:1]))
        with pytest.raises(ValueError, match="duplicate"):
            score_perplexity(doubled, tmp_path / "out.jsonl",
                             config_for(tiny_causal_lm))

    def test_empty_input_empty_output_with_warning(self, tiny_causal_lm,
                                                   tmp_path, capsys):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("")
        out = tmp_path / "out.jsonl"
        assert score_perplexity(empty, out, config_for(tiny_causal_lm)) == 0
        assert out.read_text() == ""
        assert "empty" in capsys.readouterr().err

    def test_model_load_failure_exits_nonzero_listing_ids(self, ten_sentences,
                                                          tmp_path, capsys):
        with pytest.raises(SystemExit) as excinfo:
            score_perplexity(ten_sentences, tmp_path / "out.jsonl",
                             config_for(str(tmp_path / "no-such-model")))
        assert excinfo.value.code != 0
        err = capsys.readouterr().err
        assert "unscored" in err

    def test_input_not_mutated(self, tiny_causal_lm, ten_sentences, tmp_path):
        before = file_digest(ten_sentences)
        score_perplexity(ten_sentences, tmp_path / "out.jsonl",
                         config_for(tiny_causal_lm))
        assert file_digest(ten_sentences) == before


class TestGenerateAdapter:
    def _personas(self, tmp_path):
        path = tmp_path / "personas.txt"
        path.write_text("i am happy . i love kids .\n"
                        "i am sad . i like people .\n"
                        "i am curious . i think a lot .\n")
        return path

    def test_counting_contract(self, tiny_causal_lm, ten_sentences, tmp_path):
        five = tmp_path / "five.jsonl"
        five.write_text("".join(open(ten_sentences).readlines()[:5]))
        out = tmp_path / "responses.jsonl"
        count = generate_responses(five, self._personas(tmp_path), out,
                                   config_for(tiny_causal_lm),
                                   personas_per_sentence=2)
        assert count == 10
        result = hb("validate", "--file", out, "--kind", "responses",
                    "--sentences", five)
        assert result.returncode == 0, result.stdout + result.stderr

    def test_min_length_and_ngram_blocking(self, tiny_causal_lm, ten_sentences,
                                           tmp_path):
        out = tmp_path / "responses.jsonl"
        config = config_for(tiny_causal_lm)
        count = generate_responses(ten_sentences, self._personas(tmp_path),
                                   out, config)
        assert count == 10
        tokenizer = AutoTokenizer.from_pretrained(tiny_causal_lm)
        for rec in read_lines(out):
            assert rec["generated_token_count"] >= config.min_generation_length
            tokens = tokenizer.encode(rec["text"])
            assert len(tokens) >= config.min_generation_length
            trigrams = [tuple(tokens[i:i + 3]) for i in range(len(tokens) - 2)]
            assert len(trigrams) == len(set(trigrams)), rec["text"]

    def test_context_records_persona_and_prompt(self, tiny_causal_lm,
                                                ten_sentences, tmp_path):
        out = tmp_path / "responses.jsonl"
        generate_responses(ten_sentences, self._personas(tmp_path), out,
                           config_for(tiny_causal_lm))
        sentences = {r["id"]: r["text"] for r in read_lines(ten_sentences)}
        personas = set(self._personas(tmp_path).read_text().splitlines())
        for rec in read_lines(out):
            persona, prompt = rec["context"].split("\n")
            assert prompt == sentences[rec["sentence_id"]]
            assert persona in personas

    def test_seeded_persona_sampling_deterministic(self, tiny_causal_lm,
                                                   ten_sentences, tmp_path):
        config = config_for(tiny_causal_lm, seed=9)
        out1 = tmp_path / "r1.jsonl"
        out2 = tmp_path / "r2.jsonl"
        generate_responses(ten_sentences, self._personas(tmp_path), out1, config)
        generate_responses(ten_sentences, self._personas(tmp_path), out2, config)
        assert out1.read_bytes() == out2.read_bytes()

    def test_bb2_preset_beam_width(self):
        assert DECODING_PRESETS["bb2"]["beam_size"] == 3
        assert DECODING_PRESETS["dialogpt"]["beam_size"] == 10
        assert all(p["min_generation_length"] == 20
                   for p in DECODING_PRESETS.values())


class TestStyleAdapter:
    def _responses(self, tmp_path, ten_sentences):
        path = tmp_path / "responses.jsonl"
        with open(path, "w") as f:
            for i, rec in enumerate(read_lines(ten_sentences)):
                f.write(json.dumps({
                    "response_id": f"{rec['id']}#p0",
                    "sentence_id": rec["id"],
                    "text": f"i hear you and i am happy too {i}"}) + "\n")
        return path

    def test_schema_and_manifest(self, tiny_style_classifier, ten_sentences,
                                 tmp_path):
        responses = self._responses(tmp_path, ten_sentences)
        out = tmp_path / "styles.jsonl"
        manifest_file = tmp_path / "manifest.json"
        count = classify_styles(responses, out, manifest_file,
                                config_for(tiny_style_classifier))
        assert count == 10
        result = hb("validate", "--file", out, "--kind", "styles",
                    "--responses", responses)
        assert result.returncode == 0, result.stdout + result.stderr
        manifest = json.loads(manifest_file.read_text())["styles"]
        assert manifest == STYLE_NAMES
        for rec in read_lines(out):
            assert len(rec["probs"]) == len(manifest)
            assert abs(sum(rec["probs"]) - 1.0) < 1e-4

    def test_rerun_identical(self, tiny_style_classifier, ten_sentences,
                             tmp_path):
        responses = self._responses(tmp_path, ten_sentences)
        out1, out2 = tmp_path / "s1.jsonl", tmp_path / "s2.jsonl"
        m1, m2 = tmp_path / "m1.json", tmp_path / "m2.json"
        config = config_for(tiny_style_classifier)
        classify_styles(responses, out1, m1, config)
        classify_styles(responses, out2, m2, config)
        assert out1.read_bytes() == out2.read_bytes()
        assert m1.read_bytes() == m2.read_bytes()


class TestOffenseAdapter:
    def test_sentences_scored_in_bounds(self, tiny_offense_classifier,
                                        ten_sentences, tmp_path):
        out = tmp_path / "offense.jsonl"
        count = classify_offense(ten_sentences, out,
                                 config_for(tiny_offense_classifier))
        assert count == 10
        result = hb("validate", "--file", out, "--kind", "offense",
                    "--sentences", ten_sentences)
        assert result.returncode == 0, result.stdout + result.stderr
        for rec in read_lines(out):
            assert 0.0 <= rec["prob_offensive"] <= 1.0

    def test_unknown_label_rejected(self, tiny_offense_classifier,
                                    ten_sentences, tmp_path, capsys):
        with pytest.raises(SystemExit):
            classify_offense(ten_sentences, tmp_path / "out.jsonl",
                             config_for(tiny_offense_classifier),
                             offensive_label="toxic")
        assert "labels" in capsys.readouterr().err

    def test_empty_input(self, tiny_offense_classifier, tmp_path, capsys):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("")
        out = tmp_path / "out.jsonl"
        assert classify_offense(empty, out,
                                config_for(tiny_offense_classifier)) == 0
        assert out.read_text() == ""
        assert "empty" in capsys.readouterr().err
