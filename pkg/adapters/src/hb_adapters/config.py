"""Shared adapter configuration.

Decoding presets: the gpt-dialogue path uses beam 10 / minimum response
length 20; the blenderbot path uses beam 3 / minimum response length 20.
Both block repeated 3-grams during beam search.
"""
from __future__ import annotations

import argparse
from dataclasses import dataclass

DECODING_PRESETS = {
    "dialogpt": {"beam_size": 10, "min_generation_length": 20,
                 "blocked_ngram_size": 3},
    "bb2": {"beam_size": 3, "min_generation_length": 20,
            "blocked_ngram_size": 3},
}


@dataclass
class AdapterConfig:
    model: str
    batch_size: int = 8
    device: str = "cpu"
    seed: int = 0
    beam_size: int = 10
    min_generation_length: int = 20
    max_generation_length: int = 40
    blocked_ngram_size: int = 3

    @classmethod
    def from_args(cls, args):
        preset = DECODING_PRESETS[args.preset]
        return cls(
            model=args.model,
            batch_size=args.batch_size,
            device=args.device,
            seed=getattr(args, "seed", 0),
            beam_size=args.beam_size if args.beam_size else preset["beam_size"],
            min_generation_length=(args.min_length if args.min_length
                                   else preset["min_generation_length"]),
            max_generation_length=getattr(args, "max_length", 40),
            blocked_ngram_size=preset["blocked_ngram_size"],
        )


def base_parser(description):
    parser = argparse.ArgumentParser(description=description)
    parser.add_argument("--model", required=True,
                        help="model identifier or local path")
    parser.add_argument("--batch-size", type=int, default=8)
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--preset", choices=sorted(DECODING_PRESETS),
                        default="dialogpt")
    parser.add_argument("--beam-size", type=int, default=None)
    parser.add_argument("--min-length", type=int, default=None)
    parser.add_argument("--out", required=True)
    return parser
