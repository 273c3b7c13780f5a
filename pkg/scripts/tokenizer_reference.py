#!/usr/bin/env python3
"""Produce the byte-pair-encoding reference count for the token
estimate fixture.

Trains a byte-level BPE tokenizer (deterministic given the corpus and
vocab size) on the shipped prompt templates plus the reference text,
counts the reference text's tokens, and writes the committed count to
data/fixtures/token_reference.json. The heuristic estimator must land
within 10 percent of this number.

Run from the repo root:  python3 scripts/tokenizer_reference.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

from tokenizers import Tokenizer
from tokenizers.models import BPE
from tokenizers.pre_tokenizers import ByteLevel
from tokenizers.trainers import BpeTrainer

REPO = Path(__file__).resolve().parents[1]
VOCAB_SIZE = 1600

def main() -> None:
    reference = REPO / "data" / "fixtures" / "token_reference.txt"
    templates = sorted((REPO / "src" / "sketchbench" / "templates").glob("*.txt"))
    corpus = [str(reference)] + [str(p) for p in templates]

    tokenizer = Tokenizer(BPE(unk_token=None))
    tokenizer.pre_tokenizer = ByteLevel(add_prefix_space=False)
    trainer = BpeTrainer(
        vocab_size=VOCAB_SIZE,
        show_progress=False,
        special_tokens=[],
        initial_alphabet=ByteLevel.alphabet(),
    )
    tokenizer.train(corpus, trainer)

    text = reference.read_text(encoding="utf-8")
    count = len(tokenizer.encode(text).ids)
    payload = {
        "file": "token_reference.txt",
        "bpe_tokens": count,
        "vocab_size": VOCAB_SIZE,
        "corpus": "prompt templates + reference text",
        "utf8_bytes": len(text.encode("utf-8")),
    }
    out = REPO / "data" / "fixtures" / "token_reference.json"
    out.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    est = -(-payload["utf8_bytes"] // 4)
    print(json.dumps(payload, indent=2))
    print(f"heuristic estimate: {est}  ratio: {est / count:.4f}")
    if not 0.9 * count <= est <= 1.1 * count:
        print("WARNING: estimate outside the 10% band", file=sys.stderr)
        sys.exit(1)


if __name__ == "__main__":
    main()
