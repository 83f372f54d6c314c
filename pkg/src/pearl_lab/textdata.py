"""Byte-level text tokenization and access to the bundled corpus.

The default vocabulary maps text through UTF-8 bytes: ids 0..255 are byte
values and id 256 is the reserved EOS. The package ships a ~100KB
deterministic text corpus for n-gram experiments (regenerable with
``scripts/gen_corpus.py``).
"""

from __future__ import annotations

from importlib import resources
from typing import List, Sequence

from .core import TokenId, Vocabulary, byte_vocabulary

BUNDLED = "bundled"


def encode_text(text: str) -> List[TokenId]:
    """UTF-8 bytes of ``text`` as token ids (EOS never appears in encodings)."""
    return list(text.encode("utf-8"))


def decode_tokens(tokens: Sequence[TokenId], vocab: Vocabulary | None = None) -> str:
    """Token ids back to text; stops at EOS, undecodable bytes are replaced."""
    vocab = vocab if vocab is not None else byte_vocabulary()
    out = bytearray()
    for t in tokens:
        if vocab.eos_id is not None and t == vocab.eos_id:
            break
        out.append(t)
    return out.decode("utf-8", errors="replace")


def load_corpus_text(path: str) -> str:
    """Read a corpus file; the literal path 'bundled' loads the packaged one."""
    if path == BUNDLED:
        return (
            resources.files("pearl_lab").joinpath("data/corpus.txt").read_text(encoding="utf-8")
        )
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def corpus_sequences(text: str) -> List[List[TokenId]]:
    """One token sequence per nonempty line of ``text``."""
    return [encode_text(line) for line in text.splitlines() if line.strip()]
