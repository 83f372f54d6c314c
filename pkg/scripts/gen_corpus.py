#!/usr/bin/env python3
"""Regenerate the bundled training corpus (deterministic, fixed seed).

Emits ~100KB of pseudo-English built from a fixed word list with a seeded
stdlib RNG, one paragraph per line. The output is committed at
``src/pearl_lab/data/corpus.txt``; rerunning this script reproduces it byte
for byte.
"""

from __future__ import annotations

import random
from pathlib import Path

SEED = 20260815
TARGET_BYTES = 100_000

WORDS = """
the a an of to in on for with under over about into from and or but nor so yet
time year day way man world life hand part child eye woman place work week case
point company number group problem fact house room water money story month lot
right study book word business issue side kind head far state
be have do say get make go know take see come think look want give use find
tell ask seem feel try leave call keep let begin help talk turn start show hear
play run move like live believe hold bring happen write provide sit stand lose
pay meet include continue set learn change lead understand watch follow stop
good new first last long great little own other old big high different small
large next early young important few public bad same able low late hard best
better sure free true full special whole clear recent certain strong possible
quickly slowly carefully quietly simply nearly almost often never always again
there here now then once
""".split()

PUNCT_END = [".", ".", ".", ".", "?", "!"]


def make_sentence(rng: random.Random) -> str:
    n = rng.randint(6, 14)
    words = [rng.choice(WORDS) for _ in range(n)]
    if rng.random() < 0.35:
        comma_at = rng.randint(2, n - 2)
        words[comma_at] = words[comma_at] + ","
    words[0] = words[0].capitalize()
    return " ".join(words) + rng.choice(PUNCT_END)


def main() -> None:
    rng = random.Random(SEED)
    lines = []
    size = 0
    while size < TARGET_BYTES:
        line = " ".join(make_sentence(rng) for _ in range(rng.randint(1, 3)))
        lines.append(line)
        size += len(line.encode("utf-8")) + 1
    text = "\n".join(lines) + "\n"
    out = Path(__file__).resolve().parent.parent / "src" / "pearl_lab" / "data" / "corpus.txt"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")
    print(f"wrote {len(text.encode('utf-8'))} bytes to {out}")


if __name__ == "__main__":
    main()
