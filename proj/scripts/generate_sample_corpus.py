#!/usr/bin/env python3
"""Generate the bundled sample corpus (data/sample_corpus.txt).

Synthetic agglutinative text: stems composed of CV syllables plus suffix
chains, one document per line, with a few exact duplicates planted so the
dedup examples have something to remove. Fixed seed; the committed file is
reproducible byte for byte.
"""
import random

SEED = 414243
TARGET_BYTES = 1_000_000
OUT = "data/sample_corpus.txt"

CONSONANTS = "kptsmnlrvjhd"
VOWELS = "aeiou"

SUFFIXES = [
    "", "de", "le", "st", "ga", "ni", "ta", "sse", "des", "tele",
    "mine", "mise", "nud", "tud", "vad", "sid", "ksin", "gi", "ki", "na",
    "lt", "lle", "s", "d", "t", "ndus", "line", "lik", "kond", "stik",
]


def make_stems(rng, n):
    stems = set()
    while len(stems) < n:
        syllables = rng.randint(1, 3)
        stem = ""
        for _ in range(syllables):
            stem += rng.choice(CONSONANTS) + rng.choice(VOWELS)
            if rng.random() < 0.3:
                stem += rng.choice("lnrst")
        stems.add(stem)
    return sorted(stems)


def main():
    rng = random.Random(SEED)
    stems = make_stems(rng, 300)
    # Zipf-ish stem weights so frequencies are realistic.
    weights = [1.0 / (i + 1) ** 0.9 for i in range(len(stems))]

    lines = []
    size = 0
    while size < TARGET_BYTES:
        words = []
        for _ in range(rng.randint(3, 14)):
            stem = rng.choices(stems, weights)[0]
            word = stem + rng.choice(SUFFIXES)
            if rng.random() < 0.05:
                word += rng.choice(SUFFIXES)
            words.append(word)
        line = " ".join(words)
        lines.append(line)
        size += len(line) + 1
        # Occasionally repeat an earlier line verbatim.
        if lines and rng.random() < 0.01:
            dup = rng.choice(lines)
            lines.append(dup)
            size += len(dup) + 1

    with open(OUT, "w", encoding="utf-8") as f:
        for line in lines:
            f.write(line + "\n")


if __name__ == "__main__":
    main()
