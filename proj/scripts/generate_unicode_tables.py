#!/usr/bin/env python3
"""Regenerates core/src/unicode_tables.inc from Python's unicodedata.

The tokenizer normalizer uses a per-code-point NFKC compatibility mapping
and a simple lowercase mapping. Both tables are frozen into the repo so
builds do not depend on a Python toolchain.
"""
import unicodedata
import os

OUT = os.path.join(os.path.dirname(__file__), "..", "core", "src", "unicode_tables.inc")


def cpp_escape(s: str) -> str:
    return '"' + "".join("\\x%02x" % b for b in s.encode("utf-8")) + '"'


def main() -> None:
    nfkc = []
    lower = []
    for c in range(0x110000):
        if 0xD800 <= c <= 0xDFFF:
            continue
        ch = chr(c)
        n = unicodedata.normalize("NFKC", ch)
        if n != ch:
            nfkc.append((c, n))
        l = ch.lower()
        if l != ch:
            lower.append((c, l))

    with open(OUT, "w") as f:
        f.write("// Generated by scripts/generate_unicode_tables.py from Python's unicodedata\n")
        f.write("// (Unicode %s). Do not edit by hand.\n\n" % unicodedata.unidata_version)
        f.write("inline constexpr CodepointMapping kNfkcMappings[] = {\n")
        for c, n in nfkc:
            f.write("    {0x%X, %s},\n" % (c, cpp_escape(n)))
        f.write("};\n\n")
        f.write("inline constexpr CodepointMapping kLowercaseMappings[] = {\n")
        for c, l in lower:
            f.write("    {0x%X, %s},\n" % (c, cpp_escape(l)))
        f.write("};\n")


if __name__ == "__main__":
    main()
