#!/usr/bin/env python3
"""Regenerate src/unicode_tables.inc: codepoint ranges in general categories L* and N*."""
import sys
import unicodedata


def ranges(pred):
    out, start = [], None
    for cp in range(0x110000):
        hit = pred(cp)
        if hit and start is None:
            start = cp
        elif not hit and start is not None:
            out.append((start, cp - 1))
            start = None
    if start is not None:
        out.append((start, 0x10FFFF))
    return out


def main():
    alnum = ranges(lambda cp: unicodedata.category(chr(cp))[0] in "LN")
    lines = [
        "// Generated by tools/gen_unicode_tables.py (Unicode %s). Do not edit."
        % unicodedata.unidata_version,
        "// Inclusive codepoint ranges whose general category is L* or N*.",
        "",
    ]
    for lo, hi in alnum:
        lines.append("{0x%04X, 0x%04X}," % (lo, hi))
    out = sys.argv[1] if len(sys.argv) > 1 else "src/unicode_tables.inc"
    with open(out, "w") as f:
        f.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
