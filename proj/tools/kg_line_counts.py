#!/usr/bin/env python3
"""Counts C/E/T records in a KG TSV file by line prefix.

With --cli, also runs `kgrag_cli build-kg` on the file and checks that the
loaded graph reports the same counts. Exit status 1 on mismatch.
"""

import argparse
import os
import re
import subprocess
import sys
import tempfile


def count(path):
    c = {"C": 0, "E": 0, "T": 0}
    triples = set()
    with open(path, encoding="utf-8") as f:
        for line in f:
            kind = line.split("\t", 1)[0]
            if kind in c:
                c[kind] += 1
            if kind == "T":
                triples.add(line.rstrip("\n"))
    c["T_distinct"] = len(triples)
    return c


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("kg")
    ap.add_argument("--cli")
    args = ap.parse_args(argv)

    c = count(args.kg)
    print(f"communities={c['C']} entities={c['E']} triples={c['T']} distinct={c['T_distinct']}")
    if not args.cli:
        return 0
    with tempfile.TemporaryDirectory() as d:
        out = subprocess.run(
            [args.cli, "build-kg", "--input", args.kg, "--out", os.path.join(d, "kg.tsv")],
            capture_output=True, text=True, check=True).stdout
    got = dict(re.findall(r"(\w+)=(\d+)", out))
    want = {"entities": c["E"], "triples": c["T_distinct"], "communities": c["C"]}
    bad = {k: (int(got.get(k, -1)), v) for k, v in want.items() if int(got.get(k, -1)) != v}
    if bad:
        print("mismatch (loaded, counted):", bad)
        return 1
    print("loaded graph matches line counts")
    return 0


if __name__ == "__main__":
    sys.exit(main())
