#!/usr/bin/env python3
"""Synthetic corpus generator.

Walks a KG TSV file and writes sentences that verbalize short chains of
triples around a random entity, so every sentence plants known entity
names. A second file lists the planted names per sentence, in the same
format as data/fixture_entities.tsv.

    tools/gen_corpus.py --kg data/sample_kg.tsv --sentences 500 --seed 7 \
        --out corpus.txt --planted planted.tsv
"""

import argparse
import random
import re
import sys
from collections import defaultdict


def load_kg(path):
    names, edges = {}, defaultdict(list)
    auto_id = 0
    triples = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            fields = line.split("\t")
            if fields[0] == "E":
                nid = int(fields[1]) if fields[1] else None
                if nid is None:
                    while auto_id in names:
                        auto_id += 1
                    nid = auto_id
                names[nid] = fields[2].replace("_", " ")
            elif fields[0] == "T":
                triples.append((fields[1], fields[2], fields[3]))
    by_name = {n: i for i, n in names.items()}

    def resolve(x):
        return int(x) if x.isdigit() and int(x) in names else by_name.get(x.replace("_", " "))

    for s, r, o in triples:
        s, o = resolve(s), resolve(o)
        if s is None or o is None:
            continue
        edges[s].append((r, o))
    return names, edges


def verbalize(rel):
    words = re.sub(r"([a-z0-9])([A-Z])", r"\1 \2", rel).replace("_", " ")
    return words.lower().strip()


def sentence(rng, names, edges, max_facts):
    subjects = [n for n in edges if edges[n]]
    s = rng.choice(subjects)
    facts = rng.sample(edges[s], min(len(edges[s]), rng.randint(1, max_facts)))
    planted = [names[s]]
    parts = []
    for k, (r, o) in enumerate(facts):
        head = names[s] + " " if k == 0 else ""
        parts.append(f"{head}{verbalize(r)} {names[o]}")
        if names[o] not in planted:
            planted.append(names[o])
    text = parts[0] if len(parts) == 1 else ", ".join(parts[:-1]) + " and " + parts[-1]
    return text[0].upper() + text[1:] + ".", planted


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kg", required=True)
    ap.add_argument("--sentences", type=int, default=250)
    ap.add_argument("--max-facts", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", required=True)
    ap.add_argument("--planted")
    args = ap.parse_args(argv)

    names, edges = load_kg(args.kg)
    if not any(edges.values()):
        sys.exit("KG has no triples to verbalize")
    rng = random.Random(args.seed)
    rows = [sentence(rng, names, edges, args.max_facts) for _ in range(args.sentences)]
    with open(args.out, "w", encoding="utf-8") as f:
        f.writelines(text + "\n" for text, _ in rows)
    if args.planted:
        with open(args.planted, "w", encoding="utf-8") as f:
            f.write("# sentence_index<TAB>planted entity names (|-separated)\n")
            for i, (_, planted) in enumerate(rows):
                f.write(f"{i}\t{'|'.join(planted)}\n")


if __name__ == "__main__":
    main()
