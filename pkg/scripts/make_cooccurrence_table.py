#!/usr/bin/env python3
"""Regenerate the bundled synthetic co-occurring HCC table.

The real export of self-reported co-occurring HCCs is access-restricted, so the
package ships a synthetic stand-in with the same shape: per-HCC respondent
counts and conditions-per-person counts follow the published summary tables,
hierarchies are applied so no set violates an exclusion, and only sets with
more than 21 respondents are kept. Dementia sets are added so severity-based
upcoding of HCC125 has an eligible pool.
"""

import argparse
from collections import Counter

import numpy as np

from upcoding_rmtl.catalog import load_catalog
from upcoding_rmtl.simulate import CooccurrenceTable

# respondents per V28 HCC with available survey questions
HCC_RESPONDENTS = {
    1: 546, 20: 339, 21: 5775, 22: 260, 23: 6772, 35: 156, 38: 2114, 51: 4283,
    62: 156, 64: 100, 65: 546, 77: 156, 78: 511, 93: 1131, 109: 1018, 155: 1467,
    182: 47, 221: 156, 226: 73, 228: 399, 238: 1635, 249: 373, 264: 62, 267: 123,
    276: 156, 280: 273, 300: 587, 327: 31, 328: 110, 398: 808,
}
# conditions per person -> respondents
CONDITIONS_PER_PERSON = {1: 5636, 2: 6657, 3: 3163, 4: 236, 5: 156}

DEMENTIA_SETS = {
    (127,): 310, (126,): 160, (125,): 45, (127, 238): 85, (126, 238): 40,
    (38, 127): 90, (23, 126): 60, (21, 127): 70, (51, 127): 35,
}

MIN_RESPONDENTS = 21


def build(seed: int) -> CooccurrenceTable:
    catalog = load_catalog()
    rng = np.random.default_rng(seed)
    codes = np.array(sorted(HCC_RESPONDENTS))
    p = np.array([HCC_RESPONDENTS[c] for c in codes], dtype=float)
    p /= p.sum()
    sizes = np.repeat(list(CONDITIONS_PER_PERSON), list(CONDITIONS_PER_PERSON.values()))

    counts = Counter()
    for k in sizes:
        picked = set(rng.choice(codes, size=k, replace=False, p=p).tolist())
        # billing hierarchy: the most severe member wins
        for h in sorted(picked):
            picked -= set(catalog.competing(h)) if h in picked else set()
        counts[tuple(sorted(picked))] += 1
    for s, w in DEMENTIA_SETS.items():
        counts[s] += w

    kept = sorted((s, w) for s, w in counts.items() if w > MIN_RESPONDENTS)
    return CooccurrenceTable(tuple(s for s, _ in kept), np.array([w for _, w in kept])).validate(catalog)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=20240601)
    ap.add_argument("--out", default="src/upcoding_rmtl/data/cooccurrence_synthetic.csv")
    args = ap.parse_args()
    table = build(args.seed)
    with open(args.out, "w") as f:
        f.write(table.to_csv())
    print(f"wrote {len(table.sets)} sets, {int(table.weights.sum())} respondents to {args.out}")


if __name__ == "__main__":
    main()
