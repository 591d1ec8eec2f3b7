"""Recomputes the ten-post priority fixture with exact rationals.

Writes priority_fixture.json next to this file. Logs use mpmath at 60 digits.
"""
import json
from fractions import Fraction as F
from pathlib import Path

import mpmath

mpmath.mp.dps = 60
EPS = F(1, 10**9)
BINS = 10
WEIGHTS = [1, 2, 5, 10, 1, 2, 5, 10, 2, 5]

POSTS = [
    # id, created_utc, upvotes, ratio, comments, harm, neg, children, tox, sev, ins, pro, thr, ide, compound
    ("p01", 1546300800, 120, "0.95", 40, "0.00", "0.05", "0.00", "0.10", "0.00", "0.05", "0.00", "0.00", "0.00", "0.4019"),
    ("p02", 1546387199, 5, "0.60", 2, "0.12", "0.31", "0.00", "0.62", "0.20", "0.44", "0.35", "0.05", "0.10", "-0.6908"),
    ("p03", 1551398400, 0, "0.50", 0, "0.33", "0.00", "0.07", "0.05", "0.00", "0.00", "0.00", "0.00", "0.00", "0.0"),
    ("p04", 1561939200, 980, "0.99", 310, "0.07", "0.22", "0.00", "0.91", "0.55", "0.83", "0.77", "0.12", "0.42", "-0.9136"),
    ("p05", 1572566400, 33, "0.81", 12, "0.51", "0.47", "0.00", "0.33", "0.08", "0.21", "0.10", "0.61", "0.03", "-0.5574"),
    ("p06", 1580515200, 64, "0.72", 19, "0.00", "0.00", "0.00", "0.02", "0.00", "0.01", "0.00", "0.00", "0.00", "0.7351"),
    ("p07", 1590969600, 7, "0.55", 3, "0.26", "0.14", "0.21", "0.48", "0.11", "0.37", "0.29", "0.09", "0.27", "-0.3182"),
    ("p08", 1598918400, 410, "0.88", 95, "0.09", "0.63", "0.00", "0.71", "0.30", "0.66", "0.52", "0.18", "0.05", "-0.8481"),
    ("p09", 1609459200, 18, "0.67", 8, "0.44", "0.18", "0.13", "0.27", "0.06", "0.15", "0.04", "0.33", "0.19", "-0.1027"),
    ("p10", 1617235200, 250, "0.93", 71, "0.19", "0.09", "0.00", "0.14", "0.02", "0.09", "0.03", "0.02", "0.61", "0.2960"),
]


def histogram(values):
    lo, hi = min(values), max(values)
    if lo == hi:
        return lo, hi, [F(1)]
    counts = [0] * BINS
    width = (hi - lo) / BINS
    def bin_of(v):
        if v <= lo:
            return 0
        i = int((v - lo) / width)
        return min(i, BINS - 1)
    for v in values:
        counts[bin_of(v)] += 1
    empty = sum(1 for c in counts if c == 0)
    keep = 1 - empty * EPS
    phi = [EPS if c == 0 else F(c, len(values)) * keep for c in counts]
    return lo, hi, phi, bin_of


def h(phi):
    if phi == 1:
        return mpmath.mpf(0)
    p = mpmath.mpf(phi.numerator) / phi.denominator
    return -p * mpmath.log(p, 2)


def nor(values):
    lo, hi = min(values), max(values)
    if lo == hi:
        return [0 for _ in values]
    return [(v - lo) / (hi - lo) for v in values]


def main():
    rows = [dict(id=p[0], created_utc=p[1], upvotes=p[2], ratio=F(p[3]), comments=p[4],
                 themes=[F(x) for x in p[5:8]], tox=[F(x) for x in p[8:14]], compound=F(p[14]))
            for p in POSTS]
    phis = []
    for t in range(3):
        vals = [r["themes"][t] for r in rows]
        hist = histogram(vals)
        if len(hist) == 3:
            phis.append([F(1)] * len(rows))
        else:
            _, _, phi, bin_of = hist
            phis.append([phi[bin_of(v)] for v in vals])
    terms = [[h(phis[t][i]) for t in range(3)] for i in range(len(rows))]
    ent = [sum(tt) for tt in terms]
    rec = [r["created_utc"] // 86400 for r in rows]
    max_up = max(r["upvotes"] for r in rows)
    max_com = max(r["comments"] for r in rows)
    pop = [(F(r["upvotes"], max_up) if max_up else 0) + r["ratio"] + (F(r["comments"], max_com) if max_com else 0) for r in rows]
    cols = [nor([r["tox"][k] for r in rows]) for k in range(5)]
    ide = [r["tox"][5] for r in rows]
    vad = nor([-r["compound"] for r in rows])
    ent_lo, ent_hi = min(ent), max(ent)
    nent = [(e - ent_lo) / (ent_hi - ent_lo) for e in ent]
    nrec = nor([F(x) for x in rec])
    npop = nor(pop)
    out = []
    for i, r in enumerate(rows):
        sent_terms = [cols[k][i] for k in range(5)] + [ide[i], vad[i]]
        sent = sum(WEIGHTS[k] * mpmath.mpf(F(sent_terms[k]).numerator) / F(sent_terms[k]).denominator for k in range(7))
        prio = sent + WEIGHTS[7] * nent[i] + WEIGHTS[8] * mpmath.mpf(F(nrec[i]).numerator) / F(nrec[i]).denominator \
            + WEIGHTS[9] * mpmath.mpf(F(npop[i]).numerator) / F(npop[i]).denominator
        out.append(dict(
            id=r["id"],
            entropy_terms=[float(x) for x in terms[i]],
            total_entropy=float(ent[i]),
            recency=float(rec[i]),
            popularity=float(pop[i]),
            normalized=[float(cols[k][i]) for k in range(5)] + [float(ide[i]), float(vad[i]), float(nent[i]), float(nrec[i]), float(npop[i])],
            sentiment=float(sent),
            priority=float(prio),
        ))
    fixture = dict(
        weights=WEIGHTS,
        posts=[dict(id=p[0], created_utc=p[1], upvotes=p[2], upvote_ratio=float(p[3]), num_comments=p[4],
                    harm=float(p[5]), negativity=float(p[6]), children=float(p[7]),
                    toxicity=[float(x) for x in p[8:14]], compound=float(p[14])) for p in POSTS],
        expected=out,
    )
    path = Path(__file__).with_name("priority_fixture.json")
    path.write_text(json.dumps(fixture, indent=1) + "\n")


if __name__ == "__main__":
    main()
