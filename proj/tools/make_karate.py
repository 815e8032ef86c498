#!/usr/bin/env python3
"""Regenerates data/graphs/karate34.json.

34-node karate-club graph with synthetic 4-dim node features, faction labels,
and deterministic mod-4 train/val/test splits. Edges carry symmetric degree
normalization w_uv = 1/sqrt(deg_u * deg_v) so aggregated values stay bounded
regardless of hub size; importance scoring therefore works on weighted
degrees. The feature columns are: faction signal with jitter, normalized raw
degree, a high-degree indicator, and a second jitter column. Jitter is a
fixed linear-congruential formula so the output is bit-stable without an RNG.
"""

import json
import sys

import networkx as nx


def main(out_path: str) -> None:
    g = nx.karate_club_graph()
    n = g.number_of_nodes()
    assert n == 34

    deg = {v: g.degree(v) for v in g.nodes()}
    max_deg = max(deg.values())
    edges = [
        [u, v, 1.0 / (deg[u] * deg[v]) ** 0.5]
        for u, v in sorted((min(u, v), max(u, v)) for u, v in g.edges())
    ]

    features = []
    labels = []
    for v in range(n):
        faction = 0 if g.nodes[v]["club"] == "Mr. Hi" else 1
        j1 = ((19 * v + 7) % 34) / 34.0 - 0.5
        j2 = ((11 * v + 3) % 34) / 34.0 - 0.5
        features.append([
            (1.0 if faction == 0 else -1.0) + 0.2 * j1,
            deg[v] / float(max_deg),
            1.0 if deg[v] >= 5 else 0.0,
            j2,
        ])
        labels.append(faction)

    splits = {"train": [], "val": [], "test": []}
    for v in range(n):
        r = v % 4
        if r in (0, 1):
            splits["train"].append(v)
        elif r == 2:
            splits["val"].append(v)
        else:
            splits["test"].append(v)

    doc = {
        "n": n,
        "directed": False,
        "edges": edges,
        "features": features,
        "labels": labels,
        "splits": splits,
    }
    with open(out_path, "w") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")

    wdeg = sorted((sum(e[2] for e in edges if v in e[:2]), v) for v in range(n))
    print(f"wrote {out_path}: {n} nodes, {len(edges)} edges")
    print("weighted degrees (sorted):")
    for w, v in wdeg:
        print(f"  node {v:2d} deg {deg[v]:2d} wdeg {w:.4f}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/graphs/karate34.json")
