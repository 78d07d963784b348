"""Builds a synthetic dataset matching the reference network's headline
shape, for exercising the optional reproduction checks without the real
data:  n=75, m=179, USA/GBR/DEU/FRA/RUS total degrees 26/25/22/20/17,
ECC of CHN = 3 on the undirected view, bimodal arrival days.

Usage:  python tests/fixtures/make_reference_like.py OUT_DIR
        NETSPREAD_REFERENCE_DIR=OUT_DIR pytest tests/test_acceptance.py -k criterion_8
"""

from __future__ import annotations

import csv
import sys
from pathlib import Path

import numpy as np

HUB_DEGREES = {"USA": 26, "GBR": 25, "DEU": 22, "FRA": 20, "RUS": 17}
M_TARGET = 179


def build(out_dir: Path) -> None:
    rng = np.random.default_rng(4411)
    codes = ["CHN", "USA", "GBR", "DEU", "FRA", "RUS"]
    i = 0
    while len(codes) < 75:
        candidate = ("Q" + chr(ord("A") + i // 26) + chr(ord("A") + i % 26))
        i += 1
        if candidate not in codes:
            codes.append(candidate)
    # mids are ids 6..59, leaves 60..74 (leaves only touch mids: 3 hops
    # from CHN, which pins CHN's eccentricity at 3)
    mids = list(range(6, 60))
    leaves = list(range(60, 75))

    edges: list[tuple[int, int]] = []
    used = set()

    def add(u, v):
        assert u != v and (u, v) not in used
        used.add((u, v))
        edges.append((u, v))

    for hub in range(1, 6):
        add(0, hub)  # CHN to each named hub
    deg = {hub: 1 for hub in range(1, 6)}
    targets = dict(zip(range(1, 6), HUB_DEGREES.values()))
    mid_cycle = iter(mids * 10)
    for hub in range(1, 6):
        while deg[hub] < targets[hub]:
            mid = next(mid_cycle)
            pair = (hub, mid) if (hub + mid) % 2 == 0 else (mid, hub)
            if pair in used or (pair[1], pair[0]) in used:
                continue
            add(*pair)
            deg[hub] += 1

    # every leaf hangs off a mid; remaining budget links mids together
    for i, leaf in enumerate(leaves):
        add(mids[(7 * i) % len(mids)], leaf)
    k = 0
    while len(edges) < M_TARGET:
        u = mids[(11 * k) % len(mids)]
        v = mids[(17 * k + 5) % len(mids)]
        k += 1
        if u == v or (u, v) in used or (v, u) in used:
            continue
        add(u, v)
    assert len(edges) == M_TARGET

    und = [set() for _ in range(75)]
    for u, v in edges:
        und[u].add(v)
        und[v].add(u)
    for hub, want in zip(range(1, 6), HUB_DEGREES.values()):
        got = sum(1 for u, v in edges if hub in (u, v))
        assert got == want, (hub, got, want)

    # arrival days: origin 0; hubs and half the mids early, rest late
    dfw = np.zeros(75, dtype=int)
    early = [1, 2, 3, 4, 5] + mids[: len(mids) // 2]
    late = mids[len(mids) // 2:] + leaves
    dfw[early] = np.clip(np.round(rng.normal(32, 4, len(early))), 5, None)
    dfw[late] = np.clip(np.round(rng.normal(58, 4, len(late))), 5, None)

    total_deg = np.array([sum(1 for u, v in edges if i in (u, v))
                          for i in range(75)], dtype=float)
    first = dfw <= 45
    gi = np.where(first, rng.normal(75, 6, 75), rng.normal(55, 6, 75))
    strength_like = total_deg * rng.uniform(2e5, 6e5, 75)
    aprt = rng.normal(100, 20, 75)  # no group effect on purpose

    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "nodes.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["code", "name", "continent", "lon", "lat"])
        conts = ["Asia", "NorthAmerica", "Europe", "Europe", "Europe", "Europe"]
        conts += ["Africa" if i % 3 else "Asia" for i in range(69)]
        for i, code in enumerate(codes):
            w.writerow([code, f"Country {code}", conts[i],
                        round(float(rng.uniform(-120, 150)), 3),
                        round(float(rng.uniform(-45, 60)), 3)])
    with open(out_dir / "edges.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["origin", "dest", "weight"])
        for u, v in edges:
            w.writerow([codes[u], codes[v], int(rng.integers(5e4, 4e6))])
    with open(out_dir / "variables.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["code", "DFW", "GI", "APRT"])
        for i, code in enumerate(codes):
            w.writerow([code, int(dfw[i]), round(float(gi[i]), 3),
                        int(abs(aprt[i]))])
    print(f"wrote reference-like dataset to {out_dir}")


if __name__ == "__main__":
    build(Path(sys.argv[1] if len(sys.argv) > 1 else "reference-like"))
