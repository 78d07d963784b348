"""Node-level interconnectedness metrics on a FlowNetwork.

Degree and strength read the directed multigraph directly.  The path-based
metrics (clustering, betweenness, closeness, eccentricity) default to the
undirected binary projection (an edge exists if either direction exists);
a directed view is available for sensitivity analysis.  Distances are
binary hop counts, so per-source breadth-first search is exact.

Betweenness uses the proportion normalization: the fractional count of
shortest paths through a node, divided by the total number of connected
node pairs.  The conventional pair normalization (excluding pairs that
contain the node itself) is available as a separate vector.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .errors import AnalysisError, DegenerateDataError, DisconnectedGraphError
from .model import FlowNetwork


@dataclass(frozen=True)
class CentralityVector:
    """One metric's per-node values, keyed by node id."""

    metric: str
    values: dict[int, float]

    def as_list(self, n: int) -> list[float]:
        return [self.values[i] for i in range(n)]


def _require_nonempty(net: FlowNetwork) -> None:
    if net.n == 0:
        raise DegenerateDataError("network has no nodes")


def degree(net: FlowNetwork, mode: str = "total") -> CentralityVector:
    """Count adjacent edges per node; opposite-direction links count separately."""
    _require_nonempty(net)
    indeg = [0] * net.n
    outdeg = [0] * net.n
    for e in net.edges:
        outdeg[e.origin] += 1
        indeg[e.dest] += 1
    if mode == "in":
        vals = indeg
    elif mode == "out":
        vals = outdeg
    elif mode == "total":
        vals = [i + o for i, o in zip(indeg, outdeg)]
    else:
        raise ValueError(f"mode must be in/out/total, got {mode!r}")
    name = {"in": "IN.DEG", "out": "OUT.DEG", "total": "DEG"}[mode]
    return CentralityVector(name, {i: float(v) for i, v in enumerate(vals)})


def strength(net: FlowNetwork, mode: str = "total") -> CentralityVector:
    """Sum adjacent edge weights per node."""
    _require_nonempty(net)
    in_str = [0.0] * net.n
    out_str = [0.0] * net.n
    for e in net.edges:
        out_str[e.origin] += e.weight
        in_str[e.dest] += e.weight
    if mode == "in":
        vals = in_str
    elif mode == "out":
        vals = out_str
    elif mode == "total":
        vals = [i + o for i, o in zip(in_str, out_str)]
    else:
        raise ValueError(f"mode must be in/out/total, got {mode!r}")
    name = {"in": "IN.STR", "out": "OUT.STR", "total": "STR"}[mode]
    return CentralityVector(name, dict(enumerate(vals)))


def _view(net: FlowNetwork, directed: bool) -> list[set[int]]:
    return net.directed_neighbors() if directed else net.undirected_neighbors()


def _bfs_distances(nbrs: list[set[int]], source: int) -> list[int]:
    dist = [-1] * len(nbrs)
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in nbrs[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def _check_connected(nbrs: list[set[int]], directed: bool, metric: str) -> None:
    n = len(nbrs)
    if n == 0:
        raise DegenerateDataError("network has no nodes")
    if -1 in _bfs_distances(nbrs, 0):
        raise DisconnectedGraphError(
            f"{metric} requires a connected view; "
            "extract the giant component first"
        )
    if directed:
        reverse: list[set[int]] = [set() for _ in range(n)]
        for u, targets in enumerate(nbrs):
            for v in targets:
                reverse[v].add(u)
        if -1 in _bfs_distances(reverse, 0):
            raise DisconnectedGraphError(
                f"{metric} requires a strongly connected directed view; "
                "extract the giant component first"
            )


def clustering(net: FlowNetwork, directed: bool = False) -> CentralityVector:
    """Probability that two neighbors of a node are themselves linked.

    Undirected: links among neighbors over k*(k-1)/2.  Directed view counts
    directed links among out-neighbors over k*(k-1).  Nodes with fewer than
    two neighbors get 0 (flagged in output metadata by callers).
    """
    _require_nonempty(net)
    nbrs = _view(net, directed)
    values: dict[int, float] = {}
    for v in range(net.n):
        neigh = nbrs[v]
        k = len(neigh)
        if k < 2:
            values[v] = 0.0
            continue
        links = 0
        for u in neigh:
            links += len(nbrs[u] & neigh)
        if not directed:
            links //= 2  # each undirected link among neighbors seen twice
            values[v] = links / (k * (k - 1) / 2.0)
        else:
            values[v] = links / float(k * (k - 1))
    return CentralityVector("C", values)


def _brandes_raw(nbrs: list[set[int]]) -> list[float]:
    """Sum over ordered pairs (s,t), s != t != v, of sigma_st(v)/sigma_st."""
    n = len(nbrs)
    raw = [0.0] * n
    for s in range(n):
        sigma = [0.0] * n
        dist = [-1] * n
        preds: list[list[int]] = [[] for _ in range(n)]
        sigma[s] = 1.0
        dist[s] = 0
        queue = deque([s])
        order: list[int] = []
        while queue:
            u = queue.popleft()
            order.append(u)
            for w in nbrs[u]:
                if dist[w] < 0:
                    dist[w] = dist[u] + 1
                    queue.append(w)
                if dist[w] == dist[u] + 1:
                    sigma[w] += sigma[u]
                    preds[w].append(u)
        delta = [0.0] * n
        for w in reversed(order):
            for u in preds[w]:
                delta[u] += sigma[u] / sigma[w] * (1.0 + delta[w])
            if w != s:
                raw[w] += delta[w]
    return raw


def betweenness(net: FlowNetwork, directed: bool = False,
                normalization: str = "proportion") -> CentralityVector:
    """Fraction of the network's shortest paths routed through each node.

    ``proportion`` divides the fractional pair count by the total number of
    connected pairs (the default CB column); ``pairs`` divides by the number
    of pairs not containing the node, the conventional normalization.
    """
    _require_nonempty(net)
    if net.n < 2:
        raise AnalysisError("betweenness needs at least 2 nodes")
    nbrs = _view(net, directed)
    _check_connected(nbrs, directed, "betweenness")
    raw = _brandes_raw(nbrs)
    n = net.n
    if not directed:
        raw = [r / 2.0 for r in raw]  # ordered-pair sums count each pair twice
        pairs_total = n * (n - 1) / 2.0
        pairs_excl = (n - 1) * (n - 2) / 2.0
    else:
        pairs_total = float(n * (n - 1))
        pairs_excl = float((n - 1) * (n - 2))
    if normalization == "proportion":
        values = {v: raw[v] / pairs_total for v in range(n)}
        return CentralityVector("CB", values)
    if normalization == "pairs":
        values = {v: (raw[v] / pairs_excl if pairs_excl > 0 else 0.0)
                  for v in range(n)}
        return CentralityVector("CB.PAIR", values)
    raise ValueError(f"normalization must be proportion/pairs, got {normalization!r}")


def closeness(net: FlowNetwork, directed: bool = False) -> CentralityVector:
    """Inverse of the total hop-count distance from each node to all others."""
    _require_nonempty(net)
    if net.n < 2:
        raise AnalysisError("closeness needs at least 2 nodes")
    nbrs = _view(net, directed)
    _check_connected(nbrs, directed, "closeness")
    values: dict[int, float] = {}
    for v in range(net.n):
        values[v] = 1.0 / sum(_bfs_distances(nbrs, v))
    return CentralityVector("CC", values)


def eccentricity(net: FlowNetwork, directed: bool = False) -> CentralityVector:
    """Maximum hop-count distance from each node to any other node."""
    _require_nonempty(net)
    nbrs = _view(net, directed)
    if net.n > 1:
        _check_connected(nbrs, directed, "eccentricity")
    values: dict[int, float] = {}
    for v in range(net.n):
        values[v] = float(max(_bfs_distances(nbrs, v)))
    return CentralityVector("ECC", values)


def eccentricity_from_reference(ecc: CentralityVector, ref: int,
                                absolute: bool = False) -> CentralityVector:
    """Center an eccentricity vector on a reference node by subtraction."""
    if ecc.metric != "ECC":
        raise ValueError(f"expected an ECC vector, got {ecc.metric!r}")
    if ref not in ecc.values:
        raise AnalysisError(f"reference node {ref} absent from the vector")
    base = ecc.values[ref]
    if absolute:
        return CentralityVector(
            "ECCFC.ABS", {v: abs(x - base) for v, x in ecc.values.items()})
    return CentralityVector(
        "ECCFC", {v: x - base for v, x in ecc.values.items()})


def compute_all(net: FlowNetwork, reference: str | None = None,
                directed: bool = False) -> dict[str, CentralityVector]:
    """Every metric column, in canonical order, keyed by column name.

    ``reference`` (a node code) adds the ECCFC and ECCFC.ABS columns.
    """
    out: dict[str, CentralityVector] = {}
    out["DEG"] = degree(net, "total")
    out["IN.DEG"] = degree(net, "in")
    out["OUT.DEG"] = degree(net, "out")
    out["STR"] = strength(net, "total")
    out["IN.STR"] = strength(net, "in")
    out["OUT.STR"] = strength(net, "out")
    out["C"] = clustering(net, directed)
    out["CB"] = betweenness(net, directed, "proportion")
    out["CB.PAIR"] = betweenness(net, directed, "pairs")
    out["CC"] = closeness(net, directed)
    ecc = eccentricity(net, directed)
    out["ECC"] = ecc
    if reference is not None:
        ref_id = net.code_to_id().get(reference)
        if ref_id is None:
            raise AnalysisError(f"reference code {reference!r} not in the network")
        out["ECCFC"] = eccentricity_from_reference(ecc, ref_id, absolute=False)
        out["ECCFC.ABS"] = eccentricity_from_reference(ecc, ref_id, absolute=True)
    return out


def low_degree_nodes(net: FlowNetwork, directed: bool = False) -> list[int]:
    """Nodes with fewer than two neighbors on the clustering view (C forced 0)."""
    nbrs = _view(net, directed)
    return [v for v in range(net.n) if len(nbrs[v]) < 2]
