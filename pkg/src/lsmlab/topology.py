"""Directed reservoir connectivity: Watts-Strogatz small-world and
Erdos-Renyi control graphs with matched expected in-degree."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FAMILY_WATTS_STROGATZ = "watts_strogatz"
FAMILY_ERDOS_RENYI = "erdos_renyi"


class TopologyError(ValueError):
    pass


@dataclass(frozen=True)
class TopologySpec:
    n_neurons: int
    beta: float
    rewiring_prob: float
    family: str
    seed: int
    # Probability of keeping each direction of an undirected edge. 0.5 gives
    # expected in-degree beta*N; 1.0 keeps every edge bidirectional (used by
    # degree-exactness tests).
    direction_prob: float = 0.5

    def __post_init__(self):
        if self.n_neurons < 4:
            raise TopologyError("need at least 4 neurons")
        if not 0 < self.beta < 0.5:
            raise TopologyError("beta must lie in (0, 0.5)")
        if not 0 <= self.rewiring_prob <= 1:
            raise TopologyError("rewiring_prob must lie in [0, 1]")
        if not 0 <= self.direction_prob <= 1:
            raise TopologyError("direction_prob must lie in [0, 1]")
        if self.family not in (FAMILY_WATTS_STROGATZ, FAMILY_ERDOS_RENYI):
            raise TopologyError(f"unknown topology family: {self.family!r}")


@dataclass(frozen=True)
class DirectedGraph:
    """Immutable edge list; no self-loops, no duplicate directed edges."""

    n_neurons: int
    pre: np.ndarray
    post: np.ndarray

    def __post_init__(self):
        pre = np.asarray(self.pre, dtype=np.int64)
        post = np.asarray(self.post, dtype=np.int64)
        if pre.shape != post.shape:
            raise TopologyError("pre/post arrays must have equal length")
        if pre.size:
            if pre.min() < 0 or post.min() < 0 or max(pre.max(), post.max()) >= self.n_neurons:
                raise TopologyError("edge endpoint out of range")
            if np.any(pre == post):
                raise TopologyError("self-loops are not allowed")
            keys = pre * self.n_neurons + post
            if np.unique(keys).size != keys.size:
                raise TopologyError("duplicate directed edges are not allowed")
        object.__setattr__(self, "pre", pre)
        object.__setattr__(self, "post", post)

    @property
    def n_edges(self) -> int:
        return int(self.pre.size)


@dataclass(frozen=True)
class DegreeStats:
    mean_in: float
    min_in: int
    max_in: int
    mean_out: float
    min_out: int
    max_out: int


def ring_lattice_degree(spec: TopologySpec) -> int:
    """Even nearest-neighbor count k ~ 2*beta*N for the ring lattice."""
    return 2 * round(spec.beta * spec.n_neurons)


def generate(spec: TopologySpec) -> DirectedGraph:
    if spec.family == FAMILY_WATTS_STROGATZ:
        return generate_watts_strogatz(spec)
    return generate_erdos_renyi(spec)


def generate_watts_strogatz(spec: TopologySpec) -> DirectedGraph:
    """Small-world digraph: undirected Watts-Strogatz lattice with rewiring,
    then each direction of each undirected edge kept independently."""
    if spec.family != FAMILY_WATTS_STROGATZ:
        raise TopologyError("spec.family must be watts_strogatz")
    n = spec.n_neurons
    k = ring_lattice_degree(spec)
    if k < 2:
        raise TopologyError(f"beta={spec.beta} gives ring degree {k} < 2")
    if k >= n:
        raise TopologyError(f"beta={spec.beta} gives ring degree {k} >= N={n}")
    rng = np.random.default_rng(spec.seed)

    neighbors: list[set[int]] = [set() for _ in range(n)]
    for i in range(n):
        for j in range(1, k // 2 + 1):
            t = (i + j) % n
            neighbors[i].add(t)
            neighbors[t].add(i)

    # Rewire each original lattice edge (i, i+j) with probability p, keeping
    # the source and redrawing the target among non-neighbors.
    for j in range(1, k // 2 + 1):
        picked = np.nonzero(rng.random(n) < spec.rewiring_prob)[0]
        for i in picked:
            i = int(i)
            t = (i + j) % n
            if t not in neighbors[i]:
                continue  # already rewired away
            if len(neighbors[i]) >= n - 1:
                continue  # saturated node, nothing to rewire to
            new_t = int(rng.integers(n))
            while new_t == i or new_t in neighbors[i]:
                new_t = int(rng.integers(n))
            neighbors[i].discard(t)
            neighbors[t].discard(i)
            neighbors[i].add(new_t)
            neighbors[new_t].add(i)

    u_list: list[int] = []
    v_list: list[int] = []
    for u in range(n):
        for v in sorted(neighbors[u]):
            if u < v:
                u_list.append(u)
                v_list.append(v)
    us = np.array(u_list, dtype=np.int64)
    vs = np.array(v_list, dtype=np.int64)
    keep_fwd = rng.random(us.size) < spec.direction_prob
    keep_bwd = rng.random(us.size) < spec.direction_prob
    pre = np.concatenate([us[keep_fwd], vs[keep_bwd]])
    post = np.concatenate([vs[keep_fwd], us[keep_bwd]])
    return DirectedGraph(n, pre, post)


def generate_erdos_renyi(spec: TopologySpec) -> DirectedGraph:
    """Directed Erdos-Renyi graph with expected in-degree beta*N."""
    if spec.family != FAMILY_ERDOS_RENYI:
        raise TopologyError("spec.family must be erdos_renyi")
    n = spec.n_neurons
    q = spec.beta * n / (n - 1)
    if q > 1:
        raise TopologyError(f"edge probability q={q:.4f} exceeds 1")
    rng = np.random.default_rng(spec.seed)
    mask = rng.random((n, n)) < q
    np.fill_diagonal(mask, False)
    pre, post = np.nonzero(mask)
    return DirectedGraph(n, pre.astype(np.int64), post.astype(np.int64))


def degree_stats(graph: DirectedGraph) -> DegreeStats:
    in_deg = np.bincount(graph.post, minlength=graph.n_neurons)
    out_deg = np.bincount(graph.pre, minlength=graph.n_neurons)
    return DegreeStats(
        mean_in=float(in_deg.mean()),
        min_in=int(in_deg.min()),
        max_in=int(in_deg.max()),
        mean_out=float(out_deg.mean()),
        min_out=int(out_deg.min()),
        max_out=int(out_deg.max()),
    )
