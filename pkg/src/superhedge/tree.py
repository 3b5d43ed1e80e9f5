"""Finite filtered probability spaces as rooted scenario trees.

Adapted processes are plain numpy arrays indexed by node: shape ``(n,)`` for
claim processes and ``(n, J)`` for portfolio processes. Nodes are numbered
densely in (time, insertion order), so array layouts and LP column orders are
reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import MalformedTree, TimeOutOfRange

PROB_TOL = 1e-12


@dataclass(frozen=True)
class Node:
    id: str
    time: int
    parent: str | None
    prob: float


class ScenarioTree:
    """Immutable scenario tree with strictly positive node probabilities."""

    def __init__(self, nodes: Iterable[Node]):
        self.nodes: tuple[Node, ...] = tuple(nodes)
        self.index = {nd.id: k for k, nd in enumerate(self.nodes)}
        self.time = np.array([nd.time for nd in self.nodes], dtype=int)
        self.prob = np.array([nd.prob for nd in self.nodes], dtype=float)
        self.parent = np.array([-1 if nd.parent is None else self.index[nd.parent]
                                for nd in self.nodes], dtype=int)
        self.horizon = int(self.time.max())
        kids: list[list[int]] = [[] for _ in self.nodes]
        for k, p in enumerate(self.parent):
            if p >= 0:
                kids[p].append(k)
        self.children = tuple(np.array(c, dtype=int) for c in kids)
        self.is_leaf = np.array([len(c) == 0 for c in kids])
        self._by_time = tuple(np.flatnonzero(self.time == t) for t in range(self.horizon + 1))
        for arr in (self.time, self.prob, self.parent, self.is_leaf):
            arr.setflags(write=False)

    def __len__(self) -> int:
        return len(self.nodes)

    def __repr__(self) -> str:
        return f"ScenarioTree(nodes={len(self)}, horizon={self.horizon})"

    @property
    def ids(self) -> list[str]:
        return [nd.id for nd in self.nodes]

    @property
    def nonterminal(self) -> np.ndarray:
        """Indices of nodes with children, i.e. where a portfolio is held."""
        return np.flatnonzero(~self.is_leaf)

    @property
    def leaves(self) -> np.ndarray:
        return np.flatnonzero(self.is_leaf)

    def nodes_at(self, t: int) -> np.ndarray:
        if not 0 <= t <= self.horizon:
            raise TimeOutOfRange(f"time {t} outside [0, {self.horizon}]")
        return self._by_time[t]

    def conditional_prob(self) -> np.ndarray:
        """P(node | parent); 1 at the root."""
        out = np.ones(len(self))
        nonroot = self.parent >= 0
        out[nonroot] = self.prob[nonroot] / self.prob[self.parent[nonroot]]
        return out

    def path(self, k: int) -> list[int]:
        """Node indices from the root down to ``k``."""
        out = []
        while k >= 0:
            out.append(int(k))
            k = int(self.parent[k])
        return out[::-1]

    # processes -------------------------------------------------------------

    def process(self, values: Mapping[str, object] | np.ndarray | float, dim: int | None = None) -> np.ndarray:
        """Coerce a mapping ``{node_id: value}``, constant or array into a node array."""
        n = len(self)
        if isinstance(values, Mapping):
            missing = set(self.index) - set(values)
            if missing:
                raise ValueError(f"process misses nodes {sorted(missing)[:5]}")
            arr = np.array([values[nd.id] for nd in self.nodes], dtype=float)
        else:
            arr = np.asarray(values, dtype=float)
            if arr.ndim == 0 or (dim is not None and arr.ndim == 1 and arr.shape[0] == dim and n != dim):
                arr = np.broadcast_to(arr, (n,) + arr.shape).copy()
        if arr.shape[0] != n:
            raise ValueError(f"process has {arr.shape[0]} entries, tree has {n} nodes")
        if dim is not None and arr.shape[1:] != (dim,):
            raise ValueError(f"expected {dim}-dimensional values, got shape {arr.shape[1:]}")
        return arr

    def as_mapping(self, values: np.ndarray) -> dict[str, object]:
        values = np.asarray(values)
        return {nd.id: (values[k].tolist() if values.ndim > 1 else float(values[k]))
                for k, nd in enumerate(self.nodes)}

    def increments(self, x: np.ndarray) -> np.ndarray:
        """``x_n - x_parent(n)`` with ``x_{-1} = 0`` at the root."""
        x = np.asarray(x, dtype=float)
        prev = np.zeros_like(x)
        nonroot = self.parent >= 0
        prev[nonroot] = x[self.parent[nonroot]]
        return x - prev

    def expect_children(self, values: np.ndarray) -> np.ndarray:
        """E[v_{t+1} | F_t] at every node (zero at leaves)."""
        values = np.asarray(values, dtype=float)
        weighted = values * (self.prob.reshape((-1,) + (1,) * (values.ndim - 1)))
        out = np.zeros_like(weighted)
        nonroot = np.flatnonzero(self.parent >= 0)
        np.add.at(out, self.parent[nonroot], weighted[nonroot])
        return out / self.prob.reshape((-1,) + (1,) * (values.ndim - 1))

    def to_dict(self) -> dict:
        return {"nodes": [{"id": nd.id, "parent": nd.parent, "prob": nd.prob} for nd in self.nodes]}


def build_tree(spec: Iterable[Mapping | tuple] | Mapping) -> ScenarioTree:
    """Validate a node list with parent links and probabilities.

    ``spec`` is either ``{"nodes": [...]}`` or the list itself; entries are
    mappings with keys ``id``, ``parent`` and ``prob`` or ``(id, parent, prob)``
    tuples. Node times are inferred from the depth below the root.
    """
    if isinstance(spec, Mapping):
        spec = spec["nodes"]
    entries = []
    for e in spec:
        if isinstance(e, Mapping):
            entries.append((str(e["id"]), None if e.get("parent") is None else str(e["parent"]),
                            float(e["prob"])))
        else:
            nid, par, prob = e
            entries.append((str(nid), None if par is None else str(par), float(prob)))
    if not entries:
        raise MalformedTree("empty node list")
    ids = [e[0] for e in entries]
    if len(set(ids)) != len(ids):
        raise MalformedTree("duplicate node ids")
    roots = [e for e in entries if e[1] is None]
    if len(roots) != 1:
        raise MalformedTree(f"expected exactly one root, found {len(roots)}")
    parent_of = {nid: par for nid, par, _ in entries}
    prob_of = {nid: p for nid, _, p in entries}
    for nid, par, p in entries:
        if par is not None and par not in parent_of:
            raise MalformedTree(f"node {nid!r} has unknown parent {par!r}")
        if not p > 0 or not np.isfinite(p):
            raise MalformedTree(f"node {nid!r} has nonpositive probability {p}")

    depth: dict[str, int] = {}
    for nid in ids:
        chain = []
        cur = nid
        while cur is not None and cur not in depth:
            if cur in chain:
                raise MalformedTree("cyclic parent links")
            chain.append(cur)
            cur = parent_of[cur]
        base = -1 if cur is None else depth[cur]
        for k, c in enumerate(reversed(chain)):
            depth[c] = base + 1 + k

    root_id = roots[0][0]
    if abs(prob_of[root_id] - 1.0) > PROB_TOL:
        raise MalformedTree(f"root probability {prob_of[root_id]} != 1")
    child_sum: dict[str, float] = {}
    for nid, par, p in entries:
        if par is not None:
            child_sum[par] = child_sum.get(par, 0.0) + p
    for par, s in child_sum.items():
        if abs(s - prob_of[par]) > PROB_TOL * max(1.0, prob_of[par]):
            raise MalformedTree(f"children of {par!r} have total probability {s}, expected {prob_of[par]}")
    horizon = max(depth.values())
    for nid in ids:
        if nid not in child_sum and depth[nid] != horizon:
            raise MalformedTree(f"leaf {nid!r} at time {depth[nid]} before the horizon {horizon}")

    order = sorted(range(len(entries)), key=lambda k: (depth[entries[k][0]], k))
    return ScenarioTree(Node(entries[k][0], depth[entries[k][0]], entries[k][1], entries[k][2])
                        for k in order)


def conditional_expectation(tree: ScenarioTree, proc: np.ndarray, t: int) -> np.ndarray:
    """E[proc_{t+1} | F_t] on the time-``t`` nodes.

    ``proc`` is either a full node array or an array over ``tree.nodes_at(t + 1)``.
    """
    if not 0 <= t < tree.horizon:
        raise TimeOutOfRange(f"need 0 <= t < {tree.horizon}, got {t}")
    proc = np.asarray(proc, dtype=float)
    nxt = tree.nodes_at(t + 1)
    if proc.shape[0] == len(nxt) and len(nxt) != len(tree):
        full = np.zeros((len(tree),) + proc.shape[1:])
        full[nxt] = proc
        proc = full
    return tree.expect_children(proc)[tree.nodes_at(t)]


def pairing(tree: ScenarioTree, c: np.ndarray, y: np.ndarray) -> float:
    """E sum_t c_t y_t."""
    c = np.asarray(c, dtype=float)
    y = np.asarray(y, dtype=float)
    if c.shape != (len(tree),) or y.shape != (len(tree),):
        raise ValueError("pairing needs two scalar processes defined on every node")
    return float(np.sum(tree.prob * c * y))


def uniform_tree(horizon: int, branching: int | list[int], probs: list[float] | None = None) -> ScenarioTree:
    """Complete tree with equal (or given) conditional branch probabilities."""
    spec = [("0", None, 1.0)]
    frontier = [("0", 1.0)]
    for t in range(horizon):
        b = branching if isinstance(branching, int) else branching[t]
        q = probs if probs is not None else [1.0 / b] * b
        nxt = []
        for nid, p in frontier:
            for k in range(b):
                cid = f"{nid}.{k}"
                spec.append((cid, nid, p * q[k]))
                nxt.append((cid, p * q[k]))
        frontier = nxt
    return build_tree(spec)
