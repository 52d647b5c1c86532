"""Learning topologies: validated row-stochastic weight matrices and the
structural graph algorithms run on their support digraph.

Nodes are 0-based throughout. An edge ``j -> k`` exists iff ``weights[j, k] > 0``,
i.e. agent ``j`` listens to agent ``k``.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    Aperiodic,
    DimensionMismatch,
    InvalidDegree,
    MalformedTopologyFile,
    NegativeEntry,
    NonFiniteEntry,
    NonzeroDiagonal,
    NotSquare,
    NotStronglyConnected,
    RowSumViolation,
    TooLarge,
    TooSmall,
)

ROW_SUM_TOL = 1e-12

Cycle = tuple[int, ...]


@dataclass(frozen=True, eq=False)
class Topology:
    """Row-stochastic weight matrix with zero diagonal.

    Build instances through :func:`validate`; the constructor does not check
    invariants.
    """

    weights: np.ndarray

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @cached_property
    def successors(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(int(k) for k in np.flatnonzero(row > 0)) for row in self.weights)

    @cached_property
    def predecessors(self) -> tuple[tuple[int, ...], ...]:
        preds: list[list[int]] = [[] for _ in range(self.n)]
        for j, succ in enumerate(self.successors):
            for k in succ:
                preds[k].append(j)
        return tuple(tuple(p) for p in preds)

    def edges(self) -> list[tuple[int, int]]:
        return [(j, k) for j, succ in enumerate(self.successors) for k in succ]

    def subtopology(self, nodes: Sequence[int]) -> "Topology":
        """Restrict to ``nodes``; only valid for closed node sets."""
        idx = np.asarray(sorted(nodes))
        return validate(self.weights[np.ix_(idx, idx)])

    def __eq__(self, other):
        if not isinstance(other, Topology):
            return NotImplemented
        return np.array_equal(self.weights, other.weights)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class AgentTypes:
    """Per-agent type flags; ``rebel[j]`` is True for a rebel."""

    rebel: np.ndarray = field()

    def __post_init__(self):
        flags = np.array(self.rebel, dtype=bool).reshape(-1)
        flags.setflags(write=False)
        object.__setattr__(self, "rebel", flags)

    @classmethod
    def all_rebels(cls, n: int) -> "AgentTypes":
        return cls(np.ones(n, dtype=bool))

    @classmethod
    def all_conformists(cls, n: int) -> "AgentTypes":
        return cls(np.zeros(n, dtype=bool))

    @classmethod
    def from_rebels(cls, n: int, rebels: Iterable[int]) -> "AgentTypes":
        flags = np.zeros(n, dtype=bool)
        for j in rebels:
            if not 0 <= j < n:
                raise DimensionMismatch(f"rebel index {j} outside 0..{n - 1}")
            flags[j] = True
        return cls(flags)

    @property
    def n(self) -> int:
        return self.rebel.shape[0]

    @property
    def conformist_indicator(self) -> np.ndarray:
        """1.0 for conformists, 0.0 for rebels (the diagonal of U)."""
        return (~self.rebel).astype(float)

    @property
    def signs(self) -> np.ndarray:
        """+1 for conformists, -1 for rebels (the diagonal of 2U - I)."""
        return np.where(self.rebel, -1.0, 1.0)

    @property
    def rebel_indices(self) -> list[int]:
        return [int(j) for j in np.flatnonzero(self.rebel)]

    def subset(self, nodes: Sequence[int]) -> "AgentTypes":
        return AgentTypes(self.rebel[np.asarray(sorted(nodes))])

    def __eq__(self, other):
        if not isinstance(other, AgentTypes):
            return NotImplemented
        return np.array_equal(self.rebel, other.rebel)

    __hash__ = None


@dataclass(frozen=True)
class StructureReport:
    strongly_connected: bool
    period: int | None
    cyclic_classes: list[list[int]] | None
    rebel_bipartite: bool | None
    witness_cycle: Cycle | None
    closed_groups: list[list[int]]

    def to_dict(self) -> dict:
        return {
            "strongly_connected": self.strongly_connected,
            "period": self.period,
            "cyclic_classes": self.cyclic_classes,
            "rebel_bipartite": self.rebel_bipartite,
            "witness_cycle": list(self.witness_cycle) if self.witness_cycle is not None else None,
            "closed_groups": self.closed_groups,
        }


def validate(raw) -> Topology:
    """Check every Topology invariant and return a read-only Topology.

    Raises the first violated invariant; nothing is normalized.
    """
    m = np.array(raw, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotSquare(m.shape)
    n = m.shape[0]
    if n < 2:
        raise TooSmall(n)
    bad = np.argwhere(~np.isfinite(m))
    if bad.size:
        raise NonFiniteEntry(int(bad[0, 0]), int(bad[0, 1]))
    neg = np.argwhere(m < 0)
    if neg.size:
        j, k = (int(v) for v in neg[0])
        raise NegativeEntry(j, k, float(m[j, k]))
    for j in range(n):
        if m[j, j] != 0.0:
            raise NonzeroDiagonal(j)
    for j in range(n):
        total = math.fsum(m[j])
        if abs(total - 1.0) > ROW_SUM_TOL:
            raise RowSumViolation(j, total)
    m.setflags(write=False)
    return Topology(m)


def _bfs_order(adj: Sequence[Sequence[int]], root: int) -> dict[int, int]:
    dist = {root: 0}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def strongly_connected(t: Topology) -> bool:
    """True iff every node reaches every other node (A irreducible)."""
    return (
        len(_bfs_order(t.successors, 0)) == t.n
        and len(_bfs_order(t.predecessors, 0)) == t.n
    )


def _require_sc(t: Topology) -> None:
    if not strongly_connected(t):
        raise NotStronglyConnected("topology is not strongly connected")


def period(t: Topology) -> int:
    """Gcd of cycle lengths, from BFS levels: gcd of dist(u) + 1 - dist(v) over edges."""
    _require_sc(t)
    dist = _bfs_order(t.successors, 0)
    h = 0
    for u, v in t.edges():
        h = math.gcd(h, abs(dist[u] + 1 - dist[v]))
    return h


def cyclic_partition(t: Topology) -> list[list[int]]:
    """Classes N_0..N_{h-1} with every edge going N_l -> N_{l+1 mod h}.

    N_0 holds node 0.
    """
    h = period(t)
    if h == 1:
        raise Aperiodic("aperiodic topology has no nontrivial cyclic partition")
    dist = _bfs_order(t.successors, 0)
    classes: list[list[int]] = [[] for _ in range(h)]
    for v in range(t.n):
        classes[dist[v] % h].append(v)
    return classes


def canonical_cycle(cycle: Sequence[int]) -> Cycle:
    i = min(range(len(cycle)), key=cycle.__getitem__)
    return tuple(cycle[i:]) + tuple(cycle[:i])


def _simple_cycles_of_walk(walk: Sequence[int]):
    """Split a closed walk (walk[0] == walk[-1]) into simple cycles."""
    stack = [walk[0]]
    pos = {walk[0]: 0}
    for w in walk[1:]:
        if w in pos:
            i = pos[w]
            yield stack[i:]
            for u in stack[i + 1:]:
                del pos[u]
            del stack[i + 1:]
        else:
            pos[w] = len(stack)
            stack.append(w)


def _tree_path(parent: dict[int, int | None], v: int) -> list[int]:
    path = [v]
    while parent[path[-1]] is not None:
        path.append(parent[path[-1]])
    return path[::-1]


def rebel_bipartite(t: Topology, types: AgentTypes) -> tuple[bool, Cycle | None]:
    """Decide whether no directed cycle carries an odd number of rebels.

    Labels propagate along a DFS tree: the label is kept across an edge out
    of a conformist and flipped across an edge out of a rebel. Every edge is
    then checked; an inconsistent edge yields a closed walk with odd rebel
    count, whose simple-cycle decomposition contains the witness.
    """
    if types.n != t.n:
        raise DimensionMismatch(f"{types.n} types for {t.n} agents")
    _require_sc(t)
    rebel = types.rebel
    label = {0: 0}
    parent: dict[int, int | None] = {0: None}
    stack = [0]
    while stack:
        j = stack.pop()
        for k in t.successors[j]:
            if k not in label:
                label[k] = label[j] ^ int(rebel[j])
                parent[k] = j
                stack.append(k)

    for j, k in t.edges():
        if label[k] == label[j] ^ int(rebel[j]):
            continue
        back = _tree_path(_bfs_parents(t.successors, k), 0)
        walks = (
            _tree_path(parent, j) + back,  # root ~> j -> k ~> root
            _tree_path(parent, k) + back[1:],  # root ~> k ~> root
        )
        for walk in walks:
            for cyc in _simple_cycles_of_walk(walk):
                if sum(int(rebel[v]) for v in cyc) % 2 == 1:
                    return False, canonical_cycle(cyc)
        raise AssertionError("inconsistent labeling without odd cycle")  # pragma: no cover
    return True, None


def _bfs_parents(adj, root: int) -> dict[int, int | None]:
    parent: dict[int, int | None] = {root: None}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in parent:
                parent[v] = u
                queue.append(v)
    return parent


def enumerate_cycles(t: Topology, max_n: int = 8) -> list[Cycle]:
    """All simple directed cycles, smallest node first. Brute force."""
    if t.n > max_n:
        raise TooLarge(f"cycle enumeration limited to n <= {max_n}, got {t.n}")
    cycles: list[Cycle] = []
    succ = t.successors

    def extend(path: list[int], on_path: set[int]):
        start = path[0]
        for k in succ[path[-1]]:
            if k == start:
                cycles.append(tuple(path))
            elif k > start and k not in on_path:
                path.append(k)
                on_path.add(k)
                extend(path, on_path)
                on_path.discard(k)
                path.pop()

    for s in range(t.n):
        extend([s], {s})
    return sorted(cycles)


def strongly_connected_components(t: Topology) -> list[list[int]]:
    """Tarjan's algorithm, iterative."""
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = 0
    for root in range(t.n):
        if root in index:
            continue
        work = [(root, 0)]
        while work:
            v, i = work.pop()
            if i == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack.add(v)
            succ = t.successors[v]
            recursed = False
            while i < len(succ):
                w = succ[i]
                i += 1
                if w not in index:
                    work.append((v, i))
                    work.append((w, 0))
                    recursed = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if recursed:
                continue
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                comps.append(sorted(comp))
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
    return comps


def closed_groups(t: Topology) -> list[list[int]]:
    """Strongly connected components with no edge leaving them."""
    groups = []
    for comp in strongly_connected_components(t):
        members = set(comp)
        if all(k in members for j in comp for k in t.successors[j]):
            groups.append(comp)
    return sorted(groups)


def structure_report(t: Topology, types: AgentTypes) -> StructureReport:
    sc = strongly_connected(t)
    groups = closed_groups(t)
    if not sc:
        return StructureReport(False, None, None, None, None, groups)
    h = period(t)
    classes = cyclic_partition(t) if h > 1 else [list(range(t.n))]
    rb, witness = rebel_bipartite(t, types)
    return StructureReport(True, h, classes, rb, witness, groups)


def generate_random(n: int, out_degree: int, seed: int, require_sc: bool = True) -> Topology:
    """Random topology with exactly ``out_degree`` out-neighbours per node.

    With ``require_sc`` a random Hamiltonian cycle is laid down first, so the
    result is strongly connected. Weights are uniform on [0.1, 1) before row
    normalization.
    """
    if n < 2:
        raise TooSmall(n)
    if not 1 <= out_degree <= n - 1:
        raise InvalidDegree(f"out_degree must be in [1, {n - 1}], got {out_degree}")
    rng = np.random.default_rng(seed)
    support = [set() for _ in range(n)]
    if require_sc:
        order = rng.permutation(n)
        for i in range(n):
            support[order[i]].add(int(order[(i + 1) % n]))
    m = np.zeros((n, n))
    for j in range(n):
        free = [k for k in range(n) if k != j and k not in support[j]]
        extra = out_degree - len(support[j])
        chosen = sorted(support[j] | {int(k) for k in rng.choice(free, size=extra, replace=False)})
        w = rng.uniform(0.1, 1.0, size=len(chosen))
        m[j, chosen] = w / w.sum()
    return validate(m)


# --- file format -----------------------------------------------------------

def dumps_topology(t: Topology) -> str:
    """Serialize to the JSON edge-list format, weights at 17 significant digits."""
    lines = [f"    [{j}, {k}, {format(float(t.weights[j, k]), '.17g')}]" for j, k in t.edges()]
    return '{\n  "n": %d,\n  "edges": [\n%s\n  ]\n}\n' % (t.n, ",\n".join(lines))


def loads_topology(text: str) -> Topology:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedTopologyFile(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "n" not in doc or "edges" not in doc:
        raise MalformedTopologyFile('expected an object with "n" and "edges"')
    n = doc["n"]
    if not isinstance(n, int) or isinstance(n, bool):
        raise MalformedTopologyFile('"n" must be an integer')
    if n < 2:
        raise TooSmall(n)
    m = np.zeros((n, n))
    seen = set()
    for entry in doc["edges"]:
        if not (isinstance(entry, list) and len(entry) == 3):
            raise MalformedTopologyFile(f"edge entry must be [j, k, w], got {entry!r}")
        j, k, w = entry
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in (j, k)):
            raise MalformedTopologyFile(f"node ids must be integers, got {entry!r}")
        if not (0 <= j < n and 0 <= k < n):
            raise MalformedTopologyFile(f"node id out of range in {entry!r}")
        if (j, k) in seen:
            raise MalformedTopologyFile(f"duplicate edge ({j}, {k})")
        if not isinstance(w, (int, float)) or isinstance(w, bool):
            raise MalformedTopologyFile(f"weight must be a number in {entry!r}")
        seen.add((j, k))
        m[j, k] = w
    return validate(m)


def load_topology(path) -> Topology:
    return loads_topology(Path(path).read_text())


def save_topology(t: Topology, path) -> None:
    Path(path).write_text(dumps_topology(t))
