"""Simple connected graphs, their connectivity spectra and directed-bond index."""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

REJECTION_BUDGET = 10_000


class GraphError(ValueError):
    """Invalid or infeasible graph input."""


class GenerationError(RuntimeError):
    """Random graph generation exhausted its attempt budget."""

    def __init__(self, message: str, attempts: int):
        super().__init__(message)
        self.attempts = attempts


@dataclass(frozen=True)
class DirectedBondIndex:
    """Numbering of the 2B directed bonds of a graph.

    Edge ``e = (p, q)`` with ``p < q`` yields bond ``2e`` (p -> q) and bond
    ``2e + 1`` (q -> p), so the reversal map is ``b ^ 1``.  ``slot[j]`` maps
    each neighbour of ``j`` to its position in ``sigma^(j)``; neighbours are
    numbered in ascending vertex-label order.
    """

    bonds: tuple[tuple[int, int], ...]
    slot: tuple[dict[int, int], ...]

    def __len__(self) -> int:
        return len(self.bonds)

    @property
    def reversal(self) -> np.ndarray:
        return np.arange(len(self.bonds)) ^ 1

    def reversal_matrix(self) -> np.ndarray:
        n = len(self.bonds)
        P = np.zeros((n, n))
        P[np.arange(n), self.reversal] = 1.0
        return P

    def bond_edge(self, b: int) -> int:
        return b // 2


@dataclass(frozen=True, eq=False)
class GraphTopology:
    """Connected simple undirected graph on vertices ``0 .. V-1``."""

    V: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.V < 1:
            raise GraphError("graph needs at least one vertex")
        seen = set()
        for p, q in self.edges:
            if not (0 <= p < self.V and 0 <= q < self.V):
                raise GraphError(f"edge ({p}, {q}) references a vertex outside 0..{self.V - 1}")
            if p == q:
                raise GraphError(f"loop at vertex {p}")
            key = (min(p, q), max(p, q))
            if key in seen:
                raise GraphError(f"multiple bond between {key[0]} and {key[1]}")
            seen.add(key)
        object.__setattr__(self, "edges", tuple(sorted(seen)))
        if not self._connected():
            raise GraphError("graph is not connected")

    def __eq__(self, other):
        return isinstance(other, GraphTopology) and (self.V, self.edges) == (other.V, other.edges)

    def __hash__(self):
        return hash((self.V, self.edges))

    def _connected(self) -> bool:
        nbrs = self.neighbors
        seen = {0}
        queue = deque([0])
        while queue:
            for q in nbrs[queue.popleft()]:
                if q not in seen:
                    seen.add(q)
                    queue.append(q)
        return len(seen) == self.V

    @property
    def B(self) -> int:
        return len(self.edges)

    @cached_property
    def neighbors(self) -> tuple[tuple[int, ...], ...]:
        nbrs = [[] for _ in range(self.V)]
        for p, q in self.edges:
            nbrs[p].append(q)
            nbrs[q].append(p)
        return tuple(tuple(sorted(n)) for n in nbrs)

    @property
    def valencies(self) -> np.ndarray:
        return np.array([len(n) for n in self.neighbors])

    @cached_property
    def C(self) -> np.ndarray:
        C = np.zeros((self.V, self.V), dtype=np.int64)
        for p, q in self.edges:
            C[p, q] = C[q, p] = 1
        C.setflags(write=False)
        return C

    @cached_property
    def bond_index(self) -> DirectedBondIndex:
        bonds = []
        for p, q in self.edges:
            bonds.append((p, q))
            bonds.append((q, p))
        slot = tuple({q: k for k, q in enumerate(n)} for n in self.neighbors)
        return DirectedBondIndex(tuple(bonds), slot)

    def regular_degree(self) -> int | None:
        """Common valency if the graph is regular, else ``None``."""
        val = self.valencies
        return int(val[0]) if np.all(val == val[0]) else None

    def relabel(self, perm) -> GraphTopology:
        """Copy with vertex ``i`` renamed ``perm[i]``."""
        perm = list(perm)
        return GraphTopology(self.V, tuple((perm[p], perm[q]) for p, q in self.edges))

    def to_dict(self) -> dict:
        return {"V": self.V, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_dict(cls, obj) -> GraphTopology:
        try:
            V = int(obj["V"])
            edges = tuple((int(p), int(q)) for p, q in obj["edges"])
        except (KeyError, TypeError, ValueError) as exc:
            raise GraphError(f"malformed graph object: {exc}") from exc
        return cls(V, edges)


def dumps_graph(g: GraphTopology) -> str:
    return json.dumps(g.to_dict())


def read_graph(path) -> GraphTopology:
    text = Path(path).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphError(f"invalid graph JSON in {path}: {exc}") from exc
    return GraphTopology.from_dict(obj)


def complete_graph(n: int) -> GraphTopology:
    if n < 3:
        raise GraphError("complete graph needs n >= 3")
    return GraphTopology(n, tuple((p, q) for p in range(n) for q in range(p + 1, n)))


def _pair_stubs(v: int, V: int, rng: np.random.Generator) -> set | None:
    # Configuration-model pairing; stubs that would form a loop or repeat a
    # bond are re-shuffled among themselves until none are left, or until
    # no admissible pair remains among them (attempt failed).
    edges = set()
    stubs = np.repeat(np.arange(V), v)
    while stubs.size:
        stubs = rng.permutation(stubs)
        left = []
        for a, b in zip(stubs[0::2].tolist(), stubs[1::2].tolist()):
            key = (min(a, b), max(a, b))
            if a != b and key not in edges:
                edges.add(key)
            else:
                left += [a, b]
        if left:
            rest = sorted(set(left))
            if not any((a, b) not in edges for i, a in enumerate(rest) for b in rest[i + 1:]):
                return None
        stubs = np.array(left, dtype=np.int64)
    return edges


def random_regular(v: int, V: int, seed: int, budget: int = REJECTION_BUDGET) -> GraphTopology:
    """Seeded random simple connected v-regular graph on V vertices.

    Stubs are paired at random; failed pairings and disconnected outcomes
    are rejected and retried, up to ``budget`` attempts.
    """
    if v < 3 or v >= V:
        raise GraphError(f"need 3 <= v < V, got v={v}, V={V}")
    if (v * V) % 2:
        raise GraphError(f"v*V = {v * V} is odd; no v-regular graph exists")
    rng = np.random.default_rng(seed)
    for _ in range(budget):
        edges = _pair_stubs(v, V, rng)
        if edges is None:
            continue
        try:
            return GraphTopology(V, tuple(sorted(edges)))
        except GraphError:
            continue
    raise GenerationError(f"no connected {v}-regular graph on {V} vertices after {budget} attempts", budget)


def connectivity_spectrum(g: GraphTopology) -> np.ndarray:
    """Eigenvalues of C, sorted descending (``mu_0 >= mu_1 >= ...``)."""
    return np.linalg.eigvalsh(g.C.astype(float))[::-1].copy()


@dataclass(frozen=True)
class RamanujanResult:
    is_ramanujan: bool
    margin: float
    bound: float
    max_nontrivial: float

    def __bool__(self) -> bool:
        return self.is_ramanujan


def is_ramanujan(g: GraphTopology, mu: np.ndarray | None = None) -> RamanujanResult:
    v = g.regular_degree()
    if v is None:
        raise GraphError("Ramanujan test needs a regular graph")
    if mu is None:
        mu = connectivity_spectrum(g)
    bound = 2 * math.sqrt(v - 1)
    worst = float(np.max(np.abs(mu[1:]))) if len(mu) > 1 else 0.0
    return RamanujanResult(worst <= bound + 1e-9, bound - worst, bound, worst)


def triangle_count(g: GraphTopology) -> int:
    """Number of triangles, by direct enumeration of vertex triples."""
    adj = [set(n) for n in g.neighbors]
    count = 0
    for a in range(g.V):
        for b in adj[a]:
            if b <= a:
                continue
            count += sum(1 for c in adj[a] & adj[b] if c > b)
    return count


def two_cliques_fixture(k: int = 6) -> GraphTopology:
    """(k-1)-regular graph: two copies of K_k, each missing one edge, cross-joined.

    The bottleneck gives a second connectivity eigenvalue close to k-1, above
    the Ramanujan bound.
    """
    edges = []
    for base in (0, k):
        for p in range(k):
            for q in range(p + 1, k):
                if (p, q) != (0, 1):
                    edges.append((base + p, base + q))
    edges += [(0, k), (1, k + 1)]
    return GraphTopology(2 * k, tuple(edges))
