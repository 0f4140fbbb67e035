"""Attributed graphs, edit costs, isomorphism actions and brute-force oracles.

Everything in here treats graphs as a pair of binary matrices: node
attributes X (N x D) and adjacency A (N x N). Edit costs are counted per
ordered matrix entry; an undirected edit therefore touches two entries and
costs twice the per-entry cost (divide structure costs by 2 if you want the
unordered convention, see `CostModel.halve_structure_costs`).
"""

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

INF = math.inf

GED_NODE_CAP = 8
ENUMERATION_CAP = 10 ** 6


class GraphSchemaError(ValueError):
    """Raised when a graph JSON document violates the schema."""


@dataclass
class AttributedGraph:
    """Binary attributed graph with optional per-node or per-graph labels."""

    X: np.ndarray
    A: np.ndarray
    undirected: bool = False
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.int8)
        self.A = np.asarray(self.A, dtype=np.int8)
        if self.X.ndim != 2:
            raise ValueError("X must be a 2d matrix")
        if self.A.ndim != 2 or self.A.shape[0] != self.A.shape[1]:
            raise ValueError("A must be square")
        if self.A.shape[0] != self.X.shape[0]:
            raise ValueError("X and A disagree on the number of nodes")
        for name, mat in (("X", self.X), ("A", self.A)):
            if not np.isin(mat, (0, 1)).all():
                raise ValueError(f"{name} must be binary")
        if self.undirected and not np.array_equal(self.A, self.A.T):
            raise ValueError("undirected graph with asymmetric adjacency")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)

    @property
    def num_nodes(self) -> int:
        return self.X.shape[0]

    @property
    def num_features(self) -> int:
        return self.X.shape[1]

    def copy(self) -> "AttributedGraph":
        labels = None if self.labels is None else self.labels.copy()
        return AttributedGraph(self.X.copy(), self.A.copy(), self.undirected, labels)


@dataclass
class CostModel:
    """Edit costs (possibly infinite) plus global and per-node budgets.

    `rho` is the vector of local budgets; scalar input is broadcast when the
    model is bound to a graph via `local_budgets`.
    """

    cx_add: float = 1.0
    cx_del: float = 1.0
    ca_add: float = 1.0
    ca_del: float = 1.0
    epsilon: float = 0.0
    rho: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("cx_add", "cx_del", "ca_add", "ca_del"):
            c = float(getattr(self, name))
            if not (c >= 0):
                raise ValueError(f"{name} must be nonnegative or inf")
            setattr(self, name, c)
        if not (self.epsilon >= 0):
            raise ValueError("epsilon must be nonnegative")
        self.epsilon = float(self.epsilon)
        if self.rho is not None:
            self.rho = np.asarray(self.rho, dtype=float)
            if (self.rho < 0).any():
                raise ValueError("local budgets must be nonnegative")

    def local_budgets(self, num_nodes: int) -> np.ndarray:
        if self.rho is None:
            return np.full(num_nodes, INF)
        if self.rho.ndim == 0:
            return np.full(num_nodes, float(self.rho))
        if len(self.rho) != num_nodes:
            raise ValueError("rho length does not match the number of nodes")
        return self.rho

    def halve_structure_costs(self) -> "CostModel":
        """Unordered-edge reporting convention: each undirected edit costs
        one unit instead of two ordered-entry units."""
        return CostModel(self.cx_add, self.cx_del, self.ca_add / 2.0,
                         self.ca_del / 2.0, self.epsilon, self.rho)


@dataclass
class Permutation:
    """A bijection on {0..N-1}; acts on graphs via (PX, P A P^T)."""

    perm: np.ndarray

    def __post_init__(self):
        self.perm = np.asarray(self.perm, dtype=np.intp)
        if not np.array_equal(np.sort(self.perm), np.arange(len(self.perm))):
            raise ValueError("perm is not a bijection")

    def __len__(self):
        return len(self.perm)

    def inverse(self) -> "Permutation":
        inv = np.empty_like(self.perm)
        inv[self.perm] = np.arange(len(self.perm))
        return Permutation(inv)

    def compose(self, other: "Permutation") -> "Permutation":
        """Return p such that apply(p, g) == apply(self, apply(other, g))."""
        return Permutation(other.perm[self.perm])

    def matrix(self) -> np.ndarray:
        p = np.zeros((len(self.perm), len(self.perm)), dtype=np.int8)
        p[np.arange(len(self.perm)), self.perm] = 1
        return p

    @staticmethod
    def identity(n: int) -> "Permutation":
        return Permutation(np.arange(n))

    @staticmethod
    def random(n: int, rng: np.random.Generator) -> "Permutation":
        return Permutation(rng.permutation(n))


def _flip_cost(count: int, cost: float) -> float:
    # inf * 0 is nan, so guard the zero-count case explicitly
    if count == 0:
        return 0.0
    if math.isinf(cost):
        return INF
    return cost * count


def edit_cost(g: AttributedGraph, g2: AttributedGraph, cm: CostModel) -> float:
    """Weighted count of ordered bit flips turning g into g2.

    Returns inf as soon as any flip of an infinite-cost type is present.
    """
    if g.X.shape != g2.X.shape or g.A.shape != g2.A.shape:
        raise ValueError("graphs must share N and D")
    total = 0.0
    for m1, m2, c_add, c_del in (
        (g.X, g2.X, cm.cx_add, cm.cx_del),
        (g.A, g2.A, cm.ca_add, cm.ca_del),
    ):
        n_add = int(((m1 == 0) & (m2 == 1)).sum())
        n_del = int(((m1 == 1) & (m2 == 0)).sum())
        for count, cost in ((n_add, c_add), (n_del, c_del)):
            part = _flip_cost(count, cost)
            if math.isinf(part):
                return INF
            total += part
    return total


def apply_isomorphism(p: Permutation, g: AttributedGraph) -> AttributedGraph:
    """Relabel nodes: returns (PX, P A P^T)."""
    if len(p) != g.num_nodes:
        raise ValueError("permutation size does not match graph")
    perm = p.perm
    labels = g.labels
    if labels is not None and len(labels) == g.num_nodes:
        labels = labels[perm]
    return AttributedGraph(g.X[perm], g.A[perm][:, perm], g.undirected, labels)


def _pair_cost(a: int, b: int, c_add: float, c_del: float) -> float:
    if a == b:
        return 0.0
    return c_add if a == 0 else c_del


def ged_brute_force(g: AttributedGraph, g2: AttributedGraph, cm: CostModel,
                    node_cap: int = GED_NODE_CAP) -> float:
    """Exact action-induced distance: min over all N! relabelings of g2.

    Lexicographic depth-first search with early pruning on the partial cost
    of the already-assigned block. Oracle only; capped at `node_cap` nodes.
    """
    if g.X.shape != g2.X.shape or g.A.shape != g2.A.shape:
        raise ValueError("graphs must share N and D")
    n = g.num_nodes
    if n > node_cap:
        raise ValueError(f"brute-force GED capped at {node_cap} nodes")
    if n == 0:
        return 0.0

    # rowcost[k, v]: attribute cost of matching row k of g with row v of g2
    x1 = g.X[:, None, :]
    x2 = g2.X[None, :, :]
    n_add = ((x1 == 0) & (x2 == 1)).sum(axis=2)
    n_del = ((x1 == 1) & (x2 == 0)).sum(axis=2)
    rowcost = np.zeros((n, n))
    for k in range(n):
        for v in range(n):
            c = _flip_cost(int(n_add[k, v]), cm.cx_add)
            c += _flip_cost(int(n_del[k, v]), cm.cx_del)
            rowcost[k, v] = c

    a1, a2 = g.A, g2.A
    best = INF
    perm = np.empty(n, dtype=np.intp)
    used = np.zeros(n, dtype=bool)

    def extend(k: int, partial: float):
        nonlocal best
        if k == n:
            best = min(best, partial)
            return
        for v in range(n):
            if used[v]:
                continue
            cost = partial + rowcost[k, v]
            if cost >= best:
                continue
            # adjacency cost of the new row/column inside the assigned block
            for i in range(k):
                w = perm[i]
                cost += _pair_cost(a1[i, k], a2[w, v], cm.ca_add, cm.ca_del)
                cost += _pair_cost(a1[k, i], a2[v, w], cm.ca_add, cm.ca_del)
                if cost >= best:
                    break
            else:
                cost += _pair_cost(a1[k, k], a2[v, v], cm.ca_add, cm.ca_del)
                if cost < best:
                    used[v] = True
                    perm[k] = v
                    extend(k + 1, cost)
                    used[v] = False

    extend(0, 0.0)
    return best


def _row_flip_options(row: np.ndarray, c_add: float, c_del: float,
                      budget: float) -> list:
    """All (flip index tuple, cost) for one matrix row within `budget`."""
    addable = [int(j) for j in np.flatnonzero(row == 0)] if math.isfinite(c_add) else []
    deletable = [int(j) for j in np.flatnonzero(row == 1)] if math.isfinite(c_del) else []
    options = []
    max_add = len(addable)
    if c_add > 0:
        max_add = min(max_add, int(budget // c_add)) if math.isfinite(budget) else max_add
    for i in range(max_add + 1):
        budget_left = budget - (c_add * i if i else 0.0)
        if budget_left < 0:
            break
        max_del = len(deletable)
        if c_del > 0:
            max_del = min(max_del, int(budget_left // c_del)) if math.isfinite(budget_left) else max_del
        for j in range(max_del + 1):
            cost = (c_add * i if i else 0.0) + (c_del * j if j else 0.0)
            if cost > budget:
                continue
            for adds in itertools.combinations(addable, i):
                for dels in itertools.combinations(deletable, j):
                    options.append((adds + dels, cost))
    return options


def enumerate_perturbations(g: AttributedGraph, cm: CostModel, scope: str,
                            cap: int = ENUMERATION_CAP) -> Iterator[AttributedGraph]:
    """Yield every graph within the global and local budgets.

    `scope` selects which matrix is perturbed ("attributes" or "adjacency");
    the other matrix stays fixed. Budgets are interpreted exactly as in the
    certificate perturbation sets: global edit cost <= epsilon and per-row
    edit cost <= rho_n. Raises once more than `cap` graphs would be yielded.
    """
    if scope == "attributes":
        mat = g.X
        c_add, c_del = cm.cx_add, cm.cx_del
    elif scope == "adjacency":
        mat = g.A
        c_add, c_del = cm.ca_add, cm.ca_del
    else:
        raise ValueError("scope must be 'attributes' or 'adjacency'")

    n_rows = mat.shape[0]
    rho = cm.local_budgets(g.num_nodes)
    row_options = [
        _row_flip_options(mat[r], c_add, c_del, min(rho[r], cm.epsilon))
        for r in range(n_rows)
    ]

    count = 0
    chosen: list = [()] * n_rows

    def emit() -> AttributedGraph:
        out = mat.copy()
        for r, flips in enumerate(chosen):
            for j in flips:
                out[r, j] = 1 - out[r, j]
        if scope == "attributes":
            return AttributedGraph(out, g.A.copy(), g.undirected, g.labels)
        return AttributedGraph(g.X.copy(), out, undirected=False, labels=g.labels)

    def walk(r: int, budget: float) -> Iterator[AttributedGraph]:
        nonlocal count
        if r == n_rows:
            count += 1
            if count > cap:
                raise ValueError(f"perturbation enumeration exceeds cap of {cap}")
            yield emit()
            return
        for flips, cost in row_options[r]:
            if cost > budget:
                continue
            chosen[r] = flips
            yield from walk(r + 1, budget - cost)
        chosen[r] = ()

    yield from walk(0, cm.epsilon)


# ---------------------------------------------------------------------------
# JSON schema (bit-exact external contract)

def graph_to_json(g: AttributedGraph, fixed_edges=None) -> dict:
    edges = []
    seen = set()
    for i, j in zip(*np.nonzero(g.A)):
        i, j = int(i), int(j)
        if g.undirected:
            key = (min(i, j), max(i, j))
            if key in seen:
                continue
            seen.add(key)
        edges.append([i, j])
    doc = {
        "num_nodes": g.num_nodes,
        "num_features": g.num_features,
        "features": g.X.astype(int).tolist(),
        "edges": edges,
        "undirected": bool(g.undirected),
    }
    if g.labels is not None:
        doc["labels"] = g.labels.astype(int).tolist()
    if fixed_edges is not None:
        doc["fixed_edges"] = [[int(i), int(j)] for i, j in fixed_edges]
    return doc


def graph_from_json(doc: dict) -> AttributedGraph:
    try:
        n = int(doc["num_nodes"])
        d = int(doc["num_features"])
        features = doc["features"]
        edges = doc["edges"]
        undirected = bool(doc.get("undirected", False))
    except (KeyError, TypeError, ValueError) as exc:
        raise GraphSchemaError(f"malformed graph document: {exc}") from exc

    x = np.asarray(features)
    if x.shape != (n, d) or not np.isin(x, (0, 1)).all():
        raise GraphSchemaError("features must be a num_nodes x num_features 0/1 matrix")
    a = np.zeros((n, n), dtype=np.int8)
    for edge in edges:
        if len(edge) != 2:
            raise GraphSchemaError(f"bad edge entry {edge!r}")
        i, j = int(edge[0]), int(edge[1])
        if not (0 <= i < n and 0 <= j < n):
            raise GraphSchemaError(f"edge {edge!r} out of range")
        a[i, j] = 1
        if undirected:
            a[j, i] = 1
    labels = doc.get("labels")
    if labels is not None:
        labels = np.asarray(labels, dtype=np.int64)
        if labels.ndim != 1 or len(labels) not in (n, 1):
            raise GraphSchemaError("labels must be per-node or a single graph label")
    try:
        return AttributedGraph(x, a, undirected, labels)
    except ValueError as exc:
        raise GraphSchemaError(str(exc)) from exc


def load_graph(path: str):
    """Load a graph from a JSON file; returns (graph, fixed_edges)."""
    with open(path) as fh:
        doc = json.load(fh)
    g = graph_from_json(doc)
    fixed = [(int(i), int(j)) for i, j in doc.get("fixed_edges", [])]
    return g, fixed


def save_graph(g: AttributedGraph, path: str, fixed_edges=None):
    with open(path, "w") as fh:
        json.dump(graph_to_json(g, fixed_edges), fh)
        fh.write("\n")
