"""
DAG families for poset-Markov channels.

A family generates nested finite instances V_1 ⊂ V_2 ⊂ ... of an infinite
DAG: the directed line, the quadrant of the 2D lattice, the rooted binary
tree, or explicit per-scale data read from a custom family file. Instances
carry ordered parent tuples, boundary sets, and the subset-equivalence
structure used to build marginal-equality constraints.
"""

from __future__ import annotations

import itertools
import json
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import (Any, Dict, FrozenSet, Hashable, Iterator, List, Mapping,
                    Optional, Sequence, Tuple)

import networkx as nx

from .config import EQUIV_SEARCH_SCALE
from .errors import (BadParameter, BadSubset, MalformedFile, NotADag,
                     SearchInconclusive, UnsupportedScale)

logger = logging.getLogger(__name__)

NodeId = Hashable
Subset = Tuple[int, ...]


class FamilyKind(str, Enum):
    LINE = "line"
    GRID2D = "grid2d"
    BINARY_TREE = "binary_tree"
    CUSTOM = "custom"


@dataclass(frozen=True)
class CustomInstance:
    """Explicit node/edge data for one scale of a custom family."""

    nodes: Tuple[int, ...]
    initial: Tuple[int, ...]
    edges: Tuple[Tuple[int, int], ...]
    parent_order: Mapping[int, Tuple[int, ...]]


@dataclass(frozen=True)
class DagFamily:
    kind: FamilyKind
    d: int
    generators: Tuple[Any, ...]
    instances: Mapping[int, CustomInstance] = field(default_factory=dict, hash=False)
    name: str = ""

    @property
    def is_lattice(self) -> bool:
        return self.kind in (FamilyKind.LINE, FamilyKind.GRID2D)

    @property
    def out_degree(self) -> int:
        """Out-degree of every node of the infinite graph."""
        return self.d if self.kind == FamilyKind.CUSTOM else len(self.generators)

    @classmethod
    def line(cls) -> "DagFamily":
        return cls(FamilyKind.LINE, 1, ((1,),), name="line")

    @classmethod
    def grid2d(cls) -> "DagFamily":
        # parent coordinate 1 is (i-1, j), coordinate 2 is (i, j-1)
        return cls(FamilyKind.GRID2D, 2, ((1, 0), (0, 1)), name="grid2d")

    @classmethod
    def binary_tree(cls) -> "DagFamily":
        return cls(FamilyKind.BINARY_TREE, 1, ("0", "1"), name="binary-tree")

    @classmethod
    def custom(cls, d: int, instances: Mapping[int, CustomInstance], name: str = "custom") -> "DagFamily":
        return cls(FamilyKind.CUSTOM, int(d), tuple(range(1, int(d) + 1)), dict(instances), name=name)


@dataclass(frozen=True, eq=False)
class InstanceGraph:
    n: int
    graph: nx.DiGraph
    nodes: Tuple[NodeId, ...]
    communication: Tuple[NodeId, ...]
    initial: Tuple[NodeId, ...]
    parents: Dict[NodeId, Tuple[NodeId, ...]]
    labelled_parents: Dict[NodeId, Tuple[Optional[NodeId], ...]]
    boundary: FrozenSet[NodeId]

    def children(self, v: NodeId) -> List[NodeId]:
        return [u for u in self.communication if v in self.parents[u]]


@dataclass(frozen=True)
class SubsetEquivalence:
    """Partition of the ordered subsets of [index_count] into classes."""

    index_count: int
    classes: Tuple[FrozenSet[Subset], ...]
    inconclusive: Tuple[Tuple[Subset, Subset], ...] = ()
    scale: Optional[int] = None

    def class_of(self, subset: Sequence[int]) -> FrozenSet[Subset]:
        subset = tuple(subset)
        for cls in self.classes:
            if subset in cls:
                return cls
        raise BadSubset(f"{subset} is not an ordered subset of [{self.index_count}]")

    def equivalent(self, s: Sequence[int], t: Sequence[int]) -> bool:
        return tuple(t) in self.class_of(s)

    def pairs(self) -> Iterator[Tuple[Subset, Subset]]:
        """(S, representative) for every S that is not its class representative."""
        for cls in self.classes:
            rep = representative(cls)
            for s in sorted(cls, key=_subset_key):
                if s != rep:
                    yield s, rep


def _subset_key(s: Subset) -> Tuple[int, Subset]:
    return (len(s), s)


def representative(cls) -> Subset:
    return min(cls, key=_subset_key)


def ordered_subsets(m: int) -> List[Subset]:
    """All non-empty ordered subsets of distinct indices in [m]."""
    out: List[Subset] = []
    for k in range(1, m + 1):
        out.extend(itertools.permutations(range(1, m + 1), k))
    return out


# Instances ---------------------------------------------------------------

def instance(family: DagFamily, n: int) -> InstanceGraph:
    if int(n) < 1:
        raise BadParameter(f"scale must be at least 1, got {n}")
    n = int(n)
    if family.kind == FamilyKind.LINE:
        nodes = list(range(n + 1))
        initial = [0]
        parents = {t: (t - 1,) for t in range(1, n + 1)}
        labelled = dict(parents)
    elif family.kind == FamilyKind.GRID2D:
        nodes = [(i, j) for i in range(n + 1) for j in range(n + 1)]
        initial = [v for v in nodes if v[0] == 0 or v[1] == 0]
        parents = {
            (i, j): tuple((i - g[0], j - g[1]) for g in family.generators)
            for i in range(1, n + 1)
            for j in range(1, n + 1)
        }
        labelled = dict(parents)
    elif family.kind == FamilyKind.BINARY_TREE:
        nodes = [""] + [
            "".join(bits) for k in range(1, n + 1) for bits in itertools.product("01", repeat=k)
        ]
        initial = [""]
        parents = {w: (w[:-1],) for w in nodes if w}
        labelled = {
            w: tuple(w[:-1] if w[-1] == g else None for g in family.generators)
            for w in nodes
            if w
        }
    else:
        return _custom_instance(family, n)

    node_set = set(nodes)
    graph = nx.DiGraph()
    graph.add_nodes_from(nodes)
    if family.is_lattice:
        # induced subgraph of the Cayley graph
        for v in nodes:
            for g in family.generators:
                src = _lattice_sub(v, g)
                if src in node_set:
                    graph.add_edge(src, v)
    else:
        for v, pa in parents.items():
            for p in pa:
                graph.add_edge(p, v)
    communication = [v for v in nodes if v in parents]
    return _finish(family, n, graph, nodes, communication, initial, parents, labelled)


def _lattice_sub(v, g):
    if isinstance(v, tuple):
        return tuple(a - b for a, b in zip(v, g))
    return v - g[0]


def _custom_instance(family: DagFamily, n: int) -> InstanceGraph:
    data = family.instances.get(n)
    if data is None:
        raise UnsupportedScale(f"custom family {family.name!r} has no instance at n={n}")
    nodes = list(data.nodes)
    node_set = set(nodes)
    initial = list(data.initial)
    initial_set = set(initial)
    if not initial_set <= node_set:
        raise MalformedFile(f"initial nodes at n={n} are not all listed as nodes")
    communication = [v for v in nodes if v not in initial_set]
    parents: Dict[NodeId, Tuple[NodeId, ...]] = {}
    for v in communication:
        pa = tuple(data.parent_order.get(v, ()))
        if len(pa) != family.d:
            raise MalformedFile(f"node {v} at n={n} has {len(pa)} ordered parents, expected {family.d}")
        if not set(pa) <= node_set:
            raise MalformedFile(f"node {v} at n={n} has parents outside V_n")
        parents[v] = pa
    graph = nx.DiGraph()
    graph.add_nodes_from(nodes)
    for u, v in data.edges:
        if u not in node_set or v not in node_set:
            raise MalformedFile(f"edge ({u}, {v}) at n={n} leaves V_n")
        if v in initial_set and u not in initial_set:
            raise MalformedFile(f"edge ({u}, {v}) at n={n} points from a communication node into an initial node")
        graph.add_edge(u, v)
    for v, pa in parents.items():
        missing = [p for p in pa if not graph.has_edge(p, v)]
        if missing:
            raise MalformedFile(f"parents {missing} of node {v} at n={n} have no edge")
    return _finish(family, n, graph, nodes, communication, initial, parents, dict(parents))


def _finish(family, n, graph, nodes, communication, initial, parents, labelled) -> InstanceGraph:
    boundary = frozenset(
        v
        for v in nodes
        if graph.in_degree(v) < family.d or graph.out_degree(v) < family.out_degree
    )
    return InstanceGraph(
        n=n,
        graph=graph,
        nodes=tuple(nodes),
        communication=tuple(communication),
        initial=tuple(initial),
        parents=parents,
        labelled_parents=labelled,
        boundary=boundary,
    )


def boundary_fraction(family: DagFamily, n: int) -> float:
    inst = instance(family, n)
    return float(Fraction(len(inst.boundary), len(inst.nodes)))


def boundary_slack(family: DagFamily, n: int) -> Tuple[float, float]:
    """Averaging slack 4|B_n| normalized by |V_n| and by |C_n|."""
    inst = instance(family, n)
    b = len(inst.boundary)
    return 4.0 * b / len(inst.nodes), 4.0 * b / len(inst.communication)


# Subset equivalence ------------------------------------------------------

def equiv_classes(
    family: DagFamily,
    scale: int = EQUIV_SEARCH_SCALE,
    method: Optional[str] = None,
    strict: bool = False,
) -> SubsetEquivalence:
    """
    Equivalence classes of ordered parent subsets.

    Lattice families use the generator-difference rule. Other families (and
    any family with method="witness") search for witness node pairs in the
    instance at `scale`; a pair without witness is recorded as inconclusive,
    and raises SearchInconclusive when strict is set for custom families.
    """
    method = method or ("lattice" if family.is_lattice else "witness")
    m = len(family.generators)
    if method == "lattice":
        if not family.is_lattice:
            raise BadParameter(f"lattice rule does not apply to {family.kind.value}")
        return _lattice_classes(family)
    if method != "witness":
        raise BadParameter(f"unknown equivalence method {method!r}")
    return witness_classes(instance(family, scale), m, custom=family.kind == FamilyKind.CUSTOM, strict=strict)


def _lattice_classes(family: DagFamily) -> SubsetEquivalence:
    gens = [_as_vector(g) for g in family.generators]
    groups: Dict[Any, set] = {}
    for s in ordered_subsets(len(gens)):
        # classes are keyed by (length, common difference) relative to
        # the identity ordering of the same length
        groups.setdefault(len(s), set()).add(s)
    classes: List[FrozenSet[Subset]] = []
    for k, subsets in sorted(groups.items()):
        remaining = sorted(subsets)
        while remaining:
            s = remaining.pop(0)
            cls = {s}
            for t in list(remaining):
                diffs = {
                    tuple(a - b for a, b in zip(gens[i - 1], gens[j - 1]))
                    for i, j in zip(s, t)
                }
                if len(diffs) == 1:
                    cls.add(t)
                    remaining.remove(t)
            classes.append(frozenset(cls))
    return SubsetEquivalence(len(gens), tuple(sorted(classes, key=lambda c: _subset_key(representative(c)))))


def _as_vector(g) -> Tuple[int, ...]:
    return tuple(g) if isinstance(g, (tuple, list)) else (g,)


def witness_classes(
    inst: InstanceGraph, index_count: int, custom: bool = True, strict: bool = False
) -> SubsetEquivalence:
    """Classes from witness pairs (u, v) with pa_S(u) = pa_T(v) in one instance."""
    subsets = ordered_subsets(index_count)
    parent: Dict[Subset, Subset] = {s: s for s in subsets}

    def find(s):
        while parent[s] != s:
            parent[s] = parent[parent[s]]
            s = parent[s]
        return s

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            lo, hi = sorted((ra, rb), key=_subset_key)
            parent[hi] = lo

    seen: Dict[Tuple[NodeId, ...], Subset] = {}
    for v in inst.communication:
        pa = inst.labelled_parents.get(v)
        if pa is None or len(pa) != index_count or any(p is None for p in pa):
            continue
        for s in subsets:
            key = tuple(pa[i - 1] for i in s)
            if key in seen:
                union(seen[key], s)
            else:
                seen[key] = s

    grouped: Dict[Subset, set] = {}
    for s in subsets:
        grouped.setdefault(find(s), set()).add(s)
    classes = tuple(sorted((frozenset(c) for c in grouped.values()), key=lambda c: _subset_key(representative(c))))

    inconclusive: List[Tuple[Subset, Subset]] = []
    if custom:
        for a, b in itertools.combinations(subsets, 2):
            if len(a) == len(b) and find(a) != find(b):
                inconclusive.append((a, b))
        if inconclusive:
            logger.info(
                f"{len(inconclusive)} subset pairs not equivalent at scale n={inst.n} (no witness found)"
            )
            if strict:
                raise SearchInconclusive(
                    f"no witness for {len(inconclusive)} subset pairs at scale n={inst.n}"
                )
    return SubsetEquivalence(index_count, classes, tuple(inconclusive), scale=inst.n)


# Approximate symmetry ----------------------------------------------------

@dataclass
class ScaleCheck:
    n: int
    in_degree_histogram: Dict[int, int]
    acyclic: bool
    full_parent_tuples: bool
    boundary_fraction: float


@dataclass
class SymmetryReport:
    family: str
    d: int
    scales: List[ScaleCheck]
    trend: str
    in_degree_ok: bool
    cayley_ok: bool
    kernel_d_ok: Optional[bool] = None
    kernel_positive: Optional[bool] = None

    @property
    def fractions(self) -> List[float]:
        return [s.boundary_fraction for s in self.scales]


def validate_approx_symmetry(family: DagFamily, n_max: int, kernel=None) -> SymmetryReport:
    """
    Check the approximate-symmetry conditions on instances n = 1..n_max.

    The boundary trend is a two-point heuristic: vanishing-consistent iff the
    fraction at n_max is below both the fraction at ceil(n_max/2) and 0.5.
    """
    if int(n_max) < 2:
        raise BadParameter(f"n_max must be at least 2, got {n_max}")
    scales: List[ScaleCheck] = []
    for n in range(1, int(n_max) + 1):
        inst = instance(family, n)
        if not nx.is_directed_acyclic_graph(inst.graph):
            cycle = nx.find_cycle(inst.graph)
            raise NotADag(f"instance n={n} of {family.name} has a cycle", cycle=cycle)
        hist = Counter(inst.graph.in_degree(v) for v in inst.communication)
        full = all(
            all(p is not None for p in inst.labelled_parents[v])
            and len(inst.labelled_parents[v]) == len(family.generators)
            for v in inst.communication
        )
        scales.append(
            ScaleCheck(
                n=n,
                in_degree_histogram=dict(sorted(hist.items())),
                acyclic=True,
                full_parent_tuples=full,
                boundary_fraction=float(Fraction(len(inst.boundary), len(inst.nodes))),
            )
        )
    last = scales[-1].boundary_fraction
    half = scales[math.ceil(int(n_max) / 2) - 1].boundary_fraction
    trend = "vanishing-consistent" if last < half and last < 0.5 else "non-vanishing"
    report = SymmetryReport(
        family=family.name,
        d=family.d,
        scales=scales,
        trend=trend,
        in_degree_ok=all(set(s.in_degree_histogram) <= {family.d} for s in scales),
        cayley_ok=all(s.full_parent_tuples for s in scales),
    )
    if kernel is not None:
        report.kernel_d_ok = kernel.d == family.d
        report.kernel_positive = kernel.is_strictly_positive
    logger.info(f"{family.name}: boundary fraction {last:.6f} at n={n_max}, trend {trend}")
    return report


# Custom family files -----------------------------------------------------

def to_custom_instance(inst: InstanceGraph) -> CustomInstance:
    """Relabel an instance with integer ids (position in node order)."""
    index = {v: i for i, v in enumerate(inst.nodes)}
    return CustomInstance(
        nodes=tuple(range(len(inst.nodes))),
        initial=tuple(index[v] for v in inst.initial),
        edges=tuple((index[u], index[v]) for u, v in inst.graph.edges()),
        parent_order={index[v]: tuple(index[p] for p in pa) for v, pa in inst.parents.items()},
    )


def family_to_record(family: DagFamily) -> Dict[str, Any]:
    return {
        "name": family.name,
        "d": family.d,
        "instances": {
            str(n): {
                "nodes": list(ci.nodes),
                "initial": list(ci.initial),
                "edges": [list(e) for e in ci.edges],
                "parent_order": {str(v): list(pa) for v, pa in sorted(ci.parent_order.items())},
            }
            for n, ci in sorted(family.instances.items())
        },
    }


def family_from_record(rec: Dict[str, Any]) -> DagFamily:
    try:
        d = int(rec["d"])
        instances = {}
        for key, data in rec["instances"].items():
            order = data["parent_order"]
            if isinstance(order, dict):
                pairs = [(int(v), pa) for v, pa in order.items()]
            else:
                pairs = [(int(v), pa) for v, pa in order]
            instances[int(key)] = CustomInstance(
                nodes=tuple(int(v) for v in data["nodes"]),
                initial=tuple(int(v) for v in data["initial"]),
                edges=tuple((int(u), int(v)) for u, v in data["edges"]),
                parent_order={v: tuple(int(p) for p in pa) for v, pa in pairs},
            )
    except (KeyError, TypeError, ValueError, AttributeError) as e:
        raise MalformedFile(f"bad custom family record: {e}") from e
    return DagFamily.custom(d, instances, name=str(rec.get("name") or "custom"))


def load_custom_family(path: str) -> DagFamily:
    try:
        with open(path, "r", encoding="utf-8") as f:
            rec = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise MalformedFile(f"cannot read family file {path}: {e}") from e
    return family_from_record(rec)


def save_custom_family(family: DagFamily, path: str) -> str:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(family_to_record(family), f, indent=2)
    return path


BUILTIN_FAMILIES = {
    "line": DagFamily.line,
    "grid2d": DagFamily.grid2d,
    "binary-tree": DagFamily.binary_tree,
}


def get_family(selector: str) -> DagFamily:
    if selector.startswith("file:"):
        return load_custom_family(selector[len("file:"):])
    try:
        return BUILTIN_FAMILIES[selector]()
    except KeyError:
        raise BadParameter(
            f"unknown family {selector!r}; choose from {', '.join(BUILTIN_FAMILIES)} or file:<path>"
        ) from None
