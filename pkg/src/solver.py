"""
Single-letter and finite-n capacity bounds.

Feasible sets are equality-constrained products of probability simplices
(`Polytope`); the concave conditional-mutual-information objectives are
maximized over them by Frank–Wolfe with a dense-simplex linear oracle. Every
report carries the Frank–Wolfe gap, a certified bound on suboptimality.
"""

from __future__ import annotations

import itertools
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .channel import (Alphabet, Dist, JointDist, Kernel, conditional_mi_array,
                      decode_context, grad_conditional_mi_array)
from .config import (CONSTRAINT_TOL, DEFAULT_MAX_ITERS, DEFAULT_TOL,
                     FEASIBILITY_TOL, LINE_SEARCH_TOL,
                     MAX_RELAXATION_VARIABLES)
from .errors import (BadParameter, OracleFailure, ScaleTooLarge,
                     ShapeMismatch)
from .poset_dag import (DagFamily, SubsetEquivalence, instance,
                        ordered_subsets)
from .simplex import DenseSimplex, independent_rows

logger = logging.getLogger(__name__)

# Line-search brackets shrink by this factor when no step improves.
BACKTRACK_FACTOR = 1e-3
MIN_STEP = 1e-18
# A context counts as emptied when a step cuts its mass below this fraction.
EMPTY_CONTEXT_RATIO = 1e-9
LOG_EVERY = 1000

Objective = Callable[[np.ndarray], float]
Gradient = Callable[[np.ndarray], np.ndarray]


@dataclass
class Polytope:
    """
    {p ∈ Δ^blocks : rows · p = rhs}: num_blocks simplices over X × Y^d.

    The block normalizations are implicit; `rows` holds the remaining
    equality constraints after rank filtering.
    """

    alphabet: Alphabet
    d: int
    num_blocks: int
    rows: np.ndarray
    rhs: np.ndarray
    labels: List[str] = field(default_factory=list)

    @property
    def block_size(self) -> int:
        return self.alphabet.x_size * self.alphabet.num_contexts(self.d)

    @property
    def dimension(self) -> int:
        return self.num_blocks * self.block_size

    @property
    def constraints(self) -> List[Tuple[Dict[int, float], float]]:
        """Equality rows as (sparse coefficient row, right-hand value)."""
        out = []
        for row, value in zip(self.rows, self.rhs):
            nz = np.flatnonzero(row)
            out.append(({int(j): float(row[j]) for j in nz}, float(value)))
        return out

    def block_sums(self) -> np.ndarray:
        A = np.zeros((self.num_blocks, self.dimension))
        for b in range(self.num_blocks):
            A[b, b * self.block_size : (b + 1) * self.block_size] = 1.0
        return A

    def equality_system(self) -> Tuple[np.ndarray, np.ndarray]:
        A = np.vstack([self.block_sums(), self.rows.reshape(-1, self.dimension)])
        b = np.concatenate([np.ones(self.num_blocks), self.rhs])
        return A, b

    def residual(self, point: np.ndarray) -> float:
        A, b = self.equality_system()
        flat = np.asarray(point, dtype=float).reshape(-1)
        return float(max(np.max(np.abs(A @ flat - b)), -np.min(flat), 0.0))


@dataclass
class SolveReport:
    value: float
    argmax: Union[JointDist, Tuple[JointDist, ...]]
    fw_gap: float
    iterations: int
    converged: bool
    upper_bound: float = math.inf
    history: List[Tuple[int, float, float]] = field(default_factory=list)
    nodes: Tuple = ()
    wall_time_ms: float = 0.0

    def as_dict(self) -> Dict:
        return {
            "value": self.value,
            "fw_gap": self.fw_gap,
            "iterations": self.iterations,
            "converged": self.converged,
            "upper_bound": self.upper_bound,
            "wall_time_ms": self.wall_time_ms,
        }


@dataclass
class FeasibleStart:
    """Starting point as a convex combination of polytope vertices."""

    point: np.ndarray
    vertices: List[np.ndarray]
    weights: np.ndarray
    lp: DenseSimplex


# Polytope construction ---------------------------------------------------

def _context_digits(y_size: int, d: int) -> np.ndarray:
    return np.array(
        [decode_context(c, y_size, d) for c in range(y_size ** d)], dtype=int
    ).reshape(-1, d)


def _filter(poly: Polytope) -> Polytope:
    """Drop rank-redundant rows; normalization rows are scanned first."""
    if poly.rows.size == 0:
        poly.rows = np.zeros((0, poly.dimension))
        poly.rhs = np.zeros(0)
        return poly
    A, b = poly.equality_system()
    keep = [i - poly.num_blocks for i in independent_rows(A, b) if i >= poly.num_blocks]
    dropped = poly.rows.shape[0] - len(keep)
    poly.rows = poly.rows[keep]
    poly.rhs = poly.rhs[keep]
    if poly.labels:
        poly.labels = [poly.labels[i] for i in keep]
    logger.debug(f"kept {len(keep)} equality rows, dropped {dropped} redundant ones")
    return poly


def restrict_equivalence(eq: SubsetEquivalence, d: int) -> SubsetEquivalence:
    """Classes over subsets of [d] only (drops subsets using larger indices)."""
    if eq.index_count < d:
        raise ShapeMismatch(f"equivalence over [{eq.index_count}] cannot describe d={d} parents")
    if eq.index_count == d:
        return eq
    allowed = set(ordered_subsets(d))
    classes = tuple(
        frozenset(s for s in cls if s in allowed) for cls in eq.classes
    )
    return SubsetEquivalence(d, tuple(c for c in classes if c), scale=eq.scale)


def trivial_equivalence(d: int) -> SubsetEquivalence:
    """Only reflexive classes."""
    return SubsetEquivalence(d, tuple(frozenset([s]) for s in ordered_subsets(d)))


def build_single_letter_polytope(k: Kernel, eq: Optional[SubsetEquivalence] = None) -> Polytope:
    """Stationarity rows P_Y = P_{Y′_i} plus marginal equalities P_{Y′_S} = P_{Y′_T}."""
    d = k.d
    eq = restrict_equivalence(eq if eq is not None else trivial_equivalence(d), d)
    X, Y = k.alphabet.x_size, k.alphabet.y_size
    digits = _context_digits(Y, d)
    rows: List[np.ndarray] = []
    labels: List[str] = []
    for i in range(d):
        for y in range(Y):
            coef = k.table[:, :, y] - (digits[:, i] == y)[None, :]
            rows.append(coef.reshape(-1))
            labels.append(f"P_Y({y}) = P_Y'{i + 1}({y})")
    for s, rep in eq.pairs():
        for ybar in itertools.product(range(Y), repeat=len(s)):
            ind_s = np.all(digits[:, [j - 1 for j in s]] == ybar, axis=1)
            ind_t = np.all(digits[:, [j - 1 for j in rep]] == ybar, axis=1)
            coef = np.broadcast_to((ind_s.astype(float) - ind_t)[None, :], (X, len(digits)))
            rows.append(coef.reshape(-1))
            labels.append(f"P_Y'{s}{ybar} = P_Y'{rep}{ybar}")
    poly = Polytope(
        alphabet=k.alphabet,
        d=d,
        num_blocks=1,
        rows=np.array(rows, dtype=float).reshape(len(rows), X * len(digits)),
        rhs=np.zeros(len(rows)),
        labels=labels,
    )
    return _filter(poly)


# Feasibility and the linear oracle ---------------------------------------

def _start(poly: Polytope) -> FeasibleStart:
    A, b = poly.equality_system()
    lp = DenseSimplex(A, b)
    dim = poly.dimension
    vertices: List[np.ndarray] = []
    covered = np.zeros(dim, dtype=bool)
    # one maximizer per coordinate not yet positive in an earlier vertex, so
    # the average lies in the relative interior
    for j in range(dim):
        if covered[j]:
            continue
        c = np.zeros(dim)
        c[j] = 1.0
        v = lp.maximize(c)
        covered[j] = True
        if v[j] <= CONSTRAINT_TOL:
            continue
        covered |= v > CONSTRAINT_TOL
        vertices.append(v)
    if not vertices:
        vertices.append(lp.maximize(np.zeros(dim)))
    weights = np.full(len(vertices), 1.0 / len(vertices))
    point = weights @ np.array(vertices)
    return FeasibleStart(point, vertices, weights, lp)


def _to_joints(poly: Polytope, flat: np.ndarray) -> Tuple[JointDist, ...]:
    blocks = np.maximum(flat, 0.0).reshape(poly.num_blocks, poly.alphabet.x_size, -1)
    return tuple(JointDist(poly.alphabet, poly.d, b / b.sum()) for b in blocks)


def find_feasible(poly: Polytope) -> Union[JointDist, Tuple[JointDist, ...]]:
    """
    A feasible point via phase 1, averaged over the maximizers of each
    coordinate (the uniform point for an unconstrained simplex).

    Returns one JointDist for a single-block polytope, else one per block.
    Raises Infeasible when the phase-1 violation exceeds 1e-8.
    """
    joints = _to_joints(poly, _start(poly).point)
    return joints[0] if poly.num_blocks == 1 else joints


def linear_max_oracle(g: np.ndarray, poly: Polytope, lp: Optional[DenseSimplex] = None) -> np.ndarray:
    """Vertex maximizing ⟨g, p⟩ over the polytope (flat array)."""
    if lp is None:
        A, b = poly.equality_system()
        lp = DenseSimplex(A, b)
    s = lp.maximize(np.asarray(g, dtype=float).reshape(-1))
    violation = poly.residual(s)
    if violation > FEASIBILITY_TOL:
        raise OracleFailure(f"oracle vertex violates constraints by {violation:.3e}")
    return s


# Frank–Wolfe -------------------------------------------------------------

def _golden(phi: Callable[[float], float], hi: float, tol: float) -> Tuple[float, float]:
    ratio = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = 0.0, hi
    c = b - ratio * (b - a)
    e = a + ratio * (b - a)
    fc, fe = phi(c), phi(e)
    while b - a > tol:
        if fc < fe:
            a, c, fc = c, e, fe
            e = a + ratio * (b - a)
            fe = phi(e)
        else:
            b, e, fe = e, c, fc
            c = b - ratio * (b - a)
            fc = phi(c)
    mid = (a + b) / 2.0
    return max((hi, phi(hi)), (mid, phi(mid)), key=lambda t: t[1])


def golden_section_max(phi: Callable[[float], float], hi: float, tol: float = LINE_SEARCH_TOL) -> float:
    """
    Maximizer of a concave function on [0, hi], with tol relative to hi.

    When nothing in the bracket beats phi(0) the bracket shrinks by
    BACKTRACK_FACTOR until it is below MIN_STEP, and 0 is returned.
    """
    if hi <= 0.0:
        return 0.0
    base = phi(0.0)
    while hi > MIN_STEP:
        t, value = _golden(phi, hi, tol * hi)
        if value > base:
            return t
        hi *= BACKTRACK_FACTOR
    return 0.0


def _context_mass(poly: Polytope, x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0).reshape(poly.num_blocks, poly.alphabet.x_size, -1).sum(axis=1)


def _empties_context(poly: Polytope, before: np.ndarray, after: np.ndarray) -> bool:
    old, new = _context_mass(poly, before), _context_mass(poly, after)
    return bool(np.any((old > 0.0) & (new <= EMPTY_CONTEXT_RATIO * old)))


def frank_wolfe_max(
    f: Objective,
    grad: Gradient,
    poly: Polytope,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    start: Optional[np.ndarray] = None,
    variant: str = "away",
) -> SolveReport:
    """
    Maximize a concave f over the polytope.

    Each iteration calls the linear oracle at ∇f(p); the gap ⟨∇f(p), s − p⟩
    bounds f* − f(p). With variant="away" (default) the step may instead move
    away from the worst active vertex; variant="vanilla" is the plain update.
    Stops when the gap is at most tol, returning that iterate, or after
    max_iters, returning the best iterate seen.

    A step never empties a context block that holds mass: at such points the
    objective is not differentiable and the gradient only bounds it from above.
    Steps that would do so are halved.
    """
    if variant not in ("away", "vanilla"):
        raise BadParameter(f"unknown Frank-Wolfe variant {variant!r}")
    started = time.perf_counter()
    init = _start(poly)
    lp = init.lp
    if start is None:
        x = init.point.copy()
        atoms = [v.copy() for v in init.vertices]
        weights = init.weights.copy()
    else:
        x = np.asarray(start, dtype=float).reshape(-1).copy()
        if poly.residual(x) > CONSTRAINT_TOL * 100:
            raise BadParameter("start point is not feasible")
        atoms, weights = [x.copy()], np.ones(1)

    fx = f(x)
    best_x, best_f = x.copy(), fx
    upper = math.inf
    gap = math.inf
    history: List[Tuple[int, float, float]] = []
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        g = grad(x)
        s = linear_max_oracle(g, poly, lp)
        gap = max(float(g @ (s - x)), 0.0)
        upper = min(upper, fx + gap)
        if it == 1 or it % LOG_EVERY == 0:
            history.append((it, fx, gap))
            logger.debug(f"iteration {it}: value {fx:.12f} gap {gap:.3e}")
        if gap <= tol:
            converged = True
            best_x, best_f = x.copy(), fx
            break

        away = None
        if variant == "away" and len(atoms) > 1:
            scores = np.array([g @ a for a in atoms])
            away = int(np.argmin(scores))
            if float(g @ x - scores[away]) <= gap or weights[away] >= 1.0:
                away = None

        gamma = 0.0
        if away is not None:
            direction = x - atoms[away]
            gamma_max = weights[away] / (1.0 - weights[away])
            gamma = _step(f, poly, x, direction, gamma_max)
            if gamma > 0.0:
                drop = gamma >= gamma_max * (1.0 - 1e-12)
                weights = weights * (1.0 + gamma)
                weights[away] = 0.0 if drop else weights[away] - gamma
                keep = weights > 0.0
                atoms = [a for a, kept in zip(atoms, keep) if kept]
                weights = weights[keep] / weights[keep].sum()
                # x stays the exact combination of its atoms
                x = weights @ np.array(atoms) if drop else x + gamma * direction
        if gamma == 0.0:
            direction = s - x
            gamma = _step(f, poly, x, direction, 1.0)
            if gamma == 0.0:
                logger.warning(
                    f"Frank-Wolfe found no ascent at iteration {it} with gap {gap:.3e}"
                )
                break
            if gamma >= 1.0:
                atoms, weights = [s.copy()], np.ones(1)
                x = s.copy()
            else:
                weights = weights * (1.0 - gamma)
                key = s.tobytes()
                match = next((i for i, a in enumerate(atoms) if a.tobytes() == key), None)
                if match is None:
                    atoms.append(s.copy())
                    weights = np.append(weights, gamma)
                else:
                    weights[match] += gamma
                x = x + gamma * direction

        fx = f(x)
        if fx > best_f:
            best_x, best_f = x.copy(), fx

    if not converged:
        x, fx = best_x, best_f
        g = grad(x)
        gap = max(float(g @ (linear_max_oracle(g, poly, lp) - x)), 0.0)
        upper = min(upper, fx + gap)
    history.append((it, fx, gap))
    joints = _to_joints(poly, x)
    elapsed = (time.perf_counter() - started) * 1000.0
    logger.info(
        f"Frank-Wolfe finished: value {fx:.9f} bits, gap {gap:.2e}, {it} iterations"
        + ("" if converged else " (not converged)")
    )
    return SolveReport(
        value=float(fx),
        argmax=joints[0] if poly.num_blocks == 1 else joints,
        fw_gap=float(gap),
        iterations=it,
        converged=converged,
        upper_bound=float(upper),
        history=history,
        wall_time_ms=elapsed,
    )


def _step(f: Objective, poly: Polytope, x: np.ndarray, direction: np.ndarray, hi: float) -> float:
    gamma = golden_section_max(lambda t: f(x + t * direction), hi)
    if gamma > 0.0 and _empties_context(poly, x, x + gamma * direction):
        gamma *= 0.5
    return gamma


def mi_objective(poly: Polytope, table: np.ndarray) -> Tuple[Objective, Gradient]:
    """Mean conditional mutual information over the blocks, and its gradient."""
    shape = (poly.num_blocks, poly.alphabet.x_size, poly.alphabet.num_contexts(poly.d))
    scale = 1.0 / poly.num_blocks

    def f(flat: np.ndarray) -> float:
        p = np.maximum(flat, 0.0).reshape(shape)
        return float(scale * np.sum(conditional_mi_array(p, table)))

    def grad(flat: np.ndarray) -> np.ndarray:
        p = np.maximum(flat, 0.0).reshape(shape)
        return scale * grad_conditional_mi_array(p, table).reshape(-1)

    return f, grad


# Blahut–Arimoto and the myopic bound --------------------------------------

def blahut_arimoto(dmc, tol: float = 1e-9, max_iters: int = 100_000) -> float:
    """
    Capacity in bits of a DMC given as a |Y|×|X| column-stochastic matrix.

    Stops when the upper estimate max_x D(W(·|x)‖q) and the lower estimate
    log2 Σ_x r(x) 2^{D_x} are within tol.
    """
    W = np.asarray(dmc, dtype=float)
    if W.ndim != 2 or np.any(W < 0) or np.max(np.abs(W.sum(axis=0) - 1.0)) > 1e-9:
        raise BadParameter("DMC must be a nonnegative column-stochastic |Y|×|X| matrix")
    num_x = W.shape[1]
    r = np.full(num_x, 1.0 / num_x)
    positive = W > 0
    log_w = np.log2(W, out=np.zeros_like(W), where=positive)
    lower = 0.0
    for _ in range(max_iters):
        q = W @ r
        log_q = np.log2(q, out=np.zeros_like(q), where=q > 0)
        div = np.sum(W * (log_w - log_q[:, None]), axis=0)
        lower = float(np.log2(np.sum(r * np.exp2(div))))
        upper = float(np.max(div))
        if upper - lower < tol:
            break
        r = r * np.exp2(div)
        r /= r.sum()
    return max(lower, 0.0)


def myopic_bound(k: Kernel) -> float:
    """max over contexts ȳ′ of the DMC capacity of k(·|·, ȳ′)."""
    capacities = [blahut_arimoto(k.table[:, c, :].T) for c in range(k.num_contexts)]
    best = int(np.argmax(capacities))
    logger.debug(f"myopic bound {capacities[best]:.9f} bits at context {k.context_tuple(best)}")
    return float(capacities[best])


# Bounds ------------------------------------------------------------------

def single_letter_bound(
    k: Kernel,
    eq: Optional[SubsetEquivalence] = None,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    variant: str = "away",
) -> SolveReport:
    """max I(X;Y|Ȳ′) over the single-letter polytope, with its gap certificate."""
    poly = build_single_letter_polytope(k, eq)
    f, grad = mi_objective(poly, k.table)
    report = frank_wolfe_max(f, grad, poly, tol=tol, max_iters=max_iters, variant=variant)
    report.value = max(report.value, 0.0)
    logger.info(f"single-letter bound for {k.name or 'kernel'}: {report.value:.9f} bits")
    return report


def _relaxation_polytope(
    family: DagFamily, k: Kernel, n: int, p0: Dist
) -> Tuple[Polytope, Tuple]:
    inst = instance(family, n)
    X, Y, d = k.alphabet.x_size, k.alphabet.y_size, k.d
    C = k.num_contexts
    nodes = inst.communication
    block = {v: b for b, v in enumerate(nodes)}
    dim = len(nodes) * X * C
    if dim > MAX_RELAXATION_VARIABLES:
        raise ScaleTooLarge(
            f"relaxation at n={n} needs {dim} variables, cap is {MAX_RELAXATION_VARIABLES}"
        )
    digits = _context_digits(Y, d)
    order = {v: i for i, v in enumerate(inst.nodes)}
    rows: List[np.ndarray] = []
    rhs: List[float] = []
    labels: List[str] = []

    def marginal_row(u, coords, ybar) -> np.ndarray:
        row = np.zeros(dim)
        ind = np.all(digits[:, list(coords)] == ybar, axis=1).astype(float)
        start = block[u] * X * C
        row[start : start + X * C] = np.broadcast_to(ind[None, :], (X, C)).reshape(-1)
        return row

    for u in nodes:
        for i, v in enumerate(inst.parents[u]):
            for y in range(Y):
                row = marginal_row(u, (i,), (y,))
                if v in block:
                    start = block[v] * X * C
                    row[start : start + X * C] -= k.table[:, :, y].reshape(-1)
                    rows.append(row)
                    rhs.append(0.0)
                    labels.append(f"P_{u}[Y_{v}={y}] = out({v})[{y}]")
                else:
                    rows.append(row)
                    rhs.append(float(p0.probs[y]))
                    labels.append(f"P_{u}[Y_{v}={y}] = P0[{y}]")

    # joint marginals over shared parent sets
    by_parent: Dict = {}
    for u in nodes:
        for v in set(inst.parents[u]):
            by_parent.setdefault(v, []).append(u)
    pairs = set()
    for children in by_parent.values():
        for a, b in itertools.combinations(children, 2):
            pairs.add((a, b) if block[a] < block[b] else (b, a))
    for a, b in sorted(pairs, key=lambda p: (block[p[0]], block[p[1]])):
        shared = sorted(set(inst.parents[a]) & set(inst.parents[b]), key=order.__getitem__)
        coords_a = tuple(inst.parents[a].index(v) for v in shared)
        coords_b = tuple(inst.parents[b].index(v) for v in shared)
        for ybar in itertools.product(range(Y), repeat=len(shared)):
            rows.append(marginal_row(a, coords_a, ybar) - marginal_row(b, coords_b, ybar))
            rhs.append(0.0)
            labels.append(f"P_{a}[{shared}={ybar}] = P_{b}[{shared}={ybar}]")

    poly = Polytope(
        alphabet=k.alphabet,
        d=d,
        num_blocks=len(nodes),
        rows=np.array(rows, dtype=float).reshape(len(rows), dim),
        rhs=np.array(rhs, dtype=float),
        labels=labels,
    )
    return _filter(poly), nodes


def finite_n_relaxation(
    family: DagFamily,
    k: Kernel,
    n: int,
    p0: Optional[Dist] = None,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    variant: str = "away",
) -> SolveReport:
    """
    Per-node joints on instance n, maximizing the average conditional MI
    under output/parent consistency, shared-parent agreement and P0 at the
    initial nodes.
    """
    if k.d != family.d:
        raise ShapeMismatch(f"kernel has d={k.d} but family {family.name} has d={family.d}")
    if p0 is None:
        p0 = Dist.uniform(k.alphabet.y_size)
    if p0.support_size != k.alphabet.y_size:
        raise ShapeMismatch("P0 must be a distribution over the output alphabet")
    poly, nodes = _relaxation_polytope(family, k, n, p0)
    logger.info(
        f"finite-n relaxation {family.name} n={n}: {poly.num_blocks} nodes, "
        f"{poly.dimension} variables, {poly.rows.shape[0]} constraints"
    )
    f, grad = mi_objective(poly, k.table)
    report = frank_wolfe_max(f, grad, poly, tol=tol, max_iters=max_iters, variant=variant)
    report.value = max(report.value, 0.0)
    report.nodes = tuple(nodes)
    return report


@dataclass
class SpreadReport:
    n: int
    values: List[float]
    spread: float


def initial_distribution_spread(
    family: DagFamily,
    k: Kernel,
    n: int,
    p0s: Sequence[Dist],
    tol: float = DEFAULT_TOL,
) -> SpreadReport:
    """Relaxation values for several P0 and their max − min."""
    if not p0s:
        raise BadParameter("need at least one initial distribution")
    values = [finite_n_relaxation(family, k, n, p0, tol=tol).value for p0 in p0s]
    return SpreadReport(n=n, values=values, spread=float(max(values) - min(values)))
