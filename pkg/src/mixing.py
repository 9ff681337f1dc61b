"""
Contraction of policy-induced output maps on the directed line.

For a strictly positive kernel with minimum entry γ every map
P_{Y′} ↦ A·P_{Y′} (A built from a policy) is a total-variation contraction
with constant α = 1 − |Y|γ. This module computes α, checks the contraction on
random draws, and propagates finite samples of the reachable output sets.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np

from .channel import Dist, Kernel, Policy
from .config import MAX_SET_SIZE, SUM_TOL
from .errors import (EmptySet, InvalidDistribution, NotStrictlyPositive,
                     ShapeMismatch)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PolicyMatrix:
    """A[y, y′] = Σ_x k(y|x,y′)·π(x|y′); column-stochastic."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ShapeMismatch(f"policy matrix must be square, got shape {m.shape}")
        if np.any(m < 0) or np.max(np.abs(m.sum(axis=0) - 1.0)) > SUM_TOL:
            raise InvalidDistribution("policy matrix columns must be distributions")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def apply(self, p: np.ndarray) -> np.ndarray:
        return self.matrix @ p


@dataclass(frozen=True, eq=False)
class DistSet:
    """Finite sample of output distributions, one per row."""

    points: np.ndarray
    thinning: float = 0.0

    def __len__(self) -> int:
        return int(self.points.shape[0])

    def dists(self) -> List[Dist]:
        return [Dist(p) for p in self.points]


def _require_line(k: Kernel) -> None:
    if k.d != 1:
        raise ShapeMismatch(f"output maps are defined for d=1, kernel has d={k.d}")


def contraction_coeff(k: Kernel) -> Tuple[float, float]:
    """(γ, 1 − |Y|γ)."""
    _require_line(k)
    if not k.is_strictly_positive:
        raise NotStrictlyPositive(f"kernel {k.name or ''} has a zero entry")
    gamma = k.gamma
    return gamma, 1.0 - k.alphabet.y_size * gamma


def policy_matrix(k: Kernel, policy: Policy) -> PolicyMatrix:
    _require_line(k)
    if policy.alphabet != k.alphabet or policy.d != 1:
        raise ShapeMismatch("policy does not match the kernel")
    return PolicyMatrix(np.einsum("xcy,xc->yc", k.table, policy.table))


def tv(p: Union[Dist, np.ndarray], q: Union[Dist, np.ndarray]) -> float:
    a = p.probs if isinstance(p, Dist) else np.asarray(p, dtype=float)
    b = q.probs if isinstance(q, Dist) else np.asarray(q, dtype=float)
    if a.shape != b.shape:
        raise ShapeMismatch("tv arguments have different supports")
    return float(0.5 * np.sum(np.abs(a - b)))


def _tv_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return 0.5 * np.abs(a[:, None, :] - b[None, :, :]).sum(axis=-1)


def _random_policy(k: Kernel, rng: np.random.Generator) -> Policy:
    X, C = k.alphabet.x_size, k.num_contexts
    return Policy(k.alphabet, k.d, rng.dirichlet(np.ones(X), size=C).T)


def verify_tv_contraction(k: Kernel, trials: int, seed: int) -> float:
    """Largest tv(Ap, Aq)/tv(p, q) over random (policy, p, q) draws."""
    _, alpha = contraction_coeff(k)
    rng = np.random.default_rng(seed)
    y_size = k.alphabet.y_size
    worst = 0.0
    for _ in range(int(trials)):
        A = policy_matrix(k, _random_policy(k, rng))
        p = rng.dirichlet(np.ones(y_size))
        q = rng.dirichlet(np.ones(y_size))
        base = tv(p, q)
        if base <= 0.0:
            continue
        worst = max(worst, tv(A.apply(p), A.apply(q)) / base)
    logger.info(f"max TV ratio {worst:.6f} over {trials} trials (alpha {alpha:.6f})")
    return worst


def deterministic_policies(k: Kernel) -> List[Policy]:
    """All |X|^|Y| maps y′ ↦ x."""
    X, C = k.alphabet.x_size, k.num_contexts
    out = []
    for choice in itertools.product(range(X), repeat=C):
        table = np.zeros((X, C))
        table[list(choice), np.arange(C)] = 1.0
        out.append(Policy(k.alphabet, k.d, table))
    return out


def thin(points: np.ndarray, limit: int = MAX_SET_SIZE) -> Tuple[np.ndarray, float]:
    """
    Greedy farthest-point subset of at most `limit` rows.

    Returns the kept rows and the largest TV distance from a dropped row to
    the kept set.
    """
    if len(points) <= limit:
        return points, 0.0
    selected = [0]
    nearest = 0.5 * np.abs(points - points[0]).sum(axis=1)
    while len(selected) < limit:
        idx = int(np.argmax(nearest))
        selected.append(idx)
        nearest = np.minimum(nearest, 0.5 * np.abs(points - points[idx]).sum(axis=1))
    return points[sorted(selected)], float(nearest.max())


def reachable_sets(
    k: Kernel, p0: Dist, steps: int, num_policies: int, seed: int
) -> List[DistSet]:
    """
    Sampled reachable output distributions for t = 0..steps.

    Policies are num_policies seeded random draws plus every deterministic
    policy; each step applies all of them to every current point, removes
    duplicates and thins to MAX_SET_SIZE points. DistSet.thinning records
    the displacement introduced at that step.
    """
    _require_line(k)
    if p0.support_size != k.alphabet.y_size:
        raise ShapeMismatch("P0 must be a distribution over the output alphabet")
    rng = np.random.default_rng(seed)
    policies = [_random_policy(k, rng) for _ in range(int(num_policies))]
    policies += deterministic_policies(k)
    maps = np.stack([policy_matrix(k, p).matrix for p in policies])  # (P, Y, Y)
    current = p0.probs[None, :].copy()
    sets = [DistSet(current)]
    for t in range(1, int(steps) + 1):
        images = np.einsum("pyz,mz->mpy", maps, current).reshape(-1, current.shape[1])
        images = np.unique(np.round(images, 15), axis=0)
        current, moved = thin(images)
        sets.append(DistSet(current, moved))
        logger.debug(f"step {t}: {len(images)} images, kept {len(current)}, thinning {moved:.2e}")
    return sets


def hausdorff(a: Union[DistSet, Sequence[Dist]], b: Union[DistSet, Sequence[Dist]]) -> float:
    """Hausdorff distance between finite sets under TV."""
    pa = _as_points(a)
    pb = _as_points(b)
    if pa.shape[0] == 0 or pb.shape[0] == 0:
        raise EmptySet("hausdorff distance needs two non-empty sets")
    if pa.shape[1] != pb.shape[1]:
        raise ShapeMismatch("sets live on different supports")
    d = _tv_matrix(pa, pb)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def _as_points(s) -> np.ndarray:
    if isinstance(s, DistSet):
        return s.points
    items = list(s)
    if not items:
        return np.zeros((0, 0))
    return np.stack([p.probs if isinstance(p, Dist) else np.asarray(p, dtype=float) for p in items])


def contraction_envelope(
    a: Sequence[DistSet], b: Sequence[DistSet], alpha: float
) -> List[float]:
    """
    Upper bounds on hausdorff(a[t], b[t]): α·(previous bound) plus the
    thinning displacement of both sequences at step t, starting from the
    distance of the two initial sets.
    """
    if len(a) != len(b):
        raise ShapeMismatch("set sequences have different lengths")
    bounds = [hausdorff(a[0], b[0])]
    for sa, sb in zip(a[1:], b[1:]):
        bounds.append(alpha * bounds[-1] + sa.thinning + sb.thinning)
    return bounds
