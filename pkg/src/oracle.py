"""
Solver-independent checks on the directed line.

Everything here is an exact forward computation over finite alphabets:
policy rollouts, directed information of memory-1 policies, averaged joints
and their distance from the single-letter constraint set, a grid-search
maximizer for n ≤ 2, and a brute-force enumeration of the full sequence law.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .channel import (Dist, JointDist, Kernel, Policy, conditional_mi,
                      context_marginal_array, joint_from_policy, output_dist,
                      policy_from_joint)
from .config import GRID_SEARCH_BUDGET, MAX_ENUMERATION_OUTCOMES
from .errors import BadParameter, EmptyList, ScaleTooLarge, ShapeMismatch
from .poset_dag import SubsetEquivalence

logger = logging.getLogger(__name__)

MAX_GRID_RESOLUTION = 41
MAX_GRID_HORIZON = 2


@dataclass
class RolloutTrace:
    joints: List[JointDist]
    step_info: List[float]
    outputs: List[Dist]
    running_average: List[float] = field(default_factory=list)

    @property
    def total(self) -> float:
        return float(sum(self.step_info))

    @property
    def steps(self) -> int:
        return len(self.joints)


@dataclass
class DEpsReport:
    """Largest deviations from the single-letter constraints."""

    stationarity: float
    subsets: float

    @property
    def epsilon(self) -> float:
        return max(self.stationarity, self.subsets)

    def member(self, eps: float) -> bool:
        return self.epsilon <= eps


def _check_line(k: Kernel, policies: Sequence[Policy], p0: Dist) -> None:
    if k.d != 1:
        raise ShapeMismatch(f"line rollouts need d=1, kernel has d={k.d}")
    if p0.support_size != k.alphabet.y_size:
        raise ShapeMismatch("P0 must be a distribution over the output alphabet")
    for t, policy in enumerate(policies, start=1):
        if policy.alphabet != k.alphabet or policy.d != 1:
            raise ShapeMismatch(f"policy {t} does not match the kernel")


def rollout_line(k: Kernel, policies: Sequence[Policy], p0: Dist) -> RolloutTrace:
    """joint_t = policy_t · P_{Y_{t-1}}, P_{Y_t} = output of joint_t, exactly."""
    _check_line(k, policies, p0)
    outputs = [p0]
    joints: List[JointDist] = []
    info: List[float] = []
    running: List[float] = []
    for t, policy in enumerate(policies, start=1):
        joint = joint_from_policy(policy, outputs[-1])
        joints.append(joint)
        info.append(conditional_mi(joint, k))
        outputs.append(output_dist(joint, k))
        running.append(sum(info) / t)
    return RolloutTrace(joints=joints, step_info=info, outputs=outputs, running_average=running)


def stationary_rollout(k: Kernel, joint: JointDist, n: int) -> RolloutTrace:
    """Repeat P(x|y′) of `joint` for n steps, starting from its Y′ marginal."""
    policy = policy_from_joint(joint)
    return rollout_line(k, [policy] * int(n), joint.context_marginal)


def directed_information_line(k: Kernel, policies: Sequence[Policy], p0: Dist) -> float:
    """Σ_t I(X_t; Y_t | Y_{t-1}) in bits."""
    return rollout_line(k, policies, p0).total


def average_joints(joints: Sequence[JointDist]) -> JointDist:
    if not joints:
        raise EmptyList("cannot average an empty list of joints")
    first = joints[0]
    for j in joints[1:]:
        if j.alphabet != first.alphabet or j.d != first.d:
            raise ShapeMismatch("joints to average have different shapes")
    probs = np.mean([j.probs for j in joints], axis=0)
    return JointDist(first.alphabet, first.d, probs / probs.sum())


def d_eps_membership(
    joint: JointDist, k: Kernel, eq: Optional[SubsetEquivalence] = None
) -> DEpsReport:
    """Exact max deviations |P_{Y′_i} − P_Y| and |P_{Y′_S} − P_{Y′_T}|."""
    if joint.alphabet != k.alphabet or joint.d != k.d:
        raise ShapeMismatch("joint and kernel disagree on alphabet or d")
    Y, d = k.alphabet.y_size, k.d
    p_y = output_dist(joint, k).probs
    stationarity = max(
        float(np.max(np.abs(context_marginal_array(joint.probs, Y, d, (i,)) - p_y)))
        for i in range(1, d + 1)
    )
    subsets = 0.0
    if eq is not None:
        from .solver import restrict_equivalence

        for s, rep in restrict_equivalence(eq, d).pairs():
            a = context_marginal_array(joint.probs, Y, d, s)
            b = context_marginal_array(joint.probs, Y, d, rep)
            subsets = max(subsets, float(np.max(np.abs(a - b))))
    return DEpsReport(stationarity=stationarity, subsets=subsets)


def average_relaxation_joints(report) -> JointDist:
    """Average of the per-node joints of a finite-n relaxation solution."""
    joints = report.argmax if isinstance(report.argmax, tuple) else (report.argmax,)
    return average_joints(list(joints))


def random_policies(k: Kernel, n: int, rng: np.random.Generator) -> List[Policy]:
    X, C = k.alphabet.x_size, k.num_contexts
    return [
        Policy(k.alphabet, k.d, rng.dirichlet(np.ones(X), size=C).T) for _ in range(int(n))
    ]


# Grid search -------------------------------------------------------------

def _binary_info_curve(k: Kernel, grid: np.ndarray) -> np.ndarray:
    """I(X;Y | Y′=c) for P(X=1) = a, shape (contexts, len(grid))."""
    weights = np.stack([1.0 - grid, grid], axis=1)  # (r, X)
    out = np.einsum("rx,xcy->cry", weights, k.table)
    table = k.table.transpose(1, 0, 2)  # (c, x, y)
    mask = table > 0
    log_table = np.log2(table, out=np.zeros_like(table), where=mask)
    log_out = np.log2(out, out=np.zeros_like(out), where=out > 0)
    cond_ent = np.einsum("rx,cxy->cr", weights, table * log_table)
    cross = np.einsum("rx,cxy,cry->cr", weights, table, log_out)
    return np.maximum(cond_ent - cross, 0.0)


def grid_search_line(
    k: Kernel,
    n: int,
    resolution: int = 21,
    p0: Optional[Dist] = None,
) -> float:
    """
    Best normalized directed information over grid policies.

    Each P(X=1|y′) ranges over {0, 1/(r-1), ..., 1}; with p0=None P0 is also
    searched on the grid. The last step separates over contexts, so it is
    maximized per context (the same optimum an exhaustive scan finds). Ties
    go to the lexicographically lowest argument.
    """
    if k.d != 1 or k.alphabet.x_size != 2 or k.alphabet.y_size != 2:
        raise BadParameter("grid search needs a binary kernel with d=1")
    r, n = int(resolution), int(n)
    if n < 1 or n > MAX_GRID_HORIZON or r < 2 or r > MAX_GRID_RESOLUTION:
        raise ScaleTooLarge(
            f"grid search supports n <= {MAX_GRID_HORIZON} and resolution <= {MAX_GRID_RESOLUTION}"
        )
    grid = np.linspace(0.0, 1.0, r)
    p0_options = np.array([[1.0 - g, g] for g in grid]) if p0 is None else p0.probs[None, :]
    evaluations = len(p0_options) * r ** (2 * (n - 1)) * 2 * r
    if evaluations > GRID_SEARCH_BUDGET:
        raise ScaleTooLarge(f"grid search needs {evaluations} evaluations")

    curve = _binary_info_curve(k, grid)  # (2, r)
    best_last = curve.max(axis=1)
    if n == 1:
        values = p0_options @ best_last
    else:
        # first-step policy (a0, a1) on the grid, then the separable last step
        a = np.stack(np.meshgrid(grid, grid, indexing="ij"), axis=-1).reshape(-1, 2)
        policy = np.stack([1.0 - a, a], axis=1)  # (m, x, c)
        idx = np.stack(np.meshgrid(np.arange(r), np.arange(r), indexing="ij"), axis=-1).reshape(-1, 2)
        info1 = np.stack([curve[0][idx[:, 0]], curve[1][idx[:, 1]]], axis=1)  # (m, c)
        first = p0_options @ info1.T  # (p0, m)
        # P_{Y1}(y) = Σ_{c,x} P0(c) policy(x|c) k(y|x,c)
        trans = np.einsum("mxc,xcy->mcy", policy, k.table)
        p_y1 = np.einsum("pc,mcy->pmy", p0_options, trans)
        second = p_y1 @ best_last
        values = ((first + second) / 2.0).reshape(-1)
    best = int(np.argmax(values))
    logger.debug(f"grid search n={n} r={r}: best {values[best]:.9f} bits at flat index {best}")
    return float(values[best])


# Brute-force sequence law ------------------------------------------------

def enumerate_line_joint(k: Kernel, policies: Sequence[Policy], p0: Dist) -> dict:
    """
    Full law of (Y0, X1, Y1, ..., Xn, Yn) and Σ_t I(X^t; Y_t | Y^{t-1})
    computed from it with the whole history conditioning.
    """
    _check_line(k, policies, p0)
    X, Y, n = k.alphabet.x_size, k.alphabet.y_size, len(policies)
    outcomes = Y ** (n + 1) * X ** n
    if outcomes > MAX_ENUMERATION_OUTCOMES:
        raise ScaleTooLarge(f"enumeration needs {outcomes} outcomes")
    law = np.asarray(p0.probs, dtype=float)
    for policy in policies:
        # append X_t given Y_{t-1}, then Y_t given (X_t, Y_{t-1})
        law = law[..., None] * policy.table.T.reshape((1,) * (law.ndim - 1) + (Y, X))
        law = law[..., None] * np.transpose(k.table, (1, 0, 2)).reshape((1,) * (law.ndim - 2) + (Y, X, Y))

    def h(arr: np.ndarray) -> float:
        p = arr[arr > 0]
        return float(-np.sum(p * np.log2(p)))

    total = 0.0
    terms: List[float] = []
    for t in range(1, n + 1):
        keep = 2 * t + 1
        marg = law.sum(axis=tuple(range(keep, law.ndim))) if law.ndim > keep else law
        x_axes = tuple(range(1, keep, 2))
        ys = marg.sum(axis=x_axes)
        given_past = h(marg) - h(marg.sum(axis=-1))
        given_outputs = h(ys) - h(ys.sum(axis=-1))
        term = given_outputs - given_past
        terms.append(term)
        total += term
    return {"law": law, "terms": terms, "directed_information": total}


def all_constant_policies(k: Kernel, grid: Sequence[float]) -> List[Policy]:
    """Binary d=1 policies with every P(X=1|y′) on the grid."""
    out = []
    for a in itertools.product(grid, repeat=k.num_contexts):
        a = np.asarray(a)
        out.append(Policy(k.alphabet, k.d, np.stack([1.0 - a, a])))
    return out
