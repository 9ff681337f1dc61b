"""
Finite-alphabet probability objects and information functionals.

Every quantity is reported in bits. Parent contexts ȳ′ ∈ Y^d are encoded
mixed-radix with ȳ′_1 as the most significant digit, so a C-order reshape of
a context axis of length |Y|^d into d axes of length |Y| recovers ȳ′_1..ȳ′_d
in order. Kernel tables are stored as arrays of shape (|X|, |Y|^d, |Y|) and
joint distributions as arrays of shape (|X|, |Y|^d).
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Tuple

import numpy as np

from .config import GRADIENT_FLOOR, SUM_TOL
from .errors import (AbsoluteContinuityViolated, BadSubset,
                     InvalidDistribution, ShapeMismatch)

logger = logging.getLogger(__name__)


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


def _check_probs(arr: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise InvalidDistribution(f"{what} has non-finite entries")
    if np.any(arr < 0):
        raise InvalidDistribution(f"{what} has negative entries")
    total = float(arr.sum())
    if abs(total - 1.0) > SUM_TOL:
        raise InvalidDistribution(f"{what} sums to {total!r}, not 1")


@dataclass(frozen=True)
class Alphabet:
    """Input and output alphabet sizes; symbols are 0..size-1."""

    x_size: int
    y_size: int

    def __post_init__(self):
        if int(self.x_size) < 1 or int(self.y_size) < 1:
            raise ShapeMismatch(
                f"alphabet sizes must be positive, got {self.x_size}x{self.y_size}"
            )

    def num_contexts(self, d: int) -> int:
        return self.y_size ** d


@dataclass(frozen=True, eq=False)
class Dist:
    """A probability vector over a finite support."""

    probs: np.ndarray

    def __post_init__(self):
        arr = _frozen(self.probs).reshape(-1)
        if arr.size == 0:
            raise InvalidDistribution("distribution has empty support")
        _check_probs(arr, "distribution")
        arr.setflags(write=False)
        object.__setattr__(self, "probs", arr)

    @property
    def support_size(self) -> int:
        return int(self.probs.size)

    @classmethod
    def uniform(cls, size: int) -> "Dist":
        return cls(np.full(size, 1.0 / size))

    @classmethod
    def point(cls, size: int, index: int) -> "Dist":
        probs = np.zeros(size)
        probs[index] = 1.0
        return cls(probs)

    def allclose(self, other: "Dist", atol: float = 1e-12) -> bool:
        return self.support_size == other.support_size and bool(
            np.allclose(self.probs, other.probs, rtol=0.0, atol=atol)
        )


@dataclass(frozen=True, eq=False)
class Kernel:
    """Channel constants Q(y | x, ȳ′) for d parent outputs."""

    alphabet: Alphabet
    d: int
    table: np.ndarray
    name: str = ""
    gamma: float = field(init=False)

    def __post_init__(self):
        if int(self.d) < 1:
            raise ShapeMismatch(f"parent count must be positive, got {self.d}")
        a = self.alphabet
        shape = (a.x_size, a.num_contexts(self.d), a.y_size)
        arr = np.array(self.table, dtype=float)
        if arr.size != int(np.prod(shape)):
            raise ShapeMismatch(
                f"kernel table has {arr.size} entries, expected {int(np.prod(shape))}"
            )
        arr = arr.reshape(shape)
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise InvalidDistribution("kernel entries must be finite and nonnegative")
        sums = arr.sum(axis=-1)
        worst = float(np.max(np.abs(sums - 1.0)))
        if worst > SUM_TOL:
            raise InvalidDistribution(f"kernel row sums deviate from 1 by {worst!r}")
        arr.setflags(write=False)
        object.__setattr__(self, "table", arr)
        object.__setattr__(self, "gamma", float(arr.min()))

    @property
    def num_contexts(self) -> int:
        return self.alphabet.num_contexts(self.d)

    @property
    def is_strictly_positive(self) -> bool:
        return self.gamma > 0.0

    def context_tuple(self, ctx: int) -> Tuple[int, ...]:
        return decode_context(ctx, self.alphabet.y_size, self.d)

    def context_index(self, ctx: Sequence[int]) -> int:
        return encode_context(ctx, self.alphabet.y_size)

    def conditional(self, x: int, ctx: Sequence[int]) -> np.ndarray:
        """Output distribution Q(· | x, ȳ′) for a context given as a tuple."""
        return self.table[x, self.context_index(ctx)]

    def permute_inputs(self, perm: Sequence[int]) -> "Kernel":
        """Relabel input symbols: new symbol i behaves like old symbol perm[i]."""
        return Kernel(self.alphabet, self.d, self.table[list(perm)], name=self.name)


@dataclass(frozen=True, eq=False)
class JointDist:
    """A distribution over X × Y^d, stored with shape (|X|, |Y|^d)."""

    alphabet: Alphabet
    d: int
    probs: np.ndarray

    def __post_init__(self):
        shape = (self.alphabet.x_size, self.alphabet.num_contexts(self.d))
        arr = np.array(self.probs, dtype=float)
        if arr.size != shape[0] * shape[1]:
            raise ShapeMismatch(f"joint has {arr.size} entries, expected {shape[0] * shape[1]}")
        arr = arr.reshape(shape)
        _check_probs(arr, "joint distribution")
        arr.setflags(write=False)
        object.__setattr__(self, "probs", arr)

    @classmethod
    def uniform(cls, alphabet: Alphabet, d: int) -> "JointDist":
        n = alphabet.x_size * alphabet.num_contexts(d)
        return cls(alphabet, d, np.full(n, 1.0 / n))

    @property
    def context_marginal(self) -> Dist:
        return Dist(self.probs.sum(axis=0))

    @property
    def input_marginal(self) -> Dist:
        return Dist(self.probs.sum(axis=1))


@dataclass(frozen=True, eq=False)
class Policy:
    """Encoder table P(x | ȳ′) with shape (|X|, |Y|^d); columns sum to 1."""

    alphabet: Alphabet
    d: int
    table: np.ndarray

    def __post_init__(self):
        shape = (self.alphabet.x_size, self.alphabet.num_contexts(self.d))
        arr = np.array(self.table, dtype=float)
        if arr.size != shape[0] * shape[1]:
            raise ShapeMismatch(f"policy has {arr.size} entries, expected {shape[0] * shape[1]}")
        arr = arr.reshape(shape)
        if np.any(arr < 0) or np.max(np.abs(arr.sum(axis=0) - 1.0)) > SUM_TOL:
            raise InvalidDistribution("policy columns must be distributions over X")
        arr.setflags(write=False)
        object.__setattr__(self, "table", arr)

    @classmethod
    def uniform(cls, alphabet: Alphabet, d: int = 1) -> "Policy":
        table = np.full((alphabet.x_size, alphabet.num_contexts(d)), 1.0 / alphabet.x_size)
        return cls(alphabet, d, table)


# Context encoding ------------------------------------------------------

def encode_context(ctx: Sequence[int], y_size: int) -> int:
    index = 0
    for symbol in ctx:
        index = index * y_size + int(symbol)
    return index


def decode_context(index: int, y_size: int, d: int) -> Tuple[int, ...]:
    digits = []
    for _ in range(d):
        index, digit = divmod(index, y_size)
        digits.append(digit)
    return tuple(reversed(digits))


def kernel_from_function(
    alphabet: Alphabet,
    d: int,
    fn: Callable[[int, Tuple[int, ...]], Sequence[float]],
    name: str = "",
) -> Kernel:
    """Build a kernel from fn(x, ȳ′) returning the output distribution."""
    table = np.zeros((alphabet.x_size, alphabet.num_contexts(d), alphabet.y_size))
    for x in range(alphabet.x_size):
        for ctx in itertools.product(range(alphabet.y_size), repeat=d):
            table[x, encode_context(ctx, alphabet.y_size)] = fn(x, ctx)
    return Kernel(alphabet, d, table, name=name)


def _check_pair(joint: JointDist, k: Kernel) -> None:
    if joint.alphabet != k.alphabet or joint.d != k.d:
        raise ShapeMismatch(
            f"joint over {joint.alphabet} with d={joint.d} does not match "
            f"kernel over {k.alphabet} with d={k.d}"
        )


# Scalar functionals ----------------------------------------------------

def entropy(p: Dist) -> float:
    probs = p.probs[p.probs > 0]
    return float(-np.sum(probs * np.log2(probs)))


def kl(p: Dist, q: Dist, strict: bool = False) -> float:
    """D(p‖q) in bits; +inf when p is not absolutely continuous w.r.t. q."""
    if p.support_size != q.support_size:
        raise ShapeMismatch("kl arguments have different supports")
    mask = p.probs > 0
    if np.any(q.probs[mask] == 0):
        if strict:
            raise AbsoluteContinuityViolated("p puts mass where q has none")
        return math.inf
    value = float(np.sum(p.probs[mask] * np.log2(p.probs[mask] / q.probs[mask])))
    return max(value, 0.0)


def output_dist(joint: JointDist, k: Kernel) -> Dist:
    _check_pair(joint, k)
    out = np.einsum("xc,xcy->y", joint.probs, k.table)
    return Dist(out / out.sum())


def marginal_context(joint: JointDist, subset: Sequence[int]) -> Dist:
    """Marginal of the parent coordinates in `subset` (1-based, in that order)."""
    subset = tuple(int(i) for i in subset)
    if not subset or len(set(subset)) != len(subset) or any(i < 1 or i > joint.d for i in subset):
        raise BadSubset(f"invalid ordered subset {subset} of [{joint.d}]")
    return Dist(context_marginal_array(joint.probs, joint.alphabet.y_size, joint.d, subset))


def context_marginal_array(
    probs: np.ndarray, y_size: int, d: int, subset: Sequence[int]
) -> np.ndarray:
    """Array version of marginal_context; a leading batch axis is not allowed."""
    ctx = probs.sum(axis=0).reshape((y_size,) * d)
    axes = [i - 1 for i in subset]
    rest = tuple(a for a in range(d) if a not in axes)
    marg = ctx.sum(axis=rest) if rest else ctx
    # remaining axes keep their natural order; reorder to the subset order
    kept = sorted(axes)
    marg = np.transpose(marg, [kept.index(a) for a in axes])
    return marg.reshape(-1)


def conditional_mi(joint: JointDist, k: Kernel) -> float:
    """I(X; Y | Ȳ′) in bits for the joint P(x, ȳ′) pushed through k."""
    _check_pair(joint, k)
    return float(max(conditional_mi_array(joint.probs, k.table), 0.0))


def grad_conditional_mi(joint: JointDist, k: Kernel) -> np.ndarray:
    """∂I/∂P(x, ȳ′) = D(k(·|x,ȳ′) ‖ P(·|ȳ′)) in bits, shape (|X|, |Y|^d)."""
    _check_pair(joint, k)
    return grad_conditional_mi_array(joint.probs, k.table)


def conditional_mi_array(probs: np.ndarray, table: np.ndarray) -> np.ndarray:
    """
    Conditional mutual information for raw arrays.

    probs has shape (..., |X|, C) and need not be normalized (the functional
    is positively homogeneous); table has shape (|X|, C, |Y|). Returns an
    array over the leading batch axes.
    """
    joint_y = probs[..., :, :, None] * table
    out = joint_y.sum(axis=-3)
    ctx_mass = probs.sum(axis=-2)
    cond = np.divide(
        out,
        ctx_mass[..., None],
        out=np.zeros_like(out),
        where=ctx_mass[..., None] > 0,
    )
    mask = joint_y > 0
    ratio = np.divide(
        np.broadcast_to(table, joint_y.shape),
        np.broadcast_to(cond[..., None, :, :], joint_y.shape),
        out=np.ones_like(joint_y),
        where=mask,
    )
    logs = np.log2(ratio, out=np.zeros_like(joint_y), where=mask)
    return np.sum(joint_y * logs, axis=(-3, -2, -1))


def grad_conditional_mi_array(
    probs: np.ndarray, table: np.ndarray, floor: float = GRADIENT_FLOOR
) -> np.ndarray:
    """
    Supergradient of conditional_mi_array with the same shape as probs.

    Contexts without mass use the row mean of the kernel as reference output
    distribution; induced conditionals are floored at `floor`.
    """
    out = np.einsum("...xc,xcy->...cy", probs, table)
    ctx_mass = probs.sum(axis=-2)
    row_mean = np.broadcast_to(table.mean(axis=0), out.shape)
    ref = np.where(
        ctx_mass[..., None] > 0,
        np.divide(out, ctx_mass[..., None], out=np.zeros_like(out), where=ctx_mass[..., None] > 0),
        row_mean,
    )
    ref = np.maximum(ref, floor)
    positive = table > 0
    log_table = np.log2(table, out=np.zeros_like(table), where=positive)
    cross = np.einsum("xcy,...cy->...xc", table, np.log2(ref))
    self_term = np.sum(table * log_table, axis=-1)
    return self_term - cross


# Policies --------------------------------------------------------------

def joint_from_policy(policy: Policy, context_dist: Dist) -> JointDist:
    """P(x, ȳ′) = P(x | ȳ′) · P(ȳ′)."""
    if context_dist.support_size != policy.table.shape[1]:
        raise ShapeMismatch("context distribution does not match policy contexts")
    return JointDist(policy.alphabet, policy.d, policy.table * context_dist.probs[None, :])


def policy_from_joint(joint: JointDist) -> Policy:
    """P(x | ȳ′) from a joint; contexts without mass get the uniform policy."""
    mass = joint.probs.sum(axis=0)
    table = np.full_like(joint.probs, 1.0 / joint.alphabet.x_size)
    seen = mass > 0
    table[:, seen] = joint.probs[:, seen] / mass[seen]
    return Policy(joint.alphabet, joint.d, table)
