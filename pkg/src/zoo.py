"""
Channel zoo: the three example channels, generic utility kernels, and the
`.chan.json` channel file format.
"""

from __future__ import annotations

import json
import logging
import os
from typing import Any, Callable, Dict, Optional

import numpy as np

from .channel import Alphabet, Kernel, kernel_from_function
from .config import CHANNEL_FILE_SUFFIX, SUM_TOL
from .errors import BadDimensions, BadParameter, MalformedFile, RowSumViolation

logger = logging.getLogger(__name__)

BINARY = Alphabet(2, 2)


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise BadParameter(f"alpha must lie in [0, 1], got {alpha}")
    return alpha


def _majority(*bits: int) -> int:
    return int(sum(bits) * 2 > len(bits))


# Example channels --------------------------------------------------------

def maj_z_1d(alpha: float) -> Kernel:
    """1D majority-vote Z-channel, built from its channel-constant table."""
    alpha = _check_alpha(alpha)
    zero_prob = {
        (0, 0): 1.0,
        (0, 1): (1.0 + alpha) / 2.0,
        (1, 0): (1.0 + alpha) / 2.0,
        (1, 1): alpha,
    }

    def row(x, ctx):
        q0 = zero_prob[(x, ctx[0])]
        return (q0, 1.0 - q0)

    return kernel_from_function(BINARY, 1, row, name=f"maj-z-1d({alpha:g})")


def maj_z_2d(alpha: float) -> Kernel:
    """Majority of (x, y′₁, y′₂) passed through a Z-channel with error alpha."""
    alpha = _check_alpha(alpha)

    def row(x, ctx):
        q0 = 1.0 if _majority(x, *ctx) == 0 else alpha
        return (q0, 1.0 - q0)

    return kernel_from_function(BINARY, 2, row, name=f"maj-z-2d({alpha:g})")


def yprime_asym(alpha: float) -> Kernel:
    """(x ∨ y′₁) ∧ y′₂ with probability alpha, majority otherwise."""
    alpha = _check_alpha(alpha)

    def row(x, ctx):
        y1, y2 = ctx
        probs = np.zeros(2)
        probs[(x | y1) & y2] += alpha
        probs[_majority(x, y1, y2)] += 1.0 - alpha
        return probs

    return kernel_from_function(BINARY, 2, row, name=f"yprime-asym({alpha:g})")


def memoryless_lift(dmc, d: int, name: str = "") -> Kernel:
    """Lift a |Y|×|X| column-stochastic DMC to a kernel ignoring d parents."""
    dmc = np.asarray(dmc, dtype=float)
    if dmc.ndim != 2 or np.any(dmc < 0):
        raise BadParameter("DMC must be a nonnegative |Y|×|X| matrix")
    if np.max(np.abs(dmc.sum(axis=0) - 1.0)) > SUM_TOL:
        raise BadParameter("DMC columns must sum to 1")
    if int(d) < 1:
        raise BadParameter(f"parent count must be positive, got {d}")
    y_size, x_size = dmc.shape
    alphabet = Alphabet(x_size, y_size)
    table = np.broadcast_to(dmc.T[:, None, :], (x_size, alphabet.num_contexts(d), y_size))
    return Kernel(alphabet, int(d), table, name=name or "memoryless")


# Utility DMCs and kernels --------------------------------------------------

def identity_dmc(size: int = 2) -> np.ndarray:
    return np.eye(size)


def bsc_dmc(p: float) -> np.ndarray:
    p = _check_alpha(p)
    return np.array([[1.0 - p, p], [p, 1.0 - p]])


def z_dmc(p: float) -> np.ndarray:
    """Z-channel: input 0 is received intact, input 1 flips to 0 with probability p."""
    p = _check_alpha(p)
    return np.array([[1.0, p], [0.0, 1.0 - p]])


def uniform_kernel(alphabet: Alphabet = BINARY, d: int = 1) -> Kernel:
    table = np.full(
        (alphabet.x_size, alphabet.num_contexts(d), alphabet.y_size), 1.0 / alphabet.y_size
    )
    return Kernel(alphabet, d, table, name="uniform")


def smoothed(kernel: Kernel, weight: float) -> Kernel:
    """(1 − weight)·kernel + weight·uniform output."""
    weight = _check_alpha(weight)
    y_size = kernel.alphabet.y_size
    table = (1.0 - weight) * kernel.table + weight / y_size
    return Kernel(kernel.alphabet, kernel.d, table, name=f"{kernel.name}~{weight:g}")


def random_kernel(
    alphabet: Alphabet, d: int, rng: np.random.Generator, min_entry: float = 0.0
) -> Kernel:
    """Dirichlet rows, rescaled so every entry is at least min_entry."""
    shape = (alphabet.x_size, alphabet.num_contexts(d), alphabet.y_size)
    if min_entry * alphabet.y_size >= 1.0:
        raise BadParameter("min_entry too large for the output alphabet")
    rows = rng.dirichlet(np.ones(alphabet.y_size), size=shape[:2])
    table = min_entry + (1.0 - alphabet.y_size * min_entry) * rows
    return Kernel(alphabet, d, table, name="random")


CHANNELS: Dict[str, Callable[[float], Kernel]] = {
    "maj-z-1d": maj_z_1d,
    "maj-z-2d": maj_z_2d,
    "yprime-asym": yprime_asym,
    "bsc": lambda p: memoryless_lift(bsc_dmc(p), 1, name=f"bsc({p:g})"),
    "bsc-2d": lambda p: memoryless_lift(bsc_dmc(p), 2, name=f"bsc-2d({p:g})"),
    "z": lambda p: memoryless_lift(z_dmc(p), 1, name=f"z({p:g})"),
}


def get_channel(selector: str, alpha: Optional[float] = None) -> Kernel:
    """Resolve a CLI channel selector: a zoo name or `file:<path>`."""
    if selector.startswith("file:"):
        return load(selector[len("file:"):])
    if selector not in CHANNELS:
        raise BadParameter(
            f"unknown channel {selector!r}; choose from {', '.join(sorted(CHANNELS))} or file:<path>"
        )
    if alpha is None:
        raise BadParameter(f"channel {selector!r} needs --alpha")
    return CHANNELS[selector](alpha)


# Channel file format -------------------------------------------------------

def to_record(kernel: Kernel) -> Dict[str, Any]:
    a = kernel.alphabet
    return {
        "name": kernel.name,
        "x_size": a.x_size,
        "y_size": a.y_size,
        "d": kernel.d,
        "table": [format(float(v), ".17g") for v in kernel.table.reshape(-1)],
    }


def serialize(kernel: Kernel) -> str:
    return json.dumps(to_record(kernel), indent=2) + "\n"


def parse(text: str) -> Kernel:
    """Parse a channel file, validating every kernel invariant."""
    try:
        rec = json.loads(text)
    except json.JSONDecodeError as e:
        raise MalformedFile(f"channel file is not valid JSON: {e}") from e
    if not isinstance(rec, dict):
        raise MalformedFile("channel file must hold a JSON object")
    try:
        x_size, y_size, d = int(rec["x_size"]), int(rec["y_size"]), int(rec["d"])
        raw = rec["table"]
    except (KeyError, TypeError, ValueError) as e:
        raise MalformedFile(f"channel file is missing or has bad fields: {e}") from e
    if x_size < 1 or y_size < 1 or d < 1:
        raise BadDimensions(f"sizes must be positive, got x={x_size} y={y_size} d={d}")
    if not isinstance(raw, list):
        raise MalformedFile("table must be a list of decimal strings")
    expected = x_size * (y_size ** d) * y_size
    if len(raw) != expected:
        raise BadDimensions(f"table has {len(raw)} entries, expected {expected}")
    try:
        values = np.array([float(v) for v in raw], dtype=float)
    except (TypeError, ValueError) as e:
        raise MalformedFile(f"table entry is not a decimal number: {e}") from e
    if not np.all(np.isfinite(values)) or np.any(values < 0) or np.any(values > 1):
        raise MalformedFile("table entries must lie in [0, 1]")
    rows = values.reshape(-1, y_size).sum(axis=1)
    worst = int(np.argmax(np.abs(rows - 1.0)))
    if abs(rows[worst] - 1.0) > SUM_TOL:
        raise RowSumViolation(f"row {worst} sums to {rows[worst]!r}")
    return Kernel(Alphabet(x_size, y_size), d, values, name=str(rec.get("name") or ""))


def save(kernel: Kernel, path: str) -> str:
    if not path.endswith(CHANNEL_FILE_SUFFIX):
        logger.warning(f"channel file {path} does not end with {CHANNEL_FILE_SUFFIX}")
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(serialize(kernel))
    return path


def load(path: str) -> Kernel:
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise MalformedFile(f"cannot read channel file {path}: {e}") from e
    return parse(text)
