"""Block construction for the local-queue QBD chains.

States are ordered (0,0), (1,0), ..., (1,f-1), (2,0), ..., (M,f-1); level ``l``
is the queue length and phase ``j`` the number of dispatches already made for
the head-of-line packet.

Four chains share the same block layout:

* ``P0`` -- the full one-slot transition matrix of the local queue,
* ``P1`` -- transitions that leave the queue able to accept an arrival,
* ``P2`` -- transitions in which a generated packet is accepted,
* ``P3`` -- the absorbing chain that follows one tagged packet until removal.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .params import ContactProbabilities, NetworkConfig, contact_probabilities

CHAINS = ("P0", "P1", "P2", "P3")
STOCHASTIC_TOL = 1e-12


@dataclass(frozen=True)
class QueueState:
    l: int
    j: int


class StateIndexing:
    """Bijection between ``(l, j)`` queue states and linear indices."""

    def __init__(self, M: int, f: int):
        self.M = M
        self.f = f

    @property
    def size(self) -> int:
        return 1 + self.M * self.f

    def index(self, l: int, j: int) -> int:
        if l == 0:
            if j != 0:
                raise ValueError("state (0, j) requires j = 0")
            return 0
        if not (1 <= l <= self.M and 0 <= j < self.f):
            raise ValueError(f"state ({l}, {j}) outside M={self.M}, f={self.f}")
        return 1 + (l - 1) * self.f + j

    def state(self, idx: int) -> QueueState:
        if idx == 0:
            return QueueState(0, 0)
        if not 0 < idx < self.size:
            raise IndexError(idx)
        l, j = divmod(idx - 1, self.f)
        return QueueState(l + 1, j)

    def labels(self) -> list[str]:
        return [f"({s.l},{s.j})" for s in map(self.state, range(self.size))]


@dataclass(frozen=True)
class ElementaryParts:
    c: np.ndarray         # (f,) absorption probabilities per phase
    unit_row: np.ndarray  # (f,) = [1, 0, ..., 0]
    Q: np.ndarray         # (f, f) upper-bidiagonal

    @property
    def c_unit(self) -> np.ndarray:
        return np.outer(self.c, self.unit_row)


def elementary_parts(probs: ContactProbabilities, f: int) -> ElementaryParts:
    if f < 1:
        raise ValueError("f ≥ 1 required")
    c = np.full(f, probs.p0)
    c[-1] = probs.p0 + probs.p1
    unit_row = np.zeros(f)
    unit_row[0] = 1.0
    Q = np.diag(np.full(f, probs.p2)) + np.diag(np.full(f - 1, probs.p1), k=1)
    return ElementaryParts(c=c, unit_row=unit_row, Q=Q)


@dataclass(frozen=True)
class QbdBlocks:
    chain: str
    B0: np.ndarray  # (1, f)
    B1: np.ndarray  # (1, 1)
    B2: np.ndarray  # (f, 1)
    A0: np.ndarray  # (f, f)
    A1: np.ndarray
    A2: np.ndarray
    AM: np.ndarray


# Each entry maps a block name to (coefficient of 1-λ, coefficient of λ, constant)
# applied to one of the elementary terms: "one" (scalar 1 / unit_row), "c",
# "Q", "cr" (c ⊗ unit_row) or None (zero block).
_BLOCK_TABLE = {
    "P0": {
        "B0": ("lam", "unit_row"),
        "B1": ("1-lam", "one"),
        "B2": ("1-lam", "c"),
        "A0": ("lam", "Q"),
        "A1": [("1-lam", "Q"), ("lam", "cr")],
        "A2": ("1-lam", "cr"),
        "AM": [("1", "Q"), ("lam", "cr")],  # A1 + A0
    },
    "P1": {
        "B0": None,
        "B1": ("1", "one"),
        "B2": ("1", "c"),
        "A0": None,
        "A1": ("1", "Q"),
        "A2": ("1", "cr"),
        "AM": None,
    },
    "P2": {
        "B0": ("lam", "unit_row"),
        "B1": None,
        "B2": None,
        "A0": ("lam", "Q"),
        "A1": ("lam", "cr"),
        "A2": None,
        "AM": ("lam", "cr"),
    },
    "P3": {
        "B0": None,
        "B1": ("1", "one"),
        "B2": ("1", "c"),
        "A0": None,
        "A1": ("1", "Q"),
        "A2": ("1", "cr"),
        "AM": ("1", "Q"),
    },
}

_SHAPES = {"B0": (1, "f"), "B1": (1, 1), "B2": ("f", 1),
           "A0": ("f", "f"), "A1": ("f", "f"), "A2": ("f", "f"), "AM": ("f", "f")}


def _term(name: str, parts: ElementaryParts, f: int, shape) -> np.ndarray:
    if name == "one":
        return np.ones(shape)
    if name == "unit_row":
        return parts.unit_row.reshape(shape)
    if name == "c":
        return parts.c.reshape(shape)
    if name == "Q":
        return parts.Q
    if name == "cr":
        return parts.c_unit
    raise KeyError(name)


def build_blocks(chain: str, cfg: NetworkConfig,
                 probs: ContactProbabilities | None = None) -> QbdBlocks:
    """Fill the seven sub-blocks of ``chain`` for configuration ``cfg``."""
    if chain not in _BLOCK_TABLE:
        raise ValueError(f"unknown chain {chain!r}; expected one of {CHAINS}")
    if probs is None:
        probs = contact_probabilities(cfg)
    f, lam = cfg.f, cfg.lam
    parts = elementary_parts(probs, f)
    weights = {"1": 1.0, "lam": lam, "1-lam": 1.0 - lam}
    out = {}
    for block, spec in _BLOCK_TABLE[chain].items():
        shape = tuple(f if d == "f" else d for d in _SHAPES[block])
        mat = np.zeros(shape)
        if spec is not None:
            for coef, term in ([spec] if isinstance(spec, tuple) else spec):
                mat = mat + weights[coef] * _term(term, parts, f, shape)
        out[block] = mat
    return QbdBlocks(chain=chain, **out)


def assemble(blocks: QbdBlocks, M: int, f: int) -> np.ndarray:
    """Lay the blocks out as a block-tridiagonal matrix of size 1 + M*f.

    For M=1 only B0, B1, B2 and AM appear; for M=2 the single interior level
    uses A1 and the last level AM.
    """
    if blocks.B0.shape != (1, f) or blocks.A1.shape != (f, f):
        raise ValueError(f"blocks do not match f={f}")
    if M < 1:
        raise ValueError("M ≥ 1 required")
    size = 1 + M * f
    P = np.zeros((size, size))

    def lvl(l):
        return slice(0, 1) if l == 0 else slice(1 + (l - 1) * f, 1 + l * f)

    P[lvl(0), lvl(0)] = blocks.B1
    P[lvl(0), lvl(1)] = blocks.B0
    P[lvl(1), lvl(0)] = blocks.B2
    for l in range(1, M + 1):
        P[lvl(l), lvl(l)] = blocks.AM if l == M else blocks.A1
        if l < M:
            P[lvl(l), lvl(l + 1)] = blocks.A0
        if l > 1:
            P[lvl(l), lvl(l - 1)] = blocks.A2
    return P


def chain_matrix(chain: str, cfg: NetworkConfig,
                 probs: ContactProbabilities | None = None) -> np.ndarray:
    return assemble(build_blocks(chain, cfg, probs), cfg.M, cfg.f)


def absorbing_parts(cfg: NetworkConfig, probs: ContactProbabilities | None = None):
    """Transient block ``T`` and absorption column ``c_plus`` of the tagged-packet chain.

    Level ``l`` is the tagged packet's position in the queue; only level 1
    (head of line) can absorb.
    """
    if probs is None:
        probs = contact_probabilities(cfg)
    M, f = cfg.M, cfg.f
    parts = elementary_parts(probs, f)
    size = M * f
    T = np.zeros((size, size))
    cr = parts.c_unit
    for l in range(M):
        s = slice(l * f, (l + 1) * f)
        T[s, s] = parts.Q
        if l > 0:
            T[s, slice((l - 1) * f, l * f)] = cr
    c_plus = np.zeros(size)
    c_plus[:f] = parts.c
    return T, c_plus


def spectral_radius(T: np.ndarray, squarings: int = 40) -> float:
    """Estimate rho(T) as ||T^k||^(1/k) with k up to 2**squarings (Gelfand's formula).

    T is typically defective (every eigenvalue equals p2), which makes plain
    vector power iteration converge like 1/k; repeated squaring with
    rescaling reaches k ~ 1e12 in a few dozen products. The estimate never
    falls below the true spectral radius.
    """
    A = np.array(T, dtype=float)
    norm = np.abs(A).sum(axis=1).max()
    if norm == 0.0:
        return 0.0
    A /= norm
    log_norm = math.log(norm)  # log ||T^k||
    k = 1
    for _ in range(squarings):
        B = A @ A
        nb = np.abs(B).sum(axis=1).max()
        if nb < 1e-150:
            # rescaled power is nearly nilpotent; further squaring would underflow
            break
        A = B / nb
        log_norm = 2.0 * log_norm + math.log(nb)
        k *= 2
    return math.exp(log_norm / k)


def dump_csv(P: np.ndarray, M: int, f: int, path) -> None:
    """Write a square state matrix as CSV with ``(l,j)`` labels."""
    labels = StateIndexing(M, f).labels()
    if P.shape != (len(labels), len(labels)):
        raise ValueError("matrix does not match state count")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["state"] + labels)
        for lab, row in zip(labels, P):
            w.writerow([lab] + [repr(float(x)) for x in row])
