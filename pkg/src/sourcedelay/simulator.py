"""Slot-level simulator of a cell-partitioned torus MANET running PD-f.

Per-slot pipeline:

1. every node is re-placed in a uniformly random cell (IID mobility);
2. equivalent class number ``slot mod alpha**2`` is activated (row-major order);
3. each active cell holding nodes grants the channel to one of them uniformly;
4. every granted node with a non-empty queue runs the PD-f step;
5. each node generates a packet with probability lambda, which is inserted
   if the queue (after step 4) holds fewer than M packets and dropped otherwise.

Node ``i`` sends to destination ``(i + 1) mod n``. The delay of a packet is the
slot it leaves its queue minus the slot it was inserted, so the minimum is 1.
"""

from __future__ import annotations

import math
import os
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .params import NetworkConfig, compute_alpha, validate_config

# target number of (slot, node) draws per vectorized block
_BLOCK_DRAWS = 1 << 18


def make_rng(seed: int, replica: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, replica])))


def worker_count() -> int:
    env = os.environ.get("QBD_MANET_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


# -- geometry -----------------------------------------------------------------

def cell_xy(cell, m: int):
    return np.divmod(cell, m)


def torus_cell_separation(a, b, m: int):
    """Chebyshev distance between cells ``a`` and ``b`` on the m x m torus, in cells."""
    ax, ay = np.divmod(a, m)
    bx, by = np.divmod(b, m)
    dx = np.abs(ax - bx)
    dy = np.abs(ay - by)
    return np.maximum(np.minimum(dx, m - dx), np.minimum(dy, m - dy))


def in_range(a, b, m: int):
    """Whether cell ``b`` lies in the 3 x 3 neighbourhood of cell ``a``."""
    return torus_cell_separation(a, b, m) <= 1


def ec_of_cells(m: int, alpha: int) -> np.ndarray:
    cells = np.arange(m * m)
    x, y = np.divmod(cells, m)
    return (x % alpha) * alpha + (y % alpha)


def min_safe_separation(delta: float) -> float:
    """Cell separation between two transmitters that keeps every receiver safe.

    A receiver sits at most one cell from its transmitter and any point of a cell
    can be used, so transmitters ``s`` cells apart guarantee ``d >= (s - 2) / m``;
    the protocol model asks for ``d >= (1 + delta) * sqrt(8) / m``.
    """
    return (1.0 + delta) * math.sqrt(8.0) + 2.0


def interference_violations(cells, m: int, delta: float) -> list[tuple[int, int]]:
    """Pairs of simultaneously transmitting cells that are closer than allowed."""
    cells = np.asarray(cells)
    bound = min_safe_separation(delta)
    bad = []
    for i in range(len(cells)):
        for k in range(i + 1, len(cells)):
            if torus_cell_separation(cells[i], cells[k], m) < bound:
                bad.append((int(cells[i]), int(cells[k])))
    return bad


# -- world state --------------------------------------------------------------

@dataclass
class World:
    cfg: NetworkConfig
    rng: np.random.Generator
    slot: int = 0
    positions: np.ndarray | None = None
    queues: list = field(default_factory=list)  # per node: deque of insertion slots
    phases: np.ndarray | None = None            # HoL dispatch count per node

    def __post_init__(self):
        n = self.cfg.n
        if not self.queues:
            self.queues = [deque() for _ in range(n)]
        if self.phases is None:
            self.phases = np.zeros(n, dtype=np.int64)
        if self.positions is None:
            self.positions = np.zeros(n, dtype=np.int64)

    @property
    def alpha(self) -> int:
        return compute_alpha(self.cfg.m, self.cfg.delta)

    def state_of(self, node: int) -> tuple[int, int]:
        l = len(self.queues[node])
        return (l, int(self.phases[node]) if l else 0)


def new_world(cfg: NetworkConfig, seed: int, replica: int = 0) -> World:
    validate_config(cfg)
    return World(cfg=cfg, rng=make_rng(seed, replica))


@dataclass
class SlotEvents:
    I0: np.ndarray  # source-destination transmission
    I1: np.ndarray  # packet-dispatch transmission
    I2: np.ndarray  # neither
    I3: np.ndarray  # packet generated
    I4: np.ndarray  # queue could accept an arrival (after service)
    removed: list = field(default_factory=list)  # (node, delay)
    transmitting_cells: np.ndarray | None = None


def _serve(world: World, node: int, dest_in_range: bool, dispatch: bool, t: int):
    """One PD-f step for a granted node. Returns (kind, delay or None)."""
    queue = world.queues[node]
    if not queue:
        return 2, None
    if dest_in_range:
        ins = queue.popleft()
        world.phases[node] = 0
        return 0, t - ins
    if dispatch:
        world.phases[node] += 1
        if world.phases[node] >= world.cfg.f:
            ins = queue.popleft()
            world.phases[node] = 0
            return 1, t - ins
        return 1, None
    return 2, None


def _contention_winners(pos, keys, active, ncells):
    """Pick, for every (slot, active cell) pair, the node with the smallest key."""
    ti, ni = np.nonzero(active)
    if ti.size == 0:
        return ti, ni
    group = ti.astype(np.int64) * ncells + pos[ti, ni]
    order = np.lexsort((keys[ti, ni], group))
    g = group[order]
    first = np.ones(g.size, dtype=bool)
    first[1:] = g[1:] != g[:-1]
    sel = order[first]
    return ti[sel], ni[sel]


def step(world: World, check_interference: bool = False) -> SlotEvents:
    """Advance ``world`` by one slot and report the per-node indicators."""
    cfg = world.cfg
    n, m, t = cfg.n, cfg.m, world.slot
    alpha = world.alpha
    rng = world.rng
    pos = rng.integers(0, m * m, size=n)
    keys = rng.random(n)
    coins = rng.random(n)
    gen = rng.random(n) < cfg.lam
    world.positions = pos
    ecs = ec_of_cells(m, alpha)
    active = ecs[pos] == t % (alpha * alpha)
    _, winners = _contention_winners(pos[None, :], keys[None, :], active[None, :], m * m)

    I0 = np.zeros(n, dtype=bool)
    I1 = np.zeros(n, dtype=bool)
    removed = []
    tx_cells = []
    dest = (np.arange(n) + 1) % n
    for i in sorted(winners.tolist()):
        kind, delay = _serve(world, i, bool(in_range(pos[i], pos[dest[i]], m)),
                             bool(coins[i] < cfg.q), t)
        if kind == 0:
            I0[i] = True
        elif kind == 1:
            I1[i] = True
        if kind != 2:
            tx_cells.append(pos[i])
        if delay is not None:
            removed.append((i, delay))
    tx_cells = np.array(tx_cells, dtype=np.int64)
    if check_interference:
        bad = interference_violations(tx_cells, m, cfg.delta)
        assert not bad, f"interfering transmitters in slot {t}: {bad}"

    I4 = np.array([len(q) < cfg.M for q in world.queues])
    for i in np.flatnonzero(gen & I4):
        world.queues[i].append(t)
    world.slot = t + 1
    return SlotEvents(I0=I0, I1=I1, I2=~(I0 | I1), I3=gen, I4=I4,
                      removed=removed, transmitting_cells=tx_cells)


# -- batch engine -------------------------------------------------------------

@dataclass
class EmpiricalDelay:
    samples: np.ndarray
    accepted: int
    dropped: int
    slots_run: int
    seed: int
    generated: int = 0
    occupancy: np.ndarray | None = None  # tagged node (node 0) state counts

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.generated if self.generated else float("nan")

    @property
    def drop_rate(self) -> float:
        return self.dropped / self.generated if self.generated else float("nan")

    def summary(self) -> dict:
        s = self.samples.astype(float)
        k = s.size
        mean = float(s.mean()) if k else float("nan")
        var = float(s.var(ddof=1)) if k > 1 else float("nan")
        return {
            "seed": self.seed,
            "slots": self.slots_run,
            "samples": int(k),
            "generated": self.generated,
            "accepted": self.accepted,
            "dropped": self.dropped,
            "acceptance_rate": self.acceptance_rate,
            "drop_rate": self.drop_rate,
            "mean": mean,
            "mean_se": math.sqrt(var / k) if k > 1 else float("nan"),
            "variance": var,
            # normal-theory SE of the sample variance
            "variance_se": var * math.sqrt(2.0 / (k - 1)) if k > 1 else float("nan"),
        }


def _run_one(cfg: NetworkConfig, slots: int, warmup: int, seed: int, replica: int,
             track_occupancy: bool) -> EmpiricalDelay:
    n, m, M, f = cfg.n, cfg.m, cfg.M, cfg.f
    alpha = compute_alpha(m, cfg.delta)
    a2 = alpha * alpha
    ecs = ec_of_cells(m, alpha)
    dest = (np.arange(n) + 1) % n
    rng = make_rng(seed, replica)

    queues = [deque() for _ in range(n)]
    phases = [0] * n
    samples = []
    accepted = dropped = generated = 0

    occ = np.zeros(1 + M * f, dtype=np.int64) if track_occupancy else None
    tag_state = 0
    tag_since = 0

    def tag_index():
        l = len(queues[0])
        return 0 if l == 0 else 1 + (l - 1) * f + phases[0]

    block = max(1, _BLOCK_DRAWS // n)
    for start in range(0, slots, block):
        B = min(block, slots - start)
        t_idx = np.arange(start, start + B)
        pos = rng.integers(0, m * m, size=(B, n))
        keys = rng.random((B, n))
        coins = rng.random((B, n))
        gen = rng.random((B, n)) < cfg.lam

        active = ecs[pos] == (t_idx % a2)[:, None]
        wt, wn = _contention_winners(pos, keys, active, m * m)
        w_range = in_range(pos[wt, wn], pos[wt, dest[wn]], m)
        w_disp = coins[wt, wn] < cfg.q
        at, an = np.nonzero(gen)

        wt = (wt + start).tolist()
        wn = wn.tolist()
        w_range = w_range.tolist()
        w_disp = w_disp.tolist()
        at = (at + start).tolist()
        an = an.tolist()

        wi = ai = 0
        nw, na = len(wt), len(at)
        while wi < nw or ai < na:
            t = min(wt[wi] if wi < nw else slots, at[ai] if ai < na else slots)
            touched_tag = False
            while wi < nw and wt[wi] == t:
                i = wn[wi]
                q = queues[i]
                if q:
                    if w_range[wi]:
                        ins = q.popleft()
                        phases[i] = 0
                        if ins >= warmup:
                            samples.append(t - ins)
                    elif w_disp[wi]:
                        phases[i] += 1
                        if phases[i] >= f:
                            ins = q.popleft()
                            phases[i] = 0
                            if ins >= warmup:
                                samples.append(t - ins)
                    touched_tag |= i == 0
                wi += 1
            while ai < na and at[ai] == t:
                i = an[ai]
                q = queues[i]
                post = t >= warmup
                if len(q) < M:
                    q.append(t)
                    if post:
                        accepted += 1
                elif post:
                    dropped += 1
                if post:
                    generated += 1
                touched_tag |= i == 0
                ai += 1
            if track_occupancy and touched_tag:
                new = tag_index()
                if new != tag_state:
                    # state held at the start of slots tag_since .. t
                    lo = max(tag_since, warmup)
                    if t + 1 > lo:
                        occ[tag_state] += t + 1 - lo
                    tag_state, tag_since = new, t + 1

    if track_occupancy:
        lo = max(tag_since, warmup)
        if slots > lo:
            occ[tag_state] += slots - lo
    return EmpiricalDelay(
        samples=np.asarray(samples, dtype=np.int64),
        accepted=accepted, dropped=dropped, slots_run=slots, seed=seed,
        generated=generated, occupancy=occ,
    )


def _run_star(args):
    return _run_one(*args)


def run(cfg: NetworkConfig, slots: int, warmup: int = 0, seed: int = 0,
        replicas: int = 1, track_occupancy: bool = False,
        workers: int | None = None) -> EmpiricalDelay:
    """Simulate ``replicas`` independent copies and concatenate their samples.

    Only packets inserted at or after ``warmup`` are counted; packets still
    queued when the run ends are censored.
    """
    validate_config(cfg)
    if not slots > warmup >= 0:
        raise ValueError("need slots > warmup ≥ 0")
    jobs = [(cfg, slots, warmup, seed, r, track_occupancy) for r in range(replicas)]
    workers = min(workers or worker_count(), replicas)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_star, jobs))
    else:
        parts = [_run_star(j) for j in jobs]
    occ = None
    if track_occupancy:
        occ = sum(p.occupancy for p in parts)
    return EmpiricalDelay(
        samples=np.concatenate([p.samples for p in parts]),
        accepted=sum(p.accepted for p in parts),
        dropped=sum(p.dropped for p in parts),
        generated=sum(p.generated for p in parts),
        slots_run=slots * replicas,
        seed=seed,
        occupancy=occ,
    )


@dataclass(frozen=True)
class EventFrequencies:
    freq_p0: float
    freq_p1: float
    freq_p2: float
    se_p0: float
    se_p1: float
    se_p2: float
    slots: int


def single_slot_event_frequencies(cfg: NetworkConfig, slots: int, seed: int = 0,
                                  tagged: int = 0) -> EventFrequencies:
    """Measure how often a permanently backlogged node transmits to its
    destination, dispatches, or does neither, over ``slots`` slots.

    The tagged node is held at a phase where a dispatch never empties its queue.
    """
    validate_config(cfg)
    n, m = cfg.n, cfg.m
    alpha = compute_alpha(m, cfg.delta)
    a2 = alpha * alpha
    ecs = ec_of_cells(m, alpha)
    d = (tagged + 1) % n
    rng = make_rng(seed)
    c0 = c1 = 0
    block = max(1, _BLOCK_DRAWS // n)
    for start in range(0, slots, block):
        B = min(block, slots - start)
        t_idx = np.arange(start, start + B)
        pos = rng.integers(0, m * m, size=(B, n))
        keys = rng.random((B, n))
        coins = rng.random(B)
        own = pos[:, tagged]
        active = ecs[own] == t_idx % a2
        rivals = np.where(pos == own[:, None], keys, np.inf)
        wins = active & (rivals.min(axis=1) == keys[:, tagged])
        near = in_range(own, pos[:, d], m)
        c0 += int(np.count_nonzero(wins & near))
        c1 += int(np.count_nonzero(wins & ~near & (coins < cfg.q)))
    c2 = slots - c0 - c1
    fr = [c / slots for c in (c0, c1, c2)]
    se = [math.sqrt(p * (1 - p) / slots) for p in fr]
    return EventFrequencies(*fr, *se, slots=slots)


def run_until(cfg: NetworkConfig, min_samples: int, warmup: int, seed: int = 0,
              replicas: int = 1, acceptance_rate: float | None = None,
              max_slots: int = 1 << 28) -> EmpiricalDelay:
    """Run long enough to collect at least ``min_samples`` delay samples.

    The first attempt is sized from ``acceptance_rate`` (accepted packets per
    node per slot) with 50% headroom; each retry doubles the length.
    """
    rate = acceptance_rate if acceptance_rate else cfg.lam
    if rate <= 0:
        raise ValueError("λ > 0 required to collect delay samples")
    per_replica = math.ceil(1.5 * min_samples / (replicas * cfg.n * rate))
    slots = warmup + max(per_replica, 1)
    while True:
        result = run(cfg, slots=slots, warmup=warmup, seed=seed, replicas=replicas)
        if result.samples.size >= min_samples or slots >= max_slots:
            return result
        slots = warmup + 2 * (slots - warmup)
