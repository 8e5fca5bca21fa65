"""Period-by-period simulation of the lost-sales system with lead time L.

Event order within period t: the oldest pipeline order x_1 arrives, a new
order is placed, demand is realized, and cost
``h (I + x_1 - D)^+ + p (I + x_1 - D)^-`` is charged. Leftover stock
``(I + x_1 - D)^+`` carries over; the shortfall is lost.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import distributions as dist
from . import streams


@dataclass
class SystemState:
    pipeline: list  # x_1 (arrives next) ... x_L
    on_hand: float = 0.0
    t: int = 1

    @classmethod
    def empty(cls, L: int) -> SystemState:
        if L < 1:
            raise ValueError("lead time must be at least 1")
        return cls([0.0] * L, 0.0, 1)


@dataclass(frozen=True)
class PolicySpec:
    kind: str  # constant | base_stock | zero
    level: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "base_stock", "zero"):
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if not self.level >= 0:
            raise ValueError("policy parameter must be non-negative")

    @classmethod
    def parse(cls, text: str) -> PolicySpec:
        """``zero``, ``constant:0.4`` or ``base_stock:5``. ``constant:auto``
        is resolved by the caller."""
        kind, _, arg = text.partition(":")
        if kind == "zero":
            return cls("zero")
        return cls(kind, float(arg))

    def to_json(self) -> dict:
        return {"kind": self.kind, "level": self.level}


class StepResult(NamedTuple):
    state: SystemState
    cost: float
    lost: float


def decide(policy: PolicySpec, state: SystemState) -> float:
    if policy.kind == "constant":
        return policy.level
    if policy.kind == "zero":
        return 0.0
    position = state.on_hand + sum(state.pipeline)
    return max(0.0, policy.level - position)


def step(state: SystemState, order: float, demand: float, h: float, p: float) -> StepResult:
    if order < 0:
        raise ValueError("order must be non-negative")
    delivered = state.pipeline[0]
    net = state.on_hand + delivered - demand
    cost = h * max(net, 0.0) + p * max(-net, 0.0)
    pipeline = state.pipeline[1:] + [order]
    return StepResult(SystemState(pipeline, max(net, 0.0), state.t + 1), cost, max(-net, 0.0))


class SimulationResult(NamedTuple):
    mean: float
    std_err: float
    rep_means: np.ndarray

    def ci(self, level: float = 0.99) -> tuple[float, float]:
        z = {0.95: 1.959963984540054, 0.99: 2.5758293035489004}[level]
        return self.mean - z * self.std_err, self.mean + z * self.std_err


def _panel(policy, demands, h, p, L, burn_in):
    """Run all replications in lockstep; ``demands`` has shape (reps, T).

    Returns per-replication average cost over periods burn_in+1..T and the
    on-hand inventory at the end of every period.
    """
    reps, T = demands.shape
    pipe = np.zeros((reps, L))
    head = 0  # column of x_1 in the ring buffer
    on_hand = np.zeros(reps)
    pipe_sum = np.zeros(reps)
    total = np.zeros(reps)
    ends = np.empty((reps, T))
    for t in range(T):
        if policy.kind == "constant":
            order = np.full(reps, policy.level)
        elif policy.kind == "zero":
            order = np.zeros(reps)
        else:
            order = np.maximum(0.0, policy.level - (on_hand + pipe_sum))
        delivered = pipe[:, head].copy()
        pipe[:, head] = order
        head = (head + 1) % L
        pipe_sum += order - delivered
        net = on_hand + delivered - demands[:, t]
        on_hand = np.maximum(net, 0.0)
        if t >= burn_in:
            total += h * on_hand + p * (on_hand - net)
        ends[:, t] = on_hand
    return total / (T - burn_in), ends


def demand_panel(d: dist.Demand, reps: int, T: int, seed: int, threads: int | None = None) -> np.ndarray:
    """Replication i draws its T demands from substream i of ``seed``."""
    rows = streams.map_streams(lambda i, g: dist.sample(d, g, T), seed, reps, threads)
    return np.vstack(rows)


def simulate_average_cost(d: dist.Demand, policy: PolicySpec, h: float, p: float, L: int,
                          T: int, burn_in: int | None = None, reps: int = 32, rng=None,
                          threads: int | None = None) -> SimulationResult:
    """Time-average cost over periods (burn_in, T], averaged over ``reps``
    independent replications, with the across-replication standard error.
    ``burn_in`` defaults to 10% of ``T``."""
    if burn_in is None:
        burn_in = T // 10
    if not 0 <= burn_in < T:
        raise ValueError("burn_in must lie in [0, T)")
    if L < 1 or reps < 1:
        raise ValueError("L and reps must be positive")
    seed = streams.as_seed(rng)
    means, _ = _panel(policy, demand_panel(d, reps, T, seed, threads), h, p, L, burn_in)
    se = float(np.std(means, ddof=1) / math.sqrt(reps)) if reps > 1 else math.nan
    return SimulationResult(float(means.mean()), se, means)


def on_hand_paths(d: dist.Demand, policy: PolicySpec, L: int, T: int, reps: int, rng=None,
                  threads: int | None = None) -> np.ndarray:
    """End-of-period on-hand inventory, shape (reps, T)."""
    seed = streams.as_seed(rng)
    _, ends = _panel(policy, demand_panel(d, reps, T, seed, threads), 0.0, 0.0, L, 0)
    return ends


TRACE_FIELDS = ("t", "order", "delivered", "demand", "on_hand_end", "lost", "cost")


def trace(d: dist.Demand, policy: PolicySpec, h: float, p: float, L: int, T: int, rng=None) -> list[dict]:
    """Per-period records of one replication (substream 0 of the seed),
    produced by repeated :func:`step`."""
    seed = streams.as_seed(rng)
    demands = dist.sample(d, streams.substream(seed, 0), T)
    state = SystemState.empty(L)
    rows = []
    for t in range(T):
        order = decide(policy, state)
        delivered = state.pipeline[0]
        state, cost, lost = step(state, order, float(demands[t]), h, p)
        rows.append({"t": t + 1, "order": order, "delivered": delivered, "demand": float(demands[t]),
                     "on_hand_end": state.on_hand, "lost": lost, "cost": cost})
    return rows


def write_trace(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=TRACE_FIELDS)
        w.writeheader()
        w.writerows(rows)
