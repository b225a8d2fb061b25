"""Brute-force optimal solvers for desk-scale verification.

optimal_soc searches the joint configuration space exhaustively (A* with the
per-agent shortest-path sum as admissible heuristic); it is the independent
reference the planner is checked against and deliberately shares no search
code with it.  Limits are enforced: at most 3 agents and 16 vertices.
"""

from __future__ import annotations

import heapq
from itertools import product

from .grid import INF, MapfInstance

MAX_AGENTS = 3
MAX_VERTICES = 16


class OracleLimitError(ValueError):
    """Input exceeds the deliberate desk-scale limits of the oracle."""


def _check_limits(instance: MapfInstance) -> None:
    if instance.n_agents > MAX_AGENTS:
        raise OracleLimitError(f"oracle supports at most {MAX_AGENTS} agents")
    if instance.graph.vertex_count > MAX_VERTICES:
        raise OracleLimitError(f"oracle supports at most {MAX_VERTICES} vertices")


def default_makespan_cap(instance: MapfInstance) -> int:
    gamma_sum = sum(g[s] for g, s in zip(instance.gammas, instance.starts))
    return gamma_sum + instance.graph.vertex_count


def _joint_successors(instance: MapfInstance, config: tuple[int, ...]):
    """All conflict-free one-step successor configurations."""
    options = [instance.graph.neighbors(v) for v in config]
    for nxt in product(*options):
        if len(set(nxt)) != len(nxt):
            continue
        swap = False
        pos = {v: i for i, v in enumerate(config)}
        for i, v in enumerate(nxt):
            j = pos.get(v)
            if j is not None and j != i and nxt[j] == config[i] and v != config[i]:
                swap = True
                break
        if not swap:
            yield nxt


def optimal_soc(instance: MapfInstance, makespan_cap: int | None = None) -> int:
    """Minimal sum-of-costs over all conflict-free joint trajectories reaching
    all goals within the makespan cap; INF if none exists."""
    _check_limits(instance)
    if makespan_cap is None:
        makespan_cap = default_makespan_cap(instance)
    goals = instance.goals
    start = instance.starts
    if start == goals:
        return 0

    def heuristic(config) -> int:
        return sum(instance.gammas[i][v] for i, v in enumerate(config))

    def step_cost(config) -> int:
        return sum(1 for i, v in enumerate(config) if v != goals[i])

    h0 = heuristic(start)
    if h0 >= INF:
        return INF
    heap: list[tuple[int, int, int, tuple[int, ...]]] = [(h0, 0, 0, start)]
    best: dict[tuple[tuple[int, ...], int], int] = {(start, 0): 0}
    while heap:
        f, g, t, config = heapq.heappop(heap)
        if config == goals:
            return g
        if best.get((config, t), INF) < g:
            continue
        if t >= makespan_cap:
            continue
        g2 = g + step_cost(config)
        for nxt in _joint_successors(instance, config):
            key = (nxt, t + 1)
            if g2 < best.get(key, INF):
                best[key] = g2
                heapq.heappush(heap, (g2 + heuristic(nxt), g2, t + 1, nxt))
    return INF


def exhaustive_exclusion_check(
    instance: MapfInstance,
    budget: int,
    agent: int,
    vertex: int,
    makespan_cap: int | None = None,
) -> bool:
    """True iff every conflict-free goal-reaching joint trajectory within the
    cap in which `agent` visits `vertex` costs strictly more than `budget`."""
    _check_limits(instance)
    if makespan_cap is None:
        makespan_cap = default_makespan_cap(instance)
    goals = instance.goals
    start = instance.starts

    def heuristic(config) -> int:
        return sum(instance.gammas[i][v] for i, v in enumerate(config))

    def step_cost(config) -> int:
        return sum(1 for i, v in enumerate(config) if v != goals[i])

    start_key = (start, start[agent] == vertex)
    heap = [(heuristic(start), 0, 0, start, start[agent] == vertex)]
    best: dict[tuple[tuple[int, ...], int, bool], int] = {(start, 0, start_key[1]): 0}
    cheapest = INF
    while heap:
        f, g, t, config, visited = heapq.heappop(heap)
        if config == goals and visited:
            cheapest = g
            break
        if best.get((config, t, visited), INF) < g:
            continue
        if t >= makespan_cap:
            continue
        g2 = g + step_cost(config)
        for nxt in _joint_successors(instance, config):
            hit = visited or nxt[agent] == vertex
            key = (nxt, t + 1, hit)
            if g2 < best.get(key, INF):
                best[key] = g2
                heapq.heappush(heap, (g2 + heuristic(nxt), g2, t + 1, nxt, hit))
    return cheapest > budget
