"""Constraint-tree search over agent groups.

run_adaptive implements the finite-horizon best-first search with a growing
running horizon: nodes store H_max-step trajectories, conflicts are resolved
only inside the active prefix, and the horizon is extended in place whenever
the dequeued node's prefix is conflict-free.  Because trajectories are
gamma-greedy past their last constrained step, node costs are invariant under
horizon extension and the tree is reused across increments.

run_classic_cbs drives the same machinery to a horizon long enough to cover
an optimal solution, which makes it plain full-horizon CBS.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field
from typing import Callable

from .grid import INF, MapfInstance, sat_add
from .lowlevel import ConstraintSet, plan_constrained
from .trajectory import (
    Conflict,
    JointTrajectory,
    Trajectory,
    count_conflicts,
    detect_first_conflict,
    soc,
)


class InfeasibleInstanceError(RuntimeError):
    """Some agent cannot reach its goal from the given state."""


class ExpansionCapExceeded(RuntimeError):
    """run_classic_cbs hit the caller-imposed node expansion cap."""


@dataclass
class ConstraintTreeNode:
    """Constraint set, per-agent H_max trajectories, and prefix cost."""

    constraints: ConstraintSet
    trajectories: dict[int, Trajectory]  # agent id -> H_max trajectory
    agent_costs: dict[int, int]
    cost: int
    node_id: int = 0
    parent_id: int | None = None

    def joint(self, agents: tuple[int, ...]) -> JointTrajectory:
        return JointTrajectory([self.trajectories[a] for a in agents])


@dataclass
class SearchOutcome:
    """Result of an adaptive search run.

    best_node / best_h describe the longest conflict-free prefix found
    (best_node is None when not even an h_r = 1 prefix was certified).
    reason is one of: "horizon", "deadline", "exhausted", "no-prefix".
    """

    best_node: ConstraintTreeNode | None
    best_h: int
    reason: str
    expansions: int = 0
    dequeues: int = 0


TraceFn = Callable[[dict], None]


def make_root(
    instance: MapfInstance,
    state,
    h_max: int,
    agents: tuple[int, ...] | None = None,
) -> ConstraintTreeNode:
    """Root node: empty constraints, unconstrained optimal H_max trajectories."""
    from .lowlevel import greedy_path

    if agents is None:
        agents = tuple(range(instance.n_agents))
    trajectories: dict[int, Trajectory] = {}
    agent_costs: dict[int, int] = {}
    total = 0
    for a in agents:
        gamma = instance.gammas[a]
        start = state[a]
        if gamma[start] >= INF:
            raise InfeasibleInstanceError(f"agent {a} cannot reach its goal from {start}")
        trajectories[a] = Trajectory(a, tuple(greedy_path(instance.graph, start, gamma, h_max)))
        agent_costs[a] = gamma[start]
        total = sat_add(total, gamma[start])
    return ConstraintTreeNode(ConstraintSet(), trajectories, agent_costs, total)


def expand(
    node: ConstraintTreeNode,
    conflict: Conflict,
    instance: MapfInstance,
    state,
    h_max: int,
    agents: tuple[int, ...],
) -> list[ConstraintTreeNode]:
    """Children resolving the conflict, one added constraint each.

    Only the newly constrained agent is replanned; children whose replan is
    infeasible are omitted.  Edge conflicts reported at arrival time t become
    departure-time constraints at t - 1.
    """
    children: list[ConstraintTreeNode] = []
    i, j = conflict.agents
    members = (agents[i], agents[j])
    for k, agent in enumerate(members):
        if conflict.kind == "vertex":
            constraints = node.constraints.with_vertex(agent, conflict.time, conflict.location)
        else:
            u, w = conflict.location
            edge = (u, w) if k == 0 else (w, u)
            constraints = node.constraints.with_edge(agent, conflict.time - 1, edge)
        plan = plan_constrained(
            instance.graph, agent, state[agent], constraints, h_max, instance.gammas[agent]
        )
        if plan is None:
            continue
        traj, cost = plan
        trajectories = dict(node.trajectories)
        trajectories[agent] = traj
        agent_costs = dict(node.agent_costs)
        agent_costs[agent] = cost
        children.append(
            ConstraintTreeNode(
                constraints, trajectories, agent_costs, sum(agent_costs.values()),
                parent_id=node.node_id,
            )
        )
    return children


def run_adaptive(
    instance: MapfInstance,
    state,
    h_max: int,
    deadline_s: float | None,
    on_prefix_found: Callable[[ConstraintTreeNode, int], None] | None = None,
    agents: tuple[int, ...] | None = None,
    trace: TraceFn | None = None,
    expansion_cap: int | None = None,
) -> SearchOutcome:
    """Best-first adaptive-horizon search over the constraint tree.

    on_prefix_found is invoked with (node, h_r) whenever a dequeued node's
    active prefix is conflict-free, and once more at h_r = H_max before the
    final break.  deadline_s is a wall-clock budget in seconds (None = no
    limit), checked once per dequeue.
    """
    if agents is None:
        agents = tuple(range(instance.n_agents))
    if not agents:
        root = ConstraintTreeNode(ConstraintSet(), {}, {}, 0)
        return SearchOutcome(root, h_max, "horizon")
    start_time = time.perf_counter()
    root = make_root(instance, state, h_max, agents)
    next_id = 1
    seq = 0
    h_r = 1
    heap: list[tuple[int, int, int, ConstraintTreeNode]] = []
    heapq.heappush(heap, (root.cost, count_conflicts(root.joint(agents), h_r), seq, root))
    best_node: ConstraintTreeNode | None = None
    best_h = 0
    expansions = 0
    dequeues = 0
    reason = "exhausted"
    while heap:
        if deadline_s is not None and time.perf_counter() - start_time >= deadline_s:
            reason = "deadline"
            break
        if expansion_cap is not None and expansions >= expansion_cap:
            reason = "cap"
            break
        _, _, _, node = heapq.heappop(heap)
        dequeues += 1
        joint = node.joint(agents)
        conflict = detect_first_conflict(joint, h_r)
        if conflict is None:
            if on_prefix_found is not None:
                on_prefix_found(node, h_r)
            if h_r > best_h:
                best_node, best_h = node, h_r
            while conflict is None and h_r < h_max:
                h_r += 1
                conflict = detect_first_conflict(joint, h_r)
            if conflict is None:  # h_r == h_max with a conflict-free prefix
                best_node, best_h = node, h_r
                if on_prefix_found is not None:
                    on_prefix_found(node, h_r)
                reason = "horizon"
                break
            if h_r - 1 > best_h:
                best_node, best_h = node, h_r - 1
        for child in expand(node, conflict, instance, state, h_max, agents):
            child.node_id = next_id
            next_id += 1
            seq += 1
            if trace is not None:
                trace(
                    {
                        "node": child.node_id,
                        "parent": child.parent_id,
                        "cost": child.cost,
                        "h_r": h_r,
                    }
                )
            heapq.heappush(
                heap, (child.cost, count_conflicts(child.joint(agents), h_r), seq, child)
            )
        expansions += 1
    if best_node is None and reason == "exhausted":
        reason = "no-prefix"
    if best_node is None and reason == "deadline":
        reason = "no-prefix"
    return SearchOutcome(best_node, best_h, reason, expansions, dequeues)


def trim_to_goals(joint: JointTrajectory, goals) -> JointTrajectory:
    """Drop trailing timesteps where every agent already sits at its goal."""
    end = joint.makespan
    while end > 0 and all(
        traj[end] == goals[traj.agent] and traj[end - 1] == goals[traj.agent]
        for traj in joint.trajectories
    ):
        end -= 1
    return JointTrajectory(
        [Trajectory(t.agent, t.vertices[: end + 1]) for t in joint.trajectories]
    )


def run_classic_cbs(
    instance: MapfInstance,
    h_max: int | None = None,
    expansion_cap: int | None = None,
) -> JointTrajectory:
    """Full-horizon CBS: SOC-optimal conflict-free solution.

    When h_max is not given, a backup rollout supplies a sound horizon bound
    (its cost upper-bounds the optimal SOC, which upper-bounds the optimal
    makespan).
    """
    if instance.n_agents == 0:
        return JointTrajectory([])
    if h_max is None:
        from .backup import LacamBackup

        rollout = LacamBackup(seed=0).rollout(
            instance, tuple(range(instance.n_agents)), instance.starts
        )
        h_max = max(soc(rollout, instance.goals), 1)
    outcome = run_adaptive(instance, instance.starts, h_max, None,
                           expansion_cap=expansion_cap)
    if outcome.reason == "cap":
        raise ExpansionCapExceeded(f"expansion cap {expansion_cap} exceeded")
    if outcome.best_node is None or outcome.best_h < h_max:
        raise InfeasibleInstanceError("no conflict-free solution found (infeasible instance?)")
    agents = tuple(range(instance.n_agents))
    return trim_to_goals(outcome.best_node.joint(agents), instance.goals)
