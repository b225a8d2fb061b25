"""Pluggable complete backup solvers producing conflict-free goal-reaching plans.

The reference implementation follows the LaCAM scheme: a lazy depth-first
search over joint configurations whose successors are proposed by a
PIBT-style one-step generator (priority inheritance resolves pushes), with
per-agent forced-move constraints enumerated lazily to retain completeness.
It requires a symmetric graph; a full-horizon CBS backup is provided as a
slow-but-tight alternative for small groups.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field

from .grid import INF, Graph, MapfInstance, is_symmetric
from .trajectory import JointTrajectory, Trajectory

Configuration = tuple[int, ...]


class BackupError(RuntimeError):
    """Backup failure: unsupported graph class or infeasible sub-instance."""


class BackupDefect(RuntimeError):
    """Internal completeness violation (search exhausted on a feasible input)."""


class BackupController:
    """Contract: rollout returns mutually conflict-free trajectories from the
    given positions to the agents' goals, for any feasible sub-instance."""

    name = "abstract"

    def supports(self, graph: Graph) -> bool:
        raise NotImplementedError

    def rollout(
        self, instance: MapfInstance, agents: tuple[int, ...], start: Configuration
    ) -> JointTrajectory:
        """Conflict-free goal-reaching trajectories for `agents` from `start`.

        `start` holds one vertex per member of `agents`, pairwise distinct.
        """
        raise NotImplementedError


@dataclass
class _LowNode:
    """Lazily enumerated forced-move constraints: the first `depth` agents in
    the parent's order are pinned to `where`."""

    who: tuple[int, ...] = ()
    where: tuple[int, ...] = ()

    @property
    def depth(self) -> int:
        return len(self.who)


@dataclass
class _HighNode:
    config: Configuration
    parent: "._HighNode | None"
    order: tuple[int, ...]  # member indices, highest priority first
    elevation: tuple[int, ...]
    tree: deque = field(default_factory=deque)


class LacamBackup(BackupController):
    """Lazy configuration-tree search with priority-inheritance successors."""

    name = "lacam-ref"

    def __init__(self, seed: int = 0):
        self.seed = seed

    def supports(self, graph: Graph) -> bool:
        return is_symmetric(graph)

    def rollout(
        self, instance: MapfInstance, agents: tuple[int, ...], start: Configuration
    ) -> JointTrajectory:
        graph = instance.graph
        if not self.supports(graph):
            raise BackupError("lacam-ref requires a symmetric graph")
        n = len(agents)
        if n == 0:
            return JointTrajectory([])
        if len(set(start)) != n:
            raise BackupError("start configuration has coinciding agents")
        goals = tuple(instance.goals[a] for a in agents)
        gammas = [instance.gammas[a] for a in agents]
        for i, v in enumerate(start):
            if gammas[i][v] >= INF:
                raise BackupError(f"agent {agents[i]} cannot reach its goal from {v}")
        rng = random.Random(self.seed)
        makespan_cap = graph.vertex_count * n * 4
        iteration_cap = max(makespan_cap * 8 + 1000, 2_000_000)

        def make_order(elevation: tuple[int, ...]) -> tuple[int, ...]:
            # Highest elevation first, then larger initial gamma, then lower id.
            return tuple(
                sorted(range(n), key=lambda i: (-elevation[i], -gammas[i][start[i]], i))
            )

        root_elev = tuple(0 for _ in range(n))
        root = _HighNode(start, None, make_order(root_elev), root_elev, deque([_LowNode()]))
        explored: dict[Configuration, _HighNode] = {start: root}
        stack: list[_HighNode] = [root]

        iterations = 0
        while stack:
            iterations += 1
            if iterations > iteration_cap:
                raise BackupDefect("lacam-ref iteration cap exceeded on a feasible input")
            node = stack[-1]
            if node.config == goals:
                return self._backtrack(node, agents, makespan_cap)
            if not node.tree:
                stack.pop()
                continue
            low = node.tree.popleft()
            if low.depth < n:
                member = node.order[low.depth]
                here = node.config[member]
                for u in (here, *sorted(w for w in graph.neighbors(here) if w != here)):
                    node.tree.append(_LowNode(low.who + (member,), low.where + (u,)))
            forced = dict(zip(low.who, low.where))
            config = _pibt_step(graph, node.config, node.order, gammas, forced, rng)
            if config is None:
                continue
            known = explored.get(config)
            if known is not None:
                stack.append(known)
                continue
            elevation = tuple(
                0 if config[i] == goals[i] else node.elevation[i] + 1 for i in range(n)
            )
            child = _HighNode(config, node, make_order(elevation), elevation, deque([_LowNode()]))
            explored[config] = child
            stack.append(child)
        raise BackupDefect("lacam-ref exhausted its search tree on a feasible input")

    def _backtrack(
        self, node: _HighNode, agents: tuple[int, ...], makespan_cap: int
    ) -> JointTrajectory:
        configs: list[Configuration] = []
        cur: _HighNode | None = node
        while cur is not None:
            configs.append(cur.config)
            cur = cur.parent
        configs.reverse()
        if len(configs) - 1 > makespan_cap:
            raise BackupDefect(f"rollout makespan exceeds safety cap {makespan_cap}")
        return JointTrajectory(
            [
                Trajectory(a, tuple(cfg[i] for cfg in configs))
                for i, a in enumerate(agents)
            ]
        )


def _pibt_step(
    graph: Graph,
    config: Configuration,
    order: tuple[int, ...],
    gammas,
    forced: dict[int, int],
    rng: random.Random,
) -> Configuration | None:
    """One-step successor configuration via priority inheritance.

    `forced` pins members to target vertices (must be adjacent-or-same); the
    step fails (None) when the pins cannot be completed into a valid
    configuration (no coinciding agents, no swaps).
    """
    n = len(config)
    occupant_now = {v: i for i, v in enumerate(config)}
    nxt: list[int | None] = [None] * n
    occupied_next: dict[int, int] = {}

    # Pin forced members up front; the PIBT pass plans around them and the
    # final validation rejects configurations the pins made inconsistent.
    for member, target in forced.items():
        if target not in graph.neighbors(config[member]):
            return None
        if target in occupied_next:
            return None
        nxt[member] = target
        occupied_next[target] = member

    def pibt(i: int) -> bool:
        candidates = [config[i]] + [w for w in graph.neighbors(config[i]) if w != config[i]]
        rng.shuffle(candidates)
        candidates.sort(key=lambda w: gammas[i][w])
        for w in candidates:
            if w in occupied_next:
                continue
            j = occupant_now.get(w)
            if j is not None and j != i and nxt[j] == config[i]:
                continue  # swap
            nxt[i] = w
            occupied_next[w] = i
            if j is not None and j != i and nxt[j] is None and not pibt(j):
                continue
            return True
        nxt[i] = config[i]
        occupied_next[config[i]] = i
        return False

    for member in order:
        if nxt[member] is None:
            pibt(member)

    result = tuple(nxt)  # type: ignore[arg-type]
    for member, target in forced.items():
        if result[member] != target:
            return None
    if len(set(result)) != n:
        return None
    for i in range(n):
        j = occupant_now.get(result[i])
        if j is not None and j != i and result[j] == config[i] and result[i] != config[i]:
            return None  # swap
    return result


class ClassicCbsBackup(BackupController):
    """Full-horizon CBS as a slow but cost-tight backup for small groups."""

    name = "cbs-full"

    def __init__(self, seed: int = 0):
        self.seed = seed

    def supports(self, graph: Graph) -> bool:
        return True

    def rollout(
        self, instance: MapfInstance, agents: tuple[int, ...], start: Configuration
    ) -> JointTrajectory:
        from .cbs import InfeasibleInstanceError, run_classic_cbs
        from .grid import MapfInstance as _Instance

        if not agents:
            return JointTrajectory([])
        sub = _Instance(
            instance.graph, tuple(start), tuple(instance.goals[a] for a in agents)
        )
        try:
            solution = run_classic_cbs(sub)
        except InfeasibleInstanceError as exc:
            raise BackupError(str(exc)) from exc
        return JointTrajectory(
            [
                Trajectory(a, solution[i].vertices)
                for i, a in enumerate(agents)
            ]
        )


_BACKUPS = {"lacam-ref": LacamBackup, "cbs-full": ClassicCbsBackup}


def make_backup(name: str, seed: int = 0) -> BackupController:
    """Backup selection by name ("lacam-ref" or "cbs-full")."""
    try:
        cls = _BACKUPS[name]
    except KeyError:
        raise BackupError(f"unknown backup controller {name!r}") from None
    return cls(seed=seed)
