"""Incumbent certificate plans and their budget bookkeeping.

A certificate is a mutually conflict-free trajectory set from the group's
current positions to its goals, together with its cost (the fleet budget).
Across timesteps it is inherited by dropping the executed first step, which
decreases the budget by exactly the number of off-goal agents; within a
timestep it is replaced only by a strictly cheaper conflict-free candidate.
"""

from __future__ import annotations

from dataclasses import dataclass

from .backup import BackupController, BackupError
from .grid import MapfInstance
from .trajectory import JointTrajectory, Trajectory, is_conflict_free, path_cost


class CertificateError(RuntimeError):
    """Certificate contract violation (invalid update, backup failure, ...)."""


Movement = dict[int, tuple[int, int]]  # agent id -> (from, to)


@dataclass(frozen=True)
class Certificate:
    """Conflict-free full plan for a group of agents plus its budget.

    paths[a] is agent a's vertex sequence from its current position to its
    goal (a singleton once the agent sits at the goal).  budget equals the
    total running cost of the paths.
    """

    agents: tuple[int, ...]
    paths: dict[int, tuple[int, ...]]
    budget: int

    def joint(self) -> JointTrajectory:
        return JointTrajectory([Trajectory(a, self.paths[a]) for a in self.agents])

    def restricted(self, agents: tuple[int, ...]) -> "Certificate":
        """Sub-certificate for a subset of the group; budget is the cost of
        the subset's own trajectories (budgets are additive per agent)."""
        paths = {a: self.paths[a] for a in agents}
        budget = sum(path_cost(paths[a], paths[a][-1]) for a in agents)
        return Certificate(agents, paths, budget)

    def validate(self, instance: MapfInstance, state) -> None:
        """Re-check all certificate conditions; raises on violation."""
        for a in self.agents:
            path = self.paths[a]
            if path[0] != state[a]:
                raise CertificateError(f"agent {a}: certificate does not start at its state")
            if path[-1] != instance.goals[a]:
                raise CertificateError(f"agent {a}: certificate does not end at its goal")
            Trajectory(a, path).validate_edges(instance.graph)
        if not is_conflict_free(self.joint()):
            raise CertificateError("certificate trajectories conflict")
        if self.budget != plan_cost(self.paths, instance):
            raise CertificateError("budget disagrees with trajectory cost")


def plan_cost(paths: dict[int, tuple[int, ...]], instance: MapfInstance) -> int:
    """Total running cost of full per-agent plans (terminal cost-to-go is 0)."""
    return sum(path_cost(path, instance.goals[a]) for a, path in paths.items())


def init_certificate(
    backup: BackupController, instance: MapfInstance, state, group: tuple[int, ...]
) -> Certificate:
    """Certificate from a backup rollout at the current state."""
    try:
        rollout = backup.rollout(instance, group, tuple(state[a] for a in group))
    except BackupError as exc:
        raise CertificateError(f"backup failed on a feasible group: {exc}") from exc
    paths = {traj.agent: _strip_goal_waits(traj.vertices) for traj in rollout.trajectories}
    return Certificate(group, paths, plan_cost(paths, instance))


def _strip_goal_waits(vertices: tuple[int, ...]) -> tuple[int, ...]:
    end = len(vertices) - 1
    while end > 0 and vertices[end - 1] == vertices[-1]:
        end -= 1
    return vertices[: end + 1]


def advance(cert: Certificate, executed_state) -> Certificate:
    """Across-timesteps inheritance: drop the executed first step.

    executed_state must equal the certificate's second configuration; the
    budget decreases by exactly the number of off-goal agents.
    """
    paths: dict[int, tuple[int, ...]] = {}
    spent = 0
    for a in cert.agents:
        path = cert.paths[a]
        expected = path[1] if len(path) > 1 else path[0]
        if executed_state[a] != expected:
            raise CertificateError(
                f"agent {a}: executed state {executed_state[a]} is not the "
                f"certificate's next step {expected}"
            )
        if path[0] != path[-1]:
            spent += 1
        paths[a] = path[1:] if len(path) > 1 else path
    return Certificate(cert.agents, paths, cert.budget - spent)


def try_improve(
    cert: Certificate, candidate: dict[int, tuple[int, ...]], instance: MapfInstance, state
) -> tuple[Certificate, bool]:
    """Within-timestep update: adopt the candidate iff it is a valid
    conflict-free plan with cost strictly below the incumbent budget."""
    if set(candidate) != set(cert.agents):
        return cert, False
    for a in cert.agents:
        path = candidate[a]
        if not path or path[0] != state[a] or path[-1] != instance.goals[a]:
            return cert, False
        for u, v in zip(path, path[1:]):
            if not instance.graph.has_edge(u, v):
                return cert, False
    paths = {a: _strip_goal_waits(candidate[a]) for a in cert.agents}
    cost = plan_cost(paths, instance)
    if cost >= cert.budget:
        return cert, False
    joint = JointTrajectory([Trajectory(a, candidate[a]) for a in cert.agents])
    if not is_conflict_free(joint):
        return cert, False
    return Certificate(cert.agents, paths, cost), True


def build_candidate(
    prefix: dict[int, tuple[int, ...]],
    backup: BackupController,
    instance: MapfInstance,
    group: tuple[int, ...],
) -> dict[int, tuple[int, ...]] | None:
    """Concatenate a conflict-free prefix with a backup tail to the goals.

    Returns None when the backup cannot produce a tail (caller keeps the
    incumbent certificate).
    """
    terminal = {a: prefix[a][-1] for a in group}
    if all(terminal[a] == instance.goals[a] for a in group):
        return dict(prefix)
    try:
        tail = backup.rollout(instance, group, tuple(terminal[a] for a in group))
    except BackupError:
        return None
    candidate = {}
    for traj in tail.trajectories:
        candidate[traj.agent] = prefix[traj.agent] + traj.vertices[1:]
    return candidate


def first_movement(cert: Certificate) -> Movement:
    """Per-agent first-step edge of the certificate (self-loop for singletons)."""
    movement: Movement = {}
    for a in cert.agents:
        path = cert.paths[a]
        movement[a] = (path[0], path[1] if len(path) > 1 else path[0])
    return movement
