"""Per-timestep orchestration: certificate inheritance, adaptive search with
certificate improvement, slackness-triggered factorization, and movement
extraction.

Three modes are provided:
  * "daccbs"      - certificates + adaptive search + factorization;
  * "accbs"       - certificate-free adaptive search (ablation baseline);
  * "backup-only" - follow the backup certificate with no search.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .cbs import run_adaptive
from .certificate import (
    Certificate,
    Movement,
    advance,
    build_candidate,
    first_movement,
    init_certificate,
    try_improve,
)
from .factorization import partition, reachable_region, should_refactor, slackness
from .grid import INF, MapfInstance


MODES = ("daccbs", "accbs", "backup-only")


@dataclass
class ControllerConfig:
    h_max: int = 128
    t_max_ms: float = 100.0
    slack_threshold: int = 1
    backup: str = "lacam-ref"
    mode: str = "daccbs"
    seed: int = 0
    parallel_groups: bool = False
    debug_checks: bool = False

    def __post_init__(self) -> None:
        if self.h_max < 1:
            raise ValueError("h_max must be >= 1")
        if self.t_max_ms < 0:
            raise ValueError("t_max_ms must be >= 0")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")


@dataclass
class GroupState:
    """An agent group with its certificate and last-factorization slack."""

    group_id: int
    agents: tuple[int, ...]
    certificate: Certificate
    slack_last: int


@dataclass
class _GroupOutcome:
    groups: list[GroupState]
    improved: bool
    h_reached: int
    trace: dict | None  # factorization trace entry, if a split was attempted


class FleetController:
    """Closed-loop controller answering one movement query per timestep."""

    def __init__(self, instance: MapfInstance, config: ControllerConfig):
        from .backup import make_backup

        self.instance = instance
        self.config = config
        self.backup = make_backup(config.backup, seed=config.seed)
        self.groups: list[GroupState] | None = None
        self.t = 0
        self.initial_budget: int | None = None
        self.budget_trace: list[tuple[int, int, bool]] = []
        self.factorization_trace: list[dict] = []
        self._next_group_id = 0
        self._prev_regions: dict[int, frozenset[int]] = {}

    # -- daccbs / backup-only -------------------------------------------------

    def plan_step(self, state) -> tuple[Movement, dict]:
        """Movement for the current state plus a step telemetry record."""
        t0 = time.perf_counter()
        if self.config.mode == "accbs":
            movement, telem = self._plan_step_accbs(state)
            telem["wall_ms"] = (time.perf_counter() - t0) * 1000.0
            self.t += 1
            return movement, telem

        if self.groups is None:
            self._initialize(state)
        groups = self.groups
        assert groups is not None
        deadline_s = self.config.t_max_ms / 1000.0
        if not self.config.parallel_groups and groups:
            deadline_s /= len(groups)

        if self.config.parallel_groups and len(groups) > 1:
            with ThreadPoolExecutor(max_workers=len(groups)) as pool:
                outcomes = list(
                    pool.map(lambda g: self._plan_group(g, state, deadline_s), groups)
                )
        else:
            outcomes = [self._plan_group(g, state, deadline_s) for g in groups]

        new_groups: list[GroupState] = []
        improved_any = False
        group_telems = []
        for group, outcome in zip(groups, outcomes):
            for g in outcome.groups:
                if g.group_id < 0:  # fresh split; ids assigned single-threadedly
                    g.group_id = self._take_group_id()
            new_groups.extend(outcome.groups)
            improved_any = improved_any or outcome.improved
            if outcome.trace is not None:
                self.factorization_trace.append(outcome.trace)
            for g in outcome.groups:
                group_telems.append(
                    {
                        "id": g.group_id,
                        "size": len(g.agents),
                        "budget": g.certificate.budget,
                        "slack": g.slack_last,
                        "h_r": outcome.h_reached,
                        "improved": outcome.improved,
                    }
                )
        self.groups = new_groups

        if self.config.debug_checks:
            self._debug_assertions(state)

        total_budget = sum(g.certificate.budget for g in new_groups)
        self.budget_trace.append((self.t, total_budget, improved_any))

        movement: Movement = {}
        for g in new_groups:
            movement.update(first_movement(g.certificate))
        telem = {
            "t": self.t,
            "mode": self.config.mode,
            "k_groups": len(new_groups),
            "budget": total_budget,
            "improved": improved_any,
            "groups": group_telems,
            "wall_ms": (time.perf_counter() - t0) * 1000.0,
        }
        self.t += 1
        return movement, telem

    def _initialize(self, state) -> None:
        agents = tuple(range(self.instance.n_agents))
        if agents:
            cert = init_certificate(self.backup, self.instance, state, agents)
            self.groups = [GroupState(self._take_group_id(), agents, cert, INF)]
            self.initial_budget = cert.budget
        else:
            self.groups = []
            self.initial_budget = 0

    def _take_group_id(self) -> int:
        gid = self._next_group_id
        self._next_group_id += 1
        return gid

    def _plan_group(self, group: GroupState, state, deadline_s: float) -> _GroupOutcome:
        instance = self.instance
        cert = group.certificate
        if self.t > 0:
            cert = advance(cert, state)

        improved = False
        h_reached = 0

        def on_prefix(node, h_r: int) -> None:
            nonlocal cert, improved, h_reached
            h_reached = max(h_reached, h_r)
            # Node cost equals prefix running cost plus the gamma sum at the
            # prefix terminal, a lower bound on any completion's cost.
            if node.cost >= cert.budget:
                return
            prefix = {a: node.trajectories[a].vertices[: h_r + 1] for a in group.agents}
            candidate = build_candidate(prefix, self.backup, instance, group.agents)
            if candidate is None:
                return
            cert2, ok = try_improve(cert, candidate, instance, state)
            if ok:
                cert, improved = cert2, True

        if self.config.mode == "daccbs" and deadline_s > 0:
            run_adaptive(
                instance,
                state,
                self.config.h_max,
                deadline_s,
                on_prefix_found=on_prefix,
                agents=group.agents,
            )

        slack = slackness(group.agents, cert.budget, state, instance.gammas)
        trace = None
        if should_refactor(group.slack_last, slack, self.config.slack_threshold):
            regions = {
                a: reachable_region(instance.graph, a, state, slack, instance.gammas[a])
                for a in group.agents
            }
            parts = partition(regions)
            subgroups = []
            for part in parts:
                sub_cert = cert.restricted(part)
                sub_slack = slackness(part, sub_cert.budget, state, instance.gammas)
                subgroups.append(GroupState(-1, part, sub_cert, sub_slack))
            trace = {
                "t": self.t,
                "group": group.group_id,
                "slack": slack,
                "k": len(parts),
                "sizes": [len(p) for p in parts],
            }
            return _GroupOutcome(subgroups, improved, h_reached, trace)
        return _GroupOutcome(
            [GroupState(group.group_id, group.agents, cert, group.slack_last)],
            improved,
            h_reached,
            None,
        )

    # -- accbs ----------------------------------------------------------------

    def _plan_step_accbs(self, state) -> tuple[Movement, dict]:
        agents = tuple(range(self.instance.n_agents))
        outcome = run_adaptive(
            self.instance, state, self.config.h_max, self.config.t_max_ms / 1000.0,
            agents=agents,
        )
        movement: Movement = {}
        if outcome.best_node is not None and outcome.best_h >= 1:
            for a in agents:
                traj = outcome.best_node.trajectories[a]
                movement[a] = (traj[0], traj[1])
        else:
            movement = {a: (state[a], state[a]) for a in agents}
        telem = {
            "t": self.t,
            "mode": "accbs",
            "h_r": outcome.best_h,
            "reason": outcome.reason,
            "expansions": outcome.expansions,
        }
        return movement, telem

    # -- debug assertions (shrinkage / inheritability) ------------------------

    def _debug_assertions(self, state) -> None:
        assert self.groups is not None
        regions: dict[int, frozenset[int]] = {}
        owner: dict[int, int] = {}
        for g in self.groups:
            slack = slackness(g.agents, g.certificate.budget, state, self.instance.gammas)
            for a in g.agents:
                region = reachable_region(
                    self.instance.graph, a, state, slack, self.instance.gammas[a]
                )
                regions[a] = region
                prev = self._prev_regions.get(a)
                if prev is not None and not region <= prev:
                    raise AssertionError(
                        f"t={self.t}: region of agent {a} grew (shrinkage violated)"
                    )
                for v in region:
                    other = owner.get(v)
                    if other is not None and other != g.group_id:
                        raise AssertionError(
                            f"t={self.t}: regions of groups {other} and "
                            f"{g.group_id} intersect at vertex {v}"
                        )
                    owner[v] = g.group_id
        self._prev_regions = regions
