"""Slackness, reachable regions, partitioning, refactor trigger."""

import pytest

from daccbs import (
    BudgetInvariantError,
    MapfInstance,
    goal_distance_field,
    partition,
    reachable_region,
    should_refactor,
    slackness,
)

from conftest import chain_graph, make_grid


class TestSlackness:
    def test_tight_budget(self):
        g = chain_graph(5)
        inst = MapfInstance(g, (0,), (4,))
        assert slackness((0,), 4, (0,), inst.gammas) == 0

    def test_single_agent_slack(self):
        g = chain_graph(5)
        inst = MapfInstance(g, (0,), (4,))
        assert slackness((0,), 7, (0,), inst.gammas) == 3

    def test_all_at_goals(self):
        g = chain_graph(5)
        inst = MapfInstance(g, (0, 4), (0, 4))
        assert slackness((0, 1), 0, (0, 4), inst.gammas) == 0

    def test_corrupted_budget_raises(self):
        g = chain_graph(5)
        inst = MapfInstance(g, (0,), (4,))
        with pytest.raises(BudgetInvariantError):
            slackness((0,), 3, (0,), inst.gammas)


class TestReachableRegion:
    def test_chain_slack_zero_covers_chain(self):
        g = chain_graph(5)
        gamma = goal_distance_field(g, 4)
        region = reachable_region(g, 0, (0,), 0, gamma)
        assert region == frozenset(range(5))

    def test_open_grid_row_slack_zero(self):
        g = make_grid(5, 5)
        gamma = goal_distance_field(g, 4)  # goal (0,4)
        region = reachable_region(g, 0, (0,), 0, gamma)  # agent at (0,0)
        assert region == frozenset(range(5))  # exactly row 0

    def test_open_grid_slack_two(self):
        g = make_grid(5, 5)
        gamma = goal_distance_field(g, 4)
        region = reachable_region(g, 0, (0,), 2, gamma)
        assert region == frozenset(range(10))  # rows 0 and 1

    def test_contains_current_vertex(self):
        g = make_grid(3, 3)
        gamma = goal_distance_field(g, 8)
        region = reachable_region(g, 0, (0,), 0, gamma)
        assert 0 in region
        assert 8 in region

    def test_negative_slack_rejected(self):
        g = chain_graph(3)
        gamma = goal_distance_field(g, 2)
        with pytest.raises(ValueError):
            reachable_region(g, 0, (0,), -1, gamma)


class TestPartition:
    def test_disjoint_regions_split(self):
        assert partition({0: frozenset({1, 2}), 1: frozenset({5, 6})}) == [(0,), (1,)]

    def test_shared_vertex_unites(self):
        assert partition({0: frozenset({1, 2}), 1: frozenset({2, 3})}) == [(0, 1)]

    def test_grid_rows_split(self):
        g = make_grid(5, 5)
        inst = MapfInstance(g, (0, 24), (4, 20))  # row 0 and row 4 traversals
        regions = {
            a: reachable_region(g, a, inst.starts, 0, inst.gammas[a]) for a in (0, 1)
        }
        assert partition(regions) == [(0,), (1,)]

    def test_transitive_union(self):
        regions = {
            0: frozenset({1}),
            1: frozenset({1, 2}),
            2: frozenset({2, 3}),
            3: frozenset({9}),
        }
        assert partition(regions) == [(0, 1, 2), (3,)]

    def test_deterministic_ordering(self):
        regions = {2: frozenset({7}), 0: frozenset({5}), 1: frozenset({6})}
        assert partition(regions) == [(0,), (1,), (2,)]


class TestShouldRefactor:
    def test_no_drop(self):
        assert not should_refactor(10, 10, 1)

    def test_boundary_equality(self):
        assert should_refactor(10, 8, 2)

    def test_below_threshold(self):
        assert not should_refactor(10, 9, 2)
