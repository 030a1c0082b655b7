"""Pairwise overlap penalties and the neighbor graph."""

import math

import numpy as np
import pytest

from mrftrack.geometry import JointParticle, PatchDims, rect_overlap_count
from mrftrack.interaction import (
    InteractionParams,
    MRFGraph,
    build_mrf,
    local_log_interaction,
    local_log_interaction_at,
    log_potential,
)

DIMS = PatchDims()


class TestInteractionParams:
    def test_defaults(self):
        p = InteractionParams()
        assert p.strength == 5000.0
        assert p.overlap_mode == "raw-count"
        assert p.neighbor_radius == 64.0

    def test_rejects_bad_mode(self):
        with pytest.raises(ValueError):
            InteractionParams(overlap_mode="percent")

    def test_rejects_bad_strength(self):
        with pytest.raises(ValueError):
            InteractionParams(strength=-1.0)
        with pytest.raises(ValueError):
            InteractionParams(strength=math.inf)

    def test_rejects_bad_radius(self):
        with pytest.raises(ValueError):
            InteractionParams(neighbor_radius=0.0)


class TestMRFGraph:
    def test_adjacency_sorted_and_deduped(self):
        g = MRFGraph(4, [(2, 1), (1, 2), (0, 3), (1, 3)])
        assert g.adjacency[1] == (2, 3)
        assert g.adjacency[2] == (1,)
        assert g.adjacency[3] == (0, 1)
        assert g.adjacency[0] == (3,)
        assert len(g.edges) == 3

    def test_rejects_self_edge(self):
        with pytest.raises(ValueError):
            MRFGraph(3, [(1, 1)])

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            MRFGraph(3, [(0, 3)])
        with pytest.raises(ValueError):
            MRFGraph(3, [(-1, 0)])

    def test_empty_graph(self):
        g = MRFGraph(3, [])
        assert g.adjacency == ((), (), ())


class TestBuildMrf:
    def test_links_within_radius_inclusive(self):
        states = np.array(
            [[0.0, 0.0, 0.0], [64.0, 0.0, 0.0], [0.0, 64.1, 0.0], [200.0, 200.0, 0.0]]
        )
        g = build_mrf(states, InteractionParams(neighbor_radius=64.0))
        assert (0, 1) in g.edges
        assert (0, 2) not in g.edges
        assert g.adjacency[3] == ()

    def test_radius_from_params(self):
        states = np.array([[0.0, 0.0, 0.0], [10.0, 0.0, 0.0]])
        g = build_mrf(states, InteractionParams(neighbor_radius=5.0))
        assert g.edges == frozenset()


class TestLogPotential:
    def test_disjoint_is_zero(self):
        a = (50.0, 50.0, 0.0)
        b = (300.0, 300.0, 0.0)
        assert log_potential(a, b, InteractionParams()) == 0.0

    def test_raw_count_scaling(self):
        a = (100.0, 100.0, 0.0)
        p = InteractionParams(strength=5000.0, overlap_mode="raw-count")
        count = rect_overlap_count(a, a, DIMS)
        assert count == DIMS.area
        assert log_potential(a, a, p) == -5000.0 * DIMS.area

    def test_fraction_scaling(self):
        a = (100.0, 100.0, 0.0)
        p = InteractionParams(strength=5000.0, overlap_mode="fraction")
        assert log_potential(a, a, p) == pytest.approx(-5000.0)

    def test_half_shift_half_penalty(self):
        a = (100.0, 100.0, 0.0)
        b = (100.0 + DIMS.length / 2, 100.0, 0.0)
        p = InteractionParams(strength=1.0, overlap_mode="fraction")
        assert log_potential(a, b, p) == pytest.approx(-0.5)

    def test_symmetric(self):
        rng = np.random.default_rng(11)
        p = InteractionParams(strength=1.0, overlap_mode="raw-count")
        for _ in range(30):
            a = tuple(rng.uniform([80, 80, -3], [120, 120, 3]))
            b = tuple(rng.uniform([80, 80, -3], [120, 120, 3]))
            assert log_potential(a, b, p) == log_potential(b, a, p)


class TestLocalInteraction:
    def test_sums_over_neighbors(self):
        states = np.array(
            [[100.0, 100.0, 0.0], [110.0, 100.0, 0.0], [100.0, 104.0, 0.5]]
        )
        g = MRFGraph(3, [(0, 1), (0, 2)])
        p = InteractionParams(strength=1.0, overlap_mode="raw-count")
        want = log_potential(states[0], states[1], p) + log_potential(states[0], states[2], p)
        got = local_log_interaction(JointParticle(states), g, 0, p)
        assert got == pytest.approx(want)

    def test_at_candidate_state_matches_direct(self):
        states = np.array(
            [[100.0, 100.0, 0.0], [110.0, 100.0, 0.0], [100.0, 104.0, 0.5]]
        )
        g = MRFGraph(3, [(0, 1), (0, 2)])
        p = InteractionParams(strength=1.0, overlap_mode="raw-count")
        cand = (103.0, 101.0, 0.2)
        moved = states.copy()
        moved[0] = cand
        want = local_log_interaction(JointParticle(moved), g, 0, p)
        got = local_log_interaction_at(cand, states, g.adjacency[0], p)
        assert got == pytest.approx(want)

    def test_isolated_node_is_zero(self):
        states = np.array([[100.0, 100.0, 0.0], [101.0, 100.0, 0.0]])
        g = MRFGraph(2, [])
        p = InteractionParams()
        assert local_log_interaction(JointParticle(states), g, 0, p) == 0.0
