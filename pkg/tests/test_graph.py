"""Hypercube and distorted-hypercube construction and labeling checks."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qwhit.errors import SizeError
from qwhit.graph import (
    LabeledGraph,
    distorted_hypercube,
    hamming_weight,
    hypercube,
    odd_cycle_length,
    validate_labeling,
)


class TestHypercube:
    def test_adjacent_bit_strings(self):
        assert hypercube(3).neighbor(0b011, 2) == 0b111

    def test_one_cube(self):
        g = hypercube(1)
        assert g.neighbor(0, 0) == 1 and g.neighbor(1, 0) == 0

    def test_xor_involution(self):
        g = hypercube(4)
        assert g.neighbor(g.neighbor(5, 2), 2) == 5

    def test_shape(self):
        g = hypercube(5)
        assert (g.n_vertices, g.degree, g.kind, g.n) == (32, 5, "hypercube", 5)

    @pytest.mark.parametrize("n", [0, 31, -1])
    def test_size_guard(self, n):
        with pytest.raises(SizeError):
            hypercube(n)

    def test_table_is_read_only(self):
        with pytest.raises(ValueError):
            hypercube(2).neighbors[0, 0] = 3


class TestDistorted:
    def test_rewired_a_to_d(self):
        g = distorted_hypercube(3)
        assert g.neighbor(0b000, 0) == 0b011
        assert g.neighbor(0b011, 0) == 0b000

    def test_rewired_b_to_c(self):
        g = distorted_hypercube(3)
        assert g.neighbor(0b001, 0) == 0b010
        assert g.neighbor(0b010, 0) == 0b001

    def test_untouched_vertex(self):
        assert distorted_hypercube(3).neighbor(0b100, 0) == 0b101

    def test_needs_a_face(self):
        with pytest.raises(SizeError):
            distorted_hypercube(1)

    @pytest.mark.parametrize("n", [2, 3, 6])
    def test_exactly_four_entries_change(self, n):
        diff = hypercube(n).neighbors != distorted_hypercube(n).neighbors
        assert int(diff.sum()) == 4


class TestValidation:
    def test_custom_mismatch_reported_once(self):
        g = LabeledGraph(np.array([[1], [2], [1]]))
        violations = validate_labeling(g)
        assert len(violations) == 1
        assert violations[0].vertex == 0 and violations[0].label == 0
        assert "mismatch" in violations[0].reason

    def test_self_loop_and_range(self):
        g = LabeledGraph(np.array([[0], [5]]))
        reasons = sorted(v.reason for v in validate_labeling(g))
        assert reasons == ["neighbor 5 out of range", "self-loop"]

    def test_empty_table_rejected(self):
        with pytest.raises(SizeError):
            LabeledGraph(np.zeros((0, 2), dtype=int))


@pytest.mark.invariant
class TestGraphInvariants:
    @pytest.mark.parametrize("n", range(1, 11))
    def test_hypercube_valid(self, n):
        assert validate_labeling(hypercube(n)) == []

    @pytest.mark.parametrize("n", range(2, 11))
    def test_distorted_valid(self, n):
        assert validate_labeling(distorted_hypercube(n)) == []

    @pytest.mark.parametrize("n", range(1, 8))
    def test_hypercube_bipartite(self, n):
        g = hypercube(n)
        w = np.array([hamming_weight(v) for v in range(g.n_vertices)])
        assert np.all((w[:, None] + w[g.neighbors]) % 2 == 1)
        assert odd_cycle_length(g) is None

    def test_distorted_square_is_still_a_four_cycle(self):
        # for n = 2 the rewired face is the whole graph, which stays bipartite
        assert odd_cycle_length(distorted_hypercube(2)) is None

    @pytest.mark.parametrize("n", range(3, 8))
    def test_distorted_has_short_odd_cycle(self, n):
        length = odd_cycle_length(distorted_hypercube(n))
        assert length is not None and length in (3, 5)


class TestSerialization:
    def test_json_round_trip(self):
        g = distorted_hypercube(3)
        back = LabeledGraph.from_json(g.to_json())
        assert np.array_equal(back.neighbors, g.neighbors)
        assert g.to_dict()["n_vertices"] == 8 and g.to_dict()["degree"] == 3

    def test_shape_mismatch(self):
        with pytest.raises(SizeError):
            LabeledGraph.from_dict({"n_vertices": 3, "degree": 1, "neighbors": [[1], [0]]})

    def test_equality_and_hash(self):
        assert hypercube(3) == hypercube(3)
        assert hash(hypercube(3)) == hash(hypercube(3))
        assert hypercube(3) != distorted_hypercube(3)


@pytest.mark.invariant
@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 10), data=st.data())
def test_neighbor_flips_one_bit(n, data):
    g = hypercube(n)
    v = data.draw(st.integers(0, g.n_vertices - 1))
    j = data.draw(st.integers(0, n - 1))
    w = g.neighbor(v, j)
    assert hamming_weight(v ^ w) == 1 and (v ^ w) == 1 << j
