"""Join-tree construction, verification and the composite stack."""

import random

import numpy as np
import pytest

from hierax.errors import NotChordalError, UnknownVariableError
from hierax.jointree import (
    JoinTree,
    MarkovGraph,
    build_composite,
    build_join_tree,
    extract_cliques_and_assemble,
    is_chordal,
    moralize,
    outline,
    triangulate,
    verify_composite,
    verify_join_tree,
)
from hierax.network import BayesianNetwork
from hierax.pipeline import build_model
from hierax.schematic import parse_document
from hierax.translate import translate

from conftest import BIT, random_model, refined_chain_doc


def four_cycle() -> MarkovGraph:
    g = MarkovGraph(("a", "b", "c", "d"))
    g.add_edge("a", "b")
    g.add_edge("b", "c")
    g.add_edge("c", "d")
    g.add_edge("d", "a")
    return g


def tiny_net() -> BayesianNetwork:
    net = BayesianNetwork()
    net.add_variable("x", ("0", "1"), (), np.array([0.5, 0.5]))
    net.add_variable(
        "y", ("0", "1"), ("x",), np.array([[0.9, 0.1], [0.2, 0.8]])
    )
    return net


class TestMoralGraph:
    def test_parents_are_married(self, f1_doc):
        net, _ = translate(parse_document(f1_doc))
        g = moralize(net)
        # G2.out has three parents; all pairs must be adjacent
        assert g.has_edge("G1.out", "I3")
        assert g.has_edge("G1.out", "G2.mode")
        assert g.has_edge("I3", "G2.mode")

    def test_forced_group_is_completed(self, f1_doc):
        net, _ = translate(parse_document(f1_doc))
        g = moralize(net, [("I1", "I3")])
        assert g.has_edge("I1", "I3")
        assert not moralize(net).has_edge("I1", "I3")

    def test_forced_unknown_variable(self, f1_doc):
        net, _ = translate(parse_document(f1_doc))
        with pytest.raises(UnknownVariableError):
            moralize(net, [("I1", "nope")])


class TestTriangulation:
    def test_four_cycle_gets_a_chord(self):
        g = four_cycle()
        assert not is_chordal(g)
        chordal, order = triangulate(g)
        assert is_chordal(chordal)
        assert sorted(order) == ["a", "b", "c", "d"]
        assert len(chordal.edges()) == 5

    def test_chordal_input_is_untouched(self):
        g = four_cycle()
        g.add_edge("a", "c")
        chordal, _ = triangulate(g)
        assert chordal.edges() == g.edges()

    def test_deterministic(self):
        runs = []
        for _ in range(3):
            chordal, order = triangulate(four_cycle())
            runs.append((chordal.edges(), order))
        assert runs[0] == runs[1] == runs[2]

    def test_extraction_rejects_non_chordal(self):
        with pytest.raises(NotChordalError):
            extract_cliques_and_assemble(four_cycle(), ("a", "b", "c", "d"))

    def test_two_triangle_cliques(self):
        g = MarkovGraph(("a", "b", "c", "d"))
        for x, y in (("a", "b"), ("a", "c"), ("b", "c"), ("b", "d"), ("c", "d")):
            g.add_edge(x, y)
        chordal, order = triangulate(g)
        jt = extract_cliques_and_assemble(chordal, order)
        assert jt.cliques == (("a", "b", "c"), ("b", "c", "d"))
        assert jt.edges == ((0, 1, ("b", "c")),)


class TestVerification:
    """verify_join_tree reports defects instead of raising."""

    def test_family_not_covered(self):
        jt = JoinTree((("x",), ("y",)), ((0, 1, ()),))
        problems = verify_join_tree(jt, tiny_net())
        assert any("family of 'y'" in p for p in problems)

    def test_running_intersection_violation(self):
        jt = JoinTree(
            (("a", "b"), ("b", "c"), ("a", "d")),
            ((0, 1, ("b",)), (1, 2, ())),
        )
        problems = verify_join_tree(jt)
        assert any("running intersection fails for 'a'" in p for p in problems)

    def test_wrong_separator(self):
        jt = JoinTree((("a", "b"), ("b", "c")), ((0, 1, ("a", "b")),))
        problems = verify_join_tree(jt)
        assert any("separator" in p for p in problems)

    def test_broken_tree_shape(self):
        jt = JoinTree((("a",), ("b",), ("c",)), ((0, 1, ()),))
        problems = verify_join_tree(jt)
        assert any("edge count" in p for p in problems)
        assert any("not connected" in p for p in problems)

    def test_missing_forced_set(self, f1_doc):
        net, _ = translate(parse_document(f1_doc))
        jt = build_join_tree(net)
        problems = verify_join_tree(jt, net, forced=[("I1", "I2", "I3")])
        assert any("forced set" in p for p in problems)


class TestFlatTrees:
    def test_fixtures_build_clean(self, any_doc):
        net, _ = translate(parse_document(any_doc))
        jt = build_join_tree(net)
        assert verify_join_tree(jt, net) == []

    def test_forced_set_lands_in_one_clique(self, f1_doc):
        net, _ = translate(parse_document(f1_doc))
        jt = build_join_tree(net, forced=[("I1", "I2", "I3")])
        assert jt.containing(("I1", "I2", "I3"))

    def test_family_assignment_points_at_hosts(self, f1_doc):
        net, _ = translate(parse_document(f1_doc))
        jt = build_join_tree(net)
        for v in net.variables:
            family = set(net.parents[v]) | {v}
            assert family <= set(jt.cliques[jt.assignment[v]])

    def test_repeat_builds_agree(self, f2_doc):
        net, _ = translate(parse_document(f2_doc))
        first = build_join_tree(net)
        second = build_join_tree(net)
        assert first.cliques == second.cliques
        assert first.edges == second.edges

    def test_independent_chordality_check(self, any_doc):
        net, _ = translate(parse_document(any_doc))
        chordal, _ = triangulate(moralize(net))
        assert is_chordal(chordal)


class TestComposite:
    def test_flat_model_is_single_level(self, f1_doc):
        model = build_model(f1_doc)
        comp = model.composite
        assert comp.levels == ("",)
        assert comp.links == {}
        flat = build_join_tree(model.network)
        assert comp.cliques == flat.cliques

    def test_hierarchical_geometry(self, f2_doc):
        comp = build_model(f2_doc).composite
        assert comp.levels == ("", "XOR1")
        assert comp.level_parent == {"": None, "XOR1": ""}
        link = comp.links["XOR1"]
        assert link.interface == ("I1", "I2", "XOR1.mode", "XOR1.out")
        for i in (link.upper_clique, link.lower_clique):
            assert set(link.interface) <= set(comp.cliques[i])

    def test_upper_host_dissolves_into_lower(self, f2_doc):
        # the compiled top level of this fixture is exactly the
        # interface clique, so the subset rule collapses it
        comp = build_model(f2_doc).composite
        link = comp.links["XOR1"]
        assert link.merged
        assert link.upper_clique == link.lower_clique
        assert comp.clique_level[link.upper_clique] == ""
        assert len(comp.level_cliques[""]) == 1
        survivor = set(comp.cliques[link.upper_clique])
        assert set(link.interface) < survivor
        assert len(link.crossings) == 1

    def test_merged_structure_reverifies(self, f2_doc):
        model = build_model(f2_doc)
        assert verify_composite(model.composite, model.network) == []

    def test_unmerged_link_when_lower_is_one_clique(self):
        model = build_model(refined_chain_doc(1))
        link = model.composite.links["W"]
        assert not link.merged
        assert link.upper_clique != link.lower_clique
        assert verify_composite(model.composite, model.network) == []

    def test_longer_chain_merges(self):
        model = build_model(refined_chain_doc(3))
        comp = model.composite
        assert comp.links["W"].merged
        assert len(comp.level_cliques[""]) == 1
        assert len(comp.level_cliques["W"]) == 2
        assert verify_composite(comp, model.network) == []

    def test_home_levels_follow_the_hierarchy(self, f2_doc):
        comp = build_model(f2_doc).composite
        assert comp.home_level["I1"] == ""
        assert comp.home_level["XOR1.mode"] == ""
        assert comp.home_level["XOR1.out"] == ""
        assert comp.home_level["XOR1.A1.out"] == "XOR1"
        assert comp.home_level["XOR1.R.mode"] == "XOR1"

    def test_root_clique_sits_on_top(self, any_doc):
        comp = build_model(any_doc).composite
        assert comp.clique_level[comp.root_clique] == ""

    def test_query_sites_contain_their_variable(self, f2_doc):
        model = build_model(f2_doc)
        comp = model.composite
        for v in model.network.variables:
            assert v in comp.cliques[comp.query_site[v]]

    def test_family_sites_host_uncompiled_families(self, f2_doc):
        model = build_model(f2_doc)
        comp = model.composite
        for v in model.network.variables:
            family = set(model.network.parents[v]) | {v}
            assert family <= set(comp.cliques[comp.family_site[v]])

    def test_repeat_builds_agree(self, f2_doc):
        model = build_model(f2_doc)
        again = build_composite(
            model.network, model.index, model.compiled, model.fragments
        )
        assert again.cliques == model.composite.cliques
        assert again.edges == model.composite.edges
        assert again.links == model.composite.links

    def test_outline_mentions_the_merge(self, f2_doc):
        text = outline(build_model(f2_doc).composite)
        assert "link XOR1 merged" in text
        assert "interface I1 I2 XOR1.mode XOR1.out" in text


def test_random_schematics_build_valid_trees():
    """Union structures and flat trees hold up across seeded models."""
    merged_seen = 0
    for seed in range(30):
        rng = random.Random(2300 + seed)
        model = random_model(rng)
        net = model.network

        chordal, _ = triangulate(moralize(net))
        assert is_chordal(chordal), seed

        flat = build_join_tree(net)
        assert verify_join_tree(flat, net) == [], seed

        comp = model.composite
        assert verify_composite(comp, net) == [], seed
        for link in comp.links.values():
            assert set(link.interface) <= set(comp.cliques[link.upper_clique])
            assert set(link.interface) <= set(comp.cliques[link.lower_clique])
            merged_seen += link.merged
        for lvl in comp.levels:
            assert comp.level_cliques[lvl], seed
    assert merged_seen > 0
