"""Joint-preserving network transformations and refinement compilation."""

import itertools
import random

import numpy as np
import pytest

from conftest import random_network
from hierax.errors import AbsorptionCycleError, NetworkStructureError
from hierax.factors import product
from hierax.network import BayesianNetwork
from hierax.schematic import parse_document
from hierax.transform import absorb_node, compile_network, compile_refinement, reverse_arc
from hierax.translate import translate


def full_joint(net):
    return product(net.cpts.values()).project(tuple(sorted(net.variables)))


def random_arcs(rng, net):
    arcs = [(p, v) for v in net.variables for p in net.parents[v]]
    rng.shuffle(arcs)
    return arcs


def test_reverse_arc_two_node_bayes_flip():
    net = BayesianNetwork()
    net.add_variable("rain", ("no", "yes"), (), [0.8, 0.2])
    net.add_variable("wet", ("no", "yes"), ("rain",), [[0.9, 0.1], [0.05, 0.95]])
    flipped = reverse_arc(net, "rain", "wet")
    assert flipped.parents["rain"] == ("wet",)
    assert flipped.parents["wet"] == ()
    p_wet = 0.8 * 0.1 + 0.2 * 0.95
    np.testing.assert_allclose(flipped.cpts["wet"].values, [1 - p_wet, p_wet])
    # P(rain=yes | wet=yes) by Bayes' rule
    np.testing.assert_allclose(
        flipped.cpts["rain"].project(("wet", "rain")).values[1, 1],
        0.2 * 0.95 / p_wet,
    )


def test_reverse_arc_requires_the_arc():
    net = BayesianNetwork()
    net.add_variable("a", ("0", "1"), (), [0.5, 0.5])
    net.add_variable("b", ("0", "1"), (), [0.5, 0.5])
    with pytest.raises(NetworkStructureError):
        reverse_arc(net, "a", "b")


def test_reverse_arc_blocked_by_second_path():
    net = BayesianNetwork()
    net.add_variable("a", ("0", "1"), (), [0.5, 0.5])
    net.add_variable("m", ("0", "1"), ("a",), [[0.7, 0.3], [0.4, 0.6]])
    net.add_variable("b", ("0", "1"), ("a", "m"),
                     np.full((2, 2, 2), 0.5))
    with pytest.raises(NetworkStructureError, match="blocked"):
        reverse_arc(net, "a", "b")


def test_reverse_arc_preserves_joint_on_random_networks():
    for seed in range(60):
        rng = random.Random(seed)
        net = random_network(rng)
        before = full_joint(net)
        for x, y in random_arcs(rng, net):
            if net.has_path(x, y, skip_direct=True):
                continue
            after = full_joint(reverse_arc(net, x, y))
            np.testing.assert_allclose(after.values, before.values, atol=1e-12)
            break


def test_double_reversal_restores_the_joint():
    rng = random.Random(42)
    net = random_network(rng)
    for x, y in random_arcs(rng, net):
        if net.has_path(x, y, skip_direct=True):
            continue
        once = reverse_arc(net, x, y)
        if once.has_path(y, x, skip_direct=True):
            continue
        twice = reverse_arc(once, y, x)
        np.testing.assert_allclose(
            full_joint(twice).values, full_joint(net).values, atol=1e-12
        )
        return
    pytest.skip("no doubly reversible arc in this draw")


def test_absorb_barren_node_is_deletion():
    net = BayesianNetwork()
    net.add_variable("a", ("0", "1"), (), [0.3, 0.7])
    net.add_variable("b", ("0", "1"), ("a",), [[0.6, 0.4], [0.1, 0.9]])
    out = absorb_node(net, "b")
    assert set(out.variables) == {"a"}
    np.testing.assert_allclose(out.cpts["a"].values, [0.3, 0.7])


def test_absorb_chain_middle_marginalizes_exactly():
    net = BayesianNetwork()
    net.add_variable("a", ("0", "1"), (), [0.3, 0.7])
    net.add_variable("m", ("0", "1"), ("a",), [[0.9, 0.1], [0.2, 0.8]])
    net.add_variable("b", ("0", "1"), ("m",), [[0.6, 0.4], [0.25, 0.75]])
    out = absorb_node(net, "m")
    assert set(out.variables) == {"a", "b"}
    expected = np.array([
        [0.9 * 0.6 + 0.1 * 0.25, 0.9 * 0.4 + 0.1 * 0.75],
        [0.2 * 0.6 + 0.8 * 0.25, 0.2 * 0.4 + 0.8 * 0.75],
    ])
    np.testing.assert_allclose(
        out.cpts["b"].project(("a", "b")).values, expected, atol=1e-15
    )


def test_absorb_preserves_surviving_marginals_on_random_networks():
    for seed in range(60):
        rng = random.Random(1000 + seed)
        net = random_network(rng)
        x = rng.choice(net.variables)
        before = full_joint(net).marginalize({x})
        try:
            after = full_joint(absorb_node(net, x))
        except AbsorptionCycleError:
            continue
        np.testing.assert_allclose(
            after.aligned(before.scope).reshape(before.values.shape),
            before.values,
            atol=1e-12,
        )


def test_absorb_node_with_two_children_uses_chain_rule():
    rng = random.Random(9)
    raw = np.array([rng.random() + 0.1 for _ in range(12)]).reshape(3, 2, 2)
    net = BayesianNetwork()
    net.add_variable("x", ("0", "1", "2"), (), [0.2, 0.3, 0.5])
    net.add_variable("c1", ("0", "1"), ("x",),
                     [[0.9, 0.1], [0.4, 0.6], [0.7, 0.3]])
    net.add_variable("c2", ("0", "1"), ("x", "c1"),
                     raw / raw.sum(axis=-1, keepdims=True))
    before = full_joint(net).marginalize({"x"})
    after = full_joint(absorb_node(net, "x"))
    assert set(after.scope) == {"c1", "c2"}
    np.testing.assert_allclose(
        after.aligned(before.scope).reshape(before.values.shape),
        before.values, atol=1e-12,
    )


class TestRefinementCompilation:
    def test_compiled_fragment_shape(self, f2_doc):
        net, idx = translate(parse_document(f2_doc))
        compiled = compile_refinement(net, idx, "XOR1")
        assert set(compiled.variables) == {"I1", "I2", "XOR1.mode", "XOR1.out"}
        assert compiled.parents["XOR1.out"] == ("I1", "I2", "XOR1.mode")
        assert compiled.parents["XOR1.mode"] == ()

    def test_compiled_mode_prior_is_product_of_ok_rates(self, f2_doc):
        net, idx = translate(parse_document(f2_doc))
        compiled = compile_refinement(net, idx, "XOR1")
        p_ok = compiled.cpts["XOR1.mode"].values[0]
        assert p_ok == pytest.approx(0.99 ** 5, abs=1e-12)

    def test_compiled_ok_slice_is_exact_xor(self, f2_doc):
        net, idx = translate(parse_document(f2_doc))
        compiled = compile_refinement(net, idx, "XOR1")
        cpt = compiled.cpts["XOR1.out"].project(
            ("I1", "I2", "XOR1.mode", "XOR1.out")
        ).values
        for i, j in itertools.product(range(2), repeat=2):
            expected = (i + j) % 2
            assert cpt[i, j, 0, expected] == 1.0
            assert cpt[i, j, 0, 1 - expected] == 0.0

    def test_compilation_preserves_interface_joint(self, f2_doc):
        net, idx = translate(parse_document(f2_doc))
        keep = ("I1", "I2", "XOR1.mode", "XOR1.out")
        reference = full_joint(net).project(keep)
        compiled = compile_refinement(net, idx, "XOR1")
        np.testing.assert_allclose(
            full_joint(compiled).project(keep).values, reference.values, atol=1e-9
        )

    def test_compile_network_returns_fragments_deepest_first(self, f2_doc):
        net, idx = translate(parse_document(f2_doc))
        compiled, fragments = compile_network(net, idx)
        assert list(fragments) == ["XOR1"]
        frag = fragments["XOR1"]
        assert frag.mode_var == "XOR1.mode"
        assert frag.output_var == "XOR1.out"
        assert frag.interface_inputs == ("I1", "I2")
        assert "XOR1.A1.out" in frag.network.variables
        assert "XOR1.A1.out" not in compiled.variables

    def test_flat_network_compiles_to_itself(self, f1_doc):
        net, idx = translate(parse_document(f1_doc))
        compiled, fragments = compile_network(net, idx)
        assert fragments == {}
        assert set(compiled.variables) == set(net.variables)
