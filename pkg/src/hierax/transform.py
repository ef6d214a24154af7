"""Joint-preserving network surgery: arc reversal, node absorption, and
the compilation of refinements into atomic-shaped fragments.

Arc reversal follows the classic rule: both endpoints inherit each
other's former parents, the child's new CPT is the marginal of the local
product and the parent's new CPT is the corresponding conditional.
Configurations with zero marginal mass get a uniform conditional; they
carry no weight in the joint, so any proper distribution preserves it.

Absorption removes an internal node by multiplying its CPT into those of
its children, summing it out and re-factoring the result as a chain of
conditionals over the children in dependency order. For a single child
this reduces to the familiar parent-set union; with several children the
chain conditioning is what keeps the surviving joint intact.

Compiling a refinement makes the hierarchical mode variable a root by
reversing the arcs from the subcomponent modes one by one, then absorbs
every internal variable in inverse dependency order. What remains of the
fragment is shaped exactly like an atomic component: inputs and the
hierarchical mode pointing at the output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AbsorptionCycleError, NetworkStructureError, VerificationError
from .factors import Factor, divide, multiply
from .network import BayesianNetwork
from .translate import TranslationIndex

CLAMP_TOL = 1e-12


def _clamped(arr: np.ndarray, tol: float = CLAMP_TOL) -> np.ndarray:
    out = arr.copy()
    out[np.abs(out) <= tol] = 0.0
    out[np.abs(out - 1.0) <= tol] = 1.0
    return out


def _fix_zero_rows(values: np.ndarray) -> np.ndarray:
    """Replace all-zero distribution rows (last axis) by uniform."""
    row_mass = values.sum(axis=-1, keepdims=True)
    k = values.shape[-1]
    return np.where(row_mass == 0, 1.0 / k, values)


def reverse_arc(net: BayesianNetwork, x: str, y: str) -> BayesianNetwork:
    """Flip the arc x -> y while preserving the joint distribution."""
    if not net.has_arc(x, y):
        raise NetworkStructureError(f"no arc {x!r} -> {y!r}")
    if net.has_path(x, y, skip_direct=True):
        raise NetworkStructureError(
            f"reversing {x!r} -> {y!r} is blocked by another directed path"
        )
    pa_x = net.parents[x]
    pa_y = tuple(p for p in net.parents[y] if p != x)
    union = tuple(sorted(set(pa_x) | set(pa_y)))

    local = multiply(net.cpts[x], net.cpts[y])
    new_y = local.marginalize({x}).project(union + (y,))
    cond = divide(local, new_y).project(union + (y, x))
    new_x = _fix_zero_rows(cond.values)

    out = net.with_cpt(y, union, new_y.values)
    out = out.with_cpt(x, union + (y,), new_x)
    return out


def absorb_node(net: BayesianNetwork, x: str) -> BayesianNetwork:
    """Remove x, preserving the joint over the surviving variables.

    A barren x (no children) is simply deleted. Otherwise its CPT is
    folded into its children as described in the module docstring.
    Raises AbsorptionCycleError when the induced parent sets would close
    a directed cycle, which can happen when a child is an ancestor of
    another child's parent.
    """
    if x not in net.domains:
        raise NetworkStructureError(f"unknown variable {x!r}")
    kids = net.children(x)
    if not kids:
        return net.without(x)

    order = net.topological_order()
    kids = tuple(sorted(kids, key=order.index))

    g = net.cpts[x]
    for c in kids:
        g = multiply(g, net.cpts[c])
    g = g.marginalize({x})

    union = sorted(
        (set(net.parents[x]) | {p for c in kids for p in net.parents[c]})
        - {x} - set(kids)
    )
    out = net.copy()
    prev = None
    for i, c in enumerate(kids):
        scope = tuple(union) + tuple(kids[: i + 1])
        num = g.marginalize(set(kids[i + 1:])).project(scope)
        cond = num if prev is None else divide(num, prev).project(scope)
        out.parents[c] = tuple(union) + tuple(kids[:i])
        out.cpts[c] = Factor(scope, _fix_zero_rows(cond.values))
        prev = num
    out = out.without(x)
    if not out.is_acyclic():
        raise AbsorptionCycleError(
            f"absorbing {x!r} would create a directed cycle among its children's parents"
        )
    return out


def _inverse_topological(net: BayesianNetwork, restrict: set[str]) -> list[str]:
    """Members of `restrict`, descendants first, ties by descending id."""
    order = []
    remaining = set(net.domains)
    child_count = {v: len(net.children(v)) for v in net.domains}
    ready = sorted(v for v in remaining if child_count[v] == 0)
    while ready:
        v = ready.pop()  # largest id first
        order.append(v)
        remaining.discard(v)
        for p in net.parents[v]:
            child_count[p] -= 1
            if child_count[p] == 0:
                ready.append(p)
                ready.sort()
    if remaining:
        raise NetworkStructureError("network contains a directed cycle")
    return [v for v in order if v in restrict]


@dataclass(frozen=True)
class LevelFragment:
    """Snapshot of one refinement level before compilation.

    The network contains the interface inputs (as uniform roots), every
    variable under the component's path with nested refinements already
    compiled, the hierarchical mode and the output.
    """

    component: str
    network: BayesianNetwork
    interface_inputs: tuple[str, ...]
    mode_var: str
    output_var: str
    nested: tuple[str, ...]


def _fragment_snapshot(net: BayesianNetwork, idx: TranslationIndex, path: str,
                       nested: tuple[str, ...]) -> LevelFragment:
    mode_var = idx.mode_of_component[path]
    out_var = idx.output_var(path)
    inputs = idx.interface_inputs[path]
    prefix = path + "."
    members = [v for v in net.variables if v.startswith(prefix) or v == out_var]
    keep = list(inputs) + [v for v in members if v not in inputs]

    frag = BayesianNetwork()
    for v in inputs:
        frag.add_variable(v, net.domains[v], (), np.full(net.card(v), 1.0 / net.card(v)))
    for v in net.topological_order():
        if v in inputs or v not in keep:
            continue
        frag.add_variable(v, net.domains[v], net.parents[v],
                          net.cpts[v].project(net.parents[v] + (v,)).values)
    return LevelFragment(path, frag, inputs, mode_var, out_var, nested)


def compile_refinement(net: BayesianNetwork, idx: TranslationIndex,
                       path: str) -> BayesianNetwork:
    """Collapse one refinement into an atomic-shaped fragment in place.

    Assumes refinements nested below `path` have already been compiled.
    Returns a new network in which the only surviving variables of the
    refinement are its interface: inputs, hierarchical mode, output.
    """
    if path not in idx.refined:
        raise NetworkStructureError(f"component {path!r} is not refined")
    mode_var = idx.mode_of_component[path]
    out_var = idx.output_var(path)
    inputs = idx.interface_inputs[path]

    child_modes = sorted(idx.mode_of_component[c] for c in idx.refined[path])
    for m in child_modes:
        net = reverse_arc(net, m, mode_var)

    prefix = path + "."
    internal = {
        v for v in net.variables
        if v.startswith(prefix) and v != mode_var and v != out_var and v not in inputs
    }
    for v in _inverse_topological(net, internal):
        net = absorb_node(net, v)

    if net.parents[mode_var]:
        raise VerificationError(f"{mode_var!r} failed to become a root")
    if set(net.parents[out_var]) != set(inputs) | {mode_var}:
        raise VerificationError(
            f"compiled fragment for {path!r} has parents "
            f"{net.parents[out_var]}, expected inputs plus mode"
        )

    net = net.reorder_parents(out_var, tuple(inputs) + (mode_var,))
    net = net.with_cpt(out_var, net.parents[out_var], _clamped(net.cpts[out_var].values))
    net = net.with_cpt(mode_var, (), _clamped(net.cpts[mode_var].values))
    defects = net.check_cpts()
    if defects:
        raise VerificationError("; ".join(defects))
    return net


def compile_network(net: BayesianNetwork, idx: TranslationIndex):
    """Compile every refinement, deepest first.

    Returns (compiled network, fragments) where fragments maps each
    refined component path to the LevelFragment captured just before its
    own compilation (nested refinements inside it already compiled).
    """
    order = sorted(
        idx.refined, key=lambda p: (-idx.component_depth[p], p)
    )
    fragments: dict[str, LevelFragment] = {}
    current = net
    for path in order:
        nested = tuple(
            c for c in idx.refined[path] if c in idx.refined
        )
        fragments[path] = _fragment_snapshot(current, idx, path, nested)
        current = compile_refinement(current, idx, path)
    return current, fragments
