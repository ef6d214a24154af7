"""Translate validated schematics into Bayesian networks.

Every atomic component contributes a mode root (its prior) and an output
variable whose deterministic CPT mirrors the function table. Wiring is
elided by default: a consuming CPT takes the producing output variable
(or the shared system-input variable) directly as a parent. With
explicit_inputs=True each connection-fed port becomes its own variable
carrying an identity CPT; both forms induce the same distribution over
the common variables.

A refinement contributes a hierarchical mode variable whose parents are
the direct subcomponent modes and whose deterministic CPT encodes the
abstraction function. The sub-schematic's own output variable is named
after the parent component's output port, so the same variable id serves
both levels.

Variable ids are dot-paths: G2.out, XOR1.A1.mode, and so on. System
inputs keep their bare names.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product as iproduct

import numpy as np

from .errors import NetworkStructureError, ValidationFailed
from .network import BayesianNetwork
from .schematic import (
    ANY_BROKEN,
    AtomicBehavior,
    ComponentSpec,
    InputRef,
    Refinement,
    Schematic,
    resolve_wiring,
    topological_components,
    unconsumed_outputs,
    validate_schematic,
)

MODE_SUFFIX = "mode"


@dataclass
class TranslationIndex:
    """Bookkeeping that relates schematic entities to network variables."""

    var_of_port: dict[tuple[str, str], str] = field(default_factory=dict)
    mode_of_component: dict[str, str] = field(default_factory=dict)
    level_of_var: dict[str, int] = field(default_factory=dict)
    input_sources: dict[tuple[str, str], str] = field(default_factory=dict)
    refined: dict[str, tuple[str, ...]] = field(default_factory=dict)
    interface_inputs: dict[str, tuple[str, ...]] = field(default_factory=dict)
    component_depth: dict[str, int] = field(default_factory=dict)
    component_spec: dict[str, ComponentSpec] = field(default_factory=dict)
    system_inputs: tuple[str, ...] = ()

    def output_var(self, path: str) -> str:
        spec = self.component_spec[path]
        return self.var_of_port[(path, spec.output.name)]

    def interface_of(self, path: str) -> tuple[str, ...]:
        """Interface variables of a refined component: inputs, mode, output."""
        return self.interface_inputs[path] + (
            self.mode_of_component[path],
            self.output_var(path),
        )

    def paths(self) -> tuple[str, ...]:
        return tuple(self.component_spec)


def _designated_ok(labels: tuple[str, ...]) -> str:
    return "ok" if "ok" in labels else labels[0]


def _behavior_cpt(c: ComponentSpec, body: AtomicBehavior) -> np.ndarray:
    in_spaces = [p.space.labels for p in c.inputs]
    mode_labels = c.mode.space.labels
    out_labels = c.output.space.labels
    shape = tuple(len(sp) for sp in in_spaces) + (len(mode_labels), len(out_labels))
    arr = np.zeros(shape)
    for key, out_label in body.table.items():
        pos = tuple(sp.index(lab) for sp, lab in zip(in_spaces, key[:-1]))
        pos += (mode_labels.index(key[-1]), out_labels.index(out_label))
        arr[pos] = 1.0
    return arr


def _output_cpt(c: ComponentSpec, body: AtomicBehavior, port_vars):
    """Parents and table for the output node, one axis per distinct source.

    When several ports tap the same upstream wire the function table is
    indexed by port while the CPT must be indexed by variable, so the
    duplicated axes collapse onto the diagonal of the port table.
    """
    distinct: list[str] = []
    for v in port_vars:
        if v not in distinct:
            distinct.append(v)
    if len(distinct) == len(port_vars):
        return distinct, _behavior_cpt(c, body)

    space_of: dict[str, tuple[str, ...]] = {}
    for v, p in zip(port_vars, c.inputs):
        space_of.setdefault(v, p.space.labels)
    mode_labels = c.mode.space.labels
    out_labels = c.output.space.labels
    shape = tuple(len(space_of[v]) for v in distinct)
    arr = np.zeros(shape + (len(mode_labels), len(out_labels)))
    for combo in iproduct(*(range(n) for n in shape)):
        assignment = {v: space_of[v][ix] for v, ix in zip(distinct, combo)}
        key = tuple(assignment[v] for v in port_vars)
        for mi, mode_label in enumerate(mode_labels):
            out_label = body.table[key + (mode_label,)]
            arr[combo + (mi, out_labels.index(out_label))] = 1.0
    return distinct, arr


def _abstraction_cpt(c: ComponentSpec, sub: Schematic, abstraction) -> np.ndarray:
    child_spaces = [sc.mode.space.labels for sc in sub.components]
    parent_labels = c.mode.space.labels
    shape = tuple(len(sp) for sp in child_spaces) + (len(parent_labels),)
    arr = np.zeros(shape)
    if abstraction == ANY_BROKEN:
        ok_labels = [_designated_ok(sp) for sp in child_spaces]
        parent_ok = _designated_ok(parent_labels)
        parent_broken = next(lab for lab in parent_labels if lab != parent_ok)
        for combo in iproduct(*(range(len(sp)) for sp in child_spaces)):
            all_ok = all(
                child_spaces[k][ix] == ok_labels[k] for k, ix in enumerate(combo)
            )
            target = parent_ok if all_ok else parent_broken
            arr[combo + (parent_labels.index(target),)] = 1.0
    else:
        for key, parent_label in abstraction.items():
            pos = tuple(sp.index(lab) for sp, lab in zip(child_spaces, key))
            arr[pos + (parent_labels.index(parent_label),)] = 1.0
    return arr


def _uniform(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


def translate(s: Schematic, explicit_inputs: bool = False):
    """Build the full (uncompiled) network for a validated schematic.

    Returns (network, index). Raises ValidationFailed when the schematic
    has violations; translation never papers over a broken model.
    """
    report = validate_schematic(s)
    if not report.ok:
        raise ValidationFailed(report)

    net = BayesianNetwork()
    idx = TranslationIndex()
    idx.system_inputs = tuple(si.name for si in s.system_inputs)

    for si in s.system_inputs:
        prior = np.asarray(si.prior) if si.prior is not None else _uniform(len(si.space))
        net.add_variable(si.name, si.space.labels, (), prior)
        idx.level_of_var[si.name] = 0

    def emit(schem: Schematic, prefix: str, binding: dict[str, str], depth: int,
             output_alias: str | None):
        sources, _ = resolve_wiring(schem)
        order = topological_components(schem, sources)
        by_id = {c.id: c for c in schem.components}
        producer = None
        if output_alias is not None:
            producer = unconsumed_outputs(schem, sources)[0].component

        for cid in order:
            c = by_id[cid]
            path = prefix + cid
            idx.component_spec[path] = c
            idx.component_depth[path] = depth

            port_vars = []
            for p in c.inputs:
                src = sources[(cid, p.name)]
                if isinstance(src, InputRef):
                    src_var = binding[src.name]
                    materialize = False
                else:
                    src_var = idx.var_of_port[(prefix + src.component, src.port)]
                    materialize = explicit_inputs
                if materialize:
                    port_var = f"{path}.{p.name}"
                    net.add_variable(
                        port_var, p.space.labels, (src_var,), np.eye(len(p.space))
                    )
                    idx.level_of_var[port_var] = depth
                else:
                    port_var = src_var
                port_vars.append(port_var)
                idx.var_of_port[(path, p.name)] = port_var
                idx.input_sources[(path, p.name)] = port_var

            mode_var = f"{path}.{MODE_SUFFIX}"
            out_port = c.output
            if cid == producer and output_alias is not None:
                out_var = output_alias
            else:
                out_var = f"{path}.{out_port.name}"

            if isinstance(c.body, AtomicBehavior):
                net.add_variable(
                    mode_var, c.mode.space.labels, (), np.asarray(c.body.mode_prior)
                )
                parents, table = _output_cpt(c, c.body, port_vars)
                net.add_variable(
                    out_var, out_port.space.labels, tuple(parents) + (mode_var,), table
                )
                idx.level_of_var[mode_var] = depth
                idx.level_of_var[out_var] = depth
            else:
                assert isinstance(c.body, Refinement)
                sub = c.body.schematic
                sub_binding = {
                    si.name: idx.var_of_port[(path, si.name)]
                    for si in sub.system_inputs
                }
                emit(sub, path + ".", sub_binding, depth + 1, out_var)
                child_modes = tuple(
                    idx.mode_of_component[path + "." + sc.id] for sc in sub.components
                )
                net.add_variable(
                    mode_var,
                    c.mode.space.labels,
                    child_modes,
                    _abstraction_cpt(c, sub, c.body.abstraction),
                )
                idx.refined[path] = tuple(path + "." + sc.id for sc in sub.components)
                seen: list[str] = []
                for v in port_vars:
                    if v not in seen:
                        seen.append(v)
                idx.interface_inputs[path] = tuple(seen)
                # interface variables belong to the upper level
                idx.level_of_var[mode_var] = depth
                idx.level_of_var[out_var] = depth

            idx.mode_of_component[path] = mode_var
            idx.var_of_port[(path, out_port.name)] = out_var

    emit(s, "", {si.name: si.name for si in s.system_inputs}, 0, None)

    defects = net.check_cpts()
    if defects:
        raise NetworkStructureError("; ".join(defects))
    return net, idx


def translate_atomic_fragment(c: ComponentSpec) -> BayesianNetwork:
    """Stand-alone fragment for one atomic component.

    Input ports become uniform roots named after the port; the mode and
    output variables are prefixed with the component id.
    """
    if not isinstance(c.body, AtomicBehavior):
        raise NetworkStructureError(f"component {c.id!r} is refined, not atomic")
    net = BayesianNetwork()
    for p in c.inputs:
        net.add_variable(p.name, p.space.labels, (), _uniform(len(p.space)))
    mode_var = f"{c.id}.{MODE_SUFFIX}"
    net.add_variable(mode_var, c.mode.space.labels, (), np.asarray(c.body.mode_prior))
    net.add_variable(
        f"{c.id}.{c.output.name}",
        c.output.space.labels,
        tuple(p.name for p in c.inputs) + (mode_var,),
        _behavior_cpt(c, c.body),
    )
    return net


def link_equality(net: BayesianNetwork, upstream: str, downstream: str) -> BayesianNetwork:
    """Wire downstream to copy upstream through an identity CPT.

    The downstream variable must currently be parentless; its prior is
    replaced. State spaces must agree label-for-label.
    """
    for v in (upstream, downstream):
        if v not in net.domains:
            raise NetworkStructureError(f"unknown variable {v!r}")
    if net.domains[upstream] != net.domains[downstream]:
        raise NetworkStructureError(
            f"state spaces of {upstream!r} and {downstream!r} differ"
        )
    if net.parents[downstream]:
        raise NetworkStructureError(f"{downstream!r} already has a parent")
    if net.has_path(downstream, upstream):
        raise NetworkStructureError(
            f"arc {upstream!r} -> {downstream!r} would close a cycle"
        )
    return net.with_cpt(downstream, (upstream,), np.eye(len(net.domains[upstream])))
