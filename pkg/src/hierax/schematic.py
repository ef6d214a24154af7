"""Functional schematic model: types, JSON parsing, validation, flattening.

A schematic is a set of components, each with named discrete input ports,
a single output port and a discrete mode variable, wired together by
connections. A component body is either an exhaustive function table over
(inputs x mode) or a refinement: a nested sub-schematic plus an
abstraction function mapping subcomponent mode tuples onto the parent's
mode states.

Parsing is strictly grammatical: a document that is shaped correctly
parses even when it is semantically broken (cycles, dangling ports and
friends are the validator's job, reported as data rather than raised).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Union

from .errors import SchematicParseError

MAX_SUBCOMPONENTS = 12
PRIOR_TOL = 1e-12
ANY_BROKEN = "any_broken"
MODE_PORT = "mode"


# ---------------------------------------------------------------------------
# model types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StateSpace:
    """Ordered, unique state labels; at least two of them."""

    labels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.labels) < 2:
            raise ValueError("a state space needs at least two labels")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("state labels must be unique")
        if any(not isinstance(s, str) or not s for s in self.labels):
            raise ValueError("state labels must be non-empty strings")

    def __len__(self):
        return len(self.labels)

    def index(self, label: str) -> int:
        return self.labels.index(label)


@dataclass(frozen=True)
class Port:
    name: str
    space: StateSpace


@dataclass(frozen=True)
class SystemInput:
    name: str
    space: StateSpace
    prior: tuple[float, ...] | None = None


@dataclass(frozen=True)
class InputRef:
    """Connection source naming a system input."""

    name: str

    def ref(self) -> str:
        return self.name


@dataclass(frozen=True)
class PortRef:
    """Connection endpoint naming a component port."""

    component: str
    port: str

    def ref(self) -> str:
        return f"{self.component}.{self.port}"


Source = Union[InputRef, PortRef]


@dataclass(frozen=True)
class Connection:
    source: Source
    target: PortRef


@dataclass(frozen=True)
class AtomicBehavior:
    """Total function table over (input states..., mode state) -> output state."""

    table: dict[tuple[str, ...], str]
    mode_prior: tuple[float, ...]

    def output_for(self, input_states: tuple[str, ...], mode_state: str) -> str:
        return self.table[input_states + (mode_state,)]


@dataclass(frozen=True)
class Refinement:
    """Sub-schematic plus the abstraction from subcomponent modes to parent modes.

    The abstraction is either the built-in ANY_BROKEN rule or an explicit
    table keyed by subcomponent mode tuples in declaration order.
    """

    schematic: "Schematic"
    abstraction: str | dict[tuple[str, ...], str]


@dataclass(frozen=True)
class ComponentSpec:
    id: str
    inputs: tuple[Port, ...]
    outputs: tuple[Port, ...]
    mode: Port
    body: AtomicBehavior | Refinement

    @property
    def output(self) -> Port:
        if len(self.outputs) != 1:
            raise ValueError(f"component {self.id!r} does not have a single output")
        return self.outputs[0]

    @property
    def refined(self) -> bool:
        return isinstance(self.body, Refinement)


@dataclass(frozen=True)
class Schematic:
    system_inputs: tuple[SystemInput, ...]
    components: tuple[ComponentSpec, ...]
    connections: tuple[Connection, ...]

    def component(self, cid: str) -> ComponentSpec:
        for c in self.components:
            if c.id == cid:
                return c
        raise KeyError(cid)

    def system_input(self, name: str) -> SystemInput:
        for si in self.system_inputs:
            if si.name == name:
                return si
        raise KeyError(name)


@dataclass(frozen=True)
class Observation:
    """Evidence as a mapping from variable ids to state labels."""

    assignments: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class Violation:
    kind: str
    where: str
    detail: str

    def __str__(self):
        return f"[{self.kind}] {self.where}: {self.detail}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)
    warnings: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "violations": [vars(v) for v in self.violations],
            "warnings": [vars(v) for v in self.warnings],
        }


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def _reject_duplicate_keys(pairs):
    seen = set()
    for k, _ in pairs:
        if k in seen:
            raise ValueError(f"duplicate key {k!r}")
        seen.add(k)
    return dict(pairs)


def _expect(obj, typ, path, what):
    if not isinstance(obj, typ):
        raise SchematicParseError(f"{path}: expected {what}")
    return obj


def _fields(obj, path, required, optional=()):
    _expect(obj, dict, path, "an object")
    for key in required:
        if key not in obj:
            raise SchematicParseError(f"{path}: missing required key {key!r}")
    allowed = set(required) | set(optional)
    for key in obj:
        if key not in allowed:
            raise SchematicParseError(f"{path}: unknown key {key!r}")
    return obj


def _parse_states(obj, path) -> StateSpace:
    _expect(obj, list, path, "a list of state labels")
    for s in obj:
        _expect(s, str, path, "state labels as strings")
    try:
        return StateSpace(tuple(obj))
    except ValueError as exc:
        raise SchematicParseError(f"{path}: {exc}") from None


def _parse_prior(obj, path) -> tuple[float, ...]:
    _expect(obj, list, path, "a list of numbers")
    out = []
    for x in obj:
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise SchematicParseError(f"{path}: prior entries must be numbers")
        out.append(float(x))
    return tuple(out)


def _parse_name(obj, path, allow_dots=False) -> str:
    _expect(obj, str, path, "a name string")
    if not obj:
        raise SchematicParseError(f"{path}: name must be non-empty")
    if not allow_dots and "." in obj:
        raise SchematicParseError(f"{path}: name must not contain '.'")
    return obj


def _parse_port(obj, path) -> Port:
    _fields(obj, path, required=("name", "states"))
    name = _parse_name(obj["name"], f"{path}.name")
    if name == MODE_PORT:
        raise SchematicParseError(f"{path}.name: {MODE_PORT!r} is reserved")
    return Port(name, _parse_states(obj["states"], f"{path}.states"))


def _parse_endpoint(text, path, target: bool) -> Source:
    _expect(text, str, path, "a string reference")
    if "." in text:
        comp, _, port = text.rpartition(".")
        if not comp or not port:
            raise SchematicParseError(f"{path}: malformed reference {text!r}")
        return PortRef(comp, port)
    if target:
        raise SchematicParseError(f"{path}: connection target must be 'component.port'")
    if not text:
        raise SchematicParseError(f"{path}: empty reference")
    return InputRef(text)


def _parse_table_rows(obj, arity, path) -> list[tuple[str, ...]]:
    _expect(obj, list, path, "a list of rows")
    rows = []
    for i, row in enumerate(obj):
        _expect(row, list, f"{path}[{i}]", "a row list")
        if len(row) != arity:
            raise SchematicParseError(
                f"{path}[{i}]: row has {len(row)} entries, expected {arity}"
            )
        for cell in row:
            _expect(cell, str, f"{path}[{i}]", "state labels as strings")
        rows.append(tuple(row))
    return rows


def _parse_component(obj, path) -> ComponentSpec:
    _fields(
        obj,
        path,
        required=("id", "inputs", "output", "mode"),
        optional=("behavior", "refinement"),
    )
    cid = _parse_name(obj["id"], f"{path}.id", allow_dots=True)

    _expect(obj["inputs"], list, f"{path}.inputs", "a list of ports")
    inputs = tuple(
        _parse_port(p, f"{path}.inputs[{i}]") for i, p in enumerate(obj["inputs"])
    )

    raw_out = obj["output"]
    if isinstance(raw_out, list):
        outputs = tuple(
            _parse_port(p, f"{path}.output[{i}]") for i, p in enumerate(raw_out)
        )
    else:
        outputs = (_parse_port(raw_out, f"{path}.output"),)

    names = [p.name for p in inputs] + [p.name for p in outputs]
    if len(set(names)) != len(names):
        raise SchematicParseError(f"{path}: duplicate port name")

    mode_obj = _fields(obj["mode"], f"{path}.mode", required=("states",), optional=("prior",))
    mode = Port(MODE_PORT, _parse_states(mode_obj["states"], f"{path}.mode.states"))

    has_behavior = "behavior" in obj
    has_refinement = "refinement" in obj
    if has_behavior == has_refinement:
        raise SchematicParseError(
            f"{path}: exactly one of 'behavior' or 'refinement' is required"
        )

    if has_behavior:
        beh = _fields(obj["behavior"], f"{path}.behavior", required=("table",))
        if "prior" not in mode_obj:
            raise SchematicParseError(f"{path}.mode: atomic component requires a prior")
        prior = _parse_prior(mode_obj["prior"], f"{path}.mode.prior")
        rows = _parse_table_rows(
            beh["table"], len(inputs) + 2, f"{path}.behavior.table"
        )
        table = {}
        for i, row in enumerate(rows):
            key = row[:-1]
            if key in table:
                raise SchematicParseError(
                    f"{path}.behavior.table[{i}]: duplicate row for {key}"
                )
            table[key] = row[-1]
        body: AtomicBehavior | Refinement = AtomicBehavior(table, prior)
    else:
        ref = _fields(
            obj["refinement"], f"{path}.refinement", required=("schematic", "abstraction")
        )
        sub = _parse_schematic_obj(ref["schematic"], f"{path}.refinement.schematic")
        raw_ab = ref["abstraction"]
        if isinstance(raw_ab, str):
            if raw_ab != ANY_BROKEN:
                raise SchematicParseError(
                    f"{path}.refinement.abstraction: unknown rule {raw_ab!r}"
                )
            abstraction: str | dict = ANY_BROKEN
        else:
            ab_obj = _fields(
                raw_ab, f"{path}.refinement.abstraction", required=("table",)
            )
            rows = _parse_table_rows(
                ab_obj["table"],
                len(sub.components) + 1,
                f"{path}.refinement.abstraction.table",
            )
            abstraction = {}
            for i, row in enumerate(rows):
                key = row[:-1]
                if key in abstraction:
                    raise SchematicParseError(
                        f"{path}.refinement.abstraction.table[{i}]: duplicate row"
                    )
                abstraction[key] = row[-1]
        body = Refinement(sub, abstraction)

    return ComponentSpec(cid, inputs, outputs, mode, body)


def _parse_schematic_obj(obj, path) -> Schematic:
    _fields(obj, path, required=("system_inputs", "components"), optional=("connections",))

    _expect(obj["system_inputs"], list, f"{path}.system_inputs", "a list")
    system_inputs = []
    for i, raw in enumerate(obj["system_inputs"]):
        p = f"{path}.system_inputs[{i}]"
        _fields(raw, p, required=("name", "states"), optional=("prior",))
        prior = _parse_prior(raw["prior"], f"{p}.prior") if "prior" in raw else None
        system_inputs.append(
            SystemInput(_parse_name(raw["name"], f"{p}.name"),
                        _parse_states(raw["states"], f"{p}.states"),
                        prior)
        )
    if len({si.name for si in system_inputs}) != len(system_inputs):
        raise SchematicParseError(f"{path}.system_inputs: duplicate input name")

    _expect(obj["components"], list, f"{path}.components", "a list")
    components = tuple(
        _parse_component(raw, f"{path}.components[{i}]")
        for i, raw in enumerate(obj["components"])
    )
    if len({c.id for c in components}) != len(components):
        raise SchematicParseError(f"{path}.components: duplicate component id")

    connections = []
    for i, raw in enumerate(obj.get("connections", [])):
        p = f"{path}.connections[{i}]"
        _fields(raw, p, required=("from", "to"))
        src = _parse_endpoint(raw["from"], f"{p}.from", target=False)
        dst = _parse_endpoint(raw["to"], f"{p}.to", target=True)
        assert isinstance(dst, PortRef)
        connections.append(Connection(src, dst))

    return Schematic(tuple(system_inputs), components, tuple(connections))


def parse_schematic(text: str) -> Schematic:
    """Parse a JSON schematic document.

    Raises SchematicParseError with line/column for tokenizer failures and
    with a document path for grammar failures. No semantic validation
    happens here; a parseable document with cycles or dangling ports is
    returned as-is for the validator to judge.
    """
    try:
        obj = json.loads(text, object_pairs_hook=_reject_duplicate_keys)
    except json.JSONDecodeError as exc:
        raise SchematicParseError(exc.msg, line=exc.lineno, column=exc.colno) from None
    except ValueError as exc:
        raise SchematicParseError(str(exc)) from None
    return _parse_schematic_obj(obj, "$")


def parse_document(obj: dict) -> Schematic:
    """Parse an already-decoded document object."""
    return _parse_schematic_obj(obj, "$")


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _serialize_port(p: Port) -> dict:
    return {"name": p.name, "states": list(p.space.labels)}


def _table_rows(c: ComponentSpec, body: AtomicBehavior) -> list[list[str]]:
    spaces = [p.space.labels for p in c.inputs] + [c.mode.space.labels]
    rows = []

    def rec(prefix):
        k = len(prefix)
        if k == len(spaces):
            key = tuple(prefix)
            rows.append(list(key) + [body.table.get(key, "")])
            return
        for label in spaces[k]:
            rec(prefix + [label])

    rec([])
    return rows


def serialize_schematic(s: Schematic) -> dict:
    """Render back to the document form; table rows in row-major order."""
    out: dict = {"system_inputs": [], "components": [], "connections": []}
    for si in s.system_inputs:
        entry = {"name": si.name, "states": list(si.space.labels)}
        if si.prior is not None:
            entry["prior"] = list(si.prior)
        out["system_inputs"].append(entry)
    for c in s.components:
        entry = {
            "id": c.id,
            "inputs": [_serialize_port(p) for p in c.inputs],
            "output": [_serialize_port(p) for p in c.outputs]
            if len(c.outputs) != 1
            else _serialize_port(c.outputs[0]),
            "mode": {"states": list(c.mode.space.labels)},
        }
        if isinstance(c.body, AtomicBehavior):
            entry["mode"]["prior"] = list(c.body.mode_prior)
            entry["behavior"] = {"table": _table_rows(c, c.body)}
        else:
            ab = c.body.abstraction
            entry["refinement"] = {
                "schematic": serialize_schematic(c.body.schematic),
                "abstraction": ab
                if isinstance(ab, str)
                else {"table": [list(k) + [v] for k, v in sorted(ab.items())]},
            }
        out["components"].append(entry)
    for conn in s.connections:
        out["connections"].append({"from": conn.source.ref(), "to": conn.target.ref()})
    return out


# ---------------------------------------------------------------------------
# wiring resolution (shared by validate, flatten and translate)
# ---------------------------------------------------------------------------


def resolve_wiring(s: Schematic):
    """Map every component input port to its source.

    Returns (sources, violations) where sources maps (component id, port
    name) to an InputRef or PortRef. An explicit connection wins over
    name-binding to a system input; several connections into one port or
    a port with no source at all are violations.
    """
    sources: dict[tuple[str, str], Source] = {}
    violations: list[Violation] = []
    by_id = {c.id: c for c in s.components}
    input_names = {si.name for si in s.system_inputs}

    for conn in s.connections:
        tgt = conn.target
        where = f"{tgt.component}.{tgt.port}"
        comp = by_id.get(tgt.component)
        if comp is None or tgt.port not in {p.name for p in comp.inputs}:
            violations.append(
                Violation("unknown-connection-endpoint", where, "no such input port")
            )
            continue
        if isinstance(conn.source, PortRef):
            src_comp = by_id.get(conn.source.component)
            if src_comp is None or conn.source.port not in {
                p.name for p in src_comp.outputs
            }:
                violations.append(
                    Violation(
                        "unknown-connection-endpoint",
                        conn.source.ref(),
                        "no such output port",
                    )
                )
                continue
        elif conn.source.name not in input_names:
            violations.append(
                Violation(
                    "unknown-connection-endpoint",
                    conn.source.name,
                    "no such system input",
                )
            )
            continue
        key = (tgt.component, tgt.port)
        if key in sources:
            violations.append(
                Violation("conflicting-wiring", where, "port wired more than once")
            )
            continue
        sources[key] = conn.source

    for c in s.components:
        for p in c.inputs:
            key = (c.id, p.name)
            if key in sources:
                continue
            if p.name in input_names:
                sources[key] = InputRef(p.name)
            else:
                violations.append(
                    Violation("dangling-port", f"{c.id}.{p.name}", "input has no source")
                )
    return sources, violations


def component_graph(s: Schematic, sources) -> dict[str, set[str]]:
    """Successor sets over component ids induced by the wiring."""
    succ: dict[str, set[str]] = {c.id: set() for c in s.components}
    for (cid, _port), src in sources.items():
        if isinstance(src, PortRef) and src.component in succ:
            succ[src.component].add(cid)
    return succ


def topological_components(s: Schematic, sources) -> tuple[str, ...]:
    """Component ids in dependency order, declaration order as tie-break."""
    succ = component_graph(s, sources)
    indeg = {c.id: 0 for c in s.components}
    for cid, nxt in succ.items():
        for m in nxt:
            indeg[m] += 1
    order = []
    ready = [c.id for c in s.components if indeg[c.id] == 0]
    while ready:
        v = ready.pop(0)
        order.append(v)
        for m in sorted(succ[v]):
            indeg[m] -= 1
            if indeg[m] == 0:
                ready.append(m)
    if len(order) != len(s.components):
        raise ValueError("component graph has a cycle")
    return tuple(order)


def unconsumed_outputs(s: Schematic, sources) -> list[PortRef]:
    used = {src for src in sources.values() if isinstance(src, PortRef)}
    out = []
    for c in s.components:
        for p in c.outputs:
            ref = PortRef(c.id, p.name)
            if ref not in used:
                out.append(ref)
    return out


def system_output(s: Schematic) -> PortRef:
    """The unique unconsumed output; raises when it is not unique."""
    sources, _ = resolve_wiring(s)
    outs = unconsumed_outputs(s, sources)
    if len(outs) != 1:
        raise ValueError(f"schematic has {len(outs)} unconsumed outputs")
    return outs[0]


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def _space_of_source(s: Schematic, src: Source) -> StateSpace | None:
    if isinstance(src, InputRef):
        try:
            return s.system_input(src.name).space
        except KeyError:
            return None
    try:
        comp = s.component(src.component)
    except KeyError:
        return None
    for p in comp.outputs:
        if p.name == src.port:
            return p.space
    return None


def _check_prior(prior, length, where, kind, report):
    if len(prior) != length:
        report.violations.append(
            Violation(kind, where, f"prior has {len(prior)} entries for {length} states")
        )
        return
    if any(x < 0 for x in prior):
        report.violations.append(Violation(kind, where, "negative prior entry"))
        return
    if abs(sum(prior) - 1.0) > PRIOR_TOL:
        report.violations.append(
            Violation(kind, where, f"prior sums to {sum(prior)!r}, not 1")
        )


def _check_behavior(c: ComponentSpec, where, report):
    body = c.body
    assert isinstance(body, AtomicBehavior)
    _check_prior(body.mode_prior, len(c.mode.space), where, "mode-prior-invalid", report)

    spaces = [p.space.labels for p in c.inputs] + [c.mode.space.labels]
    expected = 1
    for sp in spaces:
        expected *= len(sp)
    seen = 0
    bad = False
    for key, out in body.table.items():
        valid = all(label in spaces[k] for k, label in enumerate(key))
        if not valid:
            report.violations.append(
                Violation("behavior-table-invalid", where, f"unknown state in row {key}")
            )
            bad = True
            continue
        if len(c.outputs) == 1 and out not in c.output.space.labels:
            report.violations.append(
                Violation(
                    "behavior-table-invalid", where, f"unknown output state {out!r}"
                )
            )
            bad = True
            continue
        seen += 1
    if not bad and seen != expected:
        report.violations.append(
            Violation(
                "behavior-table-invalid",
                where,
                f"table covers {seen} of {expected} input/mode combinations",
            )
        )


def _designated_ok(space: StateSpace) -> str:
    return "ok" if "ok" in space.labels else space.labels[0]


def _check_refinement(c: ComponentSpec, where, report):
    body = c.body
    assert isinstance(body, Refinement)
    sub = body.schematic

    if len(sub.components) > MAX_SUBCOMPONENTS:
        report.violations.append(
            Violation(
                "refinement-too-large",
                where,
                f"{len(sub.components)} subcomponents exceed the cap of {MAX_SUBCOMPONENTS}",
            )
        )

    parent_ports = {p.name: p.space for p in c.inputs}
    sub_inputs = {si.name: si.space for si in sub.system_inputs}
    if set(parent_ports) != set(sub_inputs):
        report.violations.append(
            Violation(
                "refinement-interface-mismatch",
                where,
                f"parent ports {sorted(parent_ports)} vs sub-schematic inputs {sorted(sub_inputs)}",
            )
        )
    else:
        for name, space in parent_ports.items():
            if sub_inputs[name].labels != space.labels:
                report.violations.append(
                    Violation(
                        "refinement-interface-mismatch",
                        f"{where}.{name}",
                        "state spaces differ between parent port and sub-schematic input",
                    )
                )

    sources, _ = resolve_wiring(sub)
    outs = unconsumed_outputs(sub, sources)
    if len(outs) != 1:
        report.violations.append(
            Violation(
                "ambiguous-system-output",
                where,
                f"sub-schematic has {len(outs)} unconsumed outputs, needs exactly 1",
            )
        )
    elif len(c.outputs) == 1:
        producer = sub.component(outs[0].component)
        space = next(p.space for p in producer.outputs if p.name == outs[0].port)
        if space.labels != c.output.space.labels:
            report.violations.append(
                Violation(
                    "refinement-interface-mismatch",
                    where,
                    "sub-schematic output state space differs from parent output",
                )
            )

    mode_spaces = [sc.mode.space.labels for sc in sub.components]
    if body.abstraction == ANY_BROKEN:
        if len(c.mode.space) != 2:
            report.violations.append(
                Violation(
                    "abstraction-not-total",
                    where,
                    "any_broken needs a two-state parent mode",
                )
            )
    else:
        expected = 1
        for sp in mode_spaces:
            expected *= len(sp)
        seen = 0
        bad = False
        hit = set()
        for key, out in body.abstraction.items():
            valid = len(key) == len(mode_spaces) and all(
                label in mode_spaces[k] for k, label in enumerate(key)
            )
            if not valid or out not in c.mode.space.labels:
                report.violations.append(
                    Violation("abstraction-not-total", where, f"invalid row {key} -> {out!r}")
                )
                bad = True
                continue
            seen += 1
            hit.add(out)
        if not bad and seen != expected:
            report.violations.append(
                Violation(
                    "abstraction-not-total",
                    where,
                    f"abstraction covers {seen} of {expected} mode combinations",
                )
            )
        if not bad and seen == expected and hit != set(c.mode.space.labels):
            missing = sorted(set(c.mode.space.labels) - hit)
            report.warnings.append(
                Violation(
                    "abstraction-not-onto",
                    where,
                    f"parent mode states never produced: {missing}",
                )
            )


def _validate_level(s: Schematic, where: str, report: ValidationReport):
    sources, wiring_violations = resolve_wiring(s)
    for v in wiring_violations:
        report.violations.append(Violation(v.kind, f"{where}{v.where}", v.detail))

    for si in s.system_inputs:
        if si.prior is not None:
            _check_prior(
                si.prior, len(si.space), f"{where}{si.name}", "input-prior-invalid", report
            )

    for (cid, port), src in sources.items():
        comp = s.component(cid)
        tgt_space = next(p.space for p in comp.inputs if p.name == port)
        src_space = _space_of_source(s, src)
        if src_space is not None and src_space.labels != tgt_space.labels:
            report.violations.append(
                Violation(
                    "state-space-mismatch",
                    f"{where}{cid}.{port}",
                    f"source {src.ref()} carries {list(src_space.labels)}, "
                    f"port expects {list(tgt_space.labels)}",
                )
            )

    succ = component_graph(s, sources)
    for scc in _strongly_connected(succ):
        if len(scc) > 1 or scc[0] in succ[scc[0]]:
            report.violations.append(
                Violation(
                    "cycle",
                    where.rstrip(".") or "$",
                    "components form a cycle: " + " -> ".join(sorted(scc)),
                )
            )

    for c in s.components:
        cw = f"{where}{c.id}"
        if len(c.outputs) != 1:
            report.violations.append(
                Violation("multi-output", cw, f"component has {len(c.outputs)} outputs")
            )
        if isinstance(c.body, AtomicBehavior):
            _check_behavior(c, cw, report)
        else:
            _check_refinement(c, cw, report)
            _validate_level(c.body.schematic, f"{cw}.", report)


def _strongly_connected(succ: dict[str, set[str]]) -> list[list[str]]:
    """Tarjan's algorithm, iterative."""
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    out: list[list[str]] = []
    counter = 0

    for start in succ:
        if start in index:
            continue
        work = [(start, iter(sorted(succ[start])))]
        index[start] = low[start] = counter
        counter += 1
        stack.append(start)
        on_stack.add(start)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(sorted(succ[w]))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(comp)
    return out


def validate_schematic(s: Schematic) -> ValidationReport:
    """Collect semantic violations as data; nothing raises."""
    report = ValidationReport()
    _validate_level(s, "", report)
    return report


# ---------------------------------------------------------------------------
# flattening
# ---------------------------------------------------------------------------


def flatten(s: Schematic) -> tuple[Schematic, dict[str, frozenset[str]]]:
    """Replace every refinement by its subcomponents, recursively.

    Leaf ids are dot-paths rooted at the original component ids. The record
    maps every dissolved hierarchical component path to the set of leaf
    component ids it expanded into (transitively). Idempotent: a flat
    schematic comes back unchanged with an empty record.
    """
    record: dict[str, frozenset[str]] = {}

    def rec(schem: Schematic, prefix: str, binding: dict[str, Source]):
        sources, _ = resolve_wiring(schem)
        order = topological_components(schem, sources)
        by_id = {c.id: c for c in schem.components}
        flat_comps: list[ComponentSpec] = []
        flat_conns: list[Connection] = []
        out_ref: dict[str, PortRef] = {}
        leaves: set[str] = set()

        explicit = {(conn.target.component, conn.target.port) for conn in schem.connections}

        def resolved(src: Source) -> Source:
            if isinstance(src, InputRef):
                return binding[src.name]
            return out_ref[src.component]

        for cid in order:
            c = by_id[cid]
            flat_id = prefix + cid
            if isinstance(c.body, AtomicBehavior):
                flat_comps.append(
                    ComponentSpec(flat_id, c.inputs, c.outputs, c.mode, c.body)
                )
                out_ref[cid] = PortRef(flat_id, c.output.name)
                leaves.add(flat_id)
                for p in c.inputs:
                    src = resolved(sources[(cid, p.name)])
                    keep_binding = isinstance(src, InputRef) and src.name == p.name
                    if keep_binding and (cid, p.name) not in explicit:
                        continue  # still name-bound after splicing
                    flat_conns.append(Connection(src, PortRef(flat_id, p.name)))
            else:
                sub = c.body.schematic
                sub_binding = {
                    si.name: resolved(sources[(cid, si.name)])
                    for si in sub.system_inputs
                }
                sub_comps, sub_conns, sub_out, sub_leaves = rec(
                    sub, flat_id + ".", sub_binding
                )
                flat_comps.extend(sub_comps)
                flat_conns.extend(sub_conns)
                out_ref[cid] = sub_out
                record[flat_id] = frozenset(sub_leaves)
                leaves.update(sub_leaves)

        if prefix:
            sys_out = unconsumed_outputs(schem, sources)
            if len(sys_out) != 1:
                raise ValueError(f"refinement under {prefix!r} lacks a unique output")
            producer = sys_out[0].component
            return flat_comps, flat_conns, out_ref[producer], leaves
        return flat_comps, flat_conns, None, leaves

    top_binding = {si.name: InputRef(si.name) for si in s.system_inputs}
    comps, conns, _, _ = rec(s, "", top_binding)
    return Schematic(s.system_inputs, tuple(comps), tuple(conns)), record
