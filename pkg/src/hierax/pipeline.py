"""One-shot model construction shared by the CLI and the HTTP service.

Running the pipeline parses and validates the document, translates it,
compiles every refinement, builds the composite join tree and verifies
it. A model that comes out the other side is internally consistent;
callers hold on to the artifact bundle and spin sessions off it.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ValidationFailed
from .inference import Session
from .jointree import CompositeJoinTree, build_composite
from .network import BayesianNetwork
from .schematic import (
    Schematic,
    ValidationReport,
    parse_document,
    serialize_schematic,
    validate_schematic,
)
from .transform import LevelFragment, compile_network
from .translate import TranslationIndex, translate


@dataclass(frozen=True)
class ModelArtifacts:
    """Everything derived from one schematic document."""

    document: dict
    schematic: Schematic
    report: ValidationReport
    network: BayesianNetwork
    index: TranslationIndex
    compiled: BayesianNetwork
    fragments: dict[str, LevelFragment]
    composite: CompositeJoinTree


def build_model(document: dict, explicit_inputs: bool = False) -> ModelArtifacts:
    """Parse, validate, translate, compile, assemble, verify.

    Raises SchematicParseError for malformed documents, ValidationFailed
    for semantic violations and VerificationError when an internal
    cross-check fails (the latter should never happen for inputs this
    pipeline accepted before).
    """
    schematic = parse_document(document)
    report = validate_schematic(schematic)
    if not report.ok:
        raise ValidationFailed(report)
    network, index = translate(schematic, explicit_inputs=explicit_inputs)
    compiled, fragments = compile_network(network, index)
    composite = build_composite(network, index, compiled, fragments)
    return ModelArtifacts(
        document=document,
        schematic=schematic,
        report=report,
        network=network,
        index=index,
        compiled=compiled,
        fragments=fragments,
        composite=composite,
    )


def new_session(artifacts: ModelArtifacts) -> Session:
    return Session(artifacts.network, artifacts.composite, artifacts.index)


def _component_node(artifacts: ModelArtifacts, path: str) -> dict:
    index = artifacts.index
    net = artifacts.network
    spec = index.component_spec[path]
    mode_var = index.mode_of_component[path]
    out_var = index.output_var(path)
    return {
        "path": path,
        "refined": path in index.refined,
        "mode_variable": mode_var,
        "mode_states": list(net.domains[mode_var]),
        "output_variable": out_var,
        "output_states": list(net.domains[out_var]),
        "inputs": [
            {"port": p.name, "variable": index.var_of_port[(path, p.name)]}
            for p in spec.inputs
        ],
        "children": [
            _component_node(artifacts, child)
            for child in index.refined.get(path, ())
        ],
    }


def structure_summary(artifacts: ModelArtifacts) -> dict:
    """Hierarchy, vocabularies and level map for clients."""
    index = artifacts.index
    net = artifacts.network
    composite = artifacts.composite
    return {
        "system_inputs": [
            {"name": si.name, "states": list(si.space.labels)}
            for si in artifacts.schematic.system_inputs
        ],
        "components": [
            _component_node(artifacts, path)
            for path in index.component_spec
            if index.component_depth[path] == 0
        ],
        "variables": {
            v: {
                "states": list(net.domains[v]),
                "level": composite.home_level[v],
            }
            for v in sorted(net.variables)
        },
        "levels": list(composite.levels),
    }


def canonical_document(artifacts: ModelArtifacts) -> dict:
    return serialize_schematic(artifacts.schematic)
