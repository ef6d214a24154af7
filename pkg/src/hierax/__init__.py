"""Hierarchical model-based diagnosis for component schematics."""

from .errors import (
    DirtyScopeError,
    EnumerationSizeError,
    HiddenVariableError,
    HieraxError,
    ImpossibleEvidenceError,
    NetworkStructureError,
    NotChordalError,
    SchematicParseError,
    UnknownVariableError,
    ValidationFailed,
    VerificationError,
)
from .factors import Factor, divide, marginalize, multiply, product
from .inference import ActionResult, PosteriorReport, Session
from .jointree import (
    CompositeJoinTree,
    JoinTree,
    build_composite,
    build_join_tree,
    verify_composite,
    verify_join_tree,
)
from .network import BayesianNetwork
from .oracle import condition_joint, enumerate_joint
from .pipeline import ModelArtifacts, build_model, new_session, structure_summary
from .schematic import (
    Schematic,
    ValidationReport,
    flatten,
    parse_document,
    parse_schematic,
    serialize_schematic,
    validate_schematic,
)
from .service import create_app
from .transform import compile_network, compile_refinement
from .translate import TranslationIndex, translate

__version__ = "0.1.0"

__all__ = [
    "ActionResult",
    "BayesianNetwork",
    "CompositeJoinTree",
    "compile_network",
    "compile_refinement",
    "condition_joint",
    "create_app",
    "DirtyScopeError",
    "divide",
    "EnumerationSizeError",
    "enumerate_joint",
    "Factor",
    "flatten",
    "HiddenVariableError",
    "HieraxError",
    "ImpossibleEvidenceError",
    "JoinTree",
    "build_composite",
    "build_join_tree",
    "build_model",
    "marginalize",
    "ModelArtifacts",
    "multiply",
    "NetworkStructureError",
    "new_session",
    "NotChordalError",
    "parse_document",
    "parse_schematic",
    "PosteriorReport",
    "product",
    "Schematic",
    "SchematicParseError",
    "serialize_schematic",
    "Session",
    "structure_summary",
    "translate",
    "TranslationIndex",
    "UnknownVariableError",
    "ValidationFailed",
    "validate_schematic",
    "ValidationReport",
    "verify_composite",
    "verify_join_tree",
    "VerificationError",
]
