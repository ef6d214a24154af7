"""Exception taxonomy shared across the package.

Errors that callers are expected to branch on (impossible evidence,
hidden variables, stale posteriors) get their own classes so the CLI
and HTTP layers can map them to exit codes and status codes without
string matching.
"""


class HieraxError(Exception):
    """Base class for all package-specific failures."""


class SchematicParseError(HieraxError):
    """Raised when a schematic document is not well formed.

    Carries optional line/column information when the failure came out
    of the JSON tokenizer.
    """

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class ValidationFailed(HieraxError):
    """A semantic precondition was violated; carries the full report."""

    def __init__(self, report):
        self.report = report
        lines = "; ".join(str(v) for v in report.violations)
        super().__init__(f"schematic failed validation: {lines}")


class NetworkStructureError(HieraxError):
    """Structural misuse of a Bayesian network operation."""


class AbsorptionCycleError(NetworkStructureError):
    """Absorbing the node would force a directed cycle among survivors."""


class EnumerationSizeError(HieraxError):
    """The full joint would exceed the enumeration guard."""


class NotChordalError(HieraxError):
    """Clique extraction was handed a graph that is not chordal."""


class ImpossibleEvidenceError(HieraxError):
    """Conditioning produced a zero normalizing constant."""


class HiddenVariableError(HieraxError):
    """The variable belongs to a refinement that has not been expanded.

    `component` names the refinement to expand first, when known.
    """

    def __init__(self, message, component=None):
        self.component = component
        super().__init__(message)


class DirtyScopeError(HieraxError):
    """Posterior requested while pending evidence has not been propagated."""


class UnknownVariableError(HieraxError):
    """Variable or state label not present in the model."""


class VerificationError(HieraxError):
    """An internal cross-check failed; the pipeline refuses to continue."""
