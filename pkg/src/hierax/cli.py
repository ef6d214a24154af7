"""Command line front end.

Subcommands mirror the pipeline stages: validate a schematic, dump the
compiled network and join tree, run a diagnosis with evidence flags,
cross-check against the enumeration oracle, or start the HTTP service.

Exit codes: 0 success, 1 validation or usage failure, 2 impossible
evidence, 3 internal verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import (
    HiddenVariableError,
    HieraxError,
    ImpossibleEvidenceError,
    SchematicParseError,
    UnknownVariableError,
    ValidationFailed,
    VerificationError,
)
from .formats import (
    canonical_json,
    oracle_line,
    posterior_block,
    render_report_text,
    render_violations,
)
from .jointree import outline
from .network import network_to_text
from .oracle import condition_joint, enumerate_joint
from .pipeline import build_model, new_session
from .schematic import parse_schematic, validate_schematic
from .translate import translate


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hierax",
        description="Diagnose component schematics with Bayesian networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("file", help="schematic document (JSON)")
        p.add_argument(
            "-e", "--evidence", action="append", default=[],
            metavar="VAR=STATE", help="observed variable, repeatable",
        )
        p.add_argument(
            "--expand", action="append", default=[], metavar="PATH",
            help="refinement to open before asserting evidence, repeatable",
        )
        p.add_argument(
            "--explicit-input-nodes", action="store_true",
            help="materialize connection-fed input ports as variables",
        )
        return p

    common(sub.add_parser("validate", help="report schematic violations"))
    common(sub.add_parser("compile", help="dump compiled network and join tree"))

    diag = common(sub.add_parser("diagnose", help="rank mode posteriors"))
    diag.add_argument(
        "--scope", choices=("visible", "global"), default="visible",
        help="propagation scope (default: visible)",
    )
    diag.add_argument(
        "--json", action="store_true",
        help="emit the canonical JSON payload instead of text",
    )

    orc = common(sub.add_parser("oracle", help="enumeration cross-check"))
    orc.add_argument(
        "--query", metavar="VAR", default=None,
        help="print only this variable's marginal",
    )

    srv = sub.add_parser("serve", help="start the HTTP service")
    srv.add_argument("--port", type=int, default=8000)
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument(
        "--seed", type=int, default=None,
        help="seed for model/session id generation",
    )
    return parser


def _parse_evidence(pairs) -> dict[str, str]:
    out: dict[str, str] = {}
    for item in pairs:
        var, sep, state = item.partition("=")
        if not sep or not var or not state:
            raise UnknownVariableError(
                f"evidence flag {item!r} is not VAR=STATE"
            )
        out[var] = state
    return out


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise SchematicParseError(f"cannot read {path}: {exc.strerror}")


def _load_document(path: str) -> dict:
    text = _read_text(path)
    # strict parse first so duplicate keys and syntax errors are rejected
    parse_schematic(text)
    return json.loads(text)


def _cmd_validate(args) -> int:
    schematic = parse_schematic(_read_text(args.file))
    report = validate_schematic(schematic)
    sys.stdout.write(render_violations(report))
    return 0 if report.ok else 1


def _cmd_compile(args) -> int:
    artifacts = build_model(
        _load_document(args.file), explicit_inputs=args.explicit_input_nodes
    )
    sys.stdout.write(network_to_text(artifacts.compiled))
    sys.stdout.write("\n")
    sys.stdout.write(outline(artifacts.composite))
    return 0


def _cmd_diagnose(args) -> int:
    artifacts = build_model(
        _load_document(args.file), explicit_inputs=args.explicit_input_nodes
    )
    session = new_session(artifacts)
    for component in args.expand:
        session.expand(component)
    for var, state in _parse_evidence(args.evidence).items():
        session.assert_evidence(var, state)
    session.propagate(args.scope)
    if args.json:
        sys.stdout.write(canonical_json(posterior_block(session)) + "\n")
    else:
        sys.stdout.write(render_report_text(session.diagnose()))
    return 2 if session.impossible else 0


def _cmd_oracle(args) -> int:
    schematic = parse_schematic(_read_text(args.file))
    net, _ = translate(schematic, explicit_inputs=args.explicit_input_nodes)
    joint = enumerate_joint(net)
    marginals = condition_joint(joint, _parse_evidence(args.evidence))
    if args.query is not None:
        if args.query not in marginals:
            raise UnknownVariableError(f"unknown variable {args.query!r}")
        sys.stdout.write(oracle_line(marginals[args.query]) + "\n")
    else:
        for var in sorted(marginals):
            sys.stdout.write(f"{var}: {oracle_line(marginals[var])}\n")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(seed=args.seed), host=args.host, port=args.port)
    return 0


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1

    commands = {
        "validate": _cmd_validate,
        "compile": _cmd_compile,
        "diagnose": _cmd_diagnose,
        "oracle": _cmd_oracle,
        "serve": _cmd_serve,
    }
    try:
        return commands[args.command](args)
    except ValidationFailed as exc:
        sys.stdout.write(render_violations(exc.report))
        return 1
    except ImpossibleEvidenceError as exc:
        sys.stderr.write(f"impossible evidence: {exc}\n")
        return 2
    except VerificationError as exc:
        sys.stderr.write(f"internal verification failure: {exc}\n")
        return 3
    except (SchematicParseError, UnknownVariableError,
            HiddenVariableError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except HieraxError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
