"""HTTP facade over the model pipeline and inference sessions.

Models and sessions live in process memory. Model artifacts are
immutable once built, so they are shared freely; each session carries
its own lock and every mutating request holds it, which serializes
writers without blocking other sessions.

All responses are rendered through the canonical JSON helpers so that
wire bytes are reproducible and match the CLI's --json output for the
shared payloads.
"""

from __future__ import annotations

import json
import random
import threading
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import Response

from .errors import (
    HiddenVariableError,
    NetworkStructureError,
    SchematicParseError,
    UnknownVariableError,
    ValidationFailed,
    VerificationError,
)
from .formats import (
    canonical_json,
    counters_block,
    decimal9,
    posterior_block,
    session_view,
)
from .inference import Session
from .pipeline import ModelArtifacts, build_model, new_session, structure_summary


class _Registry:
    def __init__(self, seed=None):
        self.models: dict[str, ModelArtifacts] = {}
        self.structures: dict[str, dict] = {}
        self.sessions: dict[str, dict] = {}
        self.lock = threading.Lock()
        self.rng = random.Random(seed)

    def new_id(self, prefix: str) -> str:
        suffix = "".join(self.rng.choice("0123456789abcdef") for _ in range(12))
        return f"{prefix}-{suffix}"


def _json_response(payload: dict, status: int = 200) -> Response:
    return Response(
        content=canonical_json(payload),
        status_code=status,
        media_type="application/json",
    )


def create_app(seed=None, write_dir=None) -> FastAPI:
    """Build the service; `write_dir` persists posted model documents."""
    app = FastAPI(title="hierax", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    reg = _Registry(seed)
    app.state.registry = reg

    async def _body(request: Request) -> dict:
        raw = await request.body()
        if not raw:
            return {}
        try:
            payload = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise _BadRequest({"error": "malformed-json", "message": str(exc)})
        if not isinstance(payload, dict):
            raise _BadRequest({"error": "malformed-json",
                               "message": "body must be a JSON object"})
        return payload

    class _BadRequest(Exception):
        def __init__(self, payload, status: int = 400):
            self.payload = payload
            self.status = status

    @app.exception_handler(_BadRequest)
    async def _bad_request_handler(request, exc):
        return _json_response(exc.payload, exc.status)

    def _session_entry(session_id: str) -> dict:
        entry = reg.sessions.get(session_id)
        if entry is None:
            raise _BadRequest({"error": "unknown-session",
                               "session_id": session_id}, 404)
        return entry

    def _view(entry: dict) -> dict:
        return session_view(entry["session"], entry["id"], entry["model_id"])

    @app.post("/models")
    async def create_model(request: Request):
        document = await _body(request)
        try:
            artifacts = build_model(document)
        except SchematicParseError as exc:
            return _json_response(
                {"error": "parse-error", "message": str(exc)}, 400
            )
        except ValidationFailed as exc:
            return _json_response(
                {"error": "validation-failed",
                 "report": exc.report.to_dict()}, 400
            )
        except VerificationError as exc:
            return _json_response(
                {"error": "verification-failed", "message": str(exc)}, 422
            )
        with reg.lock:
            model_id = reg.new_id("model")
            reg.models[model_id] = artifacts
            reg.structures[model_id] = structure_summary(artifacts)
        if write_dir is not None:
            path = Path(write_dir)
            path.mkdir(parents=True, exist_ok=True)
            (path / f"{model_id}.json").write_text(
                json.dumps(document, indent=2, sort_keys=True) + "\n"
            )
        return _json_response(
            {"model_id": model_id, "structure": reg.structures[model_id]}, 201
        )

    @app.get("/models/{model_id}/structure")
    async def get_structure(model_id: str):
        if model_id not in reg.models:
            return _json_response(
                {"error": "unknown-model", "model_id": model_id}, 404
            )
        return _json_response(
            {"model_id": model_id, "structure": reg.structures[model_id]}
        )

    @app.post("/sessions")
    async def create_session(request: Request):
        payload = await _body(request)
        model_id = payload.get("model_id")
        if model_id not in reg.models:
            return _json_response(
                {"error": "unknown-model", "model_id": model_id}, 404
            )
        session = new_session(reg.models[model_id])
        with reg.lock:
            session_id = reg.new_id("session")
            entry = {
                "id": session_id,
                "model_id": model_id,
                "session": session,
                "lock": threading.Lock(),
            }
            reg.sessions[session_id] = entry
        return _json_response(
            {
                "session_id": session_id,
                "model_id": model_id,
                "counters": counters_block(session),
                "view": _view(entry),
            },
            201,
        )

    @app.post("/sessions/{session_id}/evidence")
    async def post_evidence(session_id: str, request: Request):
        entry = _session_entry(session_id)
        payload = await _body(request)
        asserts = payload.get("assert", {})
        retracts = payload.get("retract", [])
        if not isinstance(asserts, dict) or not isinstance(retracts, list):
            raise _BadRequest({"error": "malformed-body",
                               "message": "assert must be an object,"
                                          " retract a list"})
        session: Session = entry["session"]
        with entry["lock"]:
            try:
                for var in retracts:
                    if var not in session.net.domains:
                        raise UnknownVariableError(f"unknown variable {var!r}")
                for var, state in sorted(asserts.items()):
                    session.validate_assertion(var, str(state))
            except HiddenVariableError as exc:
                return _json_response(
                    {"error": "hidden-variable", "message": str(exc),
                     "expand": exc.component, "view": _view(entry),
                     "counters": counters_block(session)}, 409
                )
            except UnknownVariableError as exc:
                return _json_response(
                    {"error": "unknown-variable", "message": str(exc),
                     "view": _view(entry),
                     "counters": counters_block(session)}, 400
                )
            for var in retracts:
                session.retract_evidence(var)
            for var, state in sorted(asserts.items()):
                session.assert_evidence(var, str(state))
            return _json_response(
                {"view": _view(entry), "counters": counters_block(session)}
            )

    @app.post("/sessions/{session_id}/propagate")
    async def post_propagate(session_id: str, request: Request):
        entry = _session_entry(session_id)
        payload = await _body(request)
        scope = payload.get("scope", "visible")
        if scope not in ("visible", "global"):
            raise _BadRequest({"error": "bad-scope",
                               "message": "scope must be visible or global"})
        session: Session = entry["session"]
        with entry["lock"]:
            result = session.propagate(scope)
            return _json_response(
                {
                    "notice": result.notice,
                    "impossible": session.impossible,
                    "likelihood": decimal9(session.likelihood),
                    "view": _view(entry),
                    "counters": counters_block(session),
                }
            )

    def _component_action(session_id: str, payload: dict, action):
        entry = _session_entry(session_id)
        component = payload.get("component")
        if not isinstance(component, str) or not component:
            raise _BadRequest({"error": "malformed-body",
                               "message": "component path required"})
        session: Session = entry["session"]
        with entry["lock"]:
            try:
                result = action(session, component)
            except UnknownVariableError as exc:
                return _json_response(
                    {"error": "unknown-component", "message": str(exc),
                     "view": _view(entry),
                     "counters": counters_block(session)}, 400
                )
            except NetworkStructureError as exc:
                return _json_response(
                    {"error": "no-refinement", "message": str(exc),
                     "view": _view(entry),
                     "counters": counters_block(session)}, 400
                )
            except HiddenVariableError as exc:
                return _json_response(
                    {"error": "hidden-variable", "message": str(exc),
                     "expand": exc.component, "view": _view(entry),
                     "counters": counters_block(session)}, 409
                )
            return _json_response(
                {
                    "notice": result.notice,
                    "impossible": session.impossible,
                    "view": _view(entry),
                    "counters": counters_block(session),
                }
            )

    @app.post("/sessions/{session_id}/expand")
    async def post_expand(session_id: str, request: Request):
        payload = await _body(request)
        return _component_action(
            session_id, payload, lambda s, c: s.expand(c)
        )

    @app.post("/sessions/{session_id}/collapse")
    async def post_collapse(session_id: str, request: Request):
        payload = await _body(request)
        return _component_action(
            session_id, payload, lambda s, c: s.collapse(c)
        )

    @app.get("/sessions/{session_id}/posteriors")
    async def get_posteriors(session_id: str):
        entry = _session_entry(session_id)
        session: Session = entry["session"]
        with entry["lock"]:
            if not session.impossible and session.dirty_levels():
                return _json_response(
                    {
                        "error": "dirty-scope",
                        "dirty": list(session.dirty_levels()),
                        "view": _view(entry),
                        "counters": counters_block(session),
                    },
                    409,
                )
            payload = posterior_block(session)
            payload["view"] = _view(entry)
            return _json_response(payload)

    @app.get("/sessions/{session_id}/counters")
    async def get_counters(session_id: str):
        entry = _session_entry(session_id)
        session: Session = entry["session"]
        return _json_response(
            {"counters": counters_block(session), "view": _view(entry)}
        )

    return app
