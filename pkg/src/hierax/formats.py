"""Deterministic wire and console renderings.

The CLI and the HTTP service must render identical posterior bytes for
identical model and evidence, so everything that reaches a client goes
through these helpers: probabilities become fixed 9-decimal strings,
JSON keys are sorted, separators are compact.
"""

from __future__ import annotations

import json

from .inference import PosteriorReport, Session


def decimal9(x: float) -> str:
    return f"{x:.9f}"


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False, allow_nan=False)


def render_posteriors(session: Session) -> dict[str, list[str]]:
    """Posterior vectors for every visible variable, keys sorted."""
    out: dict[str, list[str]] = {}
    for var in session.visible_variables():
        out[var] = [decimal9(p) for p in session.posterior(var)]
    return out


def render_ranking(report: PosteriorReport) -> list[dict]:
    return [
        {
            "component": e.component,
            "variable": e.variable,
            "states": list(e.states),
            "probabilities": [decimal9(p) for p in e.probabilities],
            "ok_state": e.ok_state,
            "ok_probability": decimal9(e.ok_probability),
        }
        for e in report.entries
    ]


def counters_block(session: Session) -> dict[str, int]:
    return {lvl: n for lvl, n in sorted(session.counters.items())}


def posterior_block(session: Session) -> dict:
    """The shared payload behind `diagnose --json` and GET posteriors."""
    if session.impossible:
        return {
            "counters": counters_block(session),
            "impossible": True,
            "likelihood": decimal9(0.0),
            "posteriors": {},
            "ranking": [],
        }
    report = session.diagnose()
    return {
        "counters": counters_block(session),
        "impossible": False,
        "likelihood": decimal9(report.likelihood),
        "posteriors": render_posteriors(session),
        "ranking": render_ranking(report),
    }


def session_view(session: Session, session_id: str, model_id: str) -> dict:
    return {
        "session_id": session_id,
        "model_id": model_id,
        "evidence": dict(sorted(session.evidence.items())),
        "expanded": list(session.expanded),
        "dirty": list(session.dirty_levels()),
        "impossible": session.impossible,
    }


def render_report_text(report: PosteriorReport) -> str:
    """Console rendering of a diagnosis, one line per mode variable."""
    if report.impossible:
        return "impossible evidence: the observation has probability zero\n"
    lines = [f"likelihood {decimal9(report.likelihood)}"]
    for rank, e in enumerate(report.entries, start=1):
        cells = " ".join(
            f"{s}={decimal9(p)}" for s, p in zip(e.states, e.probabilities)
        )
        lines.append(f"{rank}. {e.component} [{e.variable}] {cells}")
    return "\n".join(lines) + "\n"


def render_violations(report) -> str:
    if report.ok:
        lines = ["ok"]
    else:
        lines = [
            f"{v.kind} at {v.where}: {v.detail}" for v in report.violations
        ]
    for w in report.warnings:
        lines.append(f"warning: {w}")
    return "\n".join(lines) + "\n"


def oracle_line(probs) -> str:
    return "(" + ", ".join(f"{p:.10f}" for p in probs) + ")"
