"""HTTP facade: schema metadata, pattern validation, query execution.

Endpoints:
    GET  /healthz       -> "ok"
    GET  /api/schema    -> the loaded schema document
    POST /api/validate  -> diagnostics for a pattern body (422 when invalid)
    POST /api/query     -> results for a pattern body (400 on diagnostics)

State is loaded once at startup and shared read-only across requests.
"""

from __future__ import annotations

import datetime as _dt
import json
from typing import Optional

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware

from .evaluator import Caps, ResourceLimit, ValidationFailed, evaluate
from .graph import PropertyGraph
from .pattern import PatternSyntaxError, parse_pattern
from .results import result_to_json, serialize_results
from .schema import Schema, schema_to_json
from .validator import validate

MAX_BODY_BYTES = 2 * 1024 * 1024


def _diag_json(diags) -> list:
    return [{"code": d.code, "severity": d.severity, "at": d.node_ref,
             "message": d.message} for d in diags]


def build_app(schema: Schema, graph: PropertyGraph,
              caps: Optional[Caps] = None,
              now: Optional[_dt.datetime] = None) -> FastAPI:
    app = FastAPI(title="v1 pattern engine", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
        allow_headers=["*"])
    schema_doc = json.dumps(schema_to_json(schema), indent=2) + "\n"

    async def read_pattern(request: Request):
        body = await request.body()
        if len(body) > MAX_BODY_BYTES:
            return None, Response("body too large", status_code=413)
        try:
            doc = json.loads(body)
        except json.JSONDecodeError as exc:
            return None, Response(
                json.dumps({"error": f"invalid JSON: {exc}"}),
                status_code=400, media_type="application/json")
        try:
            return parse_pattern(doc), None
        except PatternSyntaxError as exc:
            return None, Response(
                json.dumps({"error": str(exc),
                            "code": type(exc).__name__}),
                status_code=400, media_type="application/json")

    @app.get("/healthz")
    def healthz():
        return Response("ok", media_type="text/plain")

    @app.get("/api/schema")
    def get_schema():
        return Response(schema_doc, media_type="application/json")

    @app.post("/api/validate")
    async def post_validate(request: Request):
        ast, err = await read_pattern(request)
        if err is not None:
            return err
        diags = validate(ast, schema)
        status = 422 if any(d.severity == "error" for d in diags) else 200
        return Response(json.dumps(_diag_json(diags), indent=2) + "\n",
                        status_code=status, media_type="application/json")

    @app.post("/api/query")
    async def post_query(request: Request):
        ast, err = await read_pattern(request)
        if err is not None:
            return err
        try:
            result = evaluate(ast, graph, now=now, caps=caps)
        except ValidationFailed as exc:
            return Response(
                json.dumps({"diagnostics": _diag_json(exc.diagnostics)},
                           indent=2) + "\n",
                status_code=400, media_type="application/json")
        except ResourceLimit as exc:
            return Response(json.dumps({"error": str(exc)}), status_code=413,
                            media_type="application/json")
        return Response(serialize_results(result),
                        media_type="application/json")

    return app
