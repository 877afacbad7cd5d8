"""Command-line entry point.

Subcommands: validate-schema, validate-graph, validate (pattern), query,
fuzz, fixture, serve. Exit codes: 0 success, 1 diagnostics/failures,
2 usage errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import fixture as fixture_mod
from . import graph as graph_mod
from . import schema as schema_mod
from . import values as V
from .evaluator import Caps, ResourceLimit, ValidationFailed, evaluate
from .oracle import generate_instance, oracle_evaluate
from .pattern import PatternSyntaxError, parse_pattern
from .results import render_table, serialize_results
from .validator import validate


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _load_schema(path: str):
    return schema_mod.parse_schema(_read(path))


def _load_graph(path: str, schema):
    return graph_mod.load_graph(_read(path), schema)


def _caps(args) -> Caps:
    caps = Caps()
    env = os.environ.get("V1_MAX_ASSIGNMENTS")
    if env:
        caps.max_rows = int(env)
    if getattr(args, "max_assignments", None):
        caps.max_rows = args.max_assignments
    if getattr(args, "max_paths", None):
        caps.max_paths = args.max_paths
    return caps


def _diagnostics_out(diags, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(
            [{"code": d.code, "severity": d.severity, "at": d.node_ref,
              "message": d.message} for d in diags], indent=2) + "\n"
    return "".join(d.text() + "\n" for d in diags)


def cmd_validate_schema(args) -> int:
    try:
        _load_schema(args.schema)
    except schema_mod.SchemaError as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return 1
    print("ok")
    return 0


def cmd_validate_graph(args) -> int:
    try:
        schema = _load_schema(args.schema)
        _load_graph(args.graph, schema)
    except (schema_mod.SchemaError, graph_mod.GraphError) as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return 1
    print("ok")
    return 0


def cmd_validate(args) -> int:
    try:
        schema = _load_schema(args.schema)
    except schema_mod.SchemaError as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return 1
    try:
        ast = parse_pattern(_read(args.pattern))
    except PatternSyntaxError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    diags = validate(ast, schema)
    if diags:
        sys.stdout.write(_diagnostics_out(diags, args.format))
        return 1 if any(d.severity == "error" for d in diags) else 0
    print("ok" if args.format == "text" else "[]")
    return 0


def _parse_now(text):
    return V.parse_datetime_text(text) if text else None


def cmd_query(args) -> int:
    try:
        schema = _load_schema(args.schema)
        graph = _load_graph(args.graph, schema)
        ast = parse_pattern(_read(args.pattern))
    except (schema_mod.SchemaError, graph_mod.GraphError,
            PatternSyntaxError) as exc:
        code = getattr(exc, "code", type(exc).__name__)
        print(f"{code}: {exc}", file=sys.stderr)
        return 1
    try:
        result = evaluate(ast, graph, now=_parse_now(args.now),
                          caps=_caps(args))
    except ValidationFailed as exc:
        sys.stdout.write(_diagnostics_out(exc.diagnostics, args.format))
        return 1
    except ResourceLimit as exc:
        print(f"ResourceLimit: {exc}", file=sys.stderr)
        return 1
    text = render_table(result) if args.format == "table" \
        else serialize_results(result)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_fixture(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    schema = schema_mod.parse_schema(fixture_mod.BASE_SCHEMA)
    files = {
        "westeros.schema.json": schema_mod.serialize_schema(schema),
        "westeros.graph.json": json.dumps(fixture_mod.base_graph(args.seed),
                                          indent=2) + "\n",
        "spatial.schema.json": schema_mod.serialize_schema(
            schema_mod.parse_schema(fixture_mod.spatial_schema())),
        "spatial.graph.json": json.dumps(fixture_mod.spatial_graph(args.seed),
                                         indent=2) + "\n",
    }
    for name, text in files.items():
        (out / name).write_text(text, encoding="utf-8")
        print(out / name)
    return 0


def cmd_fuzz(args) -> int:
    from .results import serialize_results as ser
    failures = 0
    for seed in range(args.seeds):
        schema, graph, ast, docs = generate_instance(
            seed, entities=args.entities, relationships=args.relationships)
        want = ser(oracle_evaluate(ast, graph))
        got = ser(evaluate(ast, graph))
        if want != got:
            failures += 1
            out = Path(args.out_dir or ".")
            out.mkdir(parents=True, exist_ok=True)
            for suffix, doc in zip(("schema", "graph", "pattern"), docs):
                (out / f"fuzz-{seed}.{suffix}.json").write_text(
                    json.dumps(doc, indent=2) + "\n", encoding="utf-8")
            print(f"seed {seed}: MISMATCH (repro written)", file=sys.stderr)
    print(f"{args.seeds} seeds, {failures} failures")
    return 1 if failures else 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import build_app

    schema = _load_schema(args.schema)
    graph = _load_graph(args.graph, schema)
    app = build_app(schema, graph, caps=_caps(args),
                    now=_parse_now(args.now))
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="v1", description="property-graph pattern engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate-schema", help="check a schema document")
    p.add_argument("--schema", required=True)
    p.set_defaults(fn=cmd_validate_schema)

    p = sub.add_parser("validate-graph", help="check a graph document")
    p.add_argument("--schema", required=True)
    p.add_argument("--graph", required=True)
    p.set_defaults(fn=cmd_validate_graph)

    p = sub.add_parser("validate", help="check a pattern document")
    p.add_argument("--schema", required=True)
    p.add_argument("--pattern", required=True)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("query", help="evaluate a pattern over a graph")
    p.add_argument("--schema", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--pattern", required=True)
    p.add_argument("--format", choices=("json", "table"), default="json")
    p.add_argument("--now", help="frozen now() as YYYY-MM-DDThh:mm:ss")
    p.add_argument("--out")
    p.add_argument("--max-assignments", type=int)
    p.add_argument("--max-paths", type=int)
    p.set_defaults(fn=cmd_query)

    p = sub.add_parser("fixture", help="emit the bundled fixture files")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out-dir", default="fixtures")
    p.set_defaults(fn=cmd_fixture)

    p = sub.add_parser("fuzz", help="differential testing against the oracle")
    p.add_argument("--seeds", type=int, default=100)
    p.add_argument("--entities", type=int, default=16)
    p.add_argument("--relationships", type=int, default=30)
    p.add_argument("--out-dir")
    p.set_defaults(fn=cmd_fuzz)

    p = sub.add_parser("serve", help="HTTP facade for the engine")
    p.add_argument("--schema", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8977)
    p.add_argument("--now", help="frozen now() as YYYY-MM-DDThh:mm:ss")
    p.add_argument("--max-assignments", type=int)
    p.add_argument("--max-paths", type=int)
    p.set_defaults(fn=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
