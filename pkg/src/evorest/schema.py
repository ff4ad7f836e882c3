"""Swagger 2.0 ingestion: parse an API document into action templates.

Only Swagger 2.0 JSON is supported; OpenAPI 3 documents are rejected with a
clear error. Local ``$ref`` pointers are resolved; anything the genotype
builder cannot represent (allOf, missing types, over-deep nesting) degrades
to a plain string parameter with a logged warning instead of aborting.
"""

from __future__ import annotations

import json
import logging

from .apimodel import (
    BODY_VERBS,
    KIND_ARRAY,
    KIND_BOOLEAN,
    KIND_DATETIME,
    KIND_DOUBLE,
    KIND_ENUM,
    KIND_INT32,
    KIND_INT64,
    KIND_OBJECT,
    KIND_STRING,
    VERBS,
    ActionTemplate,
    ApiSchema,
    Constraints,
    ParamSpec,
    PathSegment,
)
from .errors import SchemaError, SchemaParseError
from .genome import genotype_for  # noqa: F401  (re-exported: genotype construction op)

logger = logging.getLogger(__name__)

MAX_NESTING = 5


def parse_schema(document: str) -> ApiSchema:
    """Parse a Swagger 2.0 JSON document. Pure: same bytes, same result."""
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as e:
        raise SchemaParseError(f"malformed JSON at byte {e.pos}: {e.msg}", offset=e.pos) from e
    if not isinstance(doc, dict):
        raise SchemaError("document root must be a JSON object")
    if "openapi" in doc:
        raise SchemaError(
            f"OpenAPI {doc['openapi']} documents are not supported; provide Swagger 2.0"
        )
    if "paths" not in doc:
        raise SchemaError('document has no "paths" object')
    base_path = (doc.get("basePath") or "").rstrip("/")
    templates = []
    for path, operations in doc["paths"].items():
        if not isinstance(operations, dict):
            continue
        shared = operations.get("parameters", [])
        for verb_lower, op in operations.items():
            verb = verb_lower.upper()
            if verb not in VERBS or not isinstance(op, dict):
                continue
            templates.append(_build_template(doc, verb, path, shared, op))
    return ApiSchema(
        base_path=base_path,
        templates=tuple(templates),
        raw_title=(doc.get("info") or {}).get("title", ""),
    )


def _build_template(doc, verb, path, shared_params, op) -> ActionTemplate:
    segments = tuple(
        PathSegment(placeholder=s[1:-1])
        if s.startswith("{") and s.endswith("}")
        else PathSegment(literal=s)
        for s in path.split("/")
        if s
    )
    declared: dict[tuple[str, str], dict] = {}
    for raw in list(shared_params) + list(op.get("parameters", [])):
        raw = _deref(doc, raw, f"{verb} {path}")
        declared[(raw.get("in", ""), raw.get("name", ""))] = raw
    path_params, query_params, header_params = [], [], []
    body_spec = None
    for (where, name), raw in declared.items():
        if where == "path":
            path_params.append(_param_from_swagger(doc, raw, force_required=True))
        elif where == "query":
            query_params.append(_param_from_swagger(doc, raw))
        elif where == "header":
            header_params.append(_param_from_swagger(doc, raw))
        elif where == "body":
            if verb not in BODY_VERBS:
                logger.warning("%s %s declares a body; dropped (verb takes no payload)", verb, path)
                continue
            spec = _param_from_schema(
                doc, "body", raw.get("schema", {}), raw.get("required", False), 0
            )
            body_spec = spec
        else:
            logger.warning(
                "parameter %r of %s %s has unsupported location %r; skipped",
                name, verb, path, where,
            )
    placeholder_names = {s.placeholder for s in segments if s.placeholder is not None}
    declared_names = {p.name for p in path_params}
    for missing in [n for n in placeholder_names if n not in declared_names]:
        logger.warning("%s %s: undeclared path placeholder %r treated as string", verb, path, missing)
        path_params.append(ParamSpec(name=missing, kind=KIND_STRING))
    return ActionTemplate(
        verb=verb,
        path=segments,
        path_params=tuple(p for p in path_params if p.name in placeholder_names),
        query_params=tuple(query_params),
        header_params=tuple(header_params),
        body_spec=body_spec,
        produces_location=_produces_location(doc, verb, op),
    )


def _produces_location(doc, verb, op) -> bool:
    """Creation heuristic: POST whose 2xx response exposes an id or Location."""
    if verb != "POST":
        return False
    for code, resp in (op.get("responses") or {}).items():
        if not (isinstance(code, str) and len(code) == 3 and code.startswith("2")):
            continue
        resp = _deref(doc, resp, "response")
        if "Location" in (resp.get("headers") or {}):
            return True
        schema = resp.get("schema")
        if schema is not None:
            schema = _deref(doc, schema, "response schema")
            if "id" in (schema.get("properties") or {}):
                return True
    return False


def _deref(doc, node, context: str):
    seen = []
    while isinstance(node, dict) and "$ref" in node:
        ref = node["$ref"]
        if not isinstance(ref, str) or not ref.startswith("#/"):
            raise SchemaError(f"cannot resolve non-local $ref {ref!r} in {context}")
        if ref in seen:
            return {"type": "string"}  # cyclic definition: degrade downstream
        seen.append(ref)
        target = doc
        for part in ref[2:].split("/"):
            part = part.replace("~1", "/").replace("~0", "~")
            if not isinstance(target, dict) or part not in target:
                raise SchemaError(f"unresolvable $ref {ref!r} in {context}")
            target = target[part]
        node = target
    return node


def _constraints(raw) -> Constraints | None:
    c = Constraints(
        minimum=raw.get("minimum"),
        maximum=raw.get("maximum"),
        max_length=raw.get("maxLength"),
        max_items=raw.get("maxItems"),
    )
    if c.minimum is None and c.maximum is None and c.max_length is None and c.max_items is None:
        return None
    return c


def _param_from_swagger(doc, raw, force_required=False) -> ParamSpec:
    """Path/query/header parameter (type described inline, Swagger 2.0 style)."""
    return _param_from_schema(
        doc, raw.get("name", ""), raw, force_required or raw.get("required", False), 0
    )


def _param_from_schema(doc, name, raw, required, depth) -> ParamSpec:
    raw = _deref(doc, raw, f"parameter {name!r}")
    if depth > MAX_NESTING:
        logger.warning("parameter %r nests deeper than %d; degraded to string", name, MAX_NESTING)
        return ParamSpec(name=name, kind=KIND_STRING, required=required)
    enum_values = raw.get("enum")
    if enum_values:
        return ParamSpec(
            name=name, kind=KIND_ENUM, required=required, enum_values=tuple(enum_values)
        )
    t = raw.get("type")
    if t is None and "properties" in raw:
        t = "object"
    if t == "integer":
        kind = KIND_INT64 if raw.get("format") == "int64" else KIND_INT32
        return ParamSpec(name=name, kind=kind, required=required, constraints=_constraints(raw))
    if t == "number":
        return ParamSpec(name=name, kind=KIND_DOUBLE, required=required, constraints=_constraints(raw))
    if t == "boolean":
        return ParamSpec(name=name, kind=KIND_BOOLEAN, required=required)
    if t == "string":
        if raw.get("format") == "date-time":
            return ParamSpec(name=name, kind=KIND_DATETIME, required=required)
        return ParamSpec(name=name, kind=KIND_STRING, required=required, constraints=_constraints(raw))
    if t == "object":
        required_names = set(raw.get("required") or [])
        fields = tuple(
            _param_from_schema(doc, fname, fschema, fname in required_names, depth + 1)
            for fname, fschema in (raw.get("properties") or {}).items()
        )
        return ParamSpec(name=name, kind=KIND_OBJECT, required=required, fields=fields)
    if t == "array":
        items = raw.get("items")
        if not items:
            logger.warning("array parameter %r has no items; degraded to string", name)
            return ParamSpec(name=name, kind=KIND_STRING, required=required)
        element = _param_from_schema(doc, name + "[]", items, True, depth + 1)
        return ParamSpec(
            name=name, kind=KIND_ARRAY, required=required,
            constraints=_constraints(raw), element=element,
        )
    logger.warning(
        "parameter %r uses unsupported construct (type=%r); degraded to string", name, t
    )
    return ParamSpec(name=name, kind=KIND_STRING, required=required)
