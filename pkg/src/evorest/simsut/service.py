"""Simulated SUT plus driver, sharing one request surface.

A SimService interprets a declarative spec: endpoints with Swagger-style
parameter declarations and a small guarded-step handler language. Handlers
record statement hits and branch distances exactly like an instrumented
SUT would, and the /controller/ paths implement the driver wire protocol,
so the whole engine can run against it with no sockets involved.

Handler steps (JSON):
  {"stmt": label}                          record a statement hit
  {"if": PRED, "branch": label,
   "then": [steps...]}                     guarded block; records the branch
  {"create": store}                        insert body into store, binds $id
  {"delete": {"store": s, "key": OPERAND}} remove an entry
  {"respond": {"status": n, "body": obj}}  answer and stop
  {"stall": ms}                            simulate a hung handler

Predicates: {"op": "eq"|"lt"|"len_eq"|"present", "left": OPERAND,
"right": OPERAND} or {"op": "exists", "store": s, "key": OPERAND}.
Operands: {"query": name} | {"path": name} | {"body": "dotted.path"} |
{"header": name} | a JSON literal. Response bodies may reference "$id",
"$path.<name>" and "$query.<name>".

Everything is deterministic: same request sequence, same responses and the
same coverage reports.
"""

from __future__ import annotations

import json
from importlib import resources
from urllib.parse import unquote, unquote_plus

from ..executor import TransportConnectionError, TransportTimeout

_MISSING_DISTANCE = float(1 << 16)


def _parse_query(qs: str) -> dict[str, str]:
    out: dict[str, str] = {}
    if not qs:
        return out
    for part in qs.split("&"):
        name, _, value = part.partition("=")
        if "%" in name or "+" in name:
            name = unquote_plus(name)
        if "%" in value or "+" in value:
            value = unquote_plus(value)
        out[name] = value
    return out


class SimulatedTimeout(TransportTimeout):
    """Raised on a stalled endpoint; behaves as a per-call timeout."""

    def __init__(self, stall_ms: int):
        super().__init__(f"handler stalled for {stall_ms} ms")
        self.stall_ms = stall_ms


class SimulatedConnectionRefused(TransportConnectionError):
    """API call while the SUT is stopped."""


def load_fixture(name: str) -> dict:
    """Load one of the canned sim specs (crud-chain, needle, faulty)."""
    fname = name.replace("-", "_") + ".json"
    text = resources.files("evorest.simsut").joinpath("fixtures").joinpath(fname).read_text()
    return json.loads(text)


class SimService:
    """One simulated SUT + driver instance."""

    def __init__(self, spec: dict, base_url: str = "http://sim-sut.local"):
        self.spec = spec
        self.base_url = base_url
        self.base_path = spec.get("base_path", "")
        self.title = spec.get("title", "sim")
        self.endpoints = spec["endpoints"]
        self.running = False
        self.stores: dict[str, dict] = {}
        self.counters: dict[str, int] = {}
        self.call_log: list[tuple[str, str]] = []
        self._routes = [self._compile_route(ep) for ep in self.endpoints]
        self._swagger_text = json.dumps(self.swagger_doc())
        # coverage state: sealed batches plus the batch being accumulated
        self._batches: list[dict[str, tuple[str, bool, float | None]]] = []
        self._current: dict[str, tuple[str, bool, float | None]] = {}
        self._lifetime: dict[str, tuple[str, bool, float | None]] = {}
        self._declared_statements = self._collect_statements()
        self._reset_stores()

    # ------------------------------------------------------------------
    # request surface

    def handle(self, verb, path, query, headers, body):
        """Uniform entry point: (status, headers, body-text)."""
        if path.startswith("/controller/"):
            return self._controller(verb, path, query, body)
        if not self.running:
            raise SimulatedConnectionRefused("SUT is stopped")
        if path == "/swagger.json" and verb == "GET":
            return 200, [("Content-Type", "application/json")], self._swagger_text
        return self._api(verb, path, query, headers, body)

    # ------------------------------------------------------------------
    # the simulated API

    def _compile_route(self, ep):
        segments = [s for s in (self.base_path + ep["path"]).split("/") if s]
        params = {p["name"]: p for p in ep.get("params", []) if p.get("in") != "body"}
        body_param = next((p for p in ep.get("params", []) if p.get("in") == "body"), None)
        return {
            "verb": ep["verb"],
            "segments": segments,
            "params": params,
            "body": body_param,
            "handler": ep["handler"],
        }

    def _api(self, verb, path, query, headers, body):
        parts = [unquote(s) if "%" in s else s for s in path.split("/") if s]
        for route in self._routes:
            if route["verb"] != verb or len(route["segments"]) != len(parts):
                continue
            path_values = {}
            ok = True
            for want, got in zip(route["segments"], parts):
                if want.startswith("{") and want.endswith("}"):
                    path_values[want[1:-1]] = got
                elif want != got:
                    ok = False
                    break
            if not ok:
                continue
            self.call_log.append((verb, path))
            return self._run_handler(route, path_values, query, headers, body)
        return 404, [("Content-Type", "application/json")], '{"error":"no such endpoint"}'

    def _run_handler(self, route, raw_path_values, raw_query, headers, body):
        ctx = {
            "path": self._coerce_map(raw_path_values, route["params"], "path"),
            "query": self._coerce_map(_parse_query(raw_query), route["params"], "query"),
            "headers": {name.lower(): value for name, value in headers or []},
            "body": self._parse_body(body),
            "id": None,
        }
        outcome = self._run_steps(route["handler"], ctx)
        if outcome is None:
            outcome = (200, {})
        status, payload = outcome
        if status == 204 or payload is None:
            return status, [], ""
        text = json.dumps(self._fill(payload, ctx), separators=(",", ":"))
        return status, [("Content-Type", "application/json")], text

    def _run_steps(self, steps, ctx):
        for step in steps:
            if "stmt" in step:
                self._record_statement(step["stmt"])
            elif "if" in step:
                taken, distance = self._evaluate(step["if"], ctx)
                self._record_branch(step["branch"], taken, distance)
                if taken:
                    outcome = self._run_steps(step["then"], ctx)
                    if outcome is not None:
                        return outcome
            elif "create" in step:
                store = step["create"]
                self.counters[store] += 1
                new_id = self.counters[store]
                self.stores[store][new_id] = ctx["body"] if ctx["body"] is not None else {}
                ctx["id"] = new_id
            elif "delete" in step:
                value, present = self._operand(step["delete"]["key"], ctx)
                if present:
                    self.stores[step["delete"]["store"]].pop(value, None)
            elif "respond" in step:
                return step["respond"]["status"], step["respond"].get("body")
            elif "stall" in step:
                raise SimulatedTimeout(step["stall"])
            else:
                raise ValueError(f"unknown handler step {step!r}")
        return None

    @staticmethod
    def _parse_body(body):
        if body is None or body == "":
            return None
        if isinstance(body, bytes):
            body = body.decode("utf-8", "replace")
        try:
            return json.loads(body)
        except ValueError:
            return None

    @staticmethod
    def _coerce_map(raw, params, where):
        out = {}
        for name, value in raw.items():
            spec = params.get(name)
            if spec is None or spec.get("in") != where:
                out[name] = value
                continue
            out[name] = SimService._coerce(value, spec.get("type", "string"))
        return out

    @staticmethod
    def _coerce(value, type_name):
        try:
            if type_name == "integer":
                return int(value)
            if type_name == "number":
                return float(value)
            if type_name == "boolean":
                return value == "true"
        except (TypeError, ValueError):
            return None
        return value

    # ------------------------------------------------------------------
    # predicates and operands

    def _operand(self, spec, ctx):
        """Returns (value, present)."""
        if isinstance(spec, dict):
            if "query" in spec:
                v = ctx["query"].get(spec["query"])
                return v, v is not None
            if "path" in spec:
                v = ctx["path"].get(spec["path"])
                return v, v is not None
            if "header" in spec:
                v = ctx["headers"].get(spec["header"].lower())
                return v, v is not None
            if "body" in spec:
                node = ctx["body"]
                for key in spec["body"].split("."):
                    if not isinstance(node, dict) or key not in node:
                        return None, False
                    node = node[key]
                return node, True
        return spec, True

    def _evaluate(self, pred, ctx):
        """Returns (taken, distance); distance is 0 exactly when taken."""
        op = pred["op"]
        if op == "exists":
            key, present = self._operand(pred["key"], ctx)
            hit = present and key in self.stores[pred["store"]]
            return hit, 0.0 if hit else 1.0
        if op == "present":
            _, present = self._operand(pred["left"], ctx)
            return present, 0.0 if present else 1.0
        left, left_ok = self._operand(pred["left"], ctx)
        right, right_ok = self._operand(pred["right"], ctx)
        if not (left_ok and right_ok):
            return False, _MISSING_DISTANCE
        if op == "eq":
            if isinstance(left, (int, float)) and isinstance(right, (int, float)):
                d = abs(left - right)
                return d == 0, float(d)
            if isinstance(left, str) and isinstance(right, str):
                d = _string_distance(left, right)
                return d == 0, float(d)
            return left == right, 0.0 if left == right else _MISSING_DISTANCE
        if op == "lt":
            if not isinstance(left, (int, float)) or not isinstance(right, (int, float)):
                return False, _MISSING_DISTANCE
            if left < right:
                return True, 0.0
            return False, float(left - right) + 1.0
        if op == "len_eq":
            if not isinstance(left, str) or not isinstance(right, int):
                return False, _MISSING_DISTANCE
            d = abs(len(left) - right)
            return d == 0, float(d)
        raise ValueError(f"unknown predicate op {op!r}")

    def _fill(self, payload, ctx):
        if isinstance(payload, dict):
            return {k: self._fill(v, ctx) for k, v in payload.items()}
        if isinstance(payload, list):
            return [self._fill(v, ctx) for v in payload]
        if isinstance(payload, str):
            if payload == "$id":
                return ctx["id"]
            if payload.startswith("$path."):
                return ctx["path"].get(payload[6:])
            if payload.startswith("$query."):
                return ctx["query"].get(payload[7:])
        return payload

    # ------------------------------------------------------------------
    # coverage recording

    def _collect_statements(self):
        labels = []

        def walk(steps):
            for step in steps:
                if "stmt" in step:
                    labels.append("Stmt_" + step["stmt"])
                elif "if" in step:
                    walk(step["then"])

        for ep in self.endpoints:
            walk(ep["handler"])
        return labels

    def _record_statement(self, label):
        tid = "Stmt_" + label
        self._current[tid] = ("statement", True, None)
        self._lifetime[tid] = ("statement", True, None)

    def _record_branch(self, label, taken, distance):
        tid = "Branch_" + label
        self._merge_target(self._current, tid, taken, distance)
        self._merge_target(self._lifetime, tid, taken, distance)

    @staticmethod
    def _merge_target(bucket, tid, taken, distance):
        old = bucket.get(tid)
        if old is not None:
            covered = old[1] or taken
            if covered:
                bucket[tid] = ("branch", True, None)
            else:
                bucket[tid] = ("branch", False, min(old[2], distance))
        else:
            bucket[tid] = ("branch", True, None) if taken else ("branch", False, distance)

    def _reset_stores(self):
        self.stores = {name: {} for name in self.spec.get("stores", [])}
        self.counters = {name: 0 for name in self.spec.get("stores", [])}

    # ------------------------------------------------------------------
    # driver protocol

    def _controller(self, verb, path, query, body):
        if path == "/controller/info" and verb == "GET":
            return self._json_response(
                {
                    "isSutRunning": self.running,
                    "baseUrlOfSut": self.base_url if self.running else None,
                    "swaggerJsonUrl": self.base_url + "/swagger.json",
                    "packagePrefixes": "sim." + self.title,
                    "authInfo": self.spec.get("auth", []),
                }
            )
        if path == "/controller/sut" and verb == "POST":
            payload = self._parse_body(body) or {}
            self.running = bool(payload.get("running"))
            if self.running:
                return self._json_response({"running": True, "baseUrlOfSut": self.base_url})
            return self._json_response({"running": False, "baseUrlOfSut": None})
        if path == "/controller/reset" and verb == "POST":
            if not self.running:
                return 500, [("Content-Type", "application/json")], '{"ok":false,"error":"SUT not running"}'
            self._reset_stores()
            return 200, [("Content-Type", "application/json")], '{"ok":true}'
        if path == "/controller/targets" and verb == "GET":
            since = _parse_query(query).get("since", "")
            return self._json_response(self._coverage_payload(since))
        return 404, [("Content-Type", "application/json")], '{"error":"unknown controller path"}'

    def _coverage_payload(self, since):
        # seal the accumulating batch so the new marker names this point
        self._batches.append(self._current)
        self._current = {}
        marker = str(len(self._batches))
        try:
            index = int(since)
        except ValueError:
            index = -1
        if not 0 <= index <= len(self._batches):
            # unknown marker: full report, including never-hit statements
            merged = dict(self._lifetime)
            for tid in self._declared_statements:
                merged.setdefault(tid, ("statement", False, None))
        else:
            merged = {}
            for batch in self._batches[index:]:
                for tid, (kind, covered, distance) in batch.items():
                    self._merge_window(merged, tid, kind, covered, distance)
        targets = []
        for tid, (kind, covered, distance) in merged.items():
            entry = {"id": tid, "kind": kind, "covered": covered}
            if kind == "branch" and not covered:
                entry["distance"] = distance
            targets.append(entry)
        return {"marker": marker, "targets": targets}

    @staticmethod
    def _merge_window(merged, tid, kind, covered, distance):
        old = merged.get(tid)
        if old is None:
            merged[tid] = (kind, covered, distance)
            return
        if old[1] or covered:
            merged[tid] = (kind, True, None)
        else:
            merged[tid] = (kind, False, min(old[2], distance))

    @staticmethod
    def _json_response(payload):
        return 200, [("Content-Type", "application/json")], json.dumps(payload, separators=(",", ":"))

    # ------------------------------------------------------------------
    # swagger generation

    def swagger_doc(self) -> dict:
        paths: dict[str, dict] = {}
        for ep in self.endpoints:
            op: dict = {"parameters": ep.get("params", []), "responses": {}}
            statuses = _response_statuses(ep["handler"])
            for status in statuses or [200]:
                entry: dict = {"description": "simulated"}
                if ep.get("creates") and 200 <= status < 300:
                    entry["schema"] = {
                        "type": "object",
                        "properties": {"id": {"type": "integer", "format": "int64"}},
                    }
                op["responses"][str(status)] = entry
            paths.setdefault(ep["path"], {})[ep["verb"].lower()] = op
        return {
            "swagger": "2.0",
            "info": {"title": self.title, "version": "1.0"},
            "basePath": self.base_path,
            "paths": paths,
        }


def _response_statuses(steps):
    out = []
    for step in steps:
        if "respond" in step:
            out.append(step["respond"]["status"])
        elif "if" in step:
            out.extend(_response_statuses(step["then"]))
    seen = []
    for s in out:
        if s not in seen:
            seen.append(s)
    return seen


def _string_distance(a: str, b: str) -> int:
    """Left-aligned character distance plus a penalty per extra char."""
    d = sum(abs(ord(x) - ord(y)) for x, y in zip(a, b))
    return d + 128 * abs(len(a) - len(b))
