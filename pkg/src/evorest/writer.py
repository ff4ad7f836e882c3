"""Emit the final suite as self-contained test files.

Java output follows the RestAssured call-chain style: one method per test,
one given()...then().statusCode(...) chain per action, with a location
variable plus a resolveLocation(...) call for chained creations. Status
assertions use the statuses observed at generation time. NEUTRAL_JSON is a
machine-readable array of tests, each an array of calls:
{verb, path, query, headers, body, expected_status, link?}; a link carries
{"from_test_call_index": k} meaning the call operates on the resource
created by call k of the same test.
"""

from __future__ import annotations

import enum
import json
import os
from pathlib import Path

from .fitness import EvaluatedIndividual
from .genome import render
from .httpcall import AuthCredential


class OutputFormat(enum.Enum):
    JAVA_JUNIT_4 = "JAVA_JUNIT_4"
    JAVA_JUNIT_5 = "JAVA_JUNIT_5"
    NEUTRAL_JSON = "NEUTRAL_JSON"


def write_suite(
    suite: list[EvaluatedIndividual],
    output_format: OutputFormat,
    folder: str | os.PathLike,
    file_name: str,
    base_path: str = "",
    credentials: tuple[AuthCredential, ...] = (),
) -> list[Path]:
    """Serialize the suite; returns the written paths.

    The full file content is built before anything touches the disk, so an
    unwritable folder fails without partial output.
    """
    if output_format is OutputFormat.NEUTRAL_JSON:
        text = render_neutral_json(suite, base_path, credentials)
        target = Path(folder) / f"{file_name}.json"
    else:
        junit5 = output_format is OutputFormat.JAVA_JUNIT_5
        text = render_java(suite, file_name, junit5, base_path, credentials)
        target = Path(folder) / f"{file_name}.java"
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text, encoding="utf-8")
    return [target]


# ---------------------------------------------------------------------------
# NEUTRAL_JSON


def _calls_of(ev: EvaluatedIndividual, base_path: str, credentials):
    # emit raw gene values in linked paths; the id swap happens at replay
    # time (resolveLocation in Java, the link field in NEUTRAL_JSON)
    return render(ev.individual, {}, base_path, "", tuple(credentials))


def render_neutral_json(
    suite: list[EvaluatedIndividual],
    base_path: str = "",
    credentials: tuple[AuthCredential, ...] = (),
) -> str:
    tests = []
    for ev in suite:
        calls = _calls_of(ev, base_path, credentials)
        test = []
        for i, call in enumerate(calls):
            status = ev.results[i].status if i < len(ev.results) else None
            entry = {
                "verb": call.verb,
                "path": call.path,
                "query": call.query,
                "headers": [{"name": n, "value": v} for n, v in call.headers],
                "body": call.body,
                "expected_status": status,
            }
            link = ev.individual.actions[i].path_override
            if link is not None:
                entry["link"] = {"from_test_call_index": link.source_action_index}
            test.append(entry)
        tests.append(test)
    return json.dumps(tests, indent=2) + "\n"


def read_neutral_suite(text: str) -> list[list[dict]]:
    """Parse NEUTRAL_JSON output back into its call structure."""
    data = json.loads(text)
    if not isinstance(data, list) or not all(isinstance(t, list) for t in data):
        raise ValueError("neutral suite must be an array of tests")
    return data


# ---------------------------------------------------------------------------
# Java


_JAVA_HEADER = """\
/*
 * Generated REST API test suite.
 *
 * Self-contained apart from two pieces the host harness provides:
 *   - String baseUrlOfSut: where the SUT listens (start it, e.g. through
 *     the driver, in a @BeforeClass/@BeforeAll init method);
 *   - String resolveLocation(String saved, String concrete): returns
 *     `concrete` with its id segment swapped for the one in `saved`, e.g.
 *       resolveLocation("/items/7", base + "/items/-3/rating")
 *         -> base + "/items/7/rating"
 *
 * Uses RestAssured (static imports of io.restassured.RestAssured.given).
 * Status-code assertions replay the responses observed when the suite was
 * generated.
 */
"""


def render_java(
    suite: list[EvaluatedIndividual],
    class_name: str,
    junit5: bool,
    base_path: str = "",
    credentials: tuple[AuthCredential, ...] = (),
) -> str:
    test_import = "org.junit.jupiter.api.Test" if junit5 else "org.junit.Test"
    lines = [_JAVA_HEADER]
    lines.append(f"import {test_import};")
    lines.append("import static io.restassured.RestAssured.given;")
    lines.append("")
    lines.append(f"public class {class_name} {{")
    if not suite:
        lines.append("")
        lines.append("    // empty suite: the search produced no tests")
    for n, ev in enumerate(suite):
        lines.append("")
        lines.extend(_java_test_method(n, ev, base_path, credentials))
    lines.append("}")
    return "\n".join(lines) + "\n"


def _java_escape(s: str) -> str:
    out = s.replace("\\", "\\\\").replace('"', '\\"')
    return out.replace("\n", "\\n").replace("\r", "\\r").replace("\t", "\\t")


def _location_var(creation_path: str, index: int) -> str:
    tail = [seg for seg in creation_path.split("/") if seg and not seg.startswith("{")]
    name = tail[-1] if tail else "resource"
    clean = "".join(ch if ch.isalnum() else "_" for ch in name)
    return f"location_{clean}_{index}"


def _java_test_method(n: int, ev: EvaluatedIndividual, base_path, credentials) -> list[str]:
    calls = _calls_of(ev, base_path, credentials)
    actions = ev.individual.actions
    # creations some later call links against, and whose location was captured
    linked_sources = {}
    for i, action in enumerate(actions):
        link = action.path_override
        if link is not None and i < len(ev.results):
            src = link.source_action_index
            if src < len(ev.results) and ev.results[src].extracted_location is not None:
                linked_sources[src] = link.creation_path
    body: list[str] = []
    if ev.is_fault_revealing:
        body.append("    // fault: a server error (5xx) was observed on this test")
    body.append("    @Test")
    body.append(f"    public void test{n}() throws Exception {{")
    for src, creation_path in linked_sources.items():
        body.append(f'        String {_location_var(creation_path, src)} = "";')
        body.append("")
    for i, call in enumerate(calls):
        status = ev.results[i].status if i < len(ev.results) else None
        chain: list[str] = []
        opener = 'given().accept("*/*")'
        capture = i in linked_sources
        if capture:
            chain.append(f"        String id_{i} = {opener}")
        else:
            chain.append(f"        {opener}")
        for name, value in call.headers:
            chain.append(f'                .header("{_java_escape(name)}", "{_java_escape(value)}")')
        if call.body is not None:
            chain.append('                .contentType("application/json")')
            chain.append(f'                .body("{_java_escape(call.body)}")')
        url_expr = f'baseUrlOfSut + "{_java_escape(call.path + ("?" + call.query if call.query else ""))}"'
        link = actions[i].path_override
        if link is not None and link.source_action_index in linked_sources:
            var = _location_var(link.creation_path, link.source_action_index)
            url_expr = f"resolveLocation({var}, {url_expr})"
        chain.append(f"                .{call.verb.lower()}({url_expr})")
        chain.append("                .then()")
        if capture:
            if status is not None:
                chain.append(f"                .statusCode({status})")
            chain.append('                .extract().body().path("id").toString();')
        elif status is not None:
            chain.append(f"                .statusCode({status});")
        else:
            chain.append("                ; // no response observed (timed out at generation time)")
        body.extend(chain)
        if capture:
            var = _location_var(linked_sources[i], i)
            body.append(f'        {var} = "{_java_escape(call.path)}/" + id_{i};')
        body.append("")
    if body and body[-1] == "":
        body.pop()
    body.append("    }")
    return body
