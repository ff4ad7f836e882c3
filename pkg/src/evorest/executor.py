"""Execute a test case against the SUT as a sequence of HTTP calls.

Calls run strictly in order. After a creation action succeeds, its resource
location is captured (Location header preferred, body "id" field otherwise)
and later linked actions are rendered against it. A per-call timeout marks
that one result timed out and execution continues; a refused connection
stops the run and surfaces as the SUT being down.

Transports abstract the wire: `SocketTransport` speaks real HTTP/1.1 and
`InProcessTransport` dispatches straight into a service object with the same
request/response semantics, which keeps desk-scale searches fast and
deterministic.
"""

from __future__ import annotations

import json
import time
from typing import Protocol

from .errors import SutUnreachableError
from .fitness import ExecutionResult
from .genome import Individual, render_action
from .httpcall import AuthCredential, resolve_location  # noqa: F401  (re-exported op)

DEFAULT_TIMEOUT_MS = 2000
BODY_EXCERPT_LIMIT = 2048


class TransportTimeout(Exception):
    """One call exceeded its timeout."""


class TransportConnectionError(Exception):
    """The endpoint refused the connection."""


class Transport(Protocol):
    def request(
        self,
        verb: str,
        url: str,
        headers: list[tuple[str, str]],
        body: str | None,
        timeout_ms: int,
    ) -> tuple[int, list[tuple[str, str]], str]: ...


class SocketTransport:
    """Real HTTP/1.1 over a keep-alive session."""

    def __init__(self):
        import requests

        self._session = requests.Session()
        self._requests = requests

    def request(self, verb, url, headers, body, timeout_ms):
        try:
            resp = self._session.request(
                verb,
                url,
                headers=dict(headers),
                data=body.encode("utf-8") if body is not None else None,
                timeout=timeout_ms / 1000.0,
            )
        except self._requests.exceptions.Timeout as e:
            raise TransportTimeout(str(e)) from e
        except self._requests.exceptions.ConnectionError as e:
            raise TransportConnectionError(str(e)) from e
        return resp.status_code, list(resp.headers.items()), resp.text


class InProcessTransport:
    """Dispatch requests directly into an in-process service.

    The service implements ``handle(verb, path, query, headers, body)`` and
    raises subclasses of the transport exceptions for simulated timeouts and
    refusals, so executor behavior matches the socket transport.
    """

    def __init__(self, service):
        self._service = service

    def request(self, verb, url, headers, body, timeout_ms):
        # hand-rolled URL split: this is the innermost loop of sim runs
        scheme_end = url.find("://")
        path_start = url.find("/", scheme_end + 3) if scheme_end >= 0 else 0
        if path_start < 0:
            path, query = "/", ""
        else:
            path, _, query = url[path_start:].partition("?")
        return self._service.handle(verb, path, query, headers, body)


def _extract_location(call_path: str, resp_headers: list[tuple[str, str]], resp_body: str) -> str | None:
    for name, value in resp_headers:
        if name.lower() == "location":
            return value
    try:
        payload = json.loads(resp_body)
    except (ValueError, TypeError):
        return None
    if isinstance(payload, dict) and "id" in payload:
        return f"{call_path}/{payload['id']}"
    return None


def execute(
    ind: Individual,
    base_url: str,
    credentials: tuple[AuthCredential, ...],
    transport: Transport,
    base_path: str = "",
    timeout_ms: int = DEFAULT_TIMEOUT_MS,
    clock=time.monotonic,
) -> list[ExecutionResult]:
    """Run every action of the individual in order; one result per call made.

    Raises SutUnreachableError on a refused connection (partial results are
    attached to the exception); a timeout yields a result with no status and
    execution continues with the next action.
    """
    results: list[ExecutionResult] = []
    locations: dict[int, str] = {}
    for i, action in enumerate(ind.actions):
        call = render_action(ind, i, locations, base_path, base_url, credentials)
        headers = list(call.headers)
        if call.content_type is not None:
            headers.append(("Content-Type", call.content_type))
        started = clock()
        try:
            status, resp_headers, resp_body = transport.request(
                call.verb, call.url, headers, call.body, timeout_ms
            )
        except TransportTimeout:
            results.append(
                ExecutionResult(status=None, elapsed_ms=int((clock() - started) * 1000))
            )
            continue
        except TransportConnectionError as e:
            err = SutUnreachableError(
                f"SUT refused connection on call {i} ({call.verb} {call.url}): {e}"
            )
            err.results = results
            raise err from e
        elapsed_ms = int((clock() - started) * 1000)
        extracted = None
        if action.template.produces_location and 200 <= status <= 299:
            extracted = _extract_location(call.path, resp_headers, resp_body)
            if extracted is not None:
                locations[i] = extracted
        results.append(
            ExecutionResult(
                status=status,
                body_excerpt=resp_body[:BODY_EXCERPT_LIMIT],
                extracted_location=extracted,
                elapsed_ms=elapsed_ms,
            )
        )
    return results
