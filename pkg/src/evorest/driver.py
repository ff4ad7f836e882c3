"""Wire-protocol client for SUT drivers.

The protocol is JSON over HTTP/1.1, all paths under /controller/:

  GET  /controller/info
       -> {"isSutRunning": bool, "baseUrlOfSut": str|null,
           "swaggerJsonUrl": str, "packagePrefixes": str,
           "authInfo": [{"label": str, "headers": [{"name":..., "value":...}]}]}
  POST /controller/sut     body {"running": true|false}
       -> {"running": bool, "baseUrlOfSut": str|null}
  POST /controller/reset   -> {"ok": true}
  GET  /controller/targets?since=<marker>
       -> {"marker": str, "targets": [{"id": str,
           "kind": "statement"|"branch", "covered": bool, "distance": num?}]}

Coverage queries have delta semantics: the returned marker names a point in
time and a later query with it reports only targets touched since. An
unknown or empty marker yields a full report with a fresh marker. Unknown
JSON fields are ignored for forward compatibility.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from urllib.parse import quote

from .errors import DriverUnreachableError, ProtocolError, ResetFailedError
from .executor import Transport, TransportConnectionError, TransportTimeout
from .fitness import BRANCH, STATEMENT
from .httpcall import AuthCredential

DRIVER_TIMEOUT_MS = 10_000


@dataclass(slots=True)
class SutInfo:
    base_url_of_sut: str | None
    swagger_json_url: str
    is_sut_running: bool
    auth_info: tuple[AuthCredential, ...] = ()
    package_prefixes: str = ""


@dataclass(slots=True)
class CoverageTarget:
    id: str
    kind: str
    covered: bool
    distance: float | None = None


@dataclass(slots=True)
class CoverageReport:
    targets: list[CoverageTarget] = field(default_factory=list)


class DriverClient:
    """Talks to one driver; issues one request at a time."""

    def __init__(self, controller_url: str, transport: Transport, timeout_ms: int = DRIVER_TIMEOUT_MS):
        self.controller_url = controller_url.rstrip("/")
        self.transport = transport
        self.timeout_ms = timeout_ms

    # -- wire plumbing ---------------------------------------------------

    def _call_raw(self, verb: str, path: str, payload=None):
        body = None if payload is None else json.dumps(payload)
        headers = [("Content-Type", "application/json")] if body is not None else []
        try:
            status, _, text = self.transport.request(
                verb, self.controller_url + path, headers, body, self.timeout_ms
            )
        except TransportConnectionError as e:
            raise DriverUnreachableError(
                f"no driver answering at {self.controller_url}: {e}. "
                "Start the driver process (it owns the SUT) and point --driverUrl at it."
            ) from e
        except TransportTimeout as e:
            raise DriverUnreachableError(
                f"driver at {self.controller_url} did not answer within {self.timeout_ms} ms"
            ) from e
        return status, text

    def _call(self, verb: str, path: str, payload=None):
        status, text = self._call_raw(verb, path, payload)
        if text:
            try:
                parsed = json.loads(text)
            except ValueError as e:
                raise ProtocolError(f"driver returned invalid JSON for {path}: {e}") from e
        else:
            parsed = {}
        return status, parsed

    # -- protocol operations ----------------------------------------------

    def get_info(self) -> SutInfo:
        status, data = self._call("GET", "/controller/info")
        if status != 200 or not isinstance(data, dict):
            raise ProtocolError(f"unexpected info response: HTTP {status}")
        auth = []
        for item in data.get("authInfo") or []:
            headers = [(h["name"], h["value"]) for h in item.get("headers", [])]
            if headers:
                auth.append(AuthCredential(item.get("label", ""), headers))
        return SutInfo(
            base_url_of_sut=data.get("baseUrlOfSut"),
            swagger_json_url=data.get("swaggerJsonUrl", ""),
            is_sut_running=bool(data.get("isSutRunning")),
            auth_info=tuple(auth),
            package_prefixes=data.get("packagePrefixes", ""),
        )

    def start_sut(self) -> str:
        status, data = self._call("POST", "/controller/sut", {"running": True})
        if status != 200 or not data.get("running"):
            raise ProtocolError(f"driver failed to start the SUT: HTTP {status} {data}")
        base = data.get("baseUrlOfSut")
        if not base:
            raise ProtocolError("driver started the SUT but returned no base URL")
        return base

    def stop_sut(self) -> None:
        status, data = self._call("POST", "/controller/sut", {"running": False})
        if status != 200 or data.get("running"):
            raise ProtocolError(f"driver failed to stop the SUT: HTTP {status} {data}")

    def reset_state(self) -> None:
        status, text = self._call_raw("POST", "/controller/reset")
        if status == 200 and text == '{"ok":true}':
            return
        try:
            data = json.loads(text) if text else {}
        except ValueError:
            data = text
        if status != 200 or not isinstance(data, dict) or not data.get("ok"):
            raise ResetFailedError(f"driver could not reset SUT state: HTTP {status} {data}")

    def get_coverage(self, since_marker: str) -> tuple[CoverageReport, str]:
        marker_param = (
            since_marker if since_marker.isalnum() else quote(since_marker, safe="")
        )
        status, data = self._call("GET", "/controller/targets?since=" + marker_param)
        if status != 200 or not isinstance(data, dict):
            raise ProtocolError(f"unexpected coverage response: HTTP {status}")
        marker = data.get("marker")
        if not isinstance(marker, str):
            raise ProtocolError("coverage response carries no marker")
        targets = []
        for raw in data.get("targets", []):
            kind = raw.get("kind")
            if kind not in (STATEMENT, BRANCH):
                raise ProtocolError(f"unknown target kind {kind!r} for {raw.get('id')!r}")
            distance = raw.get("distance")
            if distance is not None and (not isinstance(distance, (int, float)) or distance < 0):
                raise ProtocolError(f"bad distance {distance!r} for {raw.get('id')!r}")
            targets.append(
                CoverageTarget(
                    id=str(raw.get("id")),
                    kind=kind,
                    covered=bool(raw.get("covered")),
                    distance=None if raw.get("covered") else distance,
                )
            )
        return CoverageReport(targets), marker
