"""Driver protocol conformance: shared checks every driver must pass.

The step list lives in protocol/conformance.json so alternative driver
implementations (other languages included) are exercised against the exact
same sequence. Each step maps to a checker here; a result is (step id,
passed, detail).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from urllib.parse import urlsplit

from .driver import DriverClient
from .executor import Transport


@dataclass(slots=True)
class CheckResult:
    step_id: str
    passed: bool
    detail: str = ""


def load_steps() -> list[dict]:
    text = resources.files("evorest").joinpath("protocol/conformance.json").read_text()
    return json.loads(text)["steps"]


def run_conformance(controller_url: str, transport: Transport) -> list[CheckResult]:
    client = DriverClient(controller_url, transport)
    state = {"marker": None, "base_url": None}
    results = []
    for step in load_steps():
        checker = _CHECKS[step["op"]]
        try:
            detail = checker(client, state, step) or ""
            results.append(CheckResult(step["id"], True, detail))
        except AssertionError as e:
            results.append(CheckResult(step["id"], False, str(e)))
        except Exception as e:  # report, keep going
            results.append(CheckResult(step["id"], False, f"{type(e).__name__}: {e}"))
    return results


def _absolute(url: str) -> bool:
    parts = urlsplit(url)
    return bool(parts.scheme) and bool(parts.netloc)


def _check_info_shape(client, state, step):
    info = client.get_info()
    assert isinstance(info.is_sut_running, bool), "isSutRunning must be a boolean"
    assert isinstance(info.swagger_json_url, str), "swaggerJsonUrl must be a string"
    assert isinstance(info.package_prefixes, str), "packagePrefixes must be a string"
    for cred in info.auth_info:
        assert cred.headers, "credential without headers"


def _check_start(client, state, step):
    base = client.start_sut()
    assert _absolute(base), f"base URL {base!r} is not absolute"
    state["base_url"] = base
    return base


def _check_start_idempotent(client, state, step):
    again = client.start_sut()
    assert again == state["base_url"], f"restart returned a different URL: {again!r}"


def _check_info_running(client, state, step):
    info = client.get_info()
    assert info.is_sut_running is step["expect"], (
        f"isSutRunning is {info.is_sut_running}, wanted {step['expect']}"
    )
    if step["expect"]:
        assert _absolute(info.swagger_json_url), "swagger URL must be absolute while running"


def _check_reset(client, state, step):
    client.reset_state()


def _check_coverage_full(client, state, step):
    report, marker = client.get_coverage("")
    assert isinstance(marker, str) and marker, "marker must be a non-empty string"
    state["marker"] = marker
    return f"{len(report.targets)} targets"


def _check_coverage_marker_advances(client, state, step):
    _, marker = client.get_coverage(state["marker"])
    assert marker != state["marker"], "marker did not advance"
    state["prev_marker"] = state["marker"]
    state["marker"] = marker


def _check_coverage_quiescent(client, state, step):
    report, marker = client.get_coverage(state["marker"])
    assert report.targets == [], f"expected empty delta, got {len(report.targets)} targets"
    state["marker"] = marker


def _check_coverage_replay(client, state, step):
    first, _ = client.get_coverage(state["prev_marker"])
    second, _ = client.get_coverage(state["prev_marker"])
    ids_first = {t.id for t in first.targets}
    ids_second = {t.id for t in second.targets}
    assert ids_first <= ids_second, "replaying an old marker lost targets"


def _check_coverage_schema(client, state, step):
    report, marker = client.get_coverage("")
    state["marker"] = marker
    for t in report.targets:
        assert t.kind in ("statement", "branch"), f"bad kind {t.kind!r}"
        assert isinstance(t.id, str) and t.id, "target id must be a non-empty string"
        if t.kind == "branch" and not t.covered:
            assert t.distance is not None and t.distance >= 0, f"{t.id}: uncovered branch needs a distance"
        else:
            assert t.distance is None, f"{t.id}: covered target must not carry a distance"
    return f"{len(report.targets)} targets validated"


def _check_coverage_garbage_marker(client, state, step):
    full, _ = client.get_coverage("")
    garbage, _ = client.get_coverage("not-a-marker-%$")
    ids_full = {t.id for t in full.targets}
    ids_garbage = {t.id for t in garbage.targets}
    assert ids_full <= ids_garbage, "garbage marker must fall back to a full report"


def _check_stop_not_running(client, state, step):
    client.stop_sut()
    info = client.get_info()
    assert info.is_sut_running is False, "SUT still reported running after stop"


_CHECKS = {
    "info_shape": _check_info_shape,
    "start": _check_start,
    "start_idempotent": _check_start_idempotent,
    "info_running": _check_info_running,
    "reset": _check_reset,
    "coverage_full": _check_coverage_full,
    "coverage_marker_advances": _check_coverage_marker_advances,
    "coverage_quiescent": _check_coverage_quiescent,
    "coverage_replay": _check_coverage_replay,
    "coverage_schema": _check_coverage_schema,
    "coverage_garbage_marker": _check_coverage_garbage_marker,
    "stop_not_running": _check_stop_not_running,
}
