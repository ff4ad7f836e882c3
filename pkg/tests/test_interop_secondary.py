"""Cross-language interop: the Python core against the Node driver.

These tests need the driver package built (`npm run build` in driver-ts/)
and a node binary; they skip cleanly otherwise, so the primary suite does
not depend on the secondary component. The coverage criterion performs ten
30-second wall-clock searches and dominates this module's runtime.
"""

import json
import shutil
import subprocess
import threading
import time
from pathlib import Path

import pytest

from evorest.conformance import run_conformance
from evorest.driver import DriverClient
from evorest.executor import SocketTransport
from evorest.schema import parse_schema
from evorest.search import SearchConfig, run_search
from evorest.writer import read_neutral_suite, render_java, render_neutral_json

DRIVER_DIR = Path(__file__).resolve().parent.parent / "driver-ts"
MAIN_JS = DRIVER_DIR / "dist" / "src" / "demo" / "main.js"

pytestmark = pytest.mark.skipif(
    shutil.which("node") is None or not MAIN_JS.exists(),
    reason="secondary driver not built (run `npm run build` in driver-ts/)",
)


class NodeDriver:
    """The demo driver as a child process on an ephemeral port."""

    def __init__(self):
        self.proc = subprocess.Popen(
            ["node", str(MAIN_JS), "--port", "0"],
            cwd=DRIVER_DIR,
            stdout=subprocess.PIPE,
            stderr=subprocess.STDOUT,
            text=True,
        )
        self.url = None
        line_holder = {}

        def read_banner():
            line_holder["line"] = self.proc.stdout.readline()

        reader = threading.Thread(target=read_banner, daemon=True)
        reader.start()
        reader.join(timeout=15)
        line = line_holder.get("line", "")
        if "listening at " not in line:
            self.stop()
            raise RuntimeError(f"driver did not start: {line!r}")
        self.url = line.rsplit("listening at ", 1)[1].strip()

    def stop(self):
        self.proc.terminate()
        try:
            self.proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self.proc.kill()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.stop()


def test_conformance_fixtures_pass_against_node_driver():
    with NodeDriver() as node:
        results = run_conformance(node.url, SocketTransport())
    failed = [r for r in results if not r.passed]
    assert not failed, failed


def test_protocol_smoke_search_against_demo_app(tmp_path):
    """A quick seeded run: schema parses, faults surface, suites write."""
    with NodeDriver() as node:
        transport = SocketTransport()
        driver = DriverClient(node.url, transport)
        info = driver.get_info()
        driver.start_sut()
        info = driver.get_info()
        assert info.auth_info and info.auth_info[0].headers
        status, _, text = transport.request("GET", info.swagger_json_url, [], None, 5000)
        assert status == 200
        schema = parse_schema(text)
        assert {(t.verb, t.path_string) for t in schema.templates} == {
            ("POST", "/pets"), ("GET", "/pets"), ("GET", "/pets/{id}"), ("DELETE", "/pets/{id}"),
        }
        result = run_search(schema, driver, SearchConfig(max_evaluations=300, seed=1))
        assert result.stats.evaluations == 300
        covered_lines = [
            t for t in result.archive.covered if t.name.startswith("Line_app.js:")
        ]
        assert covered_lines, "line targets from the node driver entered the archive"


def _coverage_ratio(driver: DriverClient) -> float:
    report, _ = driver.get_coverage("post-run-full-report")
    lines = [t for t in report.targets if t.id.startswith("Line_app.js:")]
    covered = sum(t.covered for t in lines)
    return covered / len(lines) if lines else 0.0


def test_acceptance_secondary_line_coverage_and_fault_across_seeds(tmp_path):
    """[SECONDARY] 30-second MIO runs cover >= 80% of demo handler lines and
    flag the seeded 500 fault in >= 8 of seeds 1-10."""
    successes = 0
    details = []
    for seed in range(1, 11):
        with NodeDriver() as node:
            transport = SocketTransport()
            driver = DriverClient(node.url, transport)
            driver.start_sut()
            info = driver.get_info()
            status, _, text = transport.request("GET", info.swagger_json_url, [], None, 5000)
            schema = parse_schema(text)
            result = run_search(
                schema, driver, SearchConfig(max_time_seconds=30, seed=seed)
            )
            ratio = _coverage_ratio(driver)
            suite_json = read_neutral_suite(
                render_neutral_json(result.suite, schema.base_path, info.auth_info)
            )
            has_5xx = any(
                any(
                    c["expected_status"] is not None and 500 <= c["expected_status"] <= 599
                    for c in test
                )
                for test in suite_json
            )
            flagged = any(ev.is_fault_revealing for ev in result.suite)
            ok = ratio >= 0.8 and has_5xx and flagged
            successes += ok
            details.append(f"seed {seed}: lines {ratio:.0%}, fault {'yes' if flagged else 'no'}")
    line = (
        f"{'PASS' if successes >= 8 else 'FAIL'}: secondary interop: 30 s MIO covers >= 80% "
        f"handler lines and flags the 500 fault in {successes}/10 seeds"
    )
    print(line)
    print("\n".join(details))
    assert successes >= 8, line
