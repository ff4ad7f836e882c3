"""Command-line entry point: wire the driver, the search and the writers."""

from __future__ import annotations

import argparse
import logging
import signal
import sys
import time

from .driver import DriverClient
from .errors import DriverUnreachableError, EvorestError, SchemaError, SchemaParseError
from .executor import SocketTransport
from .schema import parse_schema
from .search import Algorithm, SearchConfig, run_search
from .writer import OutputFormat, write_suite

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DRIVER = 3
EXIT_SCHEMA = 4
EXIT_SEARCH = 5

DEFAULT_DRIVER_URL = "http://localhost:40100"
DEFAULT_OUTPUT_FOLDER = "generated-tests"
DEFAULT_SUITE_NAME = "RestApiTest"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evorest",
        description="Evolve system-level test suites for a RESTful API via its driver.",
    )
    parser.add_argument(
        "--maxTimeInSeconds", type=int, default=60, metavar="<Int>",
        help="Maximum number of seconds allowed for the search (default: 60).",
    )
    parser.add_argument(
        "--maxEvaluations", type=int, default=None, metavar="<Int>",
        help="Stop after this many fitness evaluations instead of after a time budget.",
    )
    parser.add_argument(
        "--outputFolder", default=DEFAULT_OUTPUT_FOLDER, metavar="<String>",
        help=f"Directory the generated test files are saved to (default: {DEFAULT_OUTPUT_FOLDER}).",
    )
    parser.add_argument(
        "--outputFormat", default="JAVA_JUNIT_4", metavar="<OutputFormat>",
        choices=[f.value for f in OutputFormat],
        help="JAVA_JUNIT_4, JAVA_JUNIT_5 or NEUTRAL_JSON (default: JAVA_JUNIT_4).",
    )
    parser.add_argument(
        "--testSuiteFileName", default=DEFAULT_SUITE_NAME, metavar="<String>",
        help=f"Name of the generated test file (default: {DEFAULT_SUITE_NAME}).",
    )
    parser.add_argument(
        "--driverUrl", default=DEFAULT_DRIVER_URL, metavar="<Url>",
        help=f"Controller URL of the running driver process (default: {DEFAULT_DRIVER_URL}).",
    )
    parser.add_argument(
        "--seed", type=int, default=None, metavar="<Int>",
        help="Random seed; time-derived when absent. Echoed in the final stats.",
    )
    parser.add_argument(
        "--algorithm", default="MIO", choices=[a.value for a in Algorithm],
        help="Search algorithm: MIO (default) or RANDOM baseline.",
    )
    parser.add_argument(
        "--probOfRandomSampling", type=float, default=0.5, metavar="<Float>",
        help="Initial probability of sampling a fresh random test (default: 0.5).",
    )
    parser.add_argument(
        "--populationPerTarget", type=int, default=10, metavar="<Int>",
        help="Initial per-target population size (default: 10).",
    )
    parser.add_argument(
        "--focusFraction", type=float, default=0.5, metavar="<Float>",
        help="Fraction of the budget after which the search is fully focused (default: 0.5).",
    )
    parser.add_argument(
        "--maxTestSize", type=int, default=10, metavar="<Int>",
        help="Maximum number of HTTP calls per test (default: 10).",
    )
    parser.add_argument(
        "--callTimeoutMs", type=int, default=2000, metavar="<Int>",
        help="Per-HTTP-call timeout in milliseconds (default: 2000).",
    )
    return parser


def _warn_duplicate_flags(argv):
    seen = set()
    for token in argv:
        if token.startswith("--"):
            flag = token.split("=", 1)[0]
            if flag in seen:
                print(f"warning: {flag} given more than once; the last value wins", file=sys.stderr)
            seen.add(flag)


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    _warn_duplicate_flags(argv)
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    seed = args.seed if args.seed is not None else int(time.time() * 1000) & 0x7FFFFFFF
    config = SearchConfig(
        max_time_seconds=args.maxTimeInSeconds,
        max_evaluations=args.maxEvaluations,
        p_random_start=args.probOfRandomSampling,
        population_per_target_start=args.populationPerTarget,
        focus_fraction=args.focusFraction,
        max_test_size=args.maxTestSize,
        seed=seed,
        algorithm=Algorithm(args.algorithm),
        call_timeout_ms=args.callTimeoutMs,
    )

    transport = SocketTransport()
    driver = DriverClient(args.driverUrl, transport)
    stopping = {"flag": False}

    def _on_signal(signum, frame):
        print("stopping the search, writing partial results...", file=sys.stderr)
        stopping["flag"] = True

    old_handlers = {}
    for sig in (signal.SIGINT, signal.SIGTERM):
        try:
            old_handlers[sig] = signal.signal(sig, _on_signal)
        except ValueError:  # not on the main thread (tests)
            pass

    try:
        info = driver.get_info()
        if not info.is_sut_running:
            driver.start_sut()
            info = driver.get_info()
        status, _, swagger_text = transport.request(
            "GET", info.swagger_json_url, [], None, 10_000
        )
        if status != 200:
            raise SchemaError(f"fetching {info.swagger_json_url} returned HTTP {status}")
        schema = parse_schema(swagger_text)
        result = run_search(
            schema, driver, config, should_stop=lambda: stopping["flag"]
        )
        paths = write_suite(
            result.suite,
            OutputFormat(args.outputFormat),
            args.outputFolder,
            args.testSuiteFileName,
            base_path=schema.base_path,
            credentials=info.auth_info,
        )
        print(result.stats.to_json())
        for p in paths:
            print(f"wrote {p}")
        return EXIT_OK
    except DriverUnreachableError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DRIVER
    except (SchemaParseError, SchemaError) as e:
        print(f"schema error: {e}", file=sys.stderr)
        return EXIT_SCHEMA
    except (EvorestError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SEARCH
    finally:
        for sig, handler in old_handlers.items():
            signal.signal(sig, handler)


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
