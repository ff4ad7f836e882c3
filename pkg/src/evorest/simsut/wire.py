"""Socket front-end for a SimService: real HTTP/1.1 on a local port."""

from __future__ import annotations

import argparse
import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .service import SimService, SimulatedConnectionRefused, SimulatedTimeout


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    service: SimService = None  # set per server class
    lock: threading.Lock = None  # serializes all service access

    def log_message(self, *args):  # keep test output quiet
        pass

    def _dispatch(self, verb):
        length = int(self.headers.get("Content-Length") or 0)
        body = self.rfile.read(length).decode("utf-8") if length else None
        path, _, query = self.path.partition("?")
        try:
            with self.lock:
                status, headers, text = self.service.handle(
                    verb, path, query, list(self.headers.items()), body
                )
        except SimulatedTimeout as e:
            # hold the connection so the client times out for real
            time.sleep(e.stall_ms / 1000.0)
            status, headers, text = 504, [], ""
        except SimulatedConnectionRefused:
            status, headers, text = 503, [("Content-Type", "application/json")], '{"error":"SUT stopped"}'
        payload = text.encode("utf-8")
        self.send_response(status)
        for name, value in headers:
            self.send_header(name, value)
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def do_GET(self):
        self._dispatch("GET")

    def do_POST(self):
        self._dispatch("POST")

    def do_PUT(self):
        self._dispatch("PUT")

    def do_DELETE(self):
        self._dispatch("DELETE")

    def do_PATCH(self):
        self._dispatch("PATCH")


class SimServer:
    """A SimService bound to a real port, served from a daemon thread."""

    def __init__(self, spec: dict, host: str = "127.0.0.1", port: int = 0):
        handler = type("BoundHandler", (_Handler,), {})
        self._httpd = ThreadingHTTPServer((host, port), handler)
        self._httpd.daemon_threads = True
        self.port = self._httpd.server_address[1]
        self.base_url = f"http://{host}:{self.port}"
        self.service = SimService(spec, base_url=self.base_url)
        handler.service = self.service
        handler.lock = threading.Lock()
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)

    def start(self) -> "SimServer":
        self._thread.start()
        return self

    def shutdown(self):
        self._httpd.shutdown()
        self._httpd.server_close()


def serve(spec: dict, host: str = "127.0.0.1", port: int = 0) -> SimServer:
    """Bind and start serving; raises OSError if the port is taken."""
    return SimServer(spec, host, port).start()


def main(argv=None) -> int:
    from .service import load_fixture

    parser = argparse.ArgumentParser(description="serve a simulated SUT + driver")
    parser.add_argument("--fixture", default="crud-chain", help="crud-chain | needle | faulty | path to a spec JSON")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=40100)
    args = parser.parse_args(argv)
    if args.fixture.endswith(".json"):
        with open(args.fixture, "r", encoding="utf-8") as fh:
            spec = json.load(fh)
    else:
        spec = load_fixture(args.fixture)
    server = serve(spec, args.host, args.port)
    print(f"sim-sut '{spec.get('title', args.fixture)}' with driver at {server.base_url}")
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        server.shutdown()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
