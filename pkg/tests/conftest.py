from __future__ import annotations

import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"
ENDPOINTS = FIXTURES / "endpoints"
COHORT = FIXTURES / "cohort"


class StubServer:
    """Replays recorded endpoint responses keyed by request path.

    ``faults[path]`` is a list consumed one entry per request before the
    route itself is served: an int is answered as that HTTP status, the
    string ``"drop"`` closes the connection without a response.
    """

    def __init__(self) -> None:
        self.routes: dict[str, tuple[int, bytes, str]] = {}
        self.faults: dict[str, list[int | str]] = {}
        self.requests: list[str] = []
        self.headers: list[dict[str, str]] = []
        self._lock = threading.Lock()
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):  # keep pytest output quiet
                pass

            def do_GET(self):
                path = self.path.split("?", 1)[0]
                with stub._lock:
                    stub.requests.append(self.path)
                    stub.headers.append(dict(self.headers))
                    pending = stub.faults.get(path)
                    fault = pending.pop(0) if pending else None
                if fault == "drop":
                    self.close_connection = True
                    self.connection.shutdown(2)
                    return
                if fault is not None:
                    self._send(int(fault), b"{}", "application/json")
                    return
                status, body, ctype = stub.routes.get(path, (404, b'{"error":"not found"}', "application/json"))
                self._send(status, body, ctype)

            def _send(self, status, body, ctype):
                self.send_response(status)
                self.send_header("Content-Type", ctype)
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.url = f"http://127.0.0.1:{self.httpd.server_address[1]}"
        self._thread = threading.Thread(target=self.httpd.serve_forever, args=(0.05,), daemon=True)
        self._thread.start()

    def add(self, path: str, fixture: str | None = None, status: int = 200, body: bytes | None = None) -> None:
        if fixture is not None:
            body = (ENDPOINTS / fixture).read_bytes()
        ctype = "application/xml" if fixture and fixture.endswith(".xml") else "application/json"
        self.routes[path] = (status, body or b"", ctype)

    def count(self, prefix: str) -> int:
        return sum(1 for r in self.requests if r.startswith(prefix))

    def close(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()


@pytest.fixture
def stub_server():
    server = StubServer()
    yield server
    server.close()


@pytest.fixture
def recorded_server(stub_server):
    """Stub server preloaded with every recorded endpoint response."""
    s = stub_server
    s.add("/search/author/api", "dblp_search_verdi.json")
    s.add("/pid/v/GiuliaVerdi.xml", "dblp_person_verdi.xml")
    s.add("/pid/00/0000.xml", "dblp_person_empty.xml")
    s.add("/works/10.1016/j.jdss.2015.02.006", "crossref_verdi2015.json")
    s.add("/works/10.1109/pdp.2011.00", "crossref_conference.json")
    s.add("/api/handles/10.5281/zenodo.7654321", "doi_handle_found.json")
    s.add("/api/handles/10.9999/does-not-exist-xyz", "doi_handle_missing.json", status=404)
    s.add("/citations/10.1016/j.jdss.2015.02.006", "coci_citations.json")
    s.add("/citations/10.1234/uncited", body=b"[]")
    return s


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
