import json
import random
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest


class MTServer:
    """Local ``POST /translate`` service with scriptable failures."""

    def __init__(self):
        self.fail_rate = 0.0
        self.fail_first = 0
        self.drop_one = False
        self.rng = random.Random(0)
        self.calls = 0
        self.batches = []
        self.lock = threading.Lock()
        server = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def do_POST(self):
                body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
                with server.lock:
                    server.calls += 1
                    fail = server.calls <= server.fail_first or server.rng.random() < server.fail_rate
                    if not fail:
                        server.batches.append(body)
                if self.path != "/translate" or fail:
                    self.send_response(503 if fail else 404)
                    self.end_headers()
                    return
                out = [f"<{body['tgt']}>{t}" for t in body["texts"]]
                if server.drop_one:
                    out = out[:-1]
                data = json.dumps({"translations": out}).encode()
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.url = f"http://127.0.0.1:{self.httpd.server_address[1]}"
        self.thread = threading.Thread(target=self.httpd.serve_forever, args=(0.02,), daemon=True)
        self.thread.start()

    def close(self):
        self.httpd.shutdown()
        self.httpd.server_close()


@pytest.fixture
def mt_server():
    s = MTServer()
    yield s
    s.close()


def pytest_terminal_summary(terminalreporter):
    reports = [
        r for key in ("passed", "failed")
        for r in terminalreporter.stats.get(key, [])
        if r.when == "call" and "test_acceptance.py::" in r.nodeid
    ]
    if not reports:
        return
    terminalreporter.section("acceptance criteria")
    for r in sorted(reports, key=lambda r: r.nodeid):
        terminalreporter.write_line(f"{'PASS' if r.passed else 'FAIL'}  {r.nodeid.split('::')[-1]}")
