import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from regtext import Dataset, LabeledExample, TokenizerConfig


@pytest.fixture
def plain_tokenizer():
    return TokenizerConfig(stopwords=frozenset())


@pytest.fixture
def five_token_corpus():
    """The hand-countable fixture: pos 'good good nolan', neg 'bad bad'."""
    return Dataset(
        (
            LabeledExample("0", "good good nolan", "pos"),
            LabeledExample("1", "bad bad", "neg"),
        )
    )


class StubEndpoint:
    """In-process HTTP JSON endpoint; handler maps (path, payload) -> (status, doc)."""

    def __init__(self, handler):
        self.handler = handler
        self.requests = []
        stub = self

        class _Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                payload = json.loads(self.rfile.read(length) or b"{}")
                stub.requests.append((self.path, payload))
                status, doc = stub.handler(self.path, payload)
                body = json.dumps(doc).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def log_message(self, *_):
                pass

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), _Handler)
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    @property
    def url(self):
        return f"http://127.0.0.1:{self.server.server_port}"

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()


@pytest.fixture
def stub_endpoint():
    return StubEndpoint
