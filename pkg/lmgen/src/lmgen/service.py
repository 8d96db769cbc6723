"""HTTP layer: POST /generate speaking the wire protocol, GET /healthz.

Request:  {"input": str, "prompt": str, "soft_tokens": int >= 0 (default 20)}
Response: {"output": str}
Malformed requests get status 400 with {"error": <message>}.
"""

import json
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

DEFAULT_SOFT_TOKENS = 20


class RequestError(ValueError):
    pass


def parse_request(raw: bytes) -> tuple[str, str, int]:
    try:
        body = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise RequestError(f"body is not valid JSON: {exc}") from exc
    if not isinstance(body, dict):
        raise RequestError("body must be a JSON object")
    for key in ("input", "prompt"):
        if key not in body:
            raise RequestError(f'missing required field "{key}"')
        if not isinstance(body[key], str):
            raise RequestError(f'field "{key}" must be a string')
    soft = body.get("soft_tokens", DEFAULT_SOFT_TOKENS)
    if not isinstance(soft, int) or isinstance(soft, bool) or soft < 0:
        raise RequestError('field "soft_tokens" must be a non-negative integer')
    return body["input"], body["prompt"], soft


class _Handler(BaseHTTPRequestHandler):
    model = None  # set by make_server

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send(self, status: int, payload: dict) -> None:
        data = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def do_GET(self):
        if self.path == "/healthz":
            self._send(200, {"status": "ok"})
        else:
            self._send(404, {"error": "not found"})

    def do_POST(self):
        if self.path != "/generate":
            self._send(404, {"error": "not found"})
            return
        length = int(self.headers.get("Content-Length", 0))
        try:
            input_text, prompt_text, soft = parse_request(self.rfile.read(length))
        except RequestError as exc:
            self._send(400, {"error": str(exc)})
            return
        output = self.model.generate(input_text, prompt_text, soft)
        self._send(200, {"output": output})


def make_server(model, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    """Bind a server for the given model; port 0 picks a free port."""
    handler = type("BoundHandler", (_Handler,), {"model": model})
    return ThreadingHTTPServer((host, port), handler)
