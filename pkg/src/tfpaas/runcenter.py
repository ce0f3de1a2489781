"""Load generation and the adaptive capacity search.

``execute`` fires exactly ``profile.requests`` HTTP requests at the target
with at most ``profile.concurrency`` in flight, timing each to the last
response byte. A response is a completed request whatever its status code;
non-2xx completions are counted separately from transport failures, which
produce no latency sample. Only when every request dies at transport level
is the target declared unreachable.

``adaptive_master`` searches for the highest concurrency the target
sustains while still meeting the criteria: grow the level geometrically
until the first failure, then bisect the passing/failing bracket to
adjacent integers. Every iteration is logged as a trace; running out of the
iteration budget returns the best-so-far outcome flagged incomplete.

The same two operations are reachable over HTTP (``POST /execute``) so the
orchestration service can run with a remote run center.
"""

from __future__ import annotations

import argparse
import errno
import math
import threading
import time
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from datetime import datetime, timezone
from http.client import HTTPException
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .errors import PortInUseError, TargetUnresolvableError, TfpError
from .model import (
    AdaptiveOutcome,
    AdaptiveParams,
    Decision,
    HttpMethod,
    LoadProfile,
    Measurement,
    TraceRecord,
    evaluate,
    summarize,
)
from .protocol import (
    InstructionSet,
    XML_CONTENT_TYPE,
    decode_instructions,
    encode_measurement,
    encode_outcome,
    encode_status_document,
)

REQUEST_TIMEOUT_S = 30.0
DEFAULT_EXECUTE_TIMEOUT_S = 600.0


def _one_request(
    url: str, method: HttpMethod, message: str | None
) -> tuple[float | None, int, bool]:
    """Issue one request; returns (latency_ms or None, body bytes, http_error).

    A None latency means the request failed at transport level before any
    response arrived.
    """
    data = message.encode("utf-8") if message is not None else None
    request = urllib.request.Request(url, data=data, method=method.value)
    if data is not None:
        request.add_header("Content-Type", "application/xml; charset=utf-8")
    start = time.perf_counter()
    try:
        with urllib.request.urlopen(request, timeout=REQUEST_TIMEOUT_S) as response:
            body = response.read()
        return ((time.perf_counter() - start) * 1000.0, len(body), False)
    except urllib.error.HTTPError as exc:
        # A status line arrived, so the request completed; drain the body so
        # the latency really is to the last byte.
        try:
            body = exc.read()
        except OSError:
            body = b""
        finally:
            exc.close()
        return ((time.perf_counter() - start) * 1000.0, len(body), True)
    except (urllib.error.URLError, HTTPException, OSError):
        return (None, 0, False)


def execute(instructions: InstructionSet) -> Measurement:
    """Generate the load described by ``instructions`` and measure it."""
    case = instructions.case
    profile = instructions.profile
    started_at = datetime.now(timezone.utc)
    latencies: list[float] = []
    bytes_received = 0
    transport_errors = 0
    http_errors = 0
    start = time.perf_counter()
    with ThreadPoolExecutor(max_workers=profile.concurrency) as pool:
        futures = [
            pool.submit(_one_request, case.url, case.method, case.message)
            for _ in range(profile.requests)
        ]
        for future in futures:
            latency, body_len, http_error = future.result()
            if latency is None:
                transport_errors += 1
                continue
            latencies.append(latency)
            bytes_received += body_len
            if http_error:
                http_errors += 1
    wall_time_s = time.perf_counter() - start
    if not latencies:
        raise TargetUnresolvableError(
            f"all {profile.requests} requests to {case.url} failed at transport level"
        )
    return Measurement(
        latencies_ms=tuple(latencies),
        bytes_received=bytes_received,
        wall_time_s=wall_time_s,
        error_count=transport_errors,
        started_at=started_at,
        http_error_count=http_errors,
    )


def _next_growth_level(level: int, growth_factor: float) -> int:
    return math.ceil(level * growth_factor)


def adaptive_master(instructions: InstructionSet, *, run=execute) -> AdaptiveOutcome:
    """Find the highest sustainable concurrency by growth then bisection.

    ``run`` is injectable so the search logic can be exercised against
    synthetic targets without real sockets.
    """
    params = instructions.adaptive if instructions.adaptive is not None else AdaptiveParams()
    traces: list[TraceRecord] = []
    last_pass = 0
    last_pass_summary = None
    first_fail: int | None = None
    first_fail_summary = None
    level = params.start_concurrency
    complete = True

    for iteration in range(1, params.max_iterations + 1):
        profile = LoadProfile(
            requests=max(params.requests_per_iteration, level), concurrency=level
        )
        measurement = run(replace(instructions, profile=profile, adaptive=None))
        summary = summarize(measurement, profile)
        passed = evaluate(summary, instructions.criteria).overall

        if passed:
            if level > last_pass:
                last_pass, last_pass_summary = level, summary
        else:
            if first_fail is None or level < first_fail:
                first_fail, first_fail_summary = level, summary

        if first_fail is None:
            decision = Decision.GROW
            next_level = _next_growth_level(level, params.growth_factor)
        elif last_pass == 0 or first_fail - last_pass <= 1:
            # Bracket closed (or nothing ever passed): the answer is known.
            decision = Decision.STOP
        else:
            decision = Decision.BISECT
            next_level = (last_pass + first_fail) // 2
        traces.append(
            TraceRecord(
                iteration=iteration, concurrency=level, summary=summary,
                decision=decision,
            )
        )
        if decision is Decision.STOP:
            break
        level = next_level
    else:
        complete = False

    final_summary = last_pass_summary if last_pass_summary is not None else first_fail_summary
    assert final_summary is not None
    return AdaptiveOutcome(
        traces=tuple(traces),
        max_sustainable_concurrency=last_pass,
        final_summary=final_summary,
        complete=complete,
    )


# ---------------------------------------------------------------------------
# HTTP front end


class _RunCenterServer(ThreadingHTTPServer):
    daemon_threads = True
    request_queue_size = 64

    def __init__(self, address, handler, execute_timeout_s: float) -> None:
        self.execute_timeout_s = execute_timeout_s
        # One instruction set executes at a time per instance.
        self.execute_lock = threading.Lock()
        super().__init__(address, handler)


def run_limited(fn, timeout_s: float):
    """Run ``fn`` on a worker thread, raising TimeoutError past the budget."""
    box: dict[str, object] = {}

    def work() -> None:
        try:
            box["value"] = fn()
        except BaseException as exc:
            box["error"] = exc

    worker = threading.Thread(target=work, daemon=True)
    worker.start()
    worker.join(timeout_s)
    if worker.is_alive():
        raise TimeoutError(f"run did not finish within {timeout_s}s")
    if "error" in box:
        raise box["error"]  # type: ignore[misc]
    return box["value"]


class RunCenterHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server: _RunCenterServer

    def log_message(self, format: str, *args) -> None:  # noqa: A002 - stdlib name
        pass

    def _reply(self, status: int, content_type: str, body: bytes) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _reply_text(self, status: int, text: str) -> None:
        self._reply(status, "text/plain; charset=utf-8", text.encode("utf-8"))

    def do_GET(self) -> None:
        if self.path == "/status":
            self._reply(200, XML_CONTENT_TYPE, encode_status_document().encode("utf-8"))
        else:
            self._reply_text(404, "not found")

    def do_POST(self) -> None:
        if self.path != "/execute":
            self._reply_text(404, "not found")
            return
        length = int(self.headers.get("Content-Length") or 0)
        body = self.rfile.read(length)
        try:
            instructions, _ = decode_instructions(body)
        except TfpError as exc:
            self._reply_text(400, str(exc))
            return

        def run() -> str:
            with self.server.execute_lock:
                if instructions.adaptive is not None:
                    return encode_outcome(adaptive_master(instructions))
                return encode_measurement(execute(instructions))

        try:
            document = run_limited(run, self.server.execute_timeout_s)
        except TimeoutError as exc:
            self._reply_text(504, f"E_TRANSPORT: {exc}")
            return
        except TfpError as exc:
            self._reply_text(502, str(exc))
            return
        self._reply(200, XML_CONTENT_TYPE, document.encode("utf-8"))


def make_server(
    port: int = 0,
    host: str = "127.0.0.1",
    *,
    execute_timeout_s: float = DEFAULT_EXECUTE_TIMEOUT_S,
) -> _RunCenterServer:
    try:
        return _RunCenterServer((host, port), RunCenterHandler, execute_timeout_s)
    except OSError as exc:
        if exc.errno == errno.EADDRINUSE:
            raise PortInUseError(f"port {port} is already in use") from exc
        raise


def start_server(
    port: int = 0, host: str = "127.0.0.1", **kwargs
) -> tuple[_RunCenterServer, threading.Thread, str]:
    """Run a server on a background thread; returns (server, thread, url)."""
    server = make_server(port, host, **kwargs)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    bound_host, bound_port = server.server_address[:2]
    return server, thread, f"http://{bound_host}:{bound_port}"


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="tfprun", description="Test run center.")
    sub = parser.add_subparsers(dest="command", required=True)
    serve = sub.add_parser("serve", help="serve the run center over HTTP")
    serve.add_argument("--port", type=int, default=8091)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument(
        "--execute-timeout", type=float, default=DEFAULT_EXECUTE_TIMEOUT_S,
        metavar="SECONDS", help="maximum wall time for one run",
    )
    args = parser.parse_args(argv)
    try:
        server = make_server(args.port, args.host, execute_timeout_s=args.execute_timeout)
    except PortInUseError as exc:
        print(exc)
        return 4
    host, port = server.server_address[:2]
    print(f"run center listening on http://{host}:{port}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
