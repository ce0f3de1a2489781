"""Orchestration service: receives submission envelopes over HTTP, turns
them into instruction sets, dispatches to the run center, persists results
and serves the reports.

Critical submissions run synchronously under a hard timeout, so the reply
already carries the verdict. Master submissions are acknowledged PENDING
and executed on a background thread; the stored record moves PENDING to
DONE (or FAILED), never anything else.

The run center is embedded in-process by default; with ``--runcenter-url``
the same instruction sets travel over HTTP instead, with identical results.
"""

from __future__ import annotations

import argparse
import errno
import threading
import urllib.error
import urllib.request
import uuid
from dataclasses import replace
from datetime import datetime, timezone
from http.client import HTTPException
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from xml.sax.saxutils import escape

from .errors import PortInUseError, TfpError, TransportError, UnknownTaskError
from .model import (
    AdaptiveOutcome,
    AdaptiveParams,
    LoadProfile,
    Measurement,
    ResultStatus,
    TestResultRecord,
    evaluate,
    summarize,
)
from .protocol import (
    InstructionSet,
    ResultEnvelope,
    SOAP_CONTENT_TYPE,
    TestEnvelope,
    XML_CONTENT_TYPE,
    decode_measurement,
    decode_outcome,
    decode_request,
    encode_instructions,
    encode_result,
    format_number,
)
from .runcenter import adaptive_master, execute, run_limited
from .store import ResultStore

MAX_BODY_BYTES = 1024 * 1024
DEFAULT_CRITICAL_TIMEOUT_S = 120.0
REMOTE_DISPATCH_TIMEOUT_S = 600.0


def parse_to_instructions(
    envelope: TestEnvelope, task_id: str, mode: str | None = None
) -> InstructionSet:
    """Copy the envelope into executable form under a fresh task id.

    A missing load block falls back to the default profile; master mode
    always carries an adaptive block, defaulted when the envelope has none.
    """
    mode = mode if mode is not None else envelope.mode
    adaptive = None
    if mode == "master":
        adaptive = envelope.adaptive if envelope.adaptive is not None else AdaptiveParams()
    return InstructionSet(
        task_id=task_id,
        identity=envelope.application,
        case=envelope.case,
        criteria=envelope.criteria,
        profile=envelope.load if envelope.load is not None else LoadProfile(),
        adaptive=adaptive,
    )


def embedded_dispatch(instructions: InstructionSet) -> Measurement | AdaptiveOutcome:
    if instructions.adaptive is not None:
        return adaptive_master(instructions)
    return execute(instructions)


class RemoteDispatcher:
    """Dispatch instruction sets to a run center over HTTP."""

    def __init__(self, base_url: str, timeout_s: float = REMOTE_DISPATCH_TIMEOUT_S) -> None:
        self.base_url = base_url.rstrip("/")
        self.timeout_s = timeout_s

    def __call__(self, instructions: InstructionSet) -> Measurement | AdaptiveOutcome:
        request = urllib.request.Request(
            f"{self.base_url}/execute",
            data=encode_instructions(instructions).encode("utf-8"),
            headers={"Content-Type": XML_CONTENT_TYPE},
            method="POST",
        )
        try:
            with urllib.request.urlopen(request, timeout=self.timeout_s) as response:
                body = response.read()
        except urllib.error.HTTPError as exc:
            detail = exc.read().decode("utf-8", "replace").strip()
            exc.close()
            raise TransportError(f"run center replied {exc.code}: {detail}") from exc
        except (urllib.error.URLError, HTTPException, OSError) as exc:
            raise TransportError(f"run center unreachable: {exc}") from exc
        if instructions.adaptive is not None:
            return decode_outcome(body)[0]
        return decode_measurement(body)[0]


class TfpService:
    """The submission/report logic, independent of HTTP plumbing."""

    def __init__(
        self,
        store: ResultStore,
        base_url: str = "http://localhost",
        *,
        dispatcher=embedded_dispatch,
        critical_timeout_s: float = DEFAULT_CRITICAL_TIMEOUT_S,
    ) -> None:
        self.store = store
        self.base_url = base_url.rstrip("/")
        self.dispatcher = dispatcher
        self.critical_timeout_s = critical_timeout_s
        self._workers: list[threading.Thread] = []
        self._workers_lock = threading.Lock()

    # -- submission -------------------------------------------------------

    def handle_submission(self, body: bytes) -> tuple[int, str, bytes]:
        """Process one POSTed envelope; returns (status, content type, body)."""
        if len(body) > MAX_BODY_BYTES:
            return (
                413,
                "text/plain; charset=utf-8",
                f"request body exceeds {MAX_BODY_BYTES} bytes".encode("utf-8"),
            )
        try:
            envelope, _ = decode_request(body)
        except TfpError as exc:
            return (400, "text/plain; charset=utf-8", str(exc).encode("utf-8"))
        task_id = str(uuid.uuid4())
        instructions = parse_to_instructions(envelope, task_id)
        detail_url = f"{self.base_url}/results/{task_id}"
        if envelope.mode == "master":
            return self._submit_master(envelope, instructions, detail_url)
        return self._submit_critical(envelope, instructions, detail_url)

    def _base_record(
        self, envelope: TestEnvelope, instructions: InstructionSet, detail_url: str
    ) -> TestResultRecord:
        return TestResultRecord(
            task_id=instructions.task_id,
            identity=envelope.application,
            case=envelope.case,
            criteria=envelope.criteria,
            profile=instructions.profile,
            status=ResultStatus.PENDING,
            detail_url=detail_url,
            mode=envelope.mode,
        )

    def _submit_critical(
        self, envelope: TestEnvelope, instructions: InstructionSet, detail_url: str
    ) -> tuple[int, str, bytes]:
        base = self._base_record(envelope, instructions, detail_url)
        try:
            measurement = run_limited(
                lambda: self.dispatcher(instructions), self.critical_timeout_s
            )
            summary = summarize(measurement, instructions.profile)
        except (TfpError, TimeoutError) as exc:
            failed = replace(
                base,
                status=ResultStatus.FAILED,
                error=str(exc),
                finished_at=datetime.now(timezone.utc),
            )
            self.store.store(failed)
            return (502, "text/plain; charset=utf-8", str(exc).encode("utf-8"))
        verdict = evaluate(summary, envelope.criteria)
        record = replace(
            base,
            status=ResultStatus.DONE,
            summary=summary,
            verdict=verdict,
            finished_at=datetime.now(timezone.utc),
        )
        self.store.store(record)
        result = ResultEnvelope(
            task_id=instructions.task_id,
            status=ResultStatus.DONE,
            detail_url=detail_url,
            verdict=verdict,
            summary=summary,
        )
        return (200, SOAP_CONTENT_TYPE, encode_result(result).encode("utf-8"))

    def _submit_master(
        self, envelope: TestEnvelope, instructions: InstructionSet, detail_url: str
    ) -> tuple[int, str, bytes]:
        pending = self._base_record(envelope, instructions, detail_url)
        self.store.store(pending)
        worker = threading.Thread(
            target=self._run_master, args=(pending, instructions), daemon=True
        )
        with self._workers_lock:
            self._workers.append(worker)
        worker.start()
        result = ResultEnvelope(
            task_id=instructions.task_id,
            status=ResultStatus.PENDING,
            detail_url=detail_url,
        )
        return (202, SOAP_CONTENT_TYPE, encode_result(result).encode("utf-8"))

    def _run_master(
        self, pending: TestResultRecord, instructions: InstructionSet
    ) -> None:
        try:
            outcome = self.dispatcher(instructions)
            summary = outcome.final_summary
            verdict = evaluate(summary, pending.criteria)
            record = replace(
                pending,
                status=ResultStatus.DONE,
                summary=summary,
                verdict=verdict,
                traces=outcome.traces,
                finished_at=datetime.now(timezone.utc),
            )
        except BaseException as exc:
            record = replace(
                pending,
                status=ResultStatus.FAILED,
                error=str(exc),
                finished_at=datetime.now(timezone.utc),
            )
        self.store.store(record)

    def drain(self, timeout_s: float = 60.0) -> None:
        """Wait for all in-flight master runs (used by tests and shutdown)."""
        with self._workers_lock:
            workers = list(self._workers)
        for worker in workers:
            worker.join(timeout_s)
        with self._workers_lock:
            self._workers = [w for w in self._workers if w.is_alive()]

    # -- reports ----------------------------------------------------------

    def render_report(self, task_id: str) -> str:
        record = self.store.fetch(task_id)
        return render_report(record)


def _row(*cells: str) -> str:
    return "<tr>" + "".join(f"<td>{c}</td>" for c in cells) + "</tr>"


def render_report(record: TestResultRecord) -> str:
    """Self-contained HTML detail page for one stored record."""
    e = escape
    num = format_number
    parts = [
        "<!DOCTYPE html>",
        '<html><head><meta charset="utf-8">',
        f"<title>Test result {e(record.task_id)}</title>",
        "<style>table{border-collapse:collapse}td,th{border:1px solid #999;"
        "padding:4px 8px}caption{text-align:left;font-weight:bold;"
        "padding:8px 0}</style>",
        "</head><body>",
        f"<h1>Test result {e(record.task_id)}</h1>",
        f'<p class="status">Status: {e(record.status.value)}'
        + (f" ({e(record.error)})" if record.error else "")
        + "</p>",
        "<table><caption>Request</caption>",
        _row("mode", e(record.mode)),
        _row("application", e(record.identity.app_id)),
        _row("user", e(record.identity.user_name)),
        _row("url", e(record.case.url)),
        _row("method", e(record.case.method.value)),
        _row("requests", str(record.profile.requests)),
        _row("concurrency", str(record.profile.concurrency)),
        "</table>",
    ]
    if record.verdict is not None and record.summary is not None:
        parts.append("<table><caption>Criteria</caption>")
        parts.append("<tr><th>criterion</th><th>expected</th><th>observed</th>"
                     "<th>result</th></tr>")
        for criterion in (record.verdict.response, record.verdict.tps,
                          record.verdict.bps):
            parts.append(
                '<tr class="criterion">'
                f"<td>{e(criterion.name)}</td>"
                f"<td>{e(num(criterion.expected))}</td>"
                f"<td>{e(num(criterion.observed))}</td>"
                f"<td>{'PASS' if criterion.passed else 'FAIL'}</td></tr>"
            )
        parts.append("</table>")
        overall = "PASS" if record.verdict.overall else "FAIL"
        parts.append(f'<p class="overall">Overall: {overall}</p>')
        summary = record.summary
        parts.append("<table><caption>Latency</caption>")
        parts.append(_row("mean (ms)", e(num(summary.mean_ms))))
        parts.append(_row("p50 (ms)", e(num(summary.p50_ms))))
        parts.append(_row("p95 (ms)", e(num(summary.p95_ms))))
        parts.append(_row("completed", str(summary.completed)))
        parts.append(_row("errored", str(summary.errored)))
        parts.append("</table>")
    if record.traces:
        parts.append("<table><caption>Adaptive trace</caption>")
        parts.append("<tr><th>iteration</th><th>concurrency</th><th>p50 (ms)</th>"
                     "<th>p95 (ms)</th><th>tps</th><th>decision</th></tr>")
        for trace in record.traces:
            parts.append(
                '<tr class="trace">'
                f"<td>{trace.iteration}</td>"
                f"<td>{trace.concurrency}</td>"
                f"<td>{e(num(trace.summary.p50_ms))}</td>"
                f"<td>{e(num(trace.summary.p95_ms))}</td>"
                f"<td>{e(num(trace.summary.observed_tps))}</td>"
                f"<td>{e(trace.decision.value)}</td></tr>"
            )
        parts.append("</table>")
    parts.append("</body></html>")
    return "\n".join(parts)


# ---------------------------------------------------------------------------
# HTTP front end


class _ServiceServer(ThreadingHTTPServer):
    daemon_threads = True
    request_queue_size = 64

    def __init__(self, address, handler, service: TfpService) -> None:
        self.service = service
        super().__init__(address, handler)


class ServiceHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server: _ServiceServer

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

    def do_POST(self) -> None:
        if self.path != "/tfps":
            self._reply_text(404, "not found")
            return
        length = int(self.headers.get("Content-Length") or 0)
        if length > MAX_BODY_BYTES:
            self.close_connection = True
            self._reply_text(413, f"request body exceeds {MAX_BODY_BYTES} bytes")
            return
        body = self.rfile.read(length)
        status, content_type, payload = self.server.service.handle_submission(body)
        self._reply(status, content_type, payload)

    def do_GET(self) -> None:
        service = self.server.service
        if self.path.startswith("/results/"):
            task_id = self.path[len("/results/"):]
            try:
                if task_id.endswith(".xml"):
                    raw = service.store.fetch_raw(task_id[:-len(".xml")])
                    self._reply(200, SOAP_CONTENT_TYPE, raw)
                else:
                    page = service.render_report(task_id)
                    self._reply(200, "text/html; charset=utf-8", page.encode("utf-8"))
            except UnknownTaskError as exc:
                self._reply_text(404, str(exc))
            return
        self._reply_text(404, "not found")


def make_server(
    port: int = 0,
    host: str = "127.0.0.1",
    *,
    data_dir: Path | str,
    runcenter_url: str | None = None,
    critical_timeout_s: float = DEFAULT_CRITICAL_TIMEOUT_S,
    base_url: str | None = None,
) -> _ServiceServer:
    dispatcher = (
        RemoteDispatcher(runcenter_url) if runcenter_url else embedded_dispatch
    )
    service = TfpService(
        ResultStore(data_dir),
        dispatcher=dispatcher,
        critical_timeout_s=critical_timeout_s,
    )
    try:
        server = _ServiceServer((host, port), ServiceHandler, service)
    except OSError as exc:
        if exc.errno == errno.EADDRINUSE:
            raise PortInUseError(f"port {port} is already in use") from exc
        raise
    bound_host, bound_port = server.server_address[:2]
    service.base_url = (base_url or f"http://{bound_host}:{bound_port}").rstrip("/")
    return server


def start_server(
    port: int = 0, host: str = "127.0.0.1", **kwargs
) -> tuple[_ServiceServer, threading.Thread, str]:
    """Run a service on a background thread; returns (server, thread, url)."""
    server = make_server(port, host, **kwargs)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server, thread, server.service.base_url


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="tfps", description="Performance test service.")
    sub = parser.add_subparsers(dest="command", required=True)
    serve = sub.add_parser("serve", help="serve the submission endpoint")
    serve.add_argument("--port", type=int, default=8090)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--data-dir", required=True, metavar="DIR")
    serve.add_argument(
        "--runcenter-url", default=None, metavar="URL",
        help="dispatch runs to a remote run center instead of in-process",
    )
    serve.add_argument(
        "--base-url", default=None, metavar="URL",
        help="public URL used in detail links (default: the bound address)",
    )
    args = parser.parse_args(argv)
    try:
        server = make_server(
            args.port,
            args.host,
            data_dir=args.data_dir,
            runcenter_url=args.runcenter_url,
            base_url=args.base_url,
        )
    except PortInUseError as exc:
        print(exc)
        return 4
    print(f"service listening on {server.service.base_url}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
