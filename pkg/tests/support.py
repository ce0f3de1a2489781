"""Shared test plumbing: mock HTTP targets, a scripted service stub, and
seeded random generators for protocol values."""

from __future__ import annotations

import contextlib
import random
import string
import threading
import time
import uuid
from datetime import datetime, timedelta, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from tfpaas.model import (
    AdaptiveOutcome,
    AdaptiveParams,
    ApplicationIdentity,
    CriterionResult,
    Decision,
    HttpMethod,
    LoadProfile,
    Measurement,
    MeasurementSummary,
    PerformanceCriteria,
    ResultStatus,
    TestCase,
    TestResultRecord,
    TestVerdict,
    TraceRecord,
)
from tfpaas.protocol import InstructionSet, ResultEnvelope, TestEnvelope


# ---------------------------------------------------------------------------
# Mock HTTP target with in-flight accounting


class CountingServer(ThreadingHTTPServer):
    daemon_threads = True
    request_queue_size = 64

    def __init__(self, address, handler, *, delay_s: float, status: int, body: bytes):
        self.delay_s = delay_s
        self.status = status
        self.body = body
        self.lock = threading.Lock()
        self.in_flight = 0
        self.max_in_flight = 0
        self.total = 0
        self.bodies: list[bytes] = []
        super().__init__(address, handler)

    @contextlib.contextmanager
    def track(self):
        with self.lock:
            self.in_flight += 1
            self.total += 1
            self.max_in_flight = max(self.max_in_flight, self.in_flight)
        try:
            yield
        finally:
            with self.lock:
                self.in_flight -= 1


class CountingHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server: CountingServer

    def log_message(self, format, *args):  # noqa: A002 - stdlib name
        pass

    def _serve(self):
        # the tracked window closes before the reply goes out, so the peak
        # can never exceed the client's true in-flight count
        with self.server.track():
            if self.server.delay_s:
                time.sleep(self.server.delay_s)
        body = self.server.body
        self.send_response(self.server.status)
        self.send_header("Content-Type", "application/octet-stream")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        self._serve()

    def do_POST(self):
        length = int(self.headers.get("Content-Length") or 0)
        body = self.rfile.read(length)
        with self.server.lock:
            self.server.bodies.append(body)
        self._serve()


@contextlib.contextmanager
def running_target(*, delay_s: float = 0.0, status: int = 200, body: bytes = b"x" * 64):
    """A local HTTP target; yields (server, url)."""
    server = CountingServer(
        ("127.0.0.1", 0), CountingHandler, delay_s=delay_s, status=status, body=body
    )
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    url = f"http://127.0.0.1:{server.server_address[1]}/svc"
    try:
        yield server, url
    finally:
        server.shutdown()
        server.server_close()


# ---------------------------------------------------------------------------
# Scripted service stub (for client polling tests)


class ScriptedService(ThreadingHTTPServer):
    """Replies to POST /tfps and GET /results/* from preloaded queues."""

    daemon_threads = True

    def __init__(self, address, handler):
        self.submit_replies: list[tuple[int, bytes]] = []
        self.poll_replies: list[tuple[int, bytes]] = []
        self.poll_count = 0
        self.submit_count = 0
        self.lock = threading.Lock()
        super().__init__(address, handler)


class ScriptedHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server: ScriptedService

    def log_message(self, format, *args):  # noqa: A002 - stdlib name
        pass

    def _pop(self, queue: list[tuple[int, bytes]]) -> tuple[int, bytes]:
        with self.server.lock:
            if len(queue) > 1:
                return queue.pop(0)
            return queue[0]  # last reply repeats

    def _reply(self, status: int, body: bytes) -> None:
        self.send_response(status)
        self.send_header("Content-Type", "application/soap+xml; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_POST(self):
        length = int(self.headers.get("Content-Length") or 0)
        self.rfile.read(length)
        with self.server.lock:
            self.server.submit_count += 1
        self._reply(*self._pop(self.server.submit_replies))

    def do_GET(self):
        with self.server.lock:
            self.server.poll_count += 1
        self._reply(*self._pop(self.server.poll_replies))


@contextlib.contextmanager
def scripted_service():
    server = ScriptedService(("127.0.0.1", 0), ScriptedHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield server, f"http://127.0.0.1:{server.server_address[1]}"
    finally:
        server.shutdown()
        server.server_close()


# ---------------------------------------------------------------------------
# Seeded random value generators


_WORDS = string.ascii_letters + string.digits + "_-. "
_MESSAGE_CHARS = _WORDS + "<>&\"'\nμλ度"


def _word(rng: random.Random, min_len=1, max_len=12) -> str:
    n = rng.randint(min_len, max_len)
    return "".join(rng.choice(string.ascii_letters + string.digits) for _ in range(n))


def _uuid(rng: random.Random) -> str:
    return str(uuid.UUID(int=rng.getrandbits(128), version=4))


def gen_number(rng: random.Random) -> float:
    """Positive numbers across the formatting regimes: integers, short
    decimals, raw floats and exponent-repr magnitudes."""
    kind = rng.randrange(4)
    if kind == 0:
        return float(rng.randint(1, 10**6))
    if kind == 1:
        return round(rng.uniform(0.001, 1000.0), 3)
    if kind == 2:
        return rng.uniform(1e-3, 1e6)
    return 10.0 ** -rng.randint(5, 12)


def gen_identity(rng: random.Random) -> ApplicationIdentity:
    return ApplicationIdentity(app_id=_uuid(rng), user_name=_word(rng))


def gen_case(rng: random.Random) -> TestCase:
    url = f"http://{_word(rng, 3, 8).lower()}.example:{rng.randint(1, 65535)}/{_word(rng)}"
    if rng.random() < 0.5:
        return TestCase(url=url, method=HttpMethod.GET)
    n = rng.randint(0, 40)
    message = "".join(rng.choice(_MESSAGE_CHARS) for _ in range(n))
    return TestCase(url=url, method=HttpMethod.POST, message=message)


def gen_criteria(rng: random.Random) -> PerformanceCriteria:
    return PerformanceCriteria(
        response_ms=gen_number(rng), tps=gen_number(rng), bps=gen_number(rng)
    )


def gen_profile(rng: random.Random) -> LoadProfile:
    requests = rng.randint(1, 10**4)
    return LoadProfile(requests=requests, concurrency=rng.randint(1, requests))


def gen_adaptive(rng: random.Random) -> AdaptiveParams:
    return AdaptiveParams(
        start_concurrency=rng.randint(1, 10),
        growth_factor=round(rng.uniform(1.1, 4.0), 2),
        max_iterations=rng.randint(1, 50),
        requests_per_iteration=rng.randint(1, 500),
    )


def gen_envelope(rng: random.Random) -> TestEnvelope:
    mode = "master" if rng.random() < 0.3 else "critical"
    return TestEnvelope(
        application=gen_identity(rng),
        case=gen_case(rng),
        criteria=gen_criteria(rng),
        load=gen_profile(rng) if rng.random() < 0.6 else None,
        mode=mode,
        adaptive=gen_adaptive(rng) if mode == "master" and rng.random() < 0.5 else None,
    )


def gen_summary(rng: random.Random) -> MeasurementSummary:
    p50 = gen_number(rng)
    return MeasurementSummary(
        mean_ms=gen_number(rng),
        p50_ms=p50,
        p95_ms=p50 + abs(gen_number(rng)),
        observed_tps=gen_number(rng),
        observed_bps=gen_number(rng),
        completed=rng.randint(0, 10**4),
        errored=rng.randint(0, 100),
    )


def gen_verdict(rng: random.Random) -> TestVerdict:
    results = [
        CriterionResult(
            name=name,
            expected=gen_number(rng),
            observed=gen_number(rng),
            passed=rng.random() < 0.7,
        )
        for name in ("response", "tps", "bps")
    ]
    return TestVerdict(
        response=results[0], tps=results[1], bps=results[2],
        overall=all(r.passed for r in results),
    )


def gen_result(rng: random.Random) -> ResultEnvelope:
    task_id = _uuid(rng)
    status = rng.choice(list(ResultStatus))
    detail_url = f"http://svc.example/results/{task_id}"
    if status is ResultStatus.DONE:
        return ResultEnvelope(
            task_id=task_id, status=status, detail_url=detail_url,
            verdict=gen_verdict(rng), summary=gen_summary(rng),
        )
    error = f"boom {_word(rng)}" if status is ResultStatus.FAILED else None
    return ResultEnvelope(
        task_id=task_id, status=status, detail_url=detail_url, error=error
    )


def gen_result_with_status(rng: random.Random, status: ResultStatus) -> ResultEnvelope:
    while True:
        result = gen_result(rng)
        if result.status is status:
            return result


def gen_instructions(rng: random.Random) -> InstructionSet:
    return InstructionSet(
        task_id=_uuid(rng),
        identity=gen_identity(rng),
        case=gen_case(rng),
        criteria=gen_criteria(rng),
        profile=gen_profile(rng),
        adaptive=gen_adaptive(rng) if rng.random() < 0.4 else None,
    )


def gen_datetime(rng: random.Random) -> datetime:
    base = datetime(2026, 1, 1, tzinfo=timezone.utc)
    return base + timedelta(seconds=rng.randint(0, 10**7), microseconds=rng.randint(0, 999999))


def gen_measurement(rng: random.Random) -> Measurement:
    n = rng.randint(1, 60)
    latencies = tuple(abs(gen_number(rng)) for _ in range(n))
    return Measurement(
        latencies_ms=latencies,
        bytes_received=rng.randint(0, 10**8),
        wall_time_s=gen_number(rng),
        error_count=rng.randint(0, 20),
        started_at=gen_datetime(rng),
        http_error_count=rng.randint(0, n),
    )


def gen_trace(rng: random.Random, iteration: int) -> TraceRecord:
    return TraceRecord(
        iteration=iteration,
        concurrency=rng.randint(1, 512),
        summary=gen_summary(rng),
        decision=rng.choice(list(Decision)),
    )


def gen_outcome(rng: random.Random) -> AdaptiveOutcome:
    n = rng.randint(1, 12)
    return AdaptiveOutcome(
        traces=tuple(gen_trace(rng, i) for i in range(1, n + 1)),
        max_sustainable_concurrency=rng.randint(0, 256),
        final_summary=gen_summary(rng),
        complete=rng.random() < 0.8,
    )


def gen_record(rng: random.Random) -> TestResultRecord:
    task_id = _uuid(rng)
    status = rng.choice(list(ResultStatus))
    mode = rng.choice(["critical", "master"])
    done = status is ResultStatus.DONE
    return TestResultRecord(
        task_id=task_id,
        identity=gen_identity(rng),
        case=gen_case(rng),
        criteria=gen_criteria(rng),
        profile=gen_profile(rng),
        status=status,
        detail_url=f"http://svc.example/results/{task_id}",
        mode=mode,
        summary=gen_summary(rng) if done else None,
        verdict=gen_verdict(rng) if done else None,
        traces=(
            tuple(gen_trace(rng, i) for i in range(1, rng.randint(2, 6)))
            if done and mode == "master" and rng.random() < 0.7
            else ()
        ),
        finished_at=gen_datetime(rng) if done and rng.random() < 0.8 else None,
        error=f"err {_word(rng)}" if status is ResultStatus.FAILED else None,
    )


# ---------------------------------------------------------------------------
# Canned values


def make_identity() -> ApplicationIdentity:
    return ApplicationIdentity(
        app_id="123e4567-e89b-42d3-a456-426614174000", user_name="dev"
    )


def make_envelope(url: str = "http://localhost:8080/BookSearch") -> TestEnvelope:
    return TestEnvelope(
        application=make_identity(),
        case=TestCase(url=url, method=HttpMethod.GET),
        criteria=PerformanceCriteria(response_ms=3.0, tps=30.0, bps=1048576.0),
        load=LoadProfile(),
    )


def make_instructions(
    url: str = "http://localhost:8080/BookSearch",
    *,
    profile: LoadProfile | None = None,
    adaptive: AdaptiveParams | None = None,
    criteria: PerformanceCriteria | None = None,
) -> InstructionSet:
    return InstructionSet(
        task_id="deadbeef-dead-4ead-bead-deadbeefdead",
        identity=make_identity(),
        case=TestCase(url=url, method=HttpMethod.GET),
        criteria=criteria or PerformanceCriteria(response_ms=100.0, tps=1.0, bps=8.0),
        profile=profile or LoadProfile(),
        adaptive=adaptive,
    )
