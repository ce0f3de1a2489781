"""Timing study: where should script validation run?

Two mock service variants are timed over the same submission stream. The
CLOUD variant validates on the service, so every request pays an injected
validation delay plus the rest of the processing cost. The PLUGIN variant
validates client-side while the script is being written, which puts the
validation cost outside the timed request entirely; its service sleeps only
the rest-of-processing delay. Submissions within a trial are sequential,
each point is the median over repeated trials, and all delays are injected
sleeps so the shape of the result is deterministic.

Client-side validation is real, not simulated: an invalid script is
rejected before any request is made, so it never reaches the service.
"""

from __future__ import annotations

import errno
import statistics
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass
from enum import Enum
from http.client import HTTPException
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .errors import DomainError, IoError, PortInUseError, TransportError
from .validator import ERROR, validate_script

DEFAULT_COUNTS = tuple(range(1, 51, 5))

VALID_SCRIPT = """\
<?xml version="1.0" encoding="UTF-8"?>
<tfp:testScript xmlns:tfp="urn:tfpaas:script:v1">
  <tfp:case>
    <tfp:url>http://localhost:8080/TimedService</tfp:url>
    <tfp:method>GET</tfp:method>
  </tfp:case>
  <tfp:criteria>
    <tfp:response>100</tfp:response>
    <tfp:tps>1</tfp:tps>
    <tfp:bps>8</tfp:bps>
  </tfp:criteria>
</tfp:testScript>
"""


class Mode(Enum):
    CLOUD_VALIDATION = "CLOUD_VALIDATION"
    PLUGIN_VALIDATION = "PLUGIN_VALIDATION"


@dataclass(frozen=True)
class ExperimentConfig:
    request_counts: tuple[int, ...] = DEFAULT_COUNTS
    validation_delay_ms: float = 50.0
    rest_delay_ms: float = 10.0
    repetitions: int = 5

    def __post_init__(self) -> None:
        object.__setattr__(self, "request_counts", tuple(self.request_counts))
        if not self.request_counts:
            raise DomainError("need at least one request count")
        if any(
            not (isinstance(n, int) and n >= 1) for n in self.request_counts
        ):
            raise DomainError("request counts must be positive integers")
        if any(
            b <= a for a, b in zip(self.request_counts, self.request_counts[1:])
        ):
            raise DomainError("request counts must be strictly increasing")
        if self.validation_delay_ms < 0 or self.rest_delay_ms < 0:
            raise DomainError("delays must be >= 0")
        if not (isinstance(self.repetitions, int) and self.repetitions >= 1):
            raise DomainError("repetitions must be a positive integer")


@dataclass(frozen=True)
class ExperimentRow:
    n_requests: int
    mode: Mode
    total_time_ms: float

    def __post_init__(self) -> None:
        if self.n_requests < 1:
            raise DomainError("n_requests must be >= 1")
        if self.total_time_ms < 0:
            raise DomainError("total_time_ms must be >= 0")


# ---------------------------------------------------------------------------
# Mock services


class _DelayServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address, handler, delay_s: float) -> None:
        self.delay_s = delay_s
        self.submissions = 0
        self.submissions_lock = threading.Lock()
        super().__init__(address, handler)


class _DelayHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server: _DelayServer

    def log_message(self, format: str, *args) -> None:  # noqa: A002 - stdlib name
        pass

    def do_POST(self) -> None:
        length = int(self.headers.get("Content-Length") or 0)
        self.rfile.read(length)
        with self.server.submissions_lock:
            self.server.submissions += 1
        time.sleep(self.server.delay_s)
        body = b"ok"
        self.send_response(200)
        self.send_header("Content-Type", "text/plain; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


def start_delay_service(
    delay_ms: float, port: int = 0
) -> tuple[_DelayServer, str]:
    """A mock submission endpoint that sleeps ``delay_ms`` per request."""
    try:
        server = _DelayServer(("127.0.0.1", port), _DelayHandler, delay_ms / 1000.0)
    except OSError as exc:
        if exc.errno == errno.EADDRINUSE:
            raise PortInUseError(f"port {port} is already in use") from exc
        raise
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    host, bound_port = server.server_address[:2]
    return server, f"http://{host}:{bound_port}"


def submit_script(url: str, script_text: str, mode: Mode) -> bool:
    """One submission in the given mode.

    Plugin mode validates first and refuses to transmit a script with
    errors; returns whether the script was actually sent.
    """
    if mode is Mode.PLUGIN_VALIDATION:
        if any(d.severity == ERROR for d in validate_script(script_text)):
            return False
    request = urllib.request.Request(
        f"{url}/tfps",
        data=script_text.encode("utf-8"),
        headers={"Content-Type": "application/xml; charset=utf-8"},
        method="POST",
    )
    try:
        with urllib.request.urlopen(request, timeout=30.0) as response:
            response.read()
    except (urllib.error.URLError, HTTPException, OSError) as exc:
        raise TransportError(f"mock service unreachable: {exc}") from exc
    return True


# ---------------------------------------------------------------------------
# The experiment itself


def _service_delay_ms(cfg: ExperimentConfig, mode: Mode) -> float:
    if mode is Mode.CLOUD_VALIDATION:
        return cfg.validation_delay_ms + cfg.rest_delay_ms
    return cfg.rest_delay_ms


def run_modes_experiment(cfg: ExperimentConfig) -> list[ExperimentRow]:
    """Time both validation placements over every configured request count."""
    rows: list[ExperimentRow] = []
    for mode in (Mode.CLOUD_VALIDATION, Mode.PLUGIN_VALIDATION):
        server, url = start_delay_service(_service_delay_ms(cfg, mode))
        try:
            for n in cfg.request_counts:
                samples: list[float] = []
                for _ in range(cfg.repetitions):
                    if mode is Mode.PLUGIN_VALIDATION:
                        # Validation happened while the script was written;
                        # it costs real work but sits outside the clock.
                        validate_script(VALID_SCRIPT)
                    start = time.perf_counter()
                    for _ in range(n):
                        submit_script(url, VALID_SCRIPT, mode)
                    samples.append((time.perf_counter() - start) * 1000.0)
                rows.append(
                    ExperimentRow(
                        n_requests=n, mode=mode,
                        total_time_ms=statistics.median(samples),
                    )
                )
        finally:
            server.shutdown()
            server.server_close()
    return rows


PLOT_SCRIPT_NAME = "plot.gp"


def emit_plot_files(rows, out_dir: Path | str) -> list[Path]:
    """Write ``cloud.dat``, ``plugin.dat`` and a gnuplot script.

    Data lines are ``<n> <ms>`` sorted ascending by n; identical rows yield
    byte-identical files.
    """
    if not rows:
        raise DomainError("no rows to emit")
    out_dir = Path(out_dir)
    by_mode: dict[Mode, list[ExperimentRow]] = {mode: [] for mode in Mode}
    for row in rows:
        by_mode[row.mode].append(row)
    paths: list[Path] = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for mode, filename in (
            (Mode.CLOUD_VALIDATION, "cloud.dat"),
            (Mode.PLUGIN_VALIDATION, "plugin.dat"),
        ):
            lines = [
                f"{row.n_requests} {row.total_time_ms:.3f}"
                for row in sorted(by_mode[mode], key=lambda r: r.n_requests)
            ]
            path = out_dir / filename
            path.write_text("\n".join(lines) + "\n", encoding="utf-8")
            paths.append(path)
        script = (
            'set xlabel "number of requests"\n'
            'set ylabel "total time (ms)"\n'
            "set key left top\n"
            'plot "cloud.dat" using 1:2 with linespoints title "cloud validation", \\\n'
            '     "plugin.dat" using 1:2 with linespoints title "plugin validation"\n'
        )
        script_path = out_dir / PLOT_SCRIPT_NAME
        script_path.write_text(script, encoding="utf-8")
        paths.append(script_path)
    except OSError as exc:
        raise IoError(f"cannot write plot files in {out_dir}: {exc}") from exc
    return paths
