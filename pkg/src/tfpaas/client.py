"""Developer-facing CLI: scaffold a project, keep scripts valid while they
are being written, and submit them for execution with instant feedback.

Exit codes are a fixed, total mapping: 0 pass, 1 performance fail, 2
validation error, 3 missing test case, 4 transport or protocol failure, 5
filesystem or scaffold problem.

The service URL is resolved flag-first: ``--service-url`` beats the
``TFPC_SERVICE_URL`` environment variable, which beats the ``service_url``
key in ``TFP/tfp.conf``.
"""

from __future__ import annotations

import argparse
import getpass
import hashlib
import os
import re
import sys
import time
import urllib.error
import urllib.request
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from http.client import HTTPException
from pathlib import Path

from . import conventions, experiment, validator
from .conventions import (
    ProjectLayout,
    load_layout,
    read_app_identity,
    resolve_critical,
    scaffold_project,
    service_name,
)
from .errors import (
    ExistsError,
    IoError,
    NoMasterError,
    NoTestCaseError,
    PollTimeoutError,
    TfpError,
    TransportError,
)
from .model import (
    ApplicationIdentity,
    CriterionResult,
    LoadProfile,
    ResultStatus,
    TestResultRecord,
    check_absolute_url,
)
from .protocol import (
    ResultEnvelope,
    SOAP_CONTENT_TYPE,
    TestEnvelope,
    decode_record,
    decode_result,
    encode_request,
)

EXIT_PASS = 0
EXIT_PERF_FAIL = 1
EXIT_VALIDATION = 2
EXIT_NO_TEST_CASE = 3
EXIT_TRANSPORT = 4
EXIT_FILESYSTEM = 5

SERVICE_URL_ENV = "TFPC_SERVICE_URL"
DEFAULT_TIMEOUT_S = 120.0
DEFAULT_POLL_INTERVAL_S = 2.0
DEFAULT_POLL_TIMEOUT_S = 600.0

_EXIT_BY_CODE = {
    "E_NO_TEST_CASE": EXIT_NO_TEST_CASE,
    "E_NO_MASTER": EXIT_NO_TEST_CASE,
    "E_TRANSPORT": EXIT_TRANSPORT,
    "E_POLL_TIMEOUT": EXIT_TRANSPORT,
    "E_MALFORMED_XML": EXIT_TRANSPORT,
    "E_SCHEMA": EXIT_TRANSPORT,
    "E_FIELD": EXIT_TRANSPORT,
    "E_INVALID_ENVELOPE": EXIT_TRANSPORT,
    "E_PORT_IN_USE": EXIT_TRANSPORT,
    "E_IO": EXIT_FILESYSTEM,
    "E_EXISTS": EXIT_FILESYSTEM,
    "E_ALREADY_SCAFFOLDED": EXIT_FILESYSTEM,
    "E_EMPTY_STEM": EXIT_FILESYSTEM,
    "E_BAD_CONFIG": EXIT_FILESYSTEM,
    "E_ESCAPES_ROOT": EXIT_FILESYSTEM,
}


def exit_code_for(exc: TfpError) -> int:
    return _EXIT_BY_CODE.get(exc.code, EXIT_VALIDATION)


@dataclass(frozen=True)
class ClientConfig:
    service_url: str
    timeout_s: float = DEFAULT_TIMEOUT_S


def resolve_service_url(flag: str | None, root: Path) -> str:
    url = flag or os.environ.get(SERVICE_URL_ENV)
    if not url:
        config_file = root / conventions.CONFIG_RELATIVE_PATH
        if config_file.is_file():
            url = conventions.read_config(config_file).get("service_url")
    if not url:
        raise TransportError(
            "no service URL configured "
            f"(use --service-url, {SERVICE_URL_ENV}, or tfp.conf service_url)"
        )
    reason = check_absolute_url(url)
    if reason:
        raise TransportError(f"service URL {url!r}: {reason}")
    return url.rstrip("/")


# ---------------------------------------------------------------------------
# HTTP plumbing


def _http(request: urllib.request.Request, timeout_s: float) -> bytes:
    try:
        with urllib.request.urlopen(request, timeout=timeout_s) as response:
            return response.read()
    except urllib.error.HTTPError as exc:
        detail = exc.read().decode("utf-8", "replace").strip()
        exc.close()
        raise TransportError(f"service replied {exc.code}: {detail}") from exc
    except (urllib.error.URLError, HTTPException, OSError) as exc:
        raise TransportError(f"cannot reach service: {exc}") from exc


def submit_envelope(
    config: ClientConfig, envelope: TestEnvelope
) -> ResultEnvelope:
    request = urllib.request.Request(
        f"{config.service_url}/tfps",
        data=encode_request(envelope).encode("utf-8"),
        headers={"Content-Type": SOAP_CONTENT_TYPE},
        method="POST",
    )
    result, _ = decode_result(_http(request, config.timeout_s))
    return result


def poll_result(
    config: ClientConfig,
    task_id: str,
    *,
    interval_s: float = DEFAULT_POLL_INTERVAL_S,
    timeout_s: float = DEFAULT_POLL_TIMEOUT_S,
) -> tuple[ResultEnvelope, bytes]:
    """Poll the stored record until it leaves PENDING; returns the decoded
    envelope and the raw final document."""
    url = f"{config.service_url}/results/{task_id}.xml"
    deadline = time.monotonic() + timeout_s
    while True:
        raw = _http(urllib.request.Request(url), config.timeout_s)
        result, _ = decode_result(raw)
        if result.status is not ResultStatus.PENDING:
            return result, raw
        if time.monotonic() >= deadline:
            raise PollTimeoutError(f"task {task_id} still PENDING after {timeout_s}s")
        time.sleep(interval_s)


# ---------------------------------------------------------------------------
# Output helpers


def _display(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    text = f"{value:.3f}".rstrip("0").rstrip(".")
    return text or "0"


def _criterion_line(criterion: CriterionResult) -> str:
    unit = "ms" if criterion.name == "response" else ""
    op = "<=" if criterion.name == "response" else ">="
    status = "PASS" if criterion.passed else "FAIL"
    return (
        f"{criterion.name}: {status} "
        f"{_display(criterion.observed)}{unit} {op} {_display(criterion.expected)}{unit}"
    )


def _print_verdict(result: ResultEnvelope, out) -> None:
    assert result.verdict is not None
    for criterion in (result.verdict.response, result.verdict.tps, result.verdict.bps):
        print(_criterion_line(criterion), file=out)
    print(f"overall: {'PASS' if result.verdict.overall else 'FAIL'}", file=out)
    print(f"detail: {result.detail_url}", file=out)


# ---------------------------------------------------------------------------
# Script validation plumbing


def _validate_text(text: str) -> list[validator.Diagnostic]:
    # Master suites share the rule set; dispatch on the root element.
    try:
        root_is_master = ET.fromstring(text).tag.endswith("}masterScript")
    except ET.ParseError:
        root_is_master = False
    if root_is_master:
        return validator.validate_master_script(text)
    return validator.validate_script(text)


def _validate_file(path: Path, err) -> bool:
    """Validate one file, printing findings; returns True when error-free."""
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"ERROR E_IO {path}: {exc}", file=err)
        return False
    diagnostics = _validate_text(text)
    for diagnostic in diagnostics:
        print(diagnostic.render(), file=err)
    return not any(d.severity == validator.ERROR for d in diagnostics)


class ScriptWatcher:
    """Content-hash polling over a set of script files.

    Validations run sequentially on the polling thread, so at most one is
    ever in flight per file, and any burst of writes collapses into at most
    two validation passes: the one observing a mid-burst state and the one
    observing the final state.
    """

    def __init__(self, paths, on_change) -> None:
        self._paths = [Path(p) for p in paths]
        self._on_change = on_change
        self._digests: dict[Path, bytes] = {}

    def poll(self) -> int:
        """Revalidate files whose content changed; returns how many ran."""
        ran = 0
        for path in self._paths:
            try:
                digest = hashlib.sha256(path.read_bytes()).digest()
            except OSError:
                digest = b"<unreadable>"
            if self._digests.get(path) != digest:
                self._digests[path] = digest
                self._on_change(path)
                ran += 1
        return ran


# ---------------------------------------------------------------------------
# Subcommands


def cmd_init(args) -> int:
    root = Path(args.root)
    user = args.user or getpass.getuser()
    layout = scaffold_project(root, user)
    print(f"created {root / 'TFP'}")
    print(f"created {layout.critical_dir_abs}")
    print(f"created {layout.master_abs}")
    print(f"created {layout.app_id_abs}")
    return EXIT_PASS


TEST_TEMPLATE = """\
<?xml version="1.0" encoding="UTF-8"?>
<tfp:testScript xmlns:tfp="urn:tfpaas:script:v1">
  <tfp:case>
    <tfp:url>http://localhost:8080/{service}</tfp:url>
    <tfp:method>GET</tfp:method>
  </tfp:case>
  <tfp:criteria>
    <tfp:response>1000</tfp:response>
    <tfp:tps>1</tfp:tps>
    <tfp:bps>8</tfp:bps>
  </tfp:criteria>
</tfp:testScript>
"""


def cmd_create_test(args) -> int:
    layout, warnings = _layout(args)
    for warning in warnings:
        print(warning, file=sys.stderr)
    path = resolve_critical(args.service_file, layout)
    if path.exists():
        raise ExistsError(f"{path} already exists; not overwriting")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(
            TEST_TEMPLATE.format(service=service_name(args.service_file)),
            encoding="utf-8",
        )
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    print(f"created {path}")
    return EXIT_PASS


def cmd_validate(args) -> int:
    paths = [Path(p) for p in args.paths]
    if not args.watch:
        ok = True
        for path in paths:
            ok = _validate_file(path, sys.stderr) and ok
        return EXIT_PASS if ok else EXIT_VALIDATION

    clean: dict[Path, bool] = {}

    def on_change(path: Path) -> None:
        clean[path] = _validate_file(path, sys.stderr)

    watcher = ScriptWatcher(paths, on_change)
    try:
        while True:
            watcher.poll()
            time.sleep(args.interval)
    except KeyboardInterrupt:
        pass
    return EXIT_PASS if all(clean.values()) else EXIT_VALIDATION


def _layout(args) -> tuple[ProjectLayout, list[str]]:
    return load_layout(Path(args.root))


def _load_profile(script_load: LoadProfile | None, args) -> LoadProfile | None:
    """Effective load block: CLI flags beat the script, which beats the
    service-side default (signalled by None)."""
    if args.requests is None and args.concurrency is None:
        return script_load
    base = script_load if script_load is not None else LoadProfile()
    return LoadProfile(
        requests=args.requests if args.requests is not None else base.requests,
        concurrency=args.concurrency if args.concurrency is not None else base.concurrency,
    )


def _identity(layout: ProjectLayout) -> ApplicationIdentity:
    return read_app_identity(layout.app_id_abs)


def cmd_run_critical(args) -> int:
    layout, _ = _layout(args)
    script_path = resolve_critical(args.service_file, layout)
    if not script_path.is_file():
        raise NoTestCaseError(
            f"no test case for {args.service_file!r}; expected {script_path}"
        )
    try:
        text = script_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {script_path}: {exc}") from exc
    diagnostics = validator.validate_script(text)
    for diagnostic in diagnostics:
        print(diagnostic.render(), file=sys.stderr)
    if any(d.severity == validator.ERROR for d in diagnostics):
        return EXIT_VALIDATION
    script, _ = validator.parse_script(text)
    identity = _identity(layout)
    config = ClientConfig(
        service_url=resolve_service_url(args.service_url, Path(args.root)),
        timeout_s=args.timeout,
    )
    envelope = TestEnvelope(
        application=identity,
        case=script.case,
        criteria=script.criteria,
        load=_load_profile(script.load, args),
    )
    result = submit_envelope(config, envelope)
    if result.status is not ResultStatus.DONE or result.verdict is None:
        raise TransportError(
            f"expected a DONE verdict, service sent status {result.status.value}"
        )
    _print_verdict(result, sys.stdout)
    return EXIT_PASS if result.verdict.overall else EXIT_PERF_FAIL


def _trace_count(raw: bytes) -> int:
    try:
        record, _ = decode_record(raw)
    except TfpError:
        return 0
    return len(record.traces)


def cmd_run_master(args) -> int:
    layout, _ = _layout(args)
    master_path = layout.master_abs
    if not master_path.is_file():
        raise NoMasterError(f"no master script at {master_path}")
    try:
        text = master_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {master_path}: {exc}") from exc
    diagnostics = validator.validate_master_script(text)
    for diagnostic in diagnostics:
        print(diagnostic.render(), file=sys.stderr)
    if any(d.severity == validator.ERROR for d in diagnostics):
        return EXIT_VALIDATION
    master, _ = validator.parse_master_script(text)
    identity = _identity(layout)
    config = ClientConfig(
        service_url=resolve_service_url(args.service_url, Path(args.root)),
        timeout_s=args.timeout,
    )

    worst = EXIT_PASS
    for scenario in master.scenarios:
        print(f"scenario {scenario.name}:")
        envelope = TestEnvelope(
            application=identity,
            case=scenario.case,
            criteria=scenario.criteria,
            load=_load_profile(scenario.load, args),
            mode="master",
            adaptive=scenario.adaptive,
        )
        result = submit_envelope(config, envelope)
        raw = b""
        if result.status is ResultStatus.PENDING:
            result, raw = poll_result(
                config,
                result.task_id,
                interval_s=args.poll_interval,
                timeout_s=args.poll_timeout,
            )
        if result.status is ResultStatus.FAILED or result.verdict is None:
            print(f"FAILED: {result.error or 'no verdict'}", file=sys.stderr)
            worst = EXIT_TRANSPORT
            continue
        _print_verdict(result, sys.stdout)
        print(f"traces: {_trace_count(raw)}")
        if not result.verdict.overall and worst == EXIT_PASS:
            worst = EXIT_PERF_FAIL
    return worst


def cmd_experiment(args) -> int:
    counts = tuple(int(token) for token in re.split(r"[,\s]+", args.counts) if token)
    cfg = experiment.ExperimentConfig(
        request_counts=counts or experiment.DEFAULT_COUNTS,
        validation_delay_ms=args.validation_ms,
        rest_delay_ms=args.rest_ms,
        repetitions=args.repetitions,
    )
    rows = experiment.run_modes_experiment(cfg)
    for path in experiment.emit_plot_files(rows, Path(args.out)):
        print(f"wrote {path}")
    return EXIT_PASS


# ---------------------------------------------------------------------------
# Entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tfpc", description="Test-first performance testing client."
    )
    parser.add_argument("--root", default=".", help="project root (default: cwd)")
    parser.add_argument("--service-url", default=None)
    parser.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT_S,
                        metavar="SECONDS")
    parser.add_argument("--requests", type=int, default=None,
                        help="override the load profile's request count")
    parser.add_argument("--concurrency", type=int, default=None,
                        help="override the load profile's concurrency")
    sub = parser.add_subparsers(dest="command", required=True)

    p_init = sub.add_parser("init", help="scaffold the project template")
    p_init.add_argument("--user", default=None, help="user name for app.id")
    p_init.set_defaults(func=cmd_init)

    p_create = sub.add_parser("create-test", help="create a test script for a service")
    p_create.add_argument("service_file")
    p_create.set_defaults(func=cmd_create_test)

    p_validate = sub.add_parser("validate", help="validate test scripts")
    p_validate.add_argument("paths", nargs="+")
    p_validate.add_argument("--watch", action="store_true",
                            help="revalidate on every content change")
    p_validate.add_argument("--interval", type=float, default=0.5,
                            metavar="SECONDS", help="watch polling interval")
    p_validate.set_defaults(func=cmd_validate)

    p_critical = sub.add_parser("run-critical", help="run one critical test")
    p_critical.add_argument("service_file")
    p_critical.set_defaults(func=cmd_run_critical)

    p_master = sub.add_parser("run-master", help="run the master suite")
    p_master.add_argument("--poll-interval", type=float,
                          default=DEFAULT_POLL_INTERVAL_S, metavar="SECONDS")
    p_master.add_argument("--poll-timeout", type=float,
                          default=DEFAULT_POLL_TIMEOUT_S, metavar="SECONDS")
    p_master.set_defaults(func=cmd_run_master)

    p_exp = sub.add_parser("experiment",
                           help="time cloud-side vs client-side validation")
    p_exp.add_argument("--validation-ms", type=float, required=True)
    p_exp.add_argument("--rest-ms", type=float, required=True)
    p_exp.add_argument("--counts", default="",
                       help="comma-separated request counts (default 1..46 step 5)")
    p_exp.add_argument("--repetitions", type=int, default=5)
    p_exp.add_argument("--out", required=True, metavar="DIR")
    p_exp.set_defaults(func=cmd_experiment)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TfpError as exc:
        print(exc, file=sys.stderr)
        return exit_code_for(exc)


if __name__ == "__main__":
    raise SystemExit(main())
